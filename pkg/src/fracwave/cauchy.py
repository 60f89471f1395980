"""Cauchy problem D^(alpha) u = B u + f, u(0) = u0, u_t(0) = u1 in one space dimension.

The solution is u = int Z1 u0 + int Z2 u1 + int int Y f. With the Levi
representation of the kernels each term becomes a frozen-kernel integral plus
a potential of a density that solves a Volterra equation with the kernel K:

    int Z_l(t, x; xi) g(xi) dxi = int Z_l^(0)(t, x - xi; xi) g(xi) dxi + P_Y[F_l],
    F_l = M_l[g] + P_K[F_l],    M_l[g](lam, y) = int M_l(lam, y; xi) g(xi) dxi,

and int int Y f = P_Y[f] + P_Y[G] with G = P_K[f] + P_K[G]. The densities are
tabulated on a fixed lattice that covers the evaluation points plus a margin
of a few kernel widths, so bounded data that do not decay are also handled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainError, GridError
from .fraccalc import TimeSamples, caputo_apply
from .kernels import frozen_1d, kernel_delta
from .levi import (CorrectedKernel, EllipticOperator, Lattice, QuadRule, Support, _Kernel, apply_lattice, apply_source,
                   cutoff, fixed_lattice, m_kernel, neumann, operator_rows)


@dataclass(frozen=True)
class CauchyProblem:
    """Data of the Cauchy problem; None stands for identically zero data."""

    op: EllipticOperator
    alpha: float
    T: float
    u0: Callable | None = None
    u1: Callable | None = None
    f: Callable | None = None

    def __post_init__(self):
        self.op.check_alpha(self.alpha)
        if self.op.dim != 1:
            raise DomainError("the Cauchy solver is implemented for n = 1")
        if not self.T > 0:
            raise DomainError("T must be positive")

    @property
    def dim(self) -> int:
        return self.op.dim

    def data(self, name, *args):
        g = getattr(self, name)
        shape = np.broadcast(*args).shape
        return np.zeros(shape) if g is None else np.broadcast_to(np.asarray(g(*args), dtype=float), shape)


@dataclass(frozen=True)
class CauchyConfig:
    n_time: int = 16
    grading: float = 2.0
    h: float = 0.1
    margin: float | None = None
    rule: QuadRule = QuadRule()
    xi_panels: int = 8
    order: int = 8
    tol: float = 1e-12
    max_iter: int = 200
    fast: bool = True


@dataclass
class SolutionField:
    times: np.ndarray
    x: np.ndarray
    values: np.ndarray
    dt_values: np.ndarray | None = None
    provenance: tuple = ()
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.times.size, self.x.size):
            raise GridError("values must have shape (len(times), len(x))")
        if not np.all(np.isfinite(self.values)):
            raise GridError("solution values are not finite")


# ---------------------------------------------------------------------------
# integrals over the parametric point


def _xi_rule(t, x, reach, panels, order):
    """Gauss nodes on [x - reach, x + reach] split at x (vectorised over targets)."""
    gx, gw = leggauss(order)
    e = np.linspace(0.0, 1.0, panels + 1)
    u = (0.5 * (e[:-1, None] + e[1:, None]) + 0.5 * (e[1:, None] - e[:-1, None]) * gx).ravel()
    w = (0.5 * (e[1:, None] - e[:-1, None]) * gw).ravel()
    r = reach[..., None]
    xi = np.concatenate([x[..., None] - r * u, x[..., None] + r * u], axis=-1)
    wt = np.concatenate([r * w, r * w], axis=-1)
    return xi, wt


def _kernel_reach(op, alpha, t):
    return cutoff(0.5 * alpha) * math.sqrt(op.a_max) * np.asarray(t, dtype=float) ** (0.5 * alpha)


def data_integral(op: EllipticOperator, alpha: float, which: str, g: Callable, t, x, time: int = 0,
                  config: CauchyConfig = CauchyConfig()):
    """d^time/dt^time int Z^(0)(t, x - xi; xi) g(xi) dxi for which in {Z1, Z2}.

    Uses g(xi) = [g(xi) - g(x)] + g(x); for constant a the second part is the
    exact kernel mass (1 or t for the values, 0 or 1 for the time derivative).
    """
    t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
    delta = kernel_delta(alpha, 1, which, time)
    xi, w = _xi_rule(t, x, _kernel_reach(op, alpha, t), config.xi_panels, config.order)
    K = frozen_1d(alpha, delta, t[..., None], x[..., None] - xi, op.a(xi), 0, config.fast)
    gx = np.asarray(g(x), dtype=float)
    out = np.sum(w * K * (g(xi) - gx[..., None]), axis=-1)
    if op.constant_a:
        mass = {("Z1", 0): 0.0 * t + 1.0, ("Z2", 0): t, ("Z1", 1): 0.0 * t, ("Z2", 1): 0.0 * t + 1.0}
        return out + gx * mass[(which, time)]
    return out + gx * np.sum(w * K, axis=-1)


def m_source(op: EllipticOperator, alpha: float, l: int, g: Callable, lam, y,
             config: CauchyConfig = CauchyConfig()):
    """M_l[g](lam, y) = int M_l(lam, y; xi) g(xi) dxi."""
    lam, y = np.broadcast_arrays(np.asarray(lam, dtype=float), np.asarray(y, dtype=float))
    xi, w = _xi_rule(lam, y, _kernel_reach(op, alpha, lam), config.xi_panels, config.order)
    M = m_kernel(op, l, alpha, lam[..., None], y[..., None], xi, fast=config.fast)
    return np.sum(w * M * g(xi), axis=-1)


def potential_W(op: EllipticOperator, alpha: float, f: Callable, t, x, time: int = 0,
                config: CauchyConfig = CauchyConfig()):
    """W(t, x) = int_0^t dlam int Y0(t - lam, x - y; y) f(lam, y) dy (time = 1 gives dW/dt)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("potential_W needs t > 0")
    kern = _Kernel(op, alpha, "Yt" if time else "Y", config.fast)
    return apply_source(kern, f, Support(similarity=False), t, x, 0.0, config.rule)


# ---------------------------------------------------------------------------
# solver


@dataclass
class _Densities:
    lattice: Lattice | None
    F1: np.ndarray | None
    F2: np.ndarray | None
    G: np.ndarray | None
    iterations: dict


def _densities(problem: CauchyProblem, T: float, lo: float, hi: float, config: CauchyConfig):
    op, alpha = problem.op, problem.alpha
    if op.trivial:
        return _Densities(None, None, None, None, {})
    margin = config.margin
    if margin is None:
        margin = 2.0 * cutoff(0.5 * alpha) * math.sqrt(op.a_max) * T ** (0.5 * alpha)
    lat = fixed_lattice(alpha, T, lo - margin, hi + margin, config.n_time, config.grading, config.h)
    lam, y = lat.points()
    kern = _Kernel(op, alpha, "K", config.fast)
    A = operator_rows(kern, lat, lam.ravel(), y.ravel(), config.rule)
    out = _Densities(lat, None, None, None, {})
    for name, l, g in (("F1", 1, problem.u0), ("F2", 2, problem.u1)):
        if g is not None:
            S = m_source(op, alpha, l, g, lam, y, config).ravel()
            val, its, _ = neumann(A, S, config.tol, config.max_iter)
            setattr(out, name, val.reshape(lat.shape))
            out.iterations[name] = its
    if problem.f is not None:
        S = apply_source(kern, problem.f, Support(similarity=False), lam, y, 0.0, config.rule).ravel()
        val, its, _ = neumann(A, S, config.tol, config.max_iter)
        out.G = val.reshape(lat.shape)
        out.iterations["G"] = its
    return out


def _evaluate(problem, dens, t, x, time, config):
    op, alpha = problem.op, problem.alpha
    kern = _Kernel(op, alpha, "Yt" if time else "Y", config.fast)
    out = np.zeros(np.broadcast(t, x).shape)
    if problem.u0 is not None:
        out += data_integral(op, alpha, "Z1", problem.u0, t, x, time, config)
    if problem.u1 is not None:
        out += data_integral(op, alpha, "Z2", problem.u1, t, x, time, config)
    if problem.f is not None:
        out += potential_W(op, alpha, problem.f, t, x, time, config)
    for dens_values in (dens.F1, dens.F2, dens.G):
        if dens_values is not None:
            out += apply_lattice(kern, dens.lattice, dens_values, t, x, config.rule)
    return out


def _evaluate_parallel(problem, dens, t, x, time, config, threads):
    """_evaluate on contiguous blocks of points; the block layout depends only on ``threads``."""
    if threads <= 1 or t.size < 2 * threads:
        return _evaluate(problem, dens, t, x, time, config)
    blocks = np.array_split(np.arange(t.size), threads)
    with ThreadPoolExecutor(threads) as pool:
        parts = list(pool.map(lambda b: _evaluate(problem, dens, t[b], x[b], time, config), blocks))
    return np.concatenate(parts)


def solve_cauchy(problem: CauchyProblem, times, x, config: CauchyConfig = CauchyConfig(),
                 derivative: bool = True, threads: int = 1) -> SolutionField:
    """u (and u_t) on the tensor lattice times x x; t = 0 rows take the initial data.

    ``threads`` > 1 evaluates blocks of lattice points concurrently; results
    are assembled in lattice order.
    """
    times = np.asarray(times, dtype=float)
    x = np.asarray(x, dtype=float)
    if times.ndim != 1 or x.ndim != 1:
        raise GridError("times and x must be one-dimensional")
    if np.any(times < 0) or np.any(times > problem.T * (1 + 1e-12)):
        raise GridError("lattice times must lie in [0, T]")
    dens = _densities(problem, float(times.max()), float(x.min()), float(x.max()), config)
    tt, xx = np.meshgrid(times, x, indexing="ij")
    pos = tt > 0
    values = np.zeros(tt.shape)
    values[pos] = _evaluate_parallel(problem, dens, tt[pos], xx[pos], 0, config, threads)
    values[~pos] = problem.data("u0", xx[~pos])
    dt_values = None
    if derivative:
        dt_values = np.zeros(tt.shape)
        dt_values[pos] = _evaluate_parallel(problem, dens, tt[pos], xx[pos], 1, config, threads)
        dt_values[~pos] = problem.data("u1", xx[~pos])
    prov = tuple(name for name, g in (("Z1", problem.u0), ("Z2", problem.u1), ("Y", problem.f))
                 if g is not None)
    return SolutionField(times, x, values, dt_values, prov, {"iterations": dens.iterations})


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class ResidualReport:
    value: float
    caputo: float
    operator: float
    forcing: float

    @property
    def scale(self) -> float:
        return max(abs(self.caputo), abs(self.operator), abs(self.forcing))

    @property
    def relative(self) -> float:
        return abs(self.value) / self.scale if self.scale > 0 else abs(self.value)


def residual_from_samples(op: EllipticOperator, alpha: float, times, x, values, dt_values, it: int,
                          ix: int, forcing: float = 0.0) -> ResidualReport:
    """D^(alpha) u - B u - f at (times[it], x[ix]) from lattice samples.

    The time trace at x[ix] (with its supplied derivative) feeds the Caputo
    operator; spatial derivatives use 5-point centred stencils on the uniform x.
    """
    times = np.asarray(times, dtype=float)
    x = np.asarray(x, dtype=float)
    if times[0] != 0.0 or it < 2:
        raise GridError("the time lattice must start at 0 and t must be interior")
    if ix < 2 or ix > x.size - 3:
        raise GridError("x must have two neighbours on each side")
    h = np.diff(x)
    if not np.allclose(h, h[0], rtol=1e-9):
        raise GridError("residual needs a uniform x lattice")
    h = float(h[0])
    trace = TimeSamples(times[: it + 1], values[: it + 1, ix], dt_values[: it + 1, ix])
    cap = caputo_apply(trace, alpha, times[it])
    u = values[it, ix - 2: ix + 3]
    ux = (u[0] - 8 * u[1] + 8 * u[3] - u[4]) / (12 * h)
    uxx = (-u[0] + 16 * u[1] - 30 * u[2] + 16 * u[3] - u[4]) / (12 * h * h)
    Bu = float(op.apply(u[2], ux, uxx, x[ix]))
    return ResidualReport(cap - Bu - forcing, cap, Bu, forcing)


def residual(problem: CauchyProblem, field: SolutionField, t: float, x: float) -> float:
    """D^(alpha) u - B u - f at a lattice point of ``field``."""
    return residual_report(problem, field, t, x).value


def residual_report(problem: CauchyProblem, field: SolutionField, t: float, x: float) -> ResidualReport:
    if field.dt_values is None:
        raise GridError("the residual needs time-derivative values")
    it = int(np.argmin(np.abs(field.times - t)))
    ix = int(np.argmin(np.abs(field.x - x)))
    if abs(field.times[it] - t) > 1e-12 * max(1.0, t) or abs(field.x[ix] - x) > 1e-12 * max(1.0, abs(x)):
        raise GridError("(t, x) is not a lattice point")
    f = float(problem.data("f", np.asarray(t), np.asarray(x)))
    return residual_from_samples(problem.op, problem.alpha, field.times, field.x, field.values,
                                 field.dt_values, it, ix, f)


@dataclass(frozen=True)
class InitialConditionReport:
    times: np.ndarray
    value_gap: np.ndarray
    derivative_gap: np.ndarray

    @staticmethod
    def _order(t, g):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(g[:-1] / g[1:]) / np.log(t[:-1] / t[1:])

    @property
    def value_order(self):
        return self._order(self.times, self.value_gap)

    @property
    def derivative_order(self):
        return self._order(self.times, self.derivative_gap)

    @staticmethod
    def _monotone(g):
        return bool(np.all(np.diff(g) < 0))

    @property
    def value_monotone(self) -> bool:
        return self._monotone(self.value_gap)

    @property
    def derivative_monotone(self) -> bool:
        return self._monotone(self.derivative_gap)


def initial_condition_report(problem: CauchyProblem, t_sequence, x_points,
                             config: CauchyConfig = CauchyConfig()) -> InitialConditionReport:
    """sup_x |u(t, x) - u0(x)| and sup_x |u_t(t, x) - u1(x)| along a decreasing t sequence."""
    t_seq = np.asarray(t_sequence, dtype=float)
    if np.any(np.diff(t_seq) >= 0) or np.any(t_seq <= 0):
        raise GridError("t_sequence must be positive and decreasing")
    x = np.asarray(x_points, dtype=float)
    sol = solve_cauchy(problem, t_seq, x, config)
    u0 = problem.data("u0", x)
    u1 = problem.data("u1", x)
    vg = np.max(np.abs(sol.values - u0), axis=1)
    dg = np.max(np.abs(sol.dt_values - u1), axis=1)
    return InitialConditionReport(t_seq, vg, dg)


def kernel_residual(table: CorrectedKernel, t: float, x: float, n_time: int = 64, h: float = 0.02,
                    corrected: bool = True) -> ResidualReport:
    """D^(alpha) Z - B_x Z at (t, x) for a corrected kernel with x away from xi.

    The time trace on a uniform mesh of [0, t] feeds the Caputo operator with
    the closed-form time derivative; B_x uses analytic derivatives of the
    frozen part and a 5-point stencil for the correction V. With
    ``corrected=False`` only the frozen part is used (a negative control).
    """
    if table.which != "Z1":
        raise DomainError("kernel_residual is defined for Z1")
    if abs(x - table.xi) < 4 * h:
        raise DomainError("x must stay away from the parametric point")
    times = np.linspace(0.0, t, n_time + 1)
    ts = times[1:]
    xs = x + h * np.arange(-2, 3)
    vals = np.zeros(n_time + 1)
    dvals = np.zeros(n_time + 1)
    vals[1:] = table.frozen(ts, x)
    dvals[1:] = table.frozen(ts, x, time=1)
    uxx = float(table.frozen(t, x, order=2))
    ux = float(table.frozen(t, x, order=1))
    u = float(vals[-1])
    if corrected and not table.op.trivial:
        vals[1:] += table.correction(ts, x)
        dvals[1:] += table.correction(ts, x, kind="Yt")
        v = table.correction(np.full(5, t), xs)
        ux += (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * h)
        uxx += (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h)
        u = float(vals[-1])
    cap = caputo_apply(TimeSamples(times, vals, dvals), table.alpha, t)
    Bu = float(table.op.apply(u, ux, uxx, x))
    return ResidualReport(cap - Bu, cap, Bu, 0.0)
