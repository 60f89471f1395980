"""Independent finite-difference solver for the 1-D Caputo diffusion-wave equation.

Time stepping is the Sun-Wu scheme: with v = u_t the Caputo derivative of
order alpha is the order alpha - 1 derivative of v, discretised by the L1
formula at half steps, and the spatial operator is averaged Crank-Nicolson
style. The full history is kept; the consistency order is dt^(3 - alpha) + dx^2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse import diags
from scipy.sparse.linalg import splu

from .cauchy import CauchyProblem, SolutionField
from .errors import DomainError, EmptyOverlap, GridError, LinearSolveFailure, StabilityWarning


@dataclass(frozen=True)
class FDGrid:
    dt: float
    dx: float
    lo: float
    hi: float
    boundary: str = "dirichlet"

    def __post_init__(self):
        if not (self.dt > 0 and self.dx > 0 and self.hi > self.lo):
            raise GridError("need dt, dx > 0 and hi > lo")
        if self.boundary not in ("dirichlet", "reflecting"):
            raise GridError("boundary must be 'dirichlet' or 'reflecting'")

    @classmethod
    def around(cls, problem: CauchyProblem, lo: float, hi: float, dt: float, dx: float,
               boundary: str = "dirichlet", factor: float = 6.0):
        """Grid whose far boundaries sit factor T^(alpha/2) sqrt(a_max) beyond [lo, hi]."""
        pad = factor * problem.T ** (0.5 * problem.alpha) * math.sqrt(problem.op.a_max)
        return cls(dt, dx, lo - pad, hi + pad, boundary)

    def nodes(self):
        m = int(round((self.hi - self.lo) / self.dx))
        return self.lo + self.dx * np.arange(m + 1)


def _operator_matrix(problem: CauchyProblem, x, dx, boundary):
    a, b, c = problem.op.coefficients(x)
    lower = a / dx**2 - b / (2 * dx)
    main = -2 * a / dx**2 + c
    upper = a / dx**2 + b / (2 * dx)
    if boundary == "dirichlet":
        # unknowns are interior nodes
        return diags([lower[2:-1], main[1:-1], upper[1:-2]], [-1, 0, 1], format="csc")
    # reflecting: ghost values u_-1 = u_1, u_m+1 = u_m-1
    up = upper[:-1].copy()
    lo = lower[1:].copy()
    up[0] += lower[0]
    lo[-1] += upper[-1]
    return diags([lo, main, up], [-1, 0, 1], format="csc")


def fd_solve_1d(problem: CauchyProblem, grid: FDGrid) -> SolutionField:
    """u on all grid nodes at t_k = k dt up to T."""
    if problem.dim != 1:
        raise DomainError("the finite-difference oracle is one-dimensional")
    alpha = problem.alpha
    x = grid.nodes()
    tau = grid.dt
    N = int(round(problem.T / tau))
    if N < 1 or abs(N * tau - problem.T) > 1e-9 * problem.T:
        raise GridError("T must be a multiple of dt")
    times = tau * np.arange(N + 1)
    inner = slice(1, -1) if grid.boundary == "dirichlet" else slice(None)
    xi = x[inner]
    L = _operator_matrix(problem, x, grid.dx, grid.boundary)
    b = np.arange(N + 1, dtype=float) ** (2 - alpha)
    b = b[1:] - b[:-1]  # b_j = (j+1)^(2-alpha) - j^(2-alpha)
    mu = tau ** (1 - alpha) / math.gamma(3 - alpha)
    I = diags([np.ones(xi.size)], [0], format="csc")
    try:
        lu = splu((mu * b[0] / tau) * I - 0.5 * L)
    except RuntimeError as exc:
        raise LinearSolveFailure(str(exc)) from exc
    U = np.zeros((N + 1, x.size))
    U[0] = problem.data("u0", x)
    psi = problem.data("u1", xi)
    incr = np.zeros((N, xi.size))  # (u^k - u^(k-1)) / tau
    scale = max(np.max(np.abs(U[0])), np.max(np.abs(psi)) * problem.T, 1e-300)
    if problem.f is not None:
        scale = max(scale, np.max(np.abs(problem.data("f", times[:, None], x[None, :]))) * problem.T**alpha)
    for n in range(1, N + 1):
        prev = U[n - 1, inner]
        hist = b[n - 1] * psi
        if n > 1:
            # coefficients (b_{n-k-1} - b_{n-k}) for k = 1..n-1
            w = b[n - 2::-1][: n - 1] - b[n - 1:0:-1][: n - 1]
            hist = hist + w @ incr[: n - 1]
        rhs = (mu * b[0] / tau) * prev + 0.5 * (L @ prev) + mu * hist
        if problem.f is not None:
            rhs = rhs + problem.data("f", np.asarray(times[n] - 0.5 * tau), xi)
        new = lu.solve(rhs)
        if not np.all(np.isfinite(new)):
            raise LinearSolveFailure("non-finite values in the time step")
        U[n, inner] = new
        incr[n - 1] = (new - prev) / tau
    if np.max(np.abs(U)) > 10 * scale:
        warnings.warn("finite-difference solution grew beyond 10x the data norm", StabilityWarning)
    dU = np.gradient(U, times, axis=0, edge_order=2)
    dU[0] = problem.data("u1", x)
    return SolutionField(times, x, U, dU, ("fd",), {"grid": grid})


@dataclass(frozen=True)
class CompareReport:
    sup: float
    l2: float
    reference_sup: float
    reference_l2: float
    points: int

    @property
    def relative_sup(self) -> float:
        return self.sup / self.reference_sup if self.reference_sup > 0 else self.sup

    @property
    def relative_l2(self) -> float:
        return self.l2 / self.reference_l2 if self.reference_l2 > 0 else self.l2

    def norm(self, which: str = "sup") -> float:
        if which not in ("sup", "L2"):
            raise DomainError("norm must be 'sup' or 'L2'")
        return self.sup if which == "sup" else self.l2


def compare(field_a: SolutionField, field_b: SolutionField, t_range=None, x_range=None) -> CompareReport:
    """Differences of two fields on the lattice of ``field_a`` inside the common range.

    ``field_b`` is interpolated bilinearly. The reference norms are those of
    ``field_b``, so relative values read as discrepancy / size of the reference.
    """
    t0 = max(field_a.times[0], field_b.times[0])
    t1 = min(field_a.times[-1], field_b.times[-1])
    x0 = max(field_a.x[0], field_b.x[0])
    x1 = min(field_a.x[-1], field_b.x[-1])
    if t_range is not None:
        t0, t1 = max(t0, t_range[0]), min(t1, t_range[1])
    if x_range is not None:
        x0, x1 = max(x0, x_range[0]), min(x1, x_range[1])
    eps = 1e-12
    it = (field_a.times >= t0 - eps) & (field_a.times <= t1 + eps)
    ix = (field_a.x >= x0 - eps) & (field_a.x <= x1 + eps)
    if not it.any() or not ix.any():
        raise EmptyOverlap("the fields share no lattice points")
    tt, xx = np.meshgrid(field_a.times[it], field_a.x[ix], indexing="ij")
    pts = np.stack([np.clip(tt, field_b.times[0], field_b.times[-1]),
                    np.clip(xx, field_b.x[0], field_b.x[-1])], axis=-1)
    if field_b.times.size > 1 and field_b.x.size > 1:
        vb = RegularGridInterpolator((field_b.times, field_b.x), field_b.values)(pts)
    elif field_b.times.size == 1:
        vb = np.interp(xx, field_b.x, field_b.values[0])
    else:
        vb = np.interp(tt, field_b.times, field_b.values[:, 0])
    va = field_a.values[np.ix_(it, ix)]
    d = va - vb
    return CompareReport(float(np.max(np.abs(d))), float(np.sqrt(np.mean(d**2))),
                         float(np.max(np.abs(vb))), float(np.sqrt(np.mean(vb**2))), int(d.size))
