"""Self-check suites: each check reports a measured value against its target.

Suites: ``special`` (Gaussian case, M-Wright moments, derivative identity),
``identities`` (kernel integrals over R^n), ``fraccalc`` (power rules and the
fractional shift of the kernel family), ``levi`` (exactness in the degenerate
case) and ``envelope`` (kernel bounds under grid refinement).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .fraccalc import TimeSamples, caputo_apply, graded_mesh, rl_derivative
from .kernels import EllipticParamField, KernelId, identity_check
from .levi import EllipticOperator, LeviConfig, solve_volterra
from .special import FFamilyParams, f_family, f_family_array, f_family_dz, table_limit, wright_phi_array

SUITES = ("special", "identities", "fraccalc", "levi", "envelope")


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    target: float
    passed: bool

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name}: measured {self.measured:.3e}, target {self.target:.3e}"


def _below(name, measured, target):
    return Check(name, float(measured), float(target), bool(measured <= target))


# ---------------------------------------------------------------------------
# special functions


def gaussian_error(n: int = 1001) -> float:
    """max |Phi(-1/2, 1/2, -z) - exp(-z^2/4)/sqrt(pi)| on [0, 10]."""
    z = np.linspace(0.0, 10.0, n)
    return float(np.max(np.abs(wright_phi_array(0.5, 0.5, -z) - np.exp(-0.25 * z * z) / math.sqrt(math.pi))))


def mwright_moment(beta: float, k: int, panels: int = 200) -> float:
    """int_0^oo u^k Phi(-beta, 1 - beta, -u) du by composite Gauss-Legendre."""
    gx, gw = leggauss(16)
    e = np.linspace(0.0, table_limit(beta, 1e-30), panels + 1)
    h = np.diff(e)[:, None]
    u = (0.5 * (e[:-1, None] + e[1:, None]) + 0.5 * h * gx).ravel()
    w = (0.5 * h * gw).ravel()
    return float(np.dot(w, u**k * wright_phi_array(beta, 1.0 - beta, -u)))


def derivative_identity_error(draws: int = 100, seed: int = 2024) -> float:
    """Worst relative gap between f_family_dz and a 5-point difference of f_family."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        mu = float(rng.choice([0.0, 0.5, 1.0, 1.5, 2.0, 3.0]))
        p = FFamilyParams(mu, rng.uniform(-1.0, 2.0), rng.uniform(0.55, 0.9))
        z = rng.uniform(0.1, 2.0)
        h = 1e-3 * z
        f = [f_family(p, z + k * h).value for k in (-2, -1, 1, 2)]
        fd = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
        d = f_family_dz(p, z).value
        worst = max(worst, abs(d - fd) / abs(d))
    return worst


def special_suite() -> list[Check]:
    out = [_below("Gaussian case of the Wright function", gaussian_error(), 1e-10)]
    for beta in (0.625, 0.75, 0.875):
        for k in range(4):
            exact = math.gamma(k + 1) / math.gamma(beta * k + 1)
            out.append(_below(f"M-Wright moment k={k}, beta={beta}", abs(mwright_moment(beta, k) - exact), 1e-8))
    out.append(_below("derivative identity vs finite differences (100 draws)", derivative_identity_error(), 1e-6))
    return out


# ---------------------------------------------------------------------------
# integral identities

ANISOTROPIC = {1: np.array([[2.5]]),
               2: np.array([[2.0, 0.3], [0.3, 1.0]]),
               3: np.array([[2.0, 0.3, 0.1], [0.3, 1.0, -0.2], [0.1, -0.2, 1.5]])}


def identities_suite(alphas=(1.25, 1.5, 1.75), dims=(1, 2, 3), times=(0.25, 1.0, 2.0),
                     tol: float = 1e-6) -> list[Check]:
    """int Z1 = 1, int Z2 = t, int Y = t^(alpha-1)/Gamma(alpha) for identity and anisotropic a."""
    worst = {}
    for n in dims:
        for label, a in (("identity", np.eye(n)), ("anisotropic", ANISOTROPIC[n])):
            fld = EllipticParamField.constant(a)
            for alpha in alphas:
                for t in times:
                    for which in ("Z1", "Z2", "Y"):
                        rel = identity_check(fld, KernelId(which), alpha, t, np.zeros(n)).relative
                        key = (which, n, label)
                        worst[key] = max(worst.get(key, 0.0), rel)
    return [_below(f"integral of {w}, n={n}, {label} a (worst over alpha, t)", v, tol)
            for (w, n, label), v in worst.items()]


# ---------------------------------------------------------------------------
# fractional calculus


def power_rule_errors(alpha: float = 1.5, n: int = 511, grading: float = 2.0, t_min: float = 0.01):
    """Worst Caputo errors for affine, t^2 and t^alpha/Gamma(alpha+1) on a graded mesh."""
    nodes = graded_mesh(1.0, n, grading)
    t = nodes[(nodes >= t_min)]
    g = math.gamma
    cases = [
        (lambda s: 2.0 - 3.0 * s, lambda s: np.full_like(s, -3.0), lambda s: 0.0 * s),
        (lambda s: s**2, lambda s: 2 * s, lambda s: 2.0 * s ** (2 - alpha) / g(3 - alpha)),
        (lambda s: s**alpha / g(alpha + 1), lambda s: s ** (alpha - 1) / g(alpha), lambda s: np.ones_like(s)),
    ]
    errs = []
    for u, du, exact in cases:
        vals = caputo_apply(TimeSamples(nodes, u(nodes), du(nodes)), alpha, t)
        errs.append(float(np.max(np.abs(vals - exact(t)))))
    return errs


def _kernel_family(alpha, z, mu, delta, s):
    safe = np.where(s > 0, s, 1.0)
    return np.where(s > 0, safe ** (delta - 1) * f_family_array(mu, delta, 0.5 * alpha, safe ** (-0.5 * alpha) * z), 0.0)


def shift_error(alpha: float, z: float, mu: float, delta: float, t: float, order: float, n: int) -> float:
    """Relative gap between rl_derivative of t^(delta-1) f(t^(-alpha/2) z; mu, delta) and its closed form."""
    nodes = np.linspace(0.0, 1.0, n + 1)
    num = rl_derivative(TimeSamples(nodes, _kernel_family(alpha, z, mu, delta, nodes)), order, t)
    exact = t ** (delta - order - 1) * float(f_family_array(mu, delta - order, 0.5 * alpha, t ** (-0.5 * alpha) * z))
    return abs(num - exact) / abs(exact)


def power_rule_order(beta: float = 0.5, t: float = 0.5, sizes=(32, 64, 128, 256)) -> float:
    """Observed order of rl_derivative on t^2 under halving of a uniform step."""
    exact = 2.0 / math.gamma(3.0 - beta) * t ** (2.0 - beta)
    errs = []
    for n in sizes:
        nodes = np.linspace(0.0, 1.0, n + 1)
        errs.append(abs(rl_derivative(TimeSamples(nodes, nodes**2), beta, t) - exact))
    return float(np.min(np.log2(np.array(errs[:-1]) / np.array(errs[1:]))))


def fraccalc_suite() -> list[Check]:
    errs = power_rule_errors()
    out = [_below(name, e, tol) for name, e, tol in
           zip(("Caputo of affine", "Caputo of t^2", "Caputo of t^alpha/Gamma(alpha+1)"), errs, (1e-12, 1e-4, 1e-4))]
    out.append(_below("fractional shift of the kernel family", shift_error(1.5, 0.8, 0.0, 1.25, 0.6, 0.5, 800), 1e-3))
    order = power_rule_order()
    out.append(Check("grid-convergence order of the RL derivative", order, 1.8, order >= 1.8))
    return out


# ---------------------------------------------------------------------------
# Levi pipeline


def degenerate_gap(alpha: float = 1.5, a0: float = 1.3, xi: float = 0.2, T: float = 0.5,
                   config: LeviConfig = LeviConfig(n_time=8)) -> float:
    """max |corrected - frozen| for constant a (not flagged constant), b = c = 0."""
    op = EllipticOperator.one_dim(lambda x: np.full_like(np.asarray(x, dtype=float), a0), bounds=(a0, a0))
    table = solve_volterra(op, "Z1", alpha, xi, T, config)
    t = np.array([0.1, 0.3, 0.5, 0.5])
    x = np.array([0.0, 0.5, 1.5, xi + 0.01])
    return float(np.max(np.abs(table(t, x) - table.frozen(t, x))))


def levi_suite() -> list[Check]:
    return [_below("corrected = frozen for constant coefficients", degenerate_gap(), 1e-14)]


# ---------------------------------------------------------------------------


def envelope_suite() -> list[Check]:
    from .envelope import run_envelope_suite

    return [Check(f"envelope growth: {r.name}", r.growth, r.limit, r.passed) for r in run_envelope_suite()]


_RUNNERS = {"special": special_suite, "identities": identities_suite, "fraccalc": fraccalc_suite,
            "levi": levi_suite, "envelope": envelope_suite}


def run_suites(names) -> list[Check]:
    out = []
    for name in names:
        if name not in _RUNNERS:
            raise KeyError(name)
        out.extend(_RUNNERS[name]())
    return out
