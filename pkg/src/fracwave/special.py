"""Wright function Phi(-beta, delta, z) and the integral family f_beta(z; mu, delta).

Two evaluation routes are used for the Wright function:

* the power series sum_m z^m / (m! Gamma(delta - beta m)) for |z| <= 1 and for
  positive arguments, and
* a Hankel contour integral

      Phi(-beta, delta, -x) = (1/2 pi i) int_Ha exp(s - x s^beta) s^(-delta) ds

  for negative arguments beyond the unit disc, where the series suffers from
  catastrophic cancellation. The contour is a circular arc through the saddle
  point of s - x s^beta plus two rays on which the integrand decays.

For mu > 0 the inner t-integral of f_beta can be done in closed form,

    int_1^oo exp(-p t) (t^2 - 1)^(mu/2 - 1) dt
        = Gamma(mu/2) (2/p)^((mu-1)/2) K_((mu-1)/2)(p) / sqrt(pi),

so the same contour evaluates f_beta(z; mu, delta) with a Bessel factor. For
even mu the recursion f(mu + 2, d) = -(2/z) d/dz f(mu, d + alpha) reduces f to a
finite combination of Wright functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln, gammasgn, kve, rgamma

from .errors import DomainError, NonConvergence

EPS = np.finfo(float).eps

SERIES_RADIUS = 1.0
POSITIVE_LIMIT = 30.0

_GL = {m: leggauss(m) for m in (8, 12, 16)}


@dataclass(frozen=True)
class WrightParams:
    beta: float
    delta: float

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise DomainError(f"beta must lie in (0, 1), got {self.beta}")
        if not math.isfinite(self.delta):
            raise DomainError("delta must be finite")


@dataclass(frozen=True)
class FFamilyParams:
    mu: float
    delta: float
    beta: float

    def __post_init__(self):
        if self.mu < 0:
            raise DomainError(f"mu must be >= 0, got {self.mu}")
        if not 0.0 < self.beta < 1.0:
            raise DomainError(f"beta must lie in (0, 1), got {self.beta}")
        if not math.isfinite(self.delta):
            raise DomainError("delta must be finite")


@dataclass(frozen=True)
class EvalResult:
    value: float
    abs_error_bound: float
    terms_used: int

    def __float__(self):
        return float(self.value)


def decay_rate(beta: float) -> float:
    """Exponent c in Phi(-beta, delta, -x) ~ exp(-c x^(1/(1-beta))) as x -> oo."""
    return (1.0 - beta) * beta ** (beta / (1.0 - beta))


def underflow_limit(beta: float) -> float:
    """Argument x beyond which Phi(-beta, delta, -x) and f(x; mu, delta) underflow."""
    return (800.0 / decay_rate(beta)) ** (1.0 - beta)


# ---------------------------------------------------------------------------
# power series


def _series(beta, delta, z, tol, max_terms):
    """Vectorised partial sums; returns (value, bound, terms)."""
    z = np.asarray(z, dtype=float)
    total = np.zeros_like(z)
    abs_total = np.zeros_like(z)
    zmax = float(np.max(np.abs(z))) if z.size else 0.0
    zm = np.ones_like(z)
    quiet = 0
    m = 0
    remainder = np.inf
    while m < max_terms:
        with np.errstate(invalid="ignore", over="ignore"):
            term = zm * rgamma(delta - beta * m)
        lost = ~np.isfinite(term) | ((zm == 0.0) & (z != 0.0))
        if lost.any():
            # z^m/m! underflows while 1/Gamma overflows: combine the two in log space
            arg = delta - beta * m
            if arg <= 0.0 and arg == math.floor(arg):
                # 1/Gamma vanishes at the poles
                term[lost] = 0.0
            else:
                with np.errstate(divide="ignore"):
                    logmag = m * np.log(np.abs(z[lost])) - gammaln(m + 1.0) - gammaln(arg)
                term[lost] = np.sign(z[lost]) ** m * gammasgn(arg) * np.exp(logmag)
        total += term
        abs_total += np.abs(term)
        small = np.abs(term) <= tol * np.maximum(np.abs(total), 1e-300)
        quiet = quiet + 1 if np.all(small | (term == 0.0)) else 0
        m += 1
        zm = zm * z / m
        if quiet >= 3 or zmax == 0.0:
            remainder = _series_remainder(beta, delta, zmax, m)
            if zmax == 0.0 or remainder <= tol * max(float(np.min(np.abs(total))), 1e-300) \
                    or remainder < 1e-300:
                break
    else:
        raise NonConvergence(
            f"Wright series did not converge in {max_terms} terms (|z| = {zmax:g})"
        )
    bound = remainder + 32.0 * EPS * abs_total
    return total, bound, m


def _series_remainder(beta, delta, zabs, m):
    """Geometric majorant of sum_{k >= m} |z|^k Gamma(1 - delta + beta k) / (pi k!)."""
    if zabs == 0.0:
        return 0.0
    k = m
    # the majorant needs 1 - delta + beta k > 0
    while 1.0 - delta + beta * k <= 0.5:
        k += 1
    if k > m:
        return np.inf

    def log_u(j):
        return j * math.log(zabs) + gammaln(1.0 - delta + beta * j) - gammaln(j + 1.0) - math.log(math.pi)

    lu0 = log_u(k)
    r = math.exp(log_u(k + 1) - lu0)
    if r >= 1.0:
        return np.inf
    return math.exp(lu0) / (1.0 - r)


# ---------------------------------------------------------------------------
# Hankel contour


def _bessel_factor(nu):
    def factor(p):
        return (2.0 / math.sqrt(math.pi)) * (2.0 / p) ** nu * kve(nu, p)
    return factor


def _contour(beta, delta, x, nu=None, order=16, with_error=False):
    """(1/2 pi i) int_Ha e^s s^-delta A(x s^beta) ds for x > 0 (vectorised).

    A(p) = exp(-p) when ``nu`` is None, otherwise the scaled Bessel form
    (2/sqrt(pi)) (2/p)^nu K_nu(p).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        shape = x.shape
        res = _contour(beta, delta, x.reshape(-1), nu, order, with_error)
        if with_error:
            return res[0].reshape(shape), res[1].reshape(shape)
        return res.reshape(shape)
    # beyond this the integrand is below the double range everywhere
    huge = x > underflow_limit(beta)
    if huge.any():
        value = np.zeros_like(x)
        bound = np.zeros_like(x)
        if (~huge).any():
            res = _contour(beta, delta, x[~huge], nu, order, with_error)
            if with_error:
                value[~huge], bound[~huge] = res
            else:
                value[~huge] = res
        return (value, bound) if with_error else value
    theta = math.pi if beta <= 0.5 else math.pi / (2.0 * beta)
    kappa = -math.cos(theta)
    extra = None if nu is None else _bessel_factor(nu)

    rho = np.maximum((x * beta) ** (1.0 / (1.0 - beta)), 1.0)
    width = np.minimum(theta, 1.0 / np.sqrt(rho * (1.0 - beta)))
    npan = int(math.ceil(math.log2(theta / width.min()))) + 1
    edges = np.minimum(theta, width[:, None] * 2.0 ** np.arange(npan))
    edges = np.concatenate([np.zeros((x.size, 1)), edges], axis=1)

    vmax = 45.0 + 3.0 * max(0.0, -delta)
    vedges = vmax * np.array([0, 1, 2, 3, 4, 6, 8, 11, 15, 20, 26, 33, 41, 50]) / 50.0

    def integrand(s, xx):
        p = xx * s**beta
        val = np.exp(s - p - delta * np.log(s))
        if extra is not None:
            val = val * extra(p)
        return val

    def run(m):
        gx, gw = _GL[m]
        a, b = edges[:, :-1, None], edges[:, 1:, None]
        half = 0.5 * (b - a)
        phi = 0.5 * (a + b) + half * gx
        s = rho[:, None, None] * np.exp(1j * phi)
        f_arc = integrand(s, x[:, None, None]) * s * (half * gw)
        arc = f_arc.reshape(x.size, -1).sum(axis=1).real / math.pi
        av = 0.5 * (vedges[:-1, None] + vedges[1:, None]) + 0.5 * (vedges[1:, None] - vedges[:-1, None]) * gx
        vw = 0.5 * (vedges[1:, None] - vedges[:-1, None]) * gw
        r = rho[:, None, None] + av[None] / kappa
        s = r * np.exp(1j * theta)
        f_ray = integrand(s, x[:, None, None]) * np.exp(1j * theta) * (vw[None] / kappa)
        ray = f_ray.reshape(x.size, -1).sum(axis=1).imag / math.pi
        mag = (np.abs(f_arc).reshape(x.size, -1).sum(axis=1) + np.abs(f_ray).reshape(x.size, -1).sum(axis=1)) / math.pi
        return arc + ray, mag

    value, mag = run(order)
    if not with_error:
        return value
    coarse, _ = run(12 if order > 12 else 8)
    bound = np.abs(value - coarse) + 16.0 * EPS * mag
    return value, bound


# ---------------------------------------------------------------------------
# Wright function


def wright_phi_array(beta: float, delta: float, z, tol: float = 1e-13) -> np.ndarray:
    """Vectorised Phi(-beta, delta, z) for real z (no error bookkeeping)."""
    z = np.asarray(z, dtype=float)
    out = np.full_like(z, np.nan)
    flat_z, flat_o = z.reshape(-1), out.reshape(-1)
    near = np.abs(flat_z) <= SERIES_RADIUS
    neg = flat_z < -SERIES_RADIUS
    pos = flat_z > SERIES_RADIUS
    if near.any():
        flat_o[near] = _series(beta, delta, flat_z[near], tol, 400)[0]
    if neg.any():
        flat_o[neg] = _contour(beta, delta, -flat_z[neg])
    if pos.any():
        if flat_z[pos].max() > POSITIVE_LIMIT:
            raise NonConvergence("positive arguments beyond the series range")
        flat_o[pos] = _series(beta, delta, flat_z[pos], tol, 5000)[0]
    return out


def wright_phi(params: WrightParams, z: float, tol: float = 1e-12, max_terms: int = 5000) -> EvalResult:
    """Phi(-beta, delta, z) with an error bound.

    Series for |z| <= 1 and for 1 < z <= 30; contour for z < -1. Positive
    arguments beyond 30 raise NonConvergence.
    """
    z = float(z)
    if not math.isfinite(z):
        raise DomainError("z must be finite")
    beta, delta = params.beta, params.delta
    if z < -SERIES_RADIUS:
        value, bound = _contour(beta, delta, np.array([-z]), with_error=True)
        return EvalResult(float(value[0]), float(bound[0]), 0)
    if z > POSITIVE_LIMIT:
        raise NonConvergence(f"z = {z} is beyond the series range; use a negative argument")
    value, bound, terms = _series(beta, delta, np.array([z]), tol, max_terms)
    return EvalResult(float(value[0]), float(bound[0]), terms)


def wright_phi_dz(params: WrightParams, z: float, tol: float = 1e-12) -> EvalResult:
    """d/dz Phi(-beta, delta, z) = Phi(-beta, delta - beta, z)."""
    return wright_phi(WrightParams(params.beta, params.delta - params.beta), z, tol)


# ---------------------------------------------------------------------------
# f_beta(z; mu, delta)


@lru_cache(maxsize=None)
def even_mu_terms(mu: int, delta: float, beta: float):
    """Terms (coef, k, d) with f(z; mu, delta) = sum coef z^-k Phi(-beta, d, -z), mu even."""
    if mu % 2:
        raise ValueError("mu must be even")
    if mu == 0:
        return ((1.0, 0, delta),)
    alpha = 2.0 * beta
    out = {}
    for coef, k, d in even_mu_terms(mu - 2, delta + alpha, beta):
        # d/dz [z^-k Phi(-beta, d, -z)] = -k z^-(k+1) Phi(d) - z^-k Phi(d - beta)
        for c2, k2, d2 in ((-k * coef, k + 1, d), (-coef, k, d - beta)):
            if c2 == 0.0:
                continue
            # multiply by -(2/z)
            key = (k2 + 1, round(d2, 12))
            out[key] = out.get(key, 0.0) - 2.0 * c2
    return tuple((c, k, d) for (k, d), c in sorted(out.items()) if c != 0.0)


def _is_even_int(mu):
    return float(mu).is_integer() and int(mu) % 2 == 0


def f_family_array(mu: float, delta: float, beta: float, z, fast: bool = False) -> np.ndarray:
    """Vectorised f_beta(z; mu, delta) for z > 0 (z >= 0 when mu = 0).

    ``fast`` switches to cached Chebyshev tables (absolute accuracy ~1e-13 of
    the function scale); the tails are then truncated to zero, so envelope
    studies should keep the default.
    """
    z = np.asarray(z, dtype=float)
    if mu == 0:
        if fast:
            return phi_table(beta, delta)(z)
        return wright_phi_array(beta, delta, -z)
    if np.any(z <= 0):
        raise DomainError("f_family needs z > 0 when mu > 0")
    if _is_even_int(mu):
        out = np.zeros_like(z)
        for coef, k, d in even_mu_terms(int(mu), float(delta), float(beta)):
            phi = phi_table(beta, d)(z) if fast else wright_phi_array(beta, d, -z)
            out += coef * z ** (-k) * phi
        return out
    if fast:
        return f_table(beta, float(mu), float(delta))(z)
    return _contour(beta, delta, z.reshape(-1), nu=0.5 * (mu - 1.0)).reshape(z.shape)


def _check_f_domain(params, z):
    if not math.isfinite(z):
        raise DomainError("z must be finite")
    if params.mu > 0 and z <= 0:
        raise DomainError("f_family needs z > 0 when mu > 0")
    if params.mu == 0 and z < 0:
        raise DomainError("f_family needs z >= 0")


def f_family(params: FFamilyParams, z: float, method: str = "auto", tol: float = 1e-12) -> EvalResult:
    """f_beta(z; mu, delta) with an error bound.

    ``method`` is one of ``auto`` (closed form for even mu, contour otherwise),
    ``contour`` or ``quadrature`` (direct t-integral on a cosh-substituted
    graded mesh).
    """
    z = float(z)
    _check_f_domain(params, z)
    mu, delta, beta = params.mu, params.delta, params.beta
    if mu == 0:
        return wright_phi(WrightParams(beta, delta), -z, tol)
    if method == "quadrature":
        return f_family_quadrature(params, z, tol)
    if method == "auto" and _is_even_int(mu):
        value, bound = 0.0, 0.0
        for coef, k, d in even_mu_terms(int(mu), float(delta), float(beta)):
            r = wright_phi(WrightParams(beta, d), -z, tol)
            value += coef * z ** (-k) * r.value
            bound += abs(coef) * z ** (-k) * r.abs_error_bound
        return EvalResult(float(value), float(bound + 4 * EPS * abs(value)), 0)
    if method not in ("auto", "contour"):
        raise ValueError(f"unknown method {method!r}")
    value, bound = _contour(beta, delta, np.array([z]), nu=0.5 * (mu - 1.0), with_error=True)
    return EvalResult(float(value[0]), float(bound[0]), 0)


def f_family_dz(params: FFamilyParams, z: float, method: str = "auto", tol: float = 1e-12) -> EvalResult:
    """d/dz f(z; mu, delta) = -(z/2) f(z; mu + 2, delta - alpha), alpha = 2 beta."""
    z = float(z)
    _check_f_domain(params, z)
    if z == 0.0:
        # only mu = 0 reaches here; -(z/2) f(z; 2, .) tends to -Phi(-beta, delta - beta, 0)
        return EvalResult(-float(rgamma(params.delta - params.beta)), 0.0, 1)
    shifted = FFamilyParams(params.mu + 2.0, params.delta - 2.0 * params.beta, params.beta)
    r = f_family(shifted, z, method, tol)
    return EvalResult(-0.5 * z * r.value, 0.5 * z * r.abs_error_bound, r.terms_used)


def f_family_quadrature(params: FFamilyParams, z: float, tol: float = 1e-12, panels: int = 40) -> EvalResult:
    """Direct evaluation of (2/Gamma(mu/2)) int_1^oo Phi(-beta, delta, -z t)(t^2-1)^(mu/2-1) dt.

    With t = cosh(s) the weight becomes sinh(s)^(mu-1) ds; the first panel is
    graded with exponent 2/mu so the endpoint singularity is smoothed, and the
    tail is cut where the Wright decay envelope drops below ``tol``.
    """
    mu, delta, beta = params.mu, params.delta, params.beta
    if z <= 0:
        raise DomainError("f_family needs z > 0 when mu > 0")
    c = decay_rate(beta)
    x_cut = ((math.log(1.0 / tol) + 10.0) / c) ** (1.0 - beta) * 1.3 + 2.0
    s_max = math.acosh(max(x_cut / z, 1.0 + 1e-12)) + 1e-3
    s1 = min(0.05, s_max / panels)
    q = max(1.0, 2.0 / mu)
    gx, gw = _GL[16]

    def integrand(s):
        return wright_phi_array(beta, delta, -z * np.cosh(s)) * np.sinh(s) ** (mu - 1.0)

    def integrate(npan):
        # first panel: s = s1 u^q
        u = 0.5 * (gx + 1.0)
        s = s1 * u**q
        first = np.sum(0.5 * gw * integrand(s) * s1 * q * u ** (q - 1.0))
        edges = np.geomspace(s1, s_max, npan + 1)
        a, b = edges[:-1, None], edges[1:, None]
        pts = 0.5 * (a + b) + 0.5 * (b - a) * gx
        rest = np.sum(0.5 * (b - a) * gw * integrand(pts))
        return first + rest

    fine = integrate(panels)
    coarse = integrate(panels // 2)
    tail = abs(integrand(np.array([s_max]))[0]) * 10.0
    if not math.isfinite(fine):
        raise NonConvergence("quadrature produced a non-finite value")
    scale = 2.0 / math.gamma(0.5 * mu)
    if tail * scale > max(tol * abs(fine * scale), 1e-290) * 1e3:
        raise NonConvergence("tail of the t-integral is not negligible at the cutoff")
    value = float(scale * fine)
    bound = float(scale * (abs(fine - coarse) + tail) + 1e-15 * abs(value))
    return EvalResult(value, bound, 2 * panels * 16)


# ---------------------------------------------------------------------------
# Chebyshev tables for bulk evaluation


class PiecewiseCheb:
    """Piecewise Chebyshev interpolant on consecutive intervals, optionally in log variable."""

    def __init__(self, func, edges, degree=20, log=False):
        self.edges = np.asarray(edges, dtype=float)
        self.log = log
        knots = np.log(self.edges) if log else self.edges
        self.knots = knots
        nodes = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))
        a, b = knots[:-1, None], knots[1:, None]
        pts = 0.5 * (a + b) + 0.5 * (b - a) * nodes
        vals = func(np.exp(pts) if log else pts)
        # Chebyshev coefficients from values at Chebyshev-Gauss nodes
        V = C.chebvander(nodes, degree)
        self.coef = np.linalg.solve(V, vals.T).T  # (pieces, degree+1)
        self.coef_t = np.ascontiguousarray(self.coef.T)
        steps = np.diff(knots)
        self.step = float(steps[0])
        self.uniform = not log and np.allclose(steps, self.step, rtol=1e-12)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        u = np.log(x) if self.log else x
        last = len(self.knots) - 2
        if self.uniform:
            k = np.clip(((u - self.knots[0]) / self.step).astype(np.intp), 0, last)
        else:
            k = np.clip(np.searchsorted(self.knots, u, side="right") - 1, 0, last)
        a, b = self.knots[k], self.knots[k + 1]
        t = (2.0 * u - a - b) / (b - a)
        # Clenshaw with per-point coefficient rows
        coef = self.coef_t
        b1 = np.zeros_like(t)
        b2 = np.zeros_like(t)
        t2 = 2.0 * t
        for j in range(coef.shape[0] - 1, 0, -1):
            b1, b2 = coef[j][k] + t2 * b1 - b2, b1
        return coef[0][k] + t * b1 - b2


def table_limit(beta: float, tol: float = 1e-18) -> float:
    """Argument beyond which Phi(-beta, ., -x) is negligible for table purposes."""
    c = decay_rate(beta)
    return ((math.log(1.0 / tol) + 8.0) / c) ** (1.0 - beta) * 1.25 + 2.0


class _PhiTable:
    def __init__(self, beta, delta):
        self.beta, self.delta = beta, delta
        self.zmax = table_limit(beta)
        npieces = int(math.ceil(self.zmax / 0.25))
        edges = np.linspace(0.0, self.zmax, npieces + 1)
        self.cheb = PiecewiseCheb(lambda x: wright_phi_array(beta, delta, -x), edges, degree=20)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        out = self.cheb(np.minimum(z, self.zmax))
        return np.where(z >= self.zmax, 0.0, out)


class _FTable:
    """Table for f(z; mu, delta) with mu > 0 not even; z^(mu-1) f is tabulated for mu > 1."""

    ZLO = 1e-14

    def __init__(self, beta, mu, delta):
        self.beta, self.mu, self.delta = beta, mu, delta
        self.power = max(mu - 1.0, 0.0)
        nu = 0.5 * (mu - 1.0)
        p = self.power

        def scaled(x):
            return _contour(beta, delta, x, nu=nu) * x**p

        self.zmax = table_limit(beta)
        self.small = PiecewiseCheb(scaled, np.geomspace(self.ZLO, 1.0, 29), degree=20, log=True)
        npieces = int(math.ceil((self.zmax - 1.0) / 0.25))
        self.large = PiecewiseCheb(scaled, np.linspace(1.0, self.zmax, npieces + 1), degree=20)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        lo = z < self.ZLO
        mid = (z >= self.ZLO) & (z < 1.0)
        hi = (z >= 1.0) & (z < self.zmax)
        if lo.any():
            out[lo] = _contour(self.beta, self.delta, z[lo], nu=0.5 * (self.mu - 1.0))
        if mid.any():
            out[mid] = self.small(z[mid]) * z[mid] ** (-self.power)
        if hi.any():
            out[hi] = self.large(z[hi]) * z[hi] ** (-self.power)
        return out


@lru_cache(maxsize=256)
def _phi_table_cached(beta, delta):
    return _PhiTable(beta, delta)


@lru_cache(maxsize=256)
def _f_table_cached(beta, mu, delta):
    return _FTable(beta, mu, delta)


def phi_table(beta: float, delta: float) -> _PhiTable:
    """Shared, read-only Chebyshev table of x -> Phi(-beta, delta, -x) on [0, zmax]."""
    return _phi_table_cached(round(float(beta), 14), round(float(delta), 12))


def f_table(beta: float, mu: float, delta: float) -> _FTable:
    return _f_table_cached(round(float(beta), 14), round(float(mu), 12), round(float(delta), 12))
