"""Constant- and frozen-coefficient kernels Z1, Z2, Y and their derivatives.

All three kernels share one radial form. With beta = alpha/2 and
c_n = 2^-n pi^((1-n)/2),

    R(t, r; n, delta) = c_n t^(delta-1) f_beta(t^-beta r; n-1, delta),

Y uses delta = alpha - alpha n/2, Z1 and Z2 shift delta by -(alpha-1) and
-(alpha-2). A time derivative lowers delta by one, and the radial derivative
obeys dR/dr = -(r/2) R(t, r; n+2, delta-alpha) (with the n+2 acting only on
the mu parameter, c_n is kept). Frozen kernels replace r by the anisotropic
distance sqrt(y^T a^-1 y) and carry the factor (det a)^-1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainError, QuadratureFailure, SingularMatrix
from .special import f_family_array, table_limit

KERNELS = ("Z1", "Z2", "Y")
COND_LIMIT = 1e12


def norm_const(n: int) -> float:
    return 2.0 ** (-n) * math.pi ** (0.5 * (1 - n))


def zeta(alpha: float, which: str) -> float:
    """Order of the fractional shift turning Y into the requested kernel."""
    try:
        return {"Y": 0.0, "Z1": alpha - 1.0, "Z2": alpha - 2.0}[which]
    except KeyError:
        raise DomainError(f"unknown kernel {which!r}") from None


def kernel_delta(alpha: float, n: int, which: str, time: int = 0) -> float:
    return alpha - 0.5 * alpha * n - zeta(alpha, which) - time


def radial(alpha: float, n: int, delta: float, t, r, k: int = 0, fast: bool = False):
    """c_n t^(delta-1) f(t^-beta r; n-1+2k, delta) (k counts radial 'plus' steps)."""
    if n not in (1, 2, 3):
        raise DomainError("n must be 1, 2 or 3")
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(t <= 0):
        raise DomainError("t must be positive")
    beta = 0.5 * alpha
    mu = n - 1 + 2 * k
    if mu > 0 and np.any(r <= 0):
        raise DomainError("r = 0 is singular for this kernel")
    z = r * t ** (-beta)
    return norm_const(n) * t ** (delta - 1.0) * f_family_array(mu, delta, beta, z, fast=fast)


def _check_alpha(alpha):
    if not 1.0 < alpha < 2.0:
        raise DomainError("alpha must lie in (1, 2)")


def gamma_kernel(alpha: float, n: int, t, r, fast: bool = False):
    """Gamma_{alpha,n}(t, r) = Y_0."""
    _check_alpha(alpha)
    return radial(alpha, n, alpha - 0.5 * alpha * n, t, r, fast=fast)


def const_triple(alpha: float, n: int, t, r, fast: bool = False):
    """(Z1_0, Z2_0, Y_0) at (t, r)."""
    _check_alpha(alpha)
    return tuple(radial(alpha, n, kernel_delta(alpha, n, w), t, r, fast=fast) for w in KERNELS)


def rho(sigma: float, alpha: float, t, x, xi):
    """exp(-sigma (t^-alpha/2 |x - xi|)^(2/(2-alpha)))."""
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(xi, dtype=float))
    if d.ndim and d.shape[-1:] != () and np.ndim(x) > 1:
        d = np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(xi, dtype=float), axis=-1)
    return np.exp(-sigma * (np.asarray(t, dtype=float) ** (-0.5 * alpha) * d) ** (2.0 / (2.0 - alpha)))


# ---------------------------------------------------------------------------
# frozen kernels


@dataclass(frozen=True)
class KernelId:
    which: str
    derivative: tuple = ()
    time: int = 0

    def __post_init__(self):
        if self.which not in KERNELS:
            raise DomainError(f"unknown kernel {self.which!r}")
        if len(self.derivative) > 2:
            raise DomainError("spatial derivatives are limited to order 2")
        if self.time not in (0, 1):
            raise DomainError("time derivative order must be 0 or 1")


@dataclass(frozen=True)
class EllipticParamField:
    dim: int
    a: Callable[[np.ndarray], np.ndarray]
    delta0: float = 0.0
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise DomainError("dim must be 1, 2 or 3")

    @classmethod
    def constant(cls, a, delta0=None):
        a = np.atleast_2d(np.asarray(a, dtype=float))
        d0 = float(np.linalg.eigvalsh(a).min()) if delta0 is None else delta0
        return cls(a.shape[0], lambda eta: a, d0)

    def matrix(self, eta) -> np.ndarray:
        m = np.atleast_2d(np.asarray(self.a(np.asarray(eta, dtype=float)), dtype=float))
        if m.shape != (self.dim, self.dim):
            raise DomainError("coefficient matrix has the wrong shape")
        if not np.allclose(m, m.T, rtol=0, atol=1e-14 * np.abs(m).max()):
            raise DomainError("coefficient matrix is not symmetric")
        return m

    def inverse(self, eta):
        """(A = a^-1, det a) with a condition-number guard."""
        m = self.matrix(eta)
        ev = np.linalg.eigvalsh(m)
        if ev.min() <= 0 or ev.max() / ev.min() > COND_LIMIT:
            raise SingularMatrix("coefficient matrix is singular or badly conditioned")
        if self.delta0 > 0 and ev.min() < self.delta0 * (1 - 1e-12):
            raise DomainError("ellipticity constant violated")
        return np.linalg.inv(m), float(np.linalg.det(m))


def frozen_kernel(fld: EllipticParamField, kid: KernelId, alpha: float, t, y, eta, fast: bool = False):
    """Frozen kernel or its derivative at offsets y (shape (..., n)) and frozen point eta."""
    _check_alpha(alpha)
    A, det_a = fld.inverse(eta)
    return frozen_from_matrix(A, det_a, kid, alpha, t, y, fast=fast)


def frozen_from_matrix(A, det_a, kid: KernelId, alpha: float, t, y, fast: bool = False):
    n = A.shape[0]
    y = np.asarray(y, dtype=float)
    if n == 1 and (y.ndim == 0 or y.shape[-1] != 1):
        y = y[..., None]
    if y.shape[-1] != n:
        raise DomainError("offset dimension does not match the coefficient matrix")
    delta = kernel_delta(alpha, n, kid.which, kid.time)
    scale = det_a ** -0.5
    if n == 1:
        out = frozen_1d(alpha, delta, t, y[..., 0], 1.0 / A[0, 0], len(kid.derivative), fast)
        return out
    Ay = y @ A
    q = np.einsum("...i,...i->...", y, Ay)
    if np.any(q <= 0):
        raise DomainError("frozen kernel is singular at y = 0 for n >= 2")
    r = np.sqrt(q)
    order = len(kid.derivative)
    if order == 0:
        return scale * radial(alpha, n, delta, t, r, fast=fast)
    R1 = radial(alpha, n, delta - alpha, t, r, k=1, fast=fast)
    if order == 1:
        (i,) = kid.derivative
        return -0.5 * scale * R1 * Ay[..., i]
    i, j = kid.derivative
    R2 = radial(alpha, n, delta - 2 * alpha, t, r, k=2, fast=fast)
    return scale * (-0.5 * A[i, j] * R1 + 0.25 * Ay[..., i] * Ay[..., j] * R2)


def frozen_1d(alpha: float, delta: float, t, y, a, order: int = 0, fast: bool = False):
    """d^order/dy^order of a^-1/2 c_1 t^(delta-1) Phi(-beta, delta, -t^-beta |y|/sqrt(a)).

    Broadcasts over t, y and the (positive) coefficient a. The first derivative
    uses sgn(y) and vanishes at y = 0 by symmetry.
    """
    beta = 0.5 * alpha
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    a = np.asarray(a, dtype=float)
    sa = np.sqrt(a)
    z = np.abs(y) / sa * t ** (-beta)
    if order == 0:
        return 0.5 / sa * t ** (delta - 1.0) * f_family_array(0, delta, beta, z, fast=fast)
    if order == 1:
        phi = f_family_array(0, delta - beta, beta, z, fast=fast)
        return -0.5 / a * np.sign(y) * t ** (delta - 1.0 - beta) * phi
    if order == 2:
        phi = f_family_array(0, delta - alpha, beta, z, fast=fast)
        return 0.5 / (a * sa) * t ** (delta - 1.0 - alpha) * phi
    raise DomainError("derivative order must be 0, 1 or 2")


# ---------------------------------------------------------------------------
# integral identities


@dataclass(frozen=True)
class IdentityReport:
    value: float
    target: float
    discrepancy: float

    @property
    def relative(self) -> float:
        return self.discrepancy / abs(self.target)


def identity_target(alpha: float, which: str, t: float) -> float:
    return {"Z1": 1.0, "Z2": t, "Y": t ** (alpha - 1.0) / math.gamma(alpha)}[which]


def _radial_rule(r_max, scale, panels_per_unit=6, order=16):
    """Nodes/weights on (0, r_max]: geometric panels near 0, then uniform ones."""
    gx, gw = leggauss(order)
    lo = scale * np.geomspace(1e-9, 1.0, 19)
    n_uni = max(2, int(math.ceil((r_max - scale) / scale * panels_per_unit)))
    edges = np.concatenate([[0.0], lo, np.linspace(scale, r_max, n_uni + 1)[1:]])
    a, b = edges[:-1, None], edges[1:, None]
    x = (0.5 * (a + b) + 0.5 * (b - a) * gx).ravel()
    w = (0.5 * (b - a) * gw).ravel()
    return x, w


def _sphere_rule(n, m):
    """Directions and weights on the unit sphere S^(n-1)."""
    if n == 2:
        phi = 2 * math.pi * np.arange(m) / m
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), np.full(m, 2 * math.pi / m)
    c, wc = leggauss(m // 2)
    phi = 2 * math.pi * np.arange(m) / m
    s = np.sqrt(1 - c**2)
    dirs = np.stack([np.outer(s, np.cos(phi)), np.outer(s, np.sin(phi)), np.outer(c, np.ones(m))], axis=-1)
    w = np.outer(wc, np.full(m, 2 * math.pi / m))
    return dirs.reshape(-1, 3), w.ravel()


def integrate_frozen(A, det_a, which: str, alpha: float, t: float, angles: int = 36,
                     panels_per_unit: int = 3, fast: bool = True) -> float:
    """int_R^n of the frozen kernel, in polar coordinates with a graded radial mesh."""
    n = A.shape[0]
    ev = np.linalg.eigvalsh(A)
    beta = 0.5 * alpha
    scale = t**beta / math.sqrt(ev.max())
    r_max = t**beta * table_limit(beta, 1e-30) / math.sqrt(ev.min())
    r, w = _radial_rule(r_max, scale, panels_per_unit)
    kid = KernelId(which)
    if n == 1:
        vals = frozen_from_matrix(A, det_a, kid, alpha, t, np.concatenate([r, -r])[:, None], fast=fast)
        return float(np.dot(np.concatenate([w, w]), vals))
    dirs, dw = _sphere_rule(n, angles)
    y = r[None, :, None] * dirs[:, None, :]
    vals = frozen_from_matrix(A, det_a, kid, alpha, t, y, fast=fast)
    return float(np.einsum("d,k,dk->", dw, w * r ** (n - 1), vals))


def identity_check(fld: EllipticParamField, kid: KernelId, alpha: float, t: float, eta,
                   tol: float = 1e-8) -> IdentityReport:
    """Integrate the frozen kernel over R^n and compare with 1, t or t^(alpha-1)/Gamma(alpha).

    The quadrature is repeated on a refined mesh; if the two results differ by
    more than ``tol`` (relative) QuadratureFailure is raised.
    """
    _check_alpha(alpha)
    if kid.derivative or kid.time:
        raise DomainError("identity_check applies to the kernels themselves")
    A, det_a = fld.inverse(eta)
    target = identity_target(alpha, kid.which, t)
    coarse = integrate_frozen(A, det_a, kid.which, alpha, t, angles=24, panels_per_unit=2)
    fine = integrate_frozen(A, det_a, kid.which, alpha, t, angles=36, panels_per_unit=3)
    if abs(fine - coarse) > tol * abs(target):
        raise QuadratureFailure(f"refinement stalled: {coarse!r} vs {fine!r}")
    return IdentityReport(fine, target, abs(fine - target))


# ---------------------------------------------------------------------------
# envelope descriptors


@dataclass(frozen=True)
class EnvelopeSpec:
    """Bound C t^power_t |x|^power_x [1 + |log|x||]^log_flag rho_sigma."""

    power_t: float
    power_x: float
    log_flag: bool = False
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")

    def __call__(self, alpha, t, r):
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        z = r * t ** (-0.5 * alpha)
        out = t**self.power_t * r**self.power_x * np.exp(-self.sigma * z ** (2.0 / (2.0 - alpha)))
        if self.log_flag:
            out = out * (1.0 + np.abs(np.log(r * t ** (-0.5 * alpha))))
        return out
