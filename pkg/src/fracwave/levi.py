"""Levi parametrix construction of the variable-coefficient kernels (n = 1).

The corrected kernel is Z = Z0 + P_Y[Q] with Q = M + P_K[Q], where

    P_H[g](t, x) = int_0^t dlam int H(t - lam, x; y) g(lam, y) dy

and H is either the frozen kernel Y0(t - lam, x - y; y) or the Levi kernel K.
Numerically Q is split as Q = M + R: the first convolution P_K[M] uses the
closed-form M at the quadrature nodes, and only the smoother remainder R is
tabulated on a lattice and obtained by Neumann iteration of
R = P_K[M] + P_K[R].

Two lattice layouts are used. In similarity mode (one parametric point xi)
the spatial nodes at time lam are xi + lam^beta z_k, which follows the
shrinking support of the kernels as lam -> 0. In fixed mode (Cauchy data
already integrated against the kernels) the nodes do not move.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import (CoverageError, DomainError, IterationBudgetExceeded)
from .kernels import KernelId, frozen_1d, frozen_from_matrix, kernel_delta
from .special import decay_rate


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class EllipticOperator:
    """B u = sum a_ij u_ij + sum b_j u_j + c u.

    For n = 1 the coefficient callables map an array of points to an array of
    values. For n >= 2 ``a`` maps a point of shape (..., n) to matrices of
    shape (..., n, n) and ``b`` to vectors of shape (..., n).
    """

    dim: int
    a: Callable
    b: Callable | None = None
    c: Callable | None = None
    delta0: float = 1.0
    gamma: float = 1.0
    holder_const: float = 0.0
    a_max: float = 1.0
    constant_a: bool = False

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise DomainError("dim must be 1, 2 or 3")
        if not 0.0 < self.gamma <= 1.0:
            raise DomainError("gamma must lie in (0, 1]")
        if self.delta0 <= 0 or self.a_max < self.delta0:
            raise DomainError("need 0 < delta0 <= a_max")

    @classmethod
    def one_dim(cls, a, b=None, c=None, bounds=None, gamma=1.0, holder_const=0.0, constant_a=False):
        if bounds is None:
            grid = np.linspace(-100.0, 100.0, 200001)
            vals = np.asarray(a(grid), dtype=float)
            bounds = (float(vals.min()), float(vals.max()))
        return cls(1, a, b, c, bounds[0], gamma, holder_const, bounds[1], constant_a)

    @classmethod
    def laplacian(cls, a0=1.0, c0=0.0):
        c = None if c0 == 0.0 else (lambda x: np.full_like(np.asarray(x, dtype=float), c0))
        return cls(1, lambda x: np.full_like(np.asarray(x, dtype=float), a0), None, c,
                   a0, 1.0, 0.0, a0, True)

    @property
    def trivial(self) -> bool:
        """Constant a with b = c = 0: the frozen kernels are exact."""
        return self.constant_a and self.b is None and self.c is None

    def check_alpha(self, alpha):
        if not 1.0 < alpha < 2.0:
            raise DomainError("alpha must lie in (1, 2)")
        if self.gamma <= 2.0 - 2.0 / alpha:
            raise DomainError("the Hoelder exponent must exceed 2 - 2/alpha")

    def coefficients(self, x):
        x = np.asarray(x, dtype=float)
        b = _zero(x) if self.b is None else np.asarray(self.b(x), dtype=float)
        c = _zero(x) if self.c is None else np.asarray(self.c(x), dtype=float)
        return np.asarray(self.a(x), dtype=float), b, c

    def apply(self, u, ux, uxx, x):
        a, b, c = self.coefficients(x)
        return a * uxx + b * ux + c * u


@dataclass(frozen=True)
class NuPair:
    nu1: float
    nu0: float

    @classmethod
    def midpoint(cls, alpha: float, gamma: float) -> "NuPair":
        """nu1 at the middle of (2 - 2/alpha, gamma); nu0 = nu1 - 2 + 2/alpha."""
        lo = 2.0 - 2.0 / alpha
        if gamma <= lo:
            raise DomainError("gamma must exceed 2 - 2/alpha")
        nu1 = 0.5 * (gamma + lo)
        return cls(nu1, nu1 - lo)

    def __post_init__(self):
        if not 0.0 < self.nu0 < self.nu1:
            raise DomainError("need 0 < nu0 < nu1")


# ---------------------------------------------------------------------------
# kernels M_l and K


def _which(l):
    if l not in (1, 2):
        raise DomainError("l must be 1 or 2")
    return "Z1" if l == 1 else "Z2"


def _parametrix_1d(op, alpha, which, time, t, x, xi, fast):
    delta = kernel_delta(alpha, 1, which, time)
    ax, bx, cx = op.coefficients(x)
    axi = np.asarray(op.a(np.asarray(xi, dtype=float)), dtype=float)
    d = np.asarray(x, dtype=float) - np.asarray(xi, dtype=float)
    out = (ax - axi) * frozen_1d(alpha, delta, t, d, axi, 2, fast)
    if op.b is not None:
        out = out + bx * frozen_1d(alpha, delta, t, d, axi, 1, fast)
    if op.c is not None:
        out = out + cx * frozen_1d(alpha, delta, t, d, axi, 0, fast)
    return out


def _parametrix_nd(op, alpha, which, t, x, xi, fast):
    n = op.dim
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    y = x - xi
    if np.any(np.einsum("...i,...i->...", y, y) == 0):
        raise DomainError("M and K are singular at x = xi for n >= 2")
    a_xi = np.asarray(op.a(xi), dtype=float)
    A = np.linalg.inv(a_xi)
    det_a = float(np.linalg.det(a_xi))
    diff = np.asarray(op.a(x), dtype=float) - a_xi
    out = 0.0
    for i in range(n):
        for j in range(n):
            kid = KernelId(which, (i, j))
            out = out + diff[..., i, j] * frozen_from_matrix(A, det_a, kid, alpha, t, y, fast)
    if op.b is not None:
        bx = np.asarray(op.b(x), dtype=float)
        for j in range(n):
            out = out + bx[..., j] * frozen_from_matrix(A, det_a, KernelId(which, (j,)), alpha, t, y, fast)
    if op.c is not None:
        out = out + np.asarray(op.c(x), dtype=float) * frozen_from_matrix(A, det_a, KernelId(which), alpha, t, y, fast)
    return out


def m_kernel(op: EllipticOperator, l: int, alpha: float, t, x, xi, fast: bool = False):
    """M_l(t, x; xi) = (B_x - B frozen at xi) Z_l^(0)(t, x - xi; xi)."""
    op.check_alpha(alpha)
    if op.dim == 1:
        return _parametrix_1d(op, alpha, _which(l), 0, t, x, xi, fast)
    return _parametrix_nd(op, alpha, _which(l), t, x, xi, fast)


def k_kernel(op: EllipticOperator, alpha: float, t, x, xi, fast: bool = False):
    """K(t, x; xi), the Levi kernel built on Y^(0)."""
    op.check_alpha(alpha)
    if op.dim == 1:
        return _parametrix_1d(op, alpha, "Y", 0, t, x, xi, fast)
    return _parametrix_nd(op, alpha, "Y", t, x, xi, fast)


# ---------------------------------------------------------------------------
# quadrature for P_H


def cutoff(beta: float, tol: float = 1e-13) -> float:
    """z beyond which exp(-c z^(1/(1-beta))) < tol."""
    return ((math.log(1.0 / tol) + 5.0) / decay_rate(beta)) ** (1.0 - beta)


# singularity exponents kappa of int H(s, x; y) dy ~ s^(kappa - 1)
_KAPPA = {"K": lambda a: 0.5 * a, "Y": lambda a: a, "Yt": lambda a: a - 1.0, "Yx": lambda a: 0.5 * a}


@dataclass(frozen=True)
class QuadRule:
    lam_panels: int = 6
    y_panels: int = 6
    order: int = 6


class _Kernel:
    """H(s, x; y) for the kinds K, Y, Yt (time derivative of Y) and Yx (x-derivative)."""

    def __init__(self, op, alpha, kind, fast):
        self.op, self.alpha, self.kind, self.fast = op, alpha, kind, fast
        self.delta = kernel_delta(alpha, 1, "Y")
        self.reach = cutoff(0.5 * alpha) * math.sqrt(op.a_max)

    def __call__(self, s, x, y):
        op, alpha, fast = self.op, self.alpha, self.fast
        ay = np.asarray(op.a(y), dtype=float)
        d = x - y
        if self.kind == "Y":
            return frozen_1d(alpha, self.delta, s, d, ay, 0, fast)
        if self.kind == "Yt":
            return frozen_1d(alpha, self.delta - 1.0, s, d, ay, 0, fast)
        if self.kind == "Yx":
            return frozen_1d(alpha, self.delta, s, d, ay, 1, fast)
        ax, bx, cx = op.coefficients(x)
        out = (ax - ay) * frozen_1d(alpha, self.delta, s, d, ay, 2, fast)
        if op.b is not None:
            out = out + bx * frozen_1d(alpha, self.delta, s, d, ay, 1, fast)
        if op.c is not None:
            out = out + cx * frozen_1d(alpha, self.delta, s, d, ay, 0, fast)
        return out


@dataclass(frozen=True)
class Support:
    """Where a source g(lam, y) lives: |y - center| <= width lam^beta, or [lo, hi]."""

    center: float = 0.0
    width: float = math.inf
    lo: float = -math.inf
    hi: float = math.inf
    similarity: bool = True

    def bounds(self, lam, beta):
        if self.similarity:
            r = self.width * lam**beta
            return self.center - r, self.center + r
        return np.full_like(lam, self.lo), np.full_like(lam, self.hi)


def _gl_unit(panels, order):
    gx, gw = leggauss(order)
    e = np.linspace(0.0, 1.0, panels + 1)
    u = (0.5 * (e[:-1, None] + e[1:, None]) + 0.5 * (e[1:, None] - e[:-1, None]) * gx).ravel()
    w = (0.5 * (e[1:, None] - e[:-1, None]) * gw).ravel()
    return u, w


def _lambda_rule(q0, q1, rule):
    """Nodes/weights of int_0^1 dlam with endpoint substitutions (scale by t)."""
    u, w = _gl_unit(rule.lam_panels, rule.order)
    left = 0.5 * u**q0
    wl = 0.5 * q0 * u ** (q0 - 1.0) * w
    right = 1.0 - 0.5 * u**q1
    wr = 0.5 * q1 * u ** (q1 - 1.0) * w
    return np.concatenate([left, right]), np.concatenate([wl, wr])


def _y_rule(lo, hi, breaks, rule):
    """Composite Gauss rule on [lo, hi] split at the given breakpoints (vectorised)."""
    pts = [lo] + [np.clip(b, lo, hi) for b in breaks] + [hi]
    pts = np.sort(np.stack(pts, axis=-1), axis=-1)
    a, b = pts[..., :-1], pts[..., 1:]
    u, w = _gl_unit(rule.y_panels, rule.order)
    y = a[..., None] + (b - a)[..., None] * u
    wy = (b - a)[..., None] * w
    shape = y.shape[:-2] + (-1,)
    return y.reshape(shape), wy.reshape(shape)


def space_time_nodes(kernel: _Kernel, support: Support, t, x, p_source: float, rule: QuadRule):
    """Quadrature nodes (lam, y) and weights w * H for P_H at targets (t, x)."""
    alpha = kernel.alpha
    beta = 0.5 * alpha
    kappa = _KAPPA[kernel.kind](alpha)
    e0 = p_source + (beta if support.similarity else 0.0)
    q0 = max(1.0, 2.0 / (e0 + 1.0))
    q1 = max(1.0, 2.0 / kappa)
    L, WL = _lambda_rule(q0, q1, rule)
    t = np.asarray(t, dtype=float)[:, None]
    x = np.asarray(x, dtype=float)[:, None]
    lam = t * L
    wl = t * WL
    s = t - lam
    reach = kernel.reach * s**beta
    glo, ghi = support.bounds(lam, beta)
    lo = np.maximum(x - reach, glo)
    hi = np.maximum(np.minimum(x + reach, ghi), lo)
    breaks = [np.broadcast_to(x, lo.shape)]
    if support.similarity:
        breaks.append(np.full_like(lo, support.center))
    y, wy = _y_rule(lo, hi, breaks, rule)
    H = kernel(s[..., None], x[..., None], y)
    return lam, y, wl[..., None] * wy * H


# ---------------------------------------------------------------------------
# lattices


@dataclass
class Lattice:
    """Tabulation lattice for a function g(lam, y) ~ lam^power G(lam^beta, z).

    Spatial nodes at time lam_j are center + s_j z_k with s_j = lam_j^beta in
    similarity mode and s_j = 1 otherwise. Interpolation is quadratic in
    tau = lam^beta and cubic in z; stencils never straddle z = 0 in
    similarity mode, where g may have a kink.
    """

    alpha: float
    times: np.ndarray
    z: np.ndarray
    center: float = 0.0
    similarity: bool = True
    power: float = 0.0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.z = np.asarray(self.z, dtype=float)
        if self.times.size < 3 or np.any(np.diff(self.times) <= 0) or self.times[0] <= 0:
            raise DomainError("lattice times must be positive and increasing (at least 3)")
        hz = np.diff(self.z)
        if self.z.size < 4 or not np.allclose(hz, hz[0]):
            raise DomainError("lattice z nodes must be uniform (at least 4)")
        self.hz = float(hz[0])
        self.beta = 0.5 * self.alpha
        self.tau = self.times**self.beta
        self.kink = int(np.argmin(np.abs(self.z))) if self.similarity else None
        if self.similarity and abs(self.z[self.kink]) > 1e-12 * self.hz:
            raise DomainError("similarity lattices need z = 0 as a node")

    @property
    def shape(self):
        return (self.times.size, self.z.size)

    @property
    def size(self):
        return self.times.size * self.z.size

    @property
    def T(self):
        return float(self.times[-1])

    def scale(self, lam):
        return lam**self.beta if self.similarity else np.ones_like(lam)

    def points(self):
        """(lam, y) of all lattice nodes, shape (N, Nz)."""
        lam = np.broadcast_to(self.times[:, None], self.shape)
        return lam, self.center + self.scale(lam) * self.z[None, :]

    def support(self) -> Support:
        if self.similarity:
            return Support(self.center, float(max(-self.z[0], self.z[-1])), similarity=True)
        return Support(lo=self.center + self.z[0], hi=self.center + self.z[-1], similarity=False)

    def weights(self, lam, y):
        """Indices (..., 12) into the flattened lattice and interpolation weights."""
        lam = np.asarray(lam, dtype=float)
        y = np.asarray(y, dtype=float)
        N, Nz = self.shape
        tau = lam**self.beta
        j0 = np.clip(np.searchsorted(self.tau, tau) - 2, 0, N - 3)
        jj = j0[..., None] + np.arange(3)
        tj = self.tau[jj]
        wt = np.ones(tau.shape + (3,))
        for m in range(3):
            for l in range(3):
                if l != m:
                    wt[..., m] *= (tau - tj[..., l]) / (tj[..., m] - tj[..., l])
        if self.power:
            wt *= (lam[..., None] / self.times[jj]) ** self.power
        z = (y - self.center) / self.scale(lam)
        inside = (z >= self.z[0]) & (z <= self.z[-1])
        k = np.clip(np.floor((z - self.z[0]) / self.hz).astype(int), 0, Nz - 2)
        i0 = np.clip(k - 1, 0, Nz - 4)
        if self.similarity:
            right = k >= self.kink
            i0 = np.where(right, np.maximum(i0, self.kink), np.minimum(i0, self.kink - 3))
            i0 = np.clip(i0, 0, Nz - 4)
        u = (z - self.z[i0]) / self.hz
        wz = np.stack([-(u - 1) * (u - 2) * (u - 3) / 6, u * (u - 2) * (u - 3) / 2,
                       -u * (u - 1) * (u - 3) / 2, u * (u - 1) * (u - 2) / 6], axis=-1)
        wz = np.where(inside[..., None], wz, 0.0)
        ii = i0[..., None] + np.arange(4)
        idx = (jj[..., :, None] * Nz + ii[..., None, :]).reshape(lam.shape + (12,))
        w = (wt[..., :, None] * wz[..., None, :]).reshape(lam.shape + (12,))
        return idx, w

    def interpolate(self, values, lam, y):
        idx, w = self.weights(lam, y)
        return np.sum(np.asarray(values).ravel()[idx] * w, axis=-1)


def similarity_lattice(alpha, T, xi, op: EllipticOperator, n_time=20, grading=2.0,
                       z_step=0.25, spread=1.6, power=0.0) -> Lattice:
    beta = 0.5 * alpha
    times = T * (np.arange(1, n_time + 1) / n_time) ** grading
    zmax = spread * cutoff(beta) * math.sqrt(op.a_max)
    m = int(math.ceil(zmax / z_step))
    z = z_step * np.arange(-m, m + 1)
    return Lattice(alpha, times, z, xi, True, power)


def fixed_lattice(alpha, T, lo, hi, n_time=20, grading=2.0, h=0.05) -> Lattice:
    times = T * (np.arange(1, n_time + 1) / n_time) ** grading
    m = int(math.ceil((hi - lo) / h))
    z = lo + h * np.arange(m + 1)
    return Lattice(alpha, times, z, 0.0, False, 0.0)


# ---------------------------------------------------------------------------
# space-time operators


def _chunks(n, size):
    for start in range(0, n, size):
        yield slice(start, min(n, start + size))


def apply_source(kernel: _Kernel, source: Callable, support: Support, t, x, p_source: float,
                 rule: QuadRule = QuadRule(), chunk: int = 16) -> np.ndarray:
    """P_H[g](t, x) for a closed-form source g(lam, y)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t, x = np.broadcast_arrays(t, x)
    out = np.zeros(t.shape)
    tf, xf, of = t.ravel(), x.ravel(), out.reshape(-1)
    for sl in _chunks(tf.size, chunk):
        lam, y, w = space_time_nodes(kernel, support, tf[sl], xf[sl], p_source, rule)
        g = source(np.broadcast_to(lam[..., None], y.shape), y)
        of[sl] = np.einsum("bly,bly->b", w, g)
    return out


def operator_rows(kernel: _Kernel, lattice: Lattice, t, x, rule: QuadRule = QuadRule(),
                  chunk: int = 8) -> np.ndarray:
    """Matrix A with P_H[g](t_i, x_i) = sum_j A_ij g_j for g interpolated on ``lattice``."""
    t = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    rows = np.zeros((t.size, lattice.size))
    support = lattice.support()
    for sl in _chunks(t.size, chunk):
        lam, y, w = space_time_nodes(kernel, support, t[sl], x[sl], lattice.power, rule)
        idx, iw = lattice.weights(np.broadcast_to(lam[..., None], y.shape), y)
        contrib = (w[..., None] * iw).reshape(w.shape[0], -1)
        idx = idx.reshape(w.shape[0], -1)
        for b in range(w.shape[0]):
            rows[sl.start + b] = np.bincount(idx[b], contrib[b], minlength=lattice.size)
    return rows


def apply_lattice(kernel: _Kernel, lattice: Lattice, values, t, x, rule: QuadRule = QuadRule(),
                  chunk: int = 16) -> np.ndarray:
    """P_H[g](t, x) for g interpolated from lattice values (no matrix is formed)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t, x = np.broadcast_arrays(t, x)
    out = np.zeros(t.shape)
    tf, xf, of = t.ravel(), x.ravel(), out.reshape(-1)
    flat = np.asarray(values, dtype=float).ravel()
    support = lattice.support()
    for sl in _chunks(tf.size, chunk):
        lam, y, w = space_time_nodes(kernel, support, tf[sl], xf[sl], lattice.power, rule)
        g = lattice.interpolate(flat, np.broadcast_to(lam[..., None], y.shape), y)
        of[sl] = np.einsum("bly,bly->b", w, g)
    return out


def neumann(A: np.ndarray, source: np.ndarray, tol: float = 1e-12, max_iter: int = 200):
    """Solve R = source + A R by successive approximation.

    Stops when the sup-norm of the latest increment is at most tol times the
    sup-norm of the accumulated sum. Returns (R, iterations, increment ratios).
    """
    total = source.copy()
    term = source.copy()
    ratios = []
    prev = np.max(np.abs(term))
    for it in range(1, max_iter + 1):
        term = A @ term
        total += term
        size = float(np.max(np.abs(term)))
        ratios.append(size / prev if prev > 0 else 0.0)
        prev = size
        if size <= tol * max(float(np.max(np.abs(total))), 1e-300):
            return total, it, ratios
    raise IterationBudgetExceeded(f"Neumann series not converged after {max_iter} terms")


# ---------------------------------------------------------------------------
# corrected kernels in similarity mode


@dataclass(frozen=True)
class LeviConfig:
    n_time: int = 20
    grading: float = 2.0
    z_step: float = 0.25
    spread: float = 1.6
    rule: QuadRule = QuadRule()
    tol: float = 1e-12
    max_iter: int = 200
    fast: bool = True


_P_SOURCE = {"Z1": lambda a: -a, "Z2": lambda a: 1.0 - a, "Y": lambda a: -1.0}


@dataclass
class CorrectedKernel:
    """Z = Z0(t, x - xi; xi) + P_Y[M] + P_Y[R] with R tabulated on a similarity lattice."""

    op: EllipticOperator
    alpha: float
    which: str
    xi: float
    lattice: Lattice
    R: np.ndarray
    iterations: int
    ratios: list
    config: LeviConfig = field(default_factory=LeviConfig)

    @property
    def residual_norm(self) -> float:
        return self.ratios[-1] if self.ratios else 0.0

    def source(self, lam, y):
        """M_l or K (the first Neumann term) with the parametric point xi."""
        if self.which == "Y":
            return k_kernel(self.op, self.alpha, lam, y, self.xi, fast=self.config.fast)
        l = 1 if self.which == "Z1" else 2
        return m_kernel(self.op, l, self.alpha, lam, y, self.xi, fast=self.config.fast)

    def q(self, t, x):
        """Q (or Psi) = source + R at arbitrary points inside the lattice range."""
        t = np.asarray(t, dtype=float)
        return self.source(t, x) + self.lattice.interpolate(self.R, t, x)

    def frozen(self, t, x, order=0, time=0):
        delta = kernel_delta(self.alpha, 1, self.which, time)
        a_xi = float(self.op.a(np.asarray(self.xi)))
        return frozen_1d(self.alpha, delta, t, np.asarray(x) - self.xi, a_xi, order, self.config.fast)

    def correction(self, t, x, kind: str = "Y"):
        """V = P_H[Q] with H = Y (value), Yt (time derivative) or Yx (x-derivative)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t > self.lattice.T * (1 + 1e-12)):
            raise CoverageError("evaluation time beyond the tabulated range")
        kern = _Kernel(self.op, self.alpha, kind, self.config.fast)
        sup = self.lattice.support()
        p = _P_SOURCE[self.which](self.alpha)
        direct = apply_source(kern, self.source, sup, t, x, p, self.config.rule)
        return direct + apply_lattice(kern, self.lattice, self.R, t, x, self.config.rule)

    def __call__(self, t, x):
        return self.frozen(t, x) + self.correction(t, x)


def solve_volterra(op: EllipticOperator, which: str, alpha: float, xi: float, T: float,
                   config: LeviConfig = LeviConfig()) -> CorrectedKernel:
    """Tabulate R in Q = M + R (Q_1, Q_2 or Psi) for the parametric point xi."""
    op.check_alpha(alpha)
    if op.dim != 1:
        raise DomainError("the Volterra solver is implemented for n = 1")
    if which not in _P_SOURCE:
        raise DomainError(f"unknown kernel {which!r}")
    p = _P_SOURCE[which](alpha)
    lat = similarity_lattice(alpha, T, xi, op, config.n_time, config.grading, config.z_step,
                             config.spread, power=p + 0.5 * alpha)
    ck = CorrectedKernel(op, alpha, which, xi, lat, np.zeros(lat.shape), 0, [], config)
    if op.trivial:
        return ck
    lam, y = lat.points()
    kern = _Kernel(op, alpha, "K", config.fast)
    sup = lat.support()
    first = apply_source(kern, ck.source, sup, lam, y, p, config.rule)
    A = operator_rows(kern, lat, lam.ravel(), y.ravel(), config.rule)
    R, its, ratios = neumann(A, first.ravel(), config.tol, config.max_iter)
    return replace(ck, R=R.reshape(lat.shape), iterations=its, ratios=ratios)


def assemble_corrected(op: EllipticOperator, which: str, alpha: float, xi: float, t, x,
                       config: LeviConfig = LeviConfig(), table: CorrectedKernel | None = None):
    """Z_1, Z_2 or Y at (t, x) for the parametric point xi."""
    if table is None:
        table = solve_volterra(op, which, alpha, xi, float(np.max(t)), config)
    elif table.which != which or table.xi != xi:
        raise CoverageError("table was built for another kernel or parametric point")
    if op.trivial:
        return table.frozen(t, x)
    return table(t, x)


def neumann_terms(op: EllipticOperator, which: str, alpha: float, xi: float, t, x,
                  config: LeviConfig = LeviConfig()):
    """The first two Neumann terms of Q: the source (M_1, M_2 or K) and P_K[source]."""
    op.check_alpha(alpha)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    ck = CorrectedKernel(op, alpha, which, xi, None, None, 0, [], config)
    first = ck.source(t, x)
    kern = _Kernel(op, alpha, "K", config.fast)
    sup = Support(xi, 2.0 * cutoff(0.5 * alpha) * math.sqrt(op.a_max), similarity=True)
    second = apply_source(kern, ck.source, sup, t, x, _P_SOURCE[which](alpha), config.rule)
    return first, second
