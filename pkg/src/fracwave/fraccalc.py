"""Riemann-Liouville and Caputo-Dzhrbashyan operators on sampled time functions.

All operators use product integration: the sampled function is replaced by its
piecewise-linear interpolant and the power weight is integrated exactly on
each cell, so graded meshes are handled as easily as uniform ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridError


@dataclass(frozen=True)
class TimeSamples:
    nodes: np.ndarray
    values: np.ndarray
    derivative_values: np.ndarray | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        if nodes.ndim != 1 or nodes.size < 2:
            raise GridError("need at least two time nodes")
        if nodes[0] != 0.0:
            raise GridError("time nodes must start at 0")
        if np.any(np.diff(nodes) <= 0):
            raise GridError("time nodes must be strictly increasing")
        if values.shape != nodes.shape:
            raise GridError("values and nodes differ in length")
        if self.derivative_values is not None:
            dv = np.asarray(self.derivative_values, dtype=float)
            if dv.shape != nodes.shape:
                raise GridError("derivative_values and nodes differ in length")
            object.__setattr__(self, "derivative_values", dv)

    @classmethod
    def from_function(cls, func, nodes, derivative=None):
        nodes = np.asarray(nodes, dtype=float)
        dv = None if derivative is None else derivative(nodes)
        return cls(nodes, func(nodes), dv)

    @property
    def T(self) -> float:
        return float(self.nodes[-1])


@dataclass(frozen=True)
class FracOrder:
    """Order of the unified operator D_st^order; negative orders are integrals."""

    order: float
    base_point: float = 0.0
    direction: int = 1

    def __post_init__(self):
        if not math.isfinite(self.order):
            raise DomainError("order must be finite")
        if self.direction not in (1, -1):
            raise DomainError("direction must be +1 (left-sided) or -1 (right-sided)")


def graded_mesh(T: float, n: int, grading: float = 1.0) -> np.ndarray:
    """Nodes T (j/n)^grading, j = 0..n."""
    if T <= 0 or n < 1 or grading < 1.0:
        raise GridError("need T > 0, n >= 1 and grading >= 1")
    return T * (np.arange(n + 1) / n) ** grading


_GL6 = np.polynomial.legendre.leggauss(6)


def _cell_moments(nodes, t, p):
    """Moments of the weight w^(p-1), w = t - s, on each cell clipped to s <= t.

    Returns J0 = int w^(p-1) ds and Jc = int w^(p-1) (s - m_k) ds, m_k the cell
    midpoint, both shaped (len(t), cells). Cells far from t use 6-point
    Gauss-Legendre, which avoids the cancellation of the closed form when the
    cell is tiny compared with its distance to t.
    """
    t = np.asarray(t, dtype=float)[:, None]
    h = np.diff(nodes)[None, :]
    dl = t - nodes[None, :-1]
    dr = t - nodes[None, 1:]
    dlc, drc = np.maximum(dl, 0.0), np.maximum(dr, 0.0)
    J0 = (dlc**p - drc**p) / p
    J1 = (dlc ** (p + 1) - drc ** (p + 1)) / (p + 1)
    Jc = (dl - 0.5 * h) * J0 - J1
    far = drc >= 4.0 * h
    if far.any():
        hf = np.broadcast_to(h, dl.shape)[far]
        mid = dl[far] - 0.5 * hf
        gx, gw = _GL6
        w = mid[:, None] + 0.5 * hf[:, None] * gx
        f = 0.5 * hf[:, None] * gw * w ** (p - 1.0)
        J0[far] = f.sum(axis=1)
        Jc[far] = (f * (mid[:, None] - w)).sum(axis=1)
    return J0, Jc


def _integral_weights(nodes, t, nu):
    """Matrix W with (I^nu g)(t_i) = sum_j W_ij g_j for piecewise-linear g, nu > 0."""
    J0, Jc = _cell_moments(nodes, t, nu)
    h = np.diff(nodes)[None, :]
    # on cell k: g(s) = (g_k + g_k+1)/2 + (g_k+1 - g_k)(s - m_k)/h
    W = np.zeros((J0.shape[0], nodes.size))
    W[:, :-1] += 0.5 * J0 - Jc / h
    W[:, 1:] += 0.5 * J0 + Jc / h
    return W / math.gamma(nu)


def _check_range(g: TimeSamples, t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0) or np.any(t > g.T * (1 + 1e-14)):
        raise GridError("evaluation time outside the sampled range")
    return t


def rl_integral(g: TimeSamples, mu: float, t):
    """(1/Gamma(-mu)) int_0^t g(tau)(t - tau)^(-mu-1) dtau for mu < 0.

    ``t`` may be a scalar or an array; the result has the same shape.
    """
    if not mu < 0:
        raise DomainError("rl_integral needs a negative order")
    scalar = np.ndim(t) == 0
    tt = _check_range(g, t)
    out = _integral_weights(g.nodes, tt, -mu) @ g.values
    return float(out[0]) if scalar else out


def rl_integral_samples(g: TimeSamples, mu: float) -> TimeSamples:
    """I^(-mu) g on the nodes of ``g``."""
    return TimeSamples(g.nodes, rl_integral(g, mu, g.nodes))


def _is_uniform(nodes):
    h = np.diff(nodes)
    return np.allclose(h, h[0], rtol=1e-10, atol=0.0)


def _local_step(nodes, t):
    k = int(np.clip(np.searchsorted(nodes, t), 1, nodes.size - 1))
    return float(nodes[k] - nodes[k - 1])


def rl_derivative(g: TimeSamples, beta: float, t: float) -> float:
    """Left-sided Riemann-Liouville derivative (d/dt)^p I^(p-beta) g at an interior t.

    p = ceil(beta) in {1, 2}; beta = p reduces to the classical derivative of
    the interpolant. Outer derivatives are centred differences of rl_integral
    with the local mesh step (5-point for p = 2 on uniform meshes).
    """
    if not 0.0 < beta <= 2.0:
        raise DomainError("rl_derivative needs 0 < beta <= 2")
    p = int(math.ceil(beta))
    t = float(t)
    h = _local_step(g.nodes, t)
    wide = p == 2 and _is_uniform(g.nodes)
    reach = 2 * h if wide else h
    if t - reach < 0.0 or t + reach > g.T * (1 + 1e-14):
        raise GridError("rl_derivative needs neighbours on both sides of t")
    order = p - beta

    def F(x):
        x = np.asarray(x, dtype=float)
        if order == 0.0:
            return np.interp(x, g.nodes, g.values)
        return rl_integral(g, -order, x)

    if p == 1:
        fm, fp = F([t - h, t + h])
        return float((fp - fm) / (2 * h))
    if wide:
        f = F([t - 2 * h, t - h, t, t + h, t + 2 * h])
        return float((-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h))
    f = F([t - h, t, t + h])
    return float((f[0] - 2 * f[1] + f[2]) / (h * h))


def frac_apply(g: TimeSamples, order: FracOrder, t: float) -> float:
    """Unified operator D_st^order: integral for order < 0, derivative for order > 0.

    Right-sided operators (direction -1, base point s >= t) are obtained by
    reflecting the samples about s.
    """
    if order.direction == 1:
        if order.base_point != 0.0:
            raise DomainError("left-sided operators are based at the first node")
        gg, tt = g, t
    else:
        s = order.base_point
        if s > g.T or s < t:
            raise GridError("right-sided base point must lie in [t, T]")
        keep = g.nodes <= s
        nodes = s - g.nodes[keep][::-1]
        if nodes[0] != 0.0:
            nodes = np.concatenate([[0.0], nodes])
            vals = np.concatenate([[np.interp(s, g.nodes, g.values)], g.values[keep][::-1]])
        else:
            vals = g.values[keep][::-1]
        gg, tt = TimeSamples(nodes, vals), s - t
    if order.order < 0:
        return rl_integral(gg, order.order, tt)
    if order.order == 0:
        return float(np.interp(tt, gg.nodes, gg.values))
    return rl_derivative(gg, order.order, tt)


def derivative_samples(u: TimeSamples) -> np.ndarray:
    """u' on the nodes: supplied values, else second-order three-point differences."""
    if u.derivative_values is not None:
        return u.derivative_values
    x, y = u.nodes, u.values
    if x.size < 3:
        raise GridError("need at least three nodes to difference")
    d = np.empty_like(y)
    h0, h1 = x[1:-1] - x[:-2], x[2:] - x[1:-1]
    d[1:-1] = (-h1 / (h0 * (h0 + h1)) * y[:-2] + (h1 - h0) / (h0 * h1) * y[1:-1]
               + h0 / (h1 * (h0 + h1)) * y[2:])
    a, b = x[1] - x[0], x[2] - x[0]
    d[0] = (-(a + b) / (a * b) * y[0] + b / (a * (b - a)) * y[1] - a / (b * (b - a)) * y[2])
    a, b = x[-1] - x[-2], x[-1] - x[-3]
    d[-1] = ((a + b) / (a * b) * y[-1] - b / (a * (b - a)) * y[-2] + a / (b * (b - a)) * y[-3])
    return d


def _node_derivative(x, y):
    """Second-order three-point derivative of nodal data on a nonuniform grid."""
    if x.size < 3:
        raise GridError("need at least three nodes to difference")
    d = np.empty_like(y)
    h0, h1 = x[1:-1] - x[:-2], x[2:] - x[1:-1]
    d[1:-1] = (-h1 / (h0 * (h0 + h1)) * y[:-2] + (h1 - h0) / (h0 * h1) * y[1:-1]
               + h0 / (h1 * (h0 + h1)) * y[2:])
    a, b = x[1] - x[0], x[2] - x[0]
    d[0] = -(a + b) / (a * b) * y[0] + b / (a * (b - a)) * y[1] - a / (b * (b - a)) * y[2]
    a, b = x[-1] - x[-2], x[-1] - x[-3]
    d[-1] = (a + b) / (a * b) * y[-1] - b / (a * (b - a)) * y[-2] + a / (b * (b - a)) * y[-3]
    return d


def caputo_apply(u: TimeSamples, alpha: float, t):
    """Caputo-Dzhrbashyan derivative of order alpha in (1, 2).

    D^(alpha) u is the Caputo derivative of order alpha - 1 of u'. The history
    u' (supplied or differenced) is interpolated by the quadratic through
    nodes k-1, k, k+1 on each cell [t_k, t_k+1] (linear on the first cell) and
    the power weight is integrated exactly against its derivative. The scheme
    is exact for polynomials of degree 3 away from the first cell and for
    affine functions and t^2 everywhere.
    """
    if not 1.0 < alpha < 2.0:
        raise DomainError("caputo_apply needs alpha in (1, 2)")
    scalar = np.ndim(t) == 0
    tt = _check_range(u, t)
    if np.any(tt <= 0):
        raise DomainError("caputo_apply needs t > 0")
    nodes = u.nodes
    if nodes.size < 3 or (u.derivative_values is None and np.searchsorted(nodes, tt.min(), side="right") < 3):
        raise GridError("fewer than three nodes before t")
    du = derivative_samples(u)
    p = 2.0 - alpha
    h = np.diff(nodes)
    first = np.diff(du) / h
    second = np.zeros_like(first)
    second[1:] = np.diff(first) / (nodes[2:] - nodes[:-2])
    J0, Jc = _cell_moments(nodes, tt, p)
    # q'(s) = first + 2 second (s - m_k) on cell k
    cells = first * J0 + 2.0 * second * Jc
    out = cells.sum(axis=1) / math.gamma(p)
    return float(out[0]) if scalar else out
