"""Envelope checks: sampled kernels against bounds C t^p r^q rho_sigma.

A bound is checked by fitting the decay rate sigma of the samples, taking
half of it for the envelope, and comparing the largest ratio
|F| / (t^p r^q rho_sigma) on a coarse grid with the same quantity on a grid
refined twice (twice the density, one more octave toward t = 0 and r = 0).
A bound with the right exponents keeps the ratio essentially unchanged; a
bound that is too optimistic near the singularities makes it grow.

Sampling is done in the similarity variables (t, z) with r = z t^(alpha/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np

from .kernels import KernelId, EnvelopeSpec, frozen_1d, frozen_from_matrix, kernel_delta
from .levi import EllipticOperator, LeviConfig, NuPair, cutoff, k_kernel, m_kernel, solve_volterra

GROWTH_LIMIT = 0.05


@dataclass(frozen=True)
class EnvelopeGrid:
    """Nested geometric grid t = T 2^(-j/t_per_octave), z = z_max 2^(-k/z_per_octave).

    Refinement doubles the t density and adds one octave toward t = 0 and one
    toward z = 0; the z density is kept so the refined grid contains the
    coarse one and only the approach to the singularities is new.
    """

    T: float = 1.0
    t_octaves: int = 4
    t_per_octave: int = 2
    z_max: float = 4.0
    z_octaves: int = 6
    z_per_octave: int = 6

    def refined(self) -> "EnvelopeGrid":
        return EnvelopeGrid(self.T, self.t_octaves + 1, 2 * self.t_per_octave, self.z_max,
                            self.z_octaves + 1, self.z_per_octave)

    def points(self):
        t = self.T * 2.0 ** -(np.arange(self.t_octaves * self.t_per_octave + 1) / self.t_per_octave)
        z = self.z_max * 2.0 ** -(np.arange(self.z_octaves * self.z_per_octave + 1) / self.z_per_octave)
        return np.meshgrid(t[::-1], z[::-1], indexing="ij")


def fit_sigma(values, t, r, alpha, power_t, power_x) -> float:
    """Least-squares decay rate of |F| t^-p r^-q in the variable z^(2/(2-alpha))."""
    beta = 0.5 * alpha
    v = np.abs(np.asarray(values, dtype=float))
    keep = v > 1e-280
    w = (np.asarray(r)[keep] * np.asarray(t)[keep] ** -beta) ** (1.0 / (1.0 - beta))
    y = np.log(v[keep]) - power_t * np.log(t[keep]) - power_x * np.log(r[keep])
    tail = w >= np.median(w)
    if tail.sum() < 3:
        raise ValueError("too few samples to fit the decay rate")
    slope = np.polyfit(w[tail], y[tail], 1)[0]
    return max(-slope, 1e-3)


@dataclass(frozen=True)
class EnvelopeReport:
    name: str
    spec: EnvelopeSpec
    fitted_sigma: float
    ratios: tuple
    limit: float = GROWTH_LIMIT

    @property
    def growth(self) -> float:
        return self.ratios[-1] / self.ratios[0] - 1.0

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.ratios).all() and self.growth < self.limit)


def envelope_check(name: str, func: Callable, alpha: float, power_t: float, power_x: float,
                   grid: EnvelopeGrid = EnvelopeGrid(), log_flag: bool = False, levels: int = 2) -> EnvelopeReport:
    """Fit sigma on ``grid``, then compare max ratios across ``levels`` refinements."""
    beta = 0.5 * alpha
    t, z = grid.points()
    r = z * t**beta
    vals = func(t, r)
    sigma = fit_sigma(vals, t, r, alpha, power_t, power_x)
    spec = EnvelopeSpec(power_t, power_x, log_flag, 0.5 * sigma)
    ratios = []
    g = grid
    for level in range(levels):
        if level:
            g = g.refined()
            t, z = g.points()
            r = z * t**beta
            vals = func(t, r)
        ratios.append(float(np.max(np.abs(vals) / spec(alpha, t, r))))
    return EnvelopeReport(name, spec, sigma, tuple(ratios))


# ---------------------------------------------------------------------------
# the sampled quantities


def _direction(n):
    e = np.arange(1.0, n + 1.0)
    return e / np.linalg.norm(e)


ANISO3 = np.array([[2.0, 0.3, 0.1], [0.3, 1.0, -0.2], [0.1, -0.2, 1.5]])


def _frozen_n3(alpha, which, order, t, r):
    A = np.linalg.inv(ANISO3)
    y = r[..., None] * _direction(3)
    deriv = {0: (), 1: (0,), 2: (0, 1)}[order]
    return frozen_from_matrix(A, float(np.linalg.det(ANISO3)), KernelId(which, deriv), alpha, t, y, fast=True)


def sine_operator_3d(eps=0.1):
    """a_ij(x) = (1 + eps sin x_1) delta_ij in three dimensions."""

    def a(x):
        x = np.asarray(x, dtype=float)
        return (1.0 + eps * np.sin(x[..., 0]))[..., None, None] * np.eye(3)

    return EllipticOperator(3, a, None, None, 1.0 - eps, 1.0, eps, 1.0 + eps)


def sine_operator_1d(eps=0.2):
    return EllipticOperator.one_dim(lambda x: 1.0 + eps * np.sin(x), bounds=(1.0 - eps, 1.0 + eps),
                                    holder_const=eps)


def _levi_3d(op, alpha, which, t, r, xi=np.array([0.3, -0.2, 0.1])):
    x = xi + r[..., None] * _direction(3)
    if which == "K":
        return k_kernel(op, alpha, t, x, xi, fast=True)
    return m_kernel(op, 1, alpha, t, x, xi, fast=True)


def _difference_n3(alpha, gamma, t, r):
    """max over eta pairs of |Z1_0(eta') - Z1_0(eta'')| / |eta' - eta''|^gamma, a = (1 + 0.1 sin eta_1) I."""
    y = r[..., None] * _direction(3)
    best = np.zeros(np.shape(t))
    eta0 = 0.4
    for d in (1.0, 0.5, 0.25, 0.125):
        vals = []
        for eta in (eta0, eta0 + d):
            a = 1.0 + 0.1 * math.sin(eta)
            vals.append(frozen_from_matrix(np.eye(3) / a, a**3, KernelId("Z1"), alpha, t, y, fast=True))
        best = np.maximum(best, np.abs(vals[0] - vals[1]) / d**gamma)
    return best


def _lifted(table, kind, scale, t, r):
    """Radial 3-D quantity -scale/(2 pi r) d/dr of a one-dimensional kernel part."""
    shape = np.shape(t)
    tf, rf = np.ravel(t), np.ravel(r)
    x = table.xi + rf
    if kind == "Q":
        d = table.frozen(tf, x, order=1) + table.correction(tf, x, kind="Yx")
    else:
        d = table.correction(tf, x, kind="Yx")
    return (-scale / (2.0 * math.pi * rf) * d).reshape(shape)


@dataclass(frozen=True)
class EnvelopeCase:
    name: str
    alpha: float
    power_t: float
    power_x: float
    build: Callable
    grid: EnvelopeGrid = EnvelopeGrid()

    def run(self, levels: int = 2) -> EnvelopeReport:
        return envelope_check(self.name, self.build(), self.alpha, self.power_t, self.power_x, self.grid,
                              levels=levels)


def envelope_cases(alpha: float = 1.5, c0: float = 0.7, T_levi: float = 0.5,
                   config: LeviConfig = LeviConfig()) -> list[EnvelopeCase]:
    """One configuration for each kernel estimate that is checked."""
    beta = 0.5 * alpha
    gamma = 1.0
    nu = NuPair.midpoint(alpha, gamma)
    zmax = 0.8 * cutoff(beta)
    g_frozen = EnvelopeGrid(1.0, 4, 2, zmax, 6, 6)
    g_levi = EnvelopeGrid(T_levi, 4, 2, zmax, 6, 4)
    op3 = sine_operator_3d()
    op1 = sine_operator_1d()
    lap_c0 = EllipticOperator.laplacian(1.0, c0)

    def q_lift():
        table = solve_volterra(lap_c0, "Z1", alpha, 0.0, T_levi, config)
        return partial(_lifted, table, "Q", c0)

    def vy_lift():
        table = solve_volterra(lap_c0, "Y", alpha, 0.0, T_levi, config)
        return partial(_lifted, table, "V", 1.0)

    def n1_derivs():
        a = 1.3

        def f(t, r):
            # D^m Z1 scaled to the m = 0 bound; the worst of m = 0, 1, 2
            d = kernel_delta(alpha, 1, "Z1")
            return np.max([np.abs(frozen_1d(alpha, d, t, r, a, m, fast=True)) * t ** (beta * m)
                           for m in range(3)], axis=0)

        return f

    return [
        EnvelopeCase("Z1 frozen, n=3, anisotropic", alpha, -alpha, -1.0,
                     lambda: partial(_frozen_n3, alpha, "Z1", 0), g_frozen),
        EnvelopeCase("Y frozen, n=3, anisotropic", alpha, alpha - 1.5 * alpha - 1.0, 0.0,
                     lambda: partial(_frozen_n3, alpha, "Y", 0), g_frozen),
        EnvelopeCase("Z1 frozen derivatives, n=1", alpha, -beta, 0.0, n1_derivs, g_frozen),
        EnvelopeCase("Z1 frozen, coefficient difference, n=3", alpha, -alpha, -1.0,
                     lambda: partial(_difference_n3, alpha, gamma), g_frozen),
        EnvelopeCase("M1, n=3, a = (1 + 0.1 sin x1) I", alpha, -alpha, -3.0 + gamma,
                     lambda: partial(_levi_3d, op3, alpha, "M1"), g_frozen),
        EnvelopeCase("K, n=3, a = (1 + 0.1 sin x1) I", alpha, -1.0, -3.0 + gamma,
                     lambda: partial(_levi_3d, op3, alpha, "K"), g_frozen),
        EnvelopeCase("Q1, n=3, a = I, c = c0", alpha, 0.5 * nu.nu0 * alpha - 1.0, -3.0 + gamma - nu.nu1,
                     q_lift, g_levi),
        EnvelopeCase("K, n=1, a = 1 + 0.2 sin x", alpha, -(1.0 - gamma) * beta - 1.0, 0.0,
                     lambda: (lambda t, r: k_kernel(op1, alpha, t, 0.3 + r, 0.3, fast=True)), g_frozen),
        EnvelopeCase("V_Y, n=3, a = I, c = c0", alpha, nu.nu0 * alpha - 1.0,
                     -3.0 + (gamma - nu.nu1) + (2.0 - nu.nu0), vy_lift, g_levi),
    ]


def run_envelope_suite(levels: int = 2, **kwargs) -> list[EnvelopeReport]:
    return [case.run(levels) for case in envelope_cases(**kwargs)]
