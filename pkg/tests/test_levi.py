import json
import math
import pathlib

import numpy as np
import pytest

import oracles
from fracwave.cauchy import kernel_residual
from fracwave.errors import DomainError, IterationBudgetExceeded
from fracwave.kernels import EllipticParamField, KernelId, frozen_1d, frozen_kernel, kernel_delta
from fracwave.levi import (EllipticOperator, LeviConfig, NuPair, assemble_corrected, k_kernel, m_kernel, neumann,
                           neumann_terms, solve_volterra)
from fracwave.verify import degenerate_gap

NEUMANN = json.loads((pathlib.Path(__file__).parent / "data" / "neumann_c0.json").read_text())
ALPHA = 1.5


def sine_operator():
    return EllipticOperator.one_dim(lambda x: 1 + 0.2 * np.sin(x), bounds=(0.8, 1.2))


@pytest.fixture(scope="module")
def c0_table():
    return solve_volterra(EllipticOperator.laplacian(1.0, 0.7), "Z1", ALPHA, 0.0, 1.0)


@pytest.fixture(scope="module")
def sine_table():
    return solve_volterra(sine_operator(), "Z1", ALPHA, 0.3, 0.25)


# --- operator and parameters ---------------------------------------------------------


def test_nu_pair_midpoint():
    p = NuPair.midpoint(1.5, 1.0)
    lo = 2 - 2 / 1.5
    assert p.nu1 == pytest.approx(0.5 * (1 + lo))
    assert p.nu0 == pytest.approx(p.nu1 - lo)
    with pytest.raises(DomainError):
        NuPair.midpoint(1.5, 0.3)
    with pytest.raises(DomainError):
        NuPair(0.2, 0.3)


def test_hoelder_exponent_must_exceed_threshold():
    op = EllipticOperator.one_dim(np.cos, bounds=(0.5, 1.0), gamma=0.3)
    with pytest.raises(DomainError):
        m_kernel(op, 1, 1.5, 0.5, 0.2, 0.0)
    with pytest.raises(DomainError):
        EllipticOperator(1, np.cos, delta0=2.0, a_max=1.0)


# --- parametrix kernels -------------------------------------------------------------


def test_m_kernel_vanishes_at_the_frozen_point_for_b_c_zero():
    assert m_kernel(sine_operator(), 1, ALPHA, 0.3, 0.4, 0.4) == 0.0


def test_m_and_k_for_constant_potential():
    op = EllipticOperator.laplacian(1.0, 0.7)
    t, x = 0.3, np.array([-0.5, 0.1, 0.9])
    for l, which in ((1, "Z1"), (2, "Z2")):
        ref = 0.7 * frozen_1d(ALPHA, kernel_delta(ALPHA, 1, which), t, x, 1.0)
        assert np.allclose(m_kernel(op, l, ALPHA, t, x, 0.0), ref, rtol=1e-15)
    ref = 0.7 * frozen_1d(ALPHA, kernel_delta(ALPHA, 1, "Y"), t, x, 1.0)
    assert np.allclose(k_kernel(op, ALPHA, t, x, 0.0), ref, rtol=1e-15)
    with pytest.raises(DomainError):
        m_kernel(op, 3, ALPHA, t, x, 0.0)


def test_m_kernel_two_dimensional_constant_potential():
    A = np.array([[1.5, 0.2], [0.2, 1.0]])
    op = EllipticOperator(2, lambda x: np.broadcast_to(A, np.shape(x)[:-1] + (2, 2)),
                          c=lambda x: np.full(np.shape(x)[:-1], 0.4), delta0=0.9, a_max=1.6)
    xi = np.array([0.1, -0.2])
    x = np.array([[0.6, 0.3], [-0.4, 0.0]])
    ref = 0.4 * frozen_kernel(EllipticParamField.constant(A), KernelId("Z1"), ALPHA, 0.5, x - xi, xi)
    assert np.allclose(m_kernel(op, 1, ALPHA, 0.5, x, xi), ref, rtol=1e-13)


# --- degenerate case ----------------------------------------------------------------


def test_constant_coefficients_reproduce_frozen_kernel():
    assert degenerate_gap() <= 1e-14


def test_trivial_operator_short_circuits():
    op = EllipticOperator.laplacian(1.3)
    t, x = np.array([0.1, 0.4]), np.array([0.2, -1.0])
    v = assemble_corrected(op, "Y", ALPHA, 0.0, t, x)
    assert np.array_equal(v, frozen_1d(ALPHA, kernel_delta(ALPHA, 1, "Y"), t, x, 1.3, fast=True))


# --- Neumann series -----------------------------------------------------------------


def test_neumann_solves_contraction():
    rng = np.random.default_rng(3)
    A = 0.4 * rng.random((6, 6)) / 6
    src = rng.random(6)
    R, its, ratios = neumann(A, src)
    assert np.allclose(R, np.linalg.solve(np.eye(6) - A, src), rtol=1e-12)
    assert max(ratios) < 1


def test_neumann_budget():
    with pytest.raises(IterationBudgetExceeded):
        neumann(np.eye(2), np.ones(2), max_iter=5)


def test_first_two_neumann_terms_against_nested_quadrature():
    op = EllipticOperator.laplacian(1.0, NEUMANN["c0"])
    t, x, ref = (np.array(NEUMANN[k]) for k in ("t", "x", "second_term"))
    first, second = neumann_terms(op, "Z1", NEUMANN["alpha"], NEUMANN["xi"], t, x)
    assert np.allclose(first, NEUMANN["c0"] * frozen_1d(1.5, kernel_delta(1.5, 1, "Z1"), t, x, 1.0), rtol=1e-15)
    assert np.max(np.abs(second - ref)) <= 1e-4 * np.max(np.abs(ref))


@pytest.mark.slow
def test_frozen_neumann_values_reproduce():
    for k in (22, 40):
        v = oracles.neumann_second_brute(NEUMANN["alpha"], NEUMANN["c0"], NEUMANN["t"][k], NEUMANN["x"][k])
        assert v == pytest.approx(NEUMANN["second_term"][k], rel=1e-9)


def test_constant_potential_mass_is_mittag_leffler(c0_table):
    # with c = c0 the kernel mass solves D^alpha m = c0 m, m(0) = 1, m'(0) = 0
    for t in (0.1, 0.5, 1.0):
        # Gauss panels on each side of the cusp at x = 0, out to where the kernel is negligible
        x, w = oracles.gauss_legendre_dense(0.0, 5 * t ** (ALPHA / 2), 20)
        x, w = np.concatenate([-x, x]), np.concatenate([w, w])
        mass = np.dot(w, c0_table(np.full_like(x, t), x))
        assert mass == pytest.approx(oracles.ml(ALPHA, 0.7 * t**ALPHA), rel=1e-5)


def test_constant_potential_density_is_c0_times_kernel(c0_table):
    # Q solves Q = c0 Z0 + P_K[Q] with K = c0 Y0, so Q = c0 Z exactly
    t, x = np.full(3, 0.5), np.array([0.0, 0.3, 1.0])
    assert np.allclose(c0_table.q(t, x), 0.7 * c0_table(t, x), rtol=1e-3)


def test_neumann_ratios_contract(c0_table):
    assert c0_table.iterations > 0
    assert max(c0_table.ratios) < 1


# --- fundamental-solution residual --------------------------------------------------


@pytest.mark.parametrize("t,x", [(0.25, 0.8), (0.15, 0.6), (0.2, 1.3)])
def test_corrected_kernel_residual(sine_table, t, x):
    assert kernel_residual(sine_table, t, x).relative <= 0.05


def test_frozen_kernel_alone_fails_the_residual(sine_table):
    assert kernel_residual(sine_table, 0.25, 0.8, corrected=False).relative > 0.05


def test_config_is_respected():
    table = solve_volterra(sine_operator(), "Z1", ALPHA, 0.0, 0.1, LeviConfig(n_time=6))
    assert table.lattice.shape[0] == 6
    assert math.isfinite(table.residual_norm)
