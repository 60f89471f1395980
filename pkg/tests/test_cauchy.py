import math

import numpy as np
import pytest

from fracwave.cauchy import (CauchyProblem, initial_condition_report, potential_W, residual, residual_report,
                             solve_cauchy)
from fracwave.errors import DomainError, GridError
from fracwave.fraccalc import graded_mesh
from fracwave.levi import EllipticOperator

ALPHA = 1.5
LAP = EllipticOperator.laplacian()


def one(x):
    return np.ones_like(np.asarray(x, dtype=float))


def unit_force(t, x):
    return np.ones(np.broadcast(t, x).shape)


def gauss(x):
    return np.exp(-x * x)


def sine_operator():
    return EllipticOperator.one_dim(lambda x: 1 + 0.2 * np.sin(x), bounds=(0.8, 1.2))


# --- heat-type potential --------------------------------------------------------------


def test_potential_of_zero_forcing():
    assert np.all(potential_W(LAP, ALPHA, lambda t, x: 0 * t * x, np.array([0.3]), np.array([0.1])) == 0)


def test_potential_of_unit_forcing():
    t = np.array([0.1, 0.5, 1.0])
    w = potential_W(LAP, ALPHA, unit_force, t, np.zeros(3))
    assert np.allclose(w, t**ALPHA / math.gamma(ALPHA + 1), rtol=1e-6)


def test_potential_vanishes_at_small_time():
    t = np.array([1e-2, 1e-3, 1e-4])
    w = potential_W(LAP, ALPHA, unit_force, t, np.zeros(3))
    assert w[1] < 1e-3 and np.all(np.diff(w) < 0)
    # dW/dt = t^(alpha-1)/Gamma(alpha) for unit forcing: it tends to 0, but only like t^(1/2)
    dw = potential_W(LAP, ALPHA, unit_force, t, np.zeros(3), time=1)
    assert np.allclose(dw, t ** (ALPHA - 1) / math.gamma(ALPHA), rtol=1e-6)


def test_potential_needs_positive_time():
    with pytest.raises(DomainError):
        potential_W(LAP, ALPHA, unit_force, np.array([0.0]), np.zeros(1))


# --- exact cases ----------------------------------------------------------------------


def test_constant_solution_with_variable_coefficient():
    s = solve_cauchy(CauchyProblem(sine_operator(), ALPHA, 0.25, u0=one), [0.05, 0.1, 0.25], np.linspace(-2, 2, 9))
    assert np.max(np.abs(s.values - 1)) <= 1e-3
    assert np.max(np.abs(s.dt_values)) <= 1e-3


def test_linear_in_time_solution():
    ts = np.array([0.05, 0.1, 0.25])
    s = solve_cauchy(CauchyProblem(LAP, ALPHA, 1.0, u1=one), ts, np.linspace(-1, 1, 5))
    assert np.max(np.abs(s.values - ts[:, None])) <= 1e-6
    assert np.max(np.abs(s.dt_values - 1)) <= 1e-6


def test_power_solution_from_unit_forcing():
    ts = np.array([0.05, 0.1, 0.25])
    s = solve_cauchy(CauchyProblem(LAP, ALPHA, 1.0, f=unit_force), ts, np.linspace(-1, 1, 5))
    assert np.max(np.abs(s.values - (ts**ALPHA / math.gamma(ALPHA + 1))[:, None])) <= 1e-6
    assert np.max(np.abs(s.dt_values - (ts ** (ALPHA - 1) / math.gamma(ALPHA))[:, None])) <= 1e-6


def test_initial_rows_carry_the_data():
    s = solve_cauchy(CauchyProblem(LAP, ALPHA, 0.2, u0=np.sin, u1=np.cos), [0.0, 0.1], np.linspace(-1, 1, 5))
    assert np.array_equal(s.values[0], np.sin(s.x))
    assert np.array_equal(s.dt_values[0], np.cos(s.x))
    assert s.provenance == ("Z1", "Z2")


# --- residual --------------------------------------------------------------------------


def test_residual_of_exact_solutions():
    ts = np.linspace(0.0, 0.5, 11)
    xs = np.linspace(-0.5, 0.5, 7)
    lin = CauchyProblem(LAP, ALPHA, 0.5, u1=one)
    assert abs(residual(lin, solve_cauchy(lin, ts, xs), 0.3, 0.0)) <= 1e-4
    # u' ~ t^(1/2) at the origin: the Caputo trace needs a graded time lattice
    pw = CauchyProblem(LAP, ALPHA, 0.5, f=unit_force)
    ts = graded_mesh(0.5, 40, 2.0)
    assert abs(residual(pw, solve_cauchy(pw, ts, xs), ts[24], 0.0)) <= 1e-3


def test_residual_of_variable_coefficient_solution():
    pb = CauchyProblem(sine_operator(), ALPHA, 0.25, u0=gauss)
    ts = np.linspace(0.0, 0.25, 17)
    xs = np.linspace(-1.0, 1.0, 21)
    s = solve_cauchy(pb, ts, xs)
    worst = max(residual_report(pb, s, ts[it], xs[ix]).relative for it in (6, 11, 16) for ix in (5, 10, 14))
    assert worst <= 0.05


def test_residual_needs_lattice_points_and_derivatives():
    pb = CauchyProblem(LAP, ALPHA, 0.5, u1=one)
    s = solve_cauchy(pb, np.linspace(0, 0.5, 6), np.linspace(-1, 1, 9))
    with pytest.raises(GridError):
        residual(pb, s, 0.33, 0.0)
    with pytest.raises(GridError):
        residual(pb, s, 0.3, -1.0)
    s = solve_cauchy(pb, np.linspace(0, 0.5, 6), np.linspace(-1, 1, 9), derivative=False)
    with pytest.raises(GridError):
        residual(pb, s, 0.3, 0.0)


# --- structural properties ----------------------------------------------------------


def test_superposition():
    op = sine_operator()
    ts, xs = [0.2], np.linspace(-1, 1, 3)

    def force(t, x):
        return np.cos(x) * (1 + 0 * t)

    parts = [solve_cauchy(CauchyProblem(op, ALPHA, 0.2, **kw), ts, xs).values
             for kw in ({"u0": gauss}, {"u1": np.sin}, {"f": force})]
    both = solve_cauchy(CauchyProblem(op, ALPHA, 0.2, u0=gauss, u1=np.sin, f=force), ts, xs).values
    assert np.allclose(both, sum(parts), rtol=1e-12, atol=1e-14)


def test_mass_identity_for_laplacian():
    t = 0.3
    xs = np.linspace(-10, 10, 801)
    s = solve_cauchy(CauchyProblem(LAP, ALPHA, t, u0=gauss, u1=lambda x: 0.5 * gauss(x)), [t], xs,
                     derivative=False)
    mass = np.trapezoid(s.values[0], xs)
    assert mass == pytest.approx(math.sqrt(math.pi) * (1 + 0.5 * t), rel=1e-6)


def test_initial_conditions_for_zero_data():
    r = initial_condition_report(CauchyProblem(LAP, ALPHA, 0.1), [0.1, 0.05, 0.025], np.linspace(-1, 1, 5))
    assert np.all(r.value_gap == 0) and np.all(r.derivative_gap == 0)


def test_initial_condition_sequence_must_decrease():
    with pytest.raises(GridError):
        initial_condition_report(CauchyProblem(LAP, ALPHA, 0.1), [0.025, 0.05], [0.0])


def test_threads_do_not_change_results():
    pb = CauchyProblem(sine_operator(), ALPHA, 0.2, u0=gauss)
    ts, xs = [0.1, 0.2], np.linspace(-1, 1, 7)
    a = solve_cauchy(pb, ts, xs, threads=1)
    b = solve_cauchy(pb, ts, xs, threads=3)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.dt_values, b.dt_values)


def test_problem_validation():
    with pytest.raises(DomainError):
        CauchyProblem(LAP, ALPHA, 0.0)
    with pytest.raises(DomainError):
        CauchyProblem(LAP, 2.5, 1.0)
    with pytest.raises(GridError):
        solve_cauchy(CauchyProblem(LAP, ALPHA, 0.5, u0=one), [0.7], [0.0])
