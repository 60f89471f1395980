import math

import numpy as np
import pytest

from fracwave.cauchy import CauchyProblem, SolutionField
from fracwave.errors import EmptyOverlap, GridError
from fracwave.levi import EllipticOperator
from fracwave.oracle import FDGrid, compare, fd_solve_1d

ALPHA = 1.5
LAP = EllipticOperator.laplacian()


def one(x):
    return np.ones_like(np.asarray(x, dtype=float))


def gauss(x):
    return np.exp(-x * x)


def manufactured(dt, dx, lo=-8.0, hi=8.0):
    """u = (1 + t^2) exp(-x^2) with the forcing from the Caputo power rule."""
    def f(t, x):
        return (2 * t ** (2 - ALPHA) / math.gamma(3 - ALPHA) * gauss(x)
                - (1 + t * t) * (4 * x * x - 2) * gauss(x))

    s = fd_solve_1d(CauchyProblem(LAP, ALPHA, 1.0, u0=gauss, f=f), FDGrid(dt, dx, lo, hi))
    exact = (1 + s.times[:, None] ** 2) * gauss(s.x[None, :])
    return float(np.max(np.abs(s.values - exact)))


def test_constant_state_is_preserved():
    s = fd_solve_1d(CauchyProblem(LAP, ALPHA, 1.0, u0=one), FDGrid(0.01, 0.1, -5, 5, "reflecting"))
    assert np.max(np.abs(s.values - 1)) <= 1e-10


def test_linear_growth_from_initial_velocity():
    s = fd_solve_1d(CauchyProblem(LAP, ALPHA, 1.0, u1=one), FDGrid(0.01, 0.1, -5, 5, "reflecting"))
    assert np.max(np.abs(s.values - s.times[:, None])) <= 1e-8


def test_manufactured_solution_time_order():
    errs = [manufactured(dt, 0.01) for dt in (0.02, 0.01, 0.005)]
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders >= 3 - ALPHA - 0.3)


def test_manufactured_solution_space_order():
    errs = [manufactured(1e-3, dx, -6.0, 6.0) for dx in (0.4, 0.2, 0.1)]
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders >= 1.7)


def test_mass_conservation_with_reflecting_walls():
    s = fd_solve_1d(CauchyProblem(LAP, ALPHA, 0.5, u0=gauss), FDGrid(0.005, 0.05, -6, 6, "reflecting"))
    mass = np.trapezoid(s.values, s.x, axis=1)
    assert np.max(np.abs(mass - mass[0])) < 1e-4


def test_far_boundary_is_harmless():
    pb = CauchyProblem(LAP, ALPHA, 0.25, u0=gauss)
    # domain doubling on nested node sets, so no interpolation enters the comparison
    near = fd_solve_1d(pb, FDGrid(0.005, 0.05, -2 - 2.5, 2 + 2.5))
    far = fd_solve_1d(pb, FDGrid(0.005, 0.05, -2 - 5.0, 2 + 5.0))
    assert near.info["grid"].lo - FDGrid.around(pb, -2, 2, 0.005, 0.05).lo < 0
    assert compare(near, far, x_range=(-2, 2)).sup < 1e-8


def test_grid_validation():
    with pytest.raises(GridError):
        FDGrid(0.0, 0.1, -1, 1)
    with pytest.raises(GridError):
        FDGrid(0.1, 0.1, -1, 1, "periodic")


# --- compare ----------------------------------------------------------------------


def field(values, shift=0.0):
    t = np.linspace(0.0, 1.0, 5)
    x = np.linspace(-1.0, 1.0, 7)
    return SolutionField(t, x, values(t[:, None], x[None, :]) + shift)


def test_compare_identical_fields():
    a = field(lambda t, x: np.sin(t + x))
    r = compare(a, a)
    assert r.sup == 0.0 and r.l2 == 0.0 and r.points == 35


def test_compare_shifted_field():
    a = field(lambda t, x: np.sin(t + x))
    r = compare(a, field(lambda t, x: np.sin(t + x), 1e-6))
    assert r.norm("sup") == pytest.approx(1e-6, rel=1e-6)
    assert r.norm("L2") == pytest.approx(1e-6, rel=1e-6)


def test_compare_interpolates_linear_fields_exactly():
    a = field(lambda t, x: 2 * t - x)
    t = np.linspace(0.0, 1.0, 3)
    x = np.linspace(-1.0, 1.0, 4)
    b = SolutionField(t, x, 2 * t[:, None] - x[None, :])
    assert compare(a, b).sup <= 1e-14


def test_compare_disjoint_ranges():
    a = field(lambda t, x: t + x)
    with pytest.raises(EmptyOverlap):
        compare(a, a, x_range=(2.0, 3.0))
