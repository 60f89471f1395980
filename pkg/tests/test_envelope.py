from functools import partial

import numpy as np
import pytest

from fracwave.envelope import EnvelopeGrid, _frozen_n3, envelope_cases, envelope_check, fit_sigma

ALPHA = 1.5
FROZEN = [c for c in envelope_cases() if "frozen" in c.name or c.name.startswith(("M1", "K,"))]


def test_refined_grid_contains_coarse_grid():
    g = EnvelopeGrid(1.0, 3, 2, 4.0, 4, 3)
    t0, z0 = g.points()
    t1, z1 = g.refined().points()
    assert np.all(np.isin(np.round(t0[:, 0], 14), np.round(t1[:, 0], 14)))
    assert np.all(np.isin(np.round(z0[0], 14), np.round(z1[0], 14)))
    assert t1.shape[0] > t0.shape[0] and z1.shape[1] > z0.shape[1]


def test_fit_recovers_known_rate():
    t, z = EnvelopeGrid(1.0, 4, 2, 4.0, 6, 6).points()
    r = z * t**0.75
    vals = 3.0 * t**-1.2 * r**0.5 * np.exp(-0.9 * z**4)
    assert fit_sigma(vals, t, r, ALPHA, -1.2, 0.5) == pytest.approx(0.9, rel=1e-10)


def test_exact_envelope_passes():
    def f(t, r):
        return t**-1.0 * np.exp(-0.4 * (r * t**-0.75) ** 4)

    rep = envelope_check("synthetic", f, ALPHA, -1.0, 0.0)
    assert rep.passed and abs(rep.growth) < 1e-5


@pytest.mark.parametrize("case", FROZEN, ids=[c.name for c in FROZEN])
def test_frozen_and_parametrix_envelopes(case):
    rep = case.run()
    assert rep.passed, (rep.ratios, rep.fitted_sigma)


def test_over_optimistic_time_exponent_fails():
    # Z1 in three dimensions carries t^-alpha; claiming t^(-alpha + 0.5) must be caught by refinement
    rep = envelope_check("negative control", partial(_frozen_n3, ALPHA, "Z1", 0), ALPHA, -ALPHA + 0.5, -1.0)
    assert not rep.passed


def test_over_optimistic_space_exponent_fails():
    rep = envelope_check("negative control", partial(_frozen_n3, ALPHA, "Z1", 0), ALPHA, -ALPHA, -0.5)
    assert not rep.passed
