import json
import math
import pathlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracwave.errors import DomainError
from fracwave.special import (FFamilyParams, WrightParams, f_family, f_family_array, f_family_dz, phi_table,
                              wright_phi, wright_phi_array, wright_phi_dz)
from fracwave.verify import derivative_identity_error, gaussian_error, mwright_moment

import oracles

DATA = json.loads((pathlib.Path(__file__).parent / "data" / "special_values.json").read_text())
SQPI = math.sqrt(math.pi)


def frozen(key):
    return float(DATA[key])


# --- wright_phi ---------------------------------------------------------------


def test_phi_at_zero_is_reciprocal_gamma():
    assert wright_phi(WrightParams(0.75, 0.25), 0.0).value == pytest.approx(1 / math.gamma(0.25), rel=1e-15)


def test_phi_gaussian_case():
    assert wright_phi(WrightParams(0.5, 0.5), -2.0).value == pytest.approx(math.exp(-1) / SQPI, rel=1e-13)


def test_phi_against_extended_precision_series():
    r = wright_phi(WrightParams(0.75, -0.5), -1.3)
    assert r.value == pytest.approx(frozen("phi_b0.75_d-0.5_z-1.3"), rel=1e-12)
    assert r.abs_error_bound >= 0


def test_phi_frozen_value_matches_live_oracle():
    assert float(oracles.wright_series(0.75, -0.5, -1.3)) == pytest.approx(frozen("phi_b0.75_d-0.5_z-1.3"),
                                                                           rel=1e-20)


def test_phi_reciprocal_gamma_poles_are_exact_zeros():
    # delta = 0: the m = 0 term has 1/Gamma(0) = 0, so Phi(-beta, 0, 0) = 0 exactly
    assert wright_phi(WrightParams(0.5, 0.0), 0.0).value == 0.0
    assert np.isfinite(wright_phi(WrightParams(0.5, -1.0), -0.7).value)


def test_error_bound_honesty_on_random_draws():
    # the references are summed to an absolute 1e-40, which is the floor of the comparison
    bad = []
    for beta, delta, z, ref in DATA["random_phi"]:
        r = wright_phi(WrightParams(beta, delta), z)
        if abs(r.value - float(ref)) > 10 * r.abs_error_bound + 1e-38:
            bad.append((beta, delta, z, r.value, float(ref), r.abs_error_bound))
    assert not bad, bad[:5]


def test_phi_array_matches_scalar():
    z = np.linspace(-6, 2, 17)
    scalar = [wright_phi(WrightParams(0.7, 0.4), float(v)).value for v in z]
    assert np.allclose(wright_phi_array(0.7, 0.4, z), scalar, rtol=1e-12, atol=1e-300)


def test_gaussian_identity_on_interval():
    assert gaussian_error() <= 1e-10


@pytest.mark.parametrize("beta", [0.625, 0.75, 0.875])
@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_mwright_moments(beta, k):
    assert abs(mwright_moment(beta, k) - math.gamma(k + 1) / math.gamma(beta * k + 1)) <= 1e-8


def test_invalid_parameters():
    with pytest.raises(DomainError):
        WrightParams(1.0, 0.5)
    with pytest.raises(DomainError):
        FFamilyParams(-1.0, 0.5, 0.5)


# --- wright_phi_dz ---------------------------------------------------------------


def test_phi_dz_at_zero():
    assert wright_phi_dz(WrightParams(0.5, 1.0), 0.0).value == pytest.approx(1 / math.gamma(0.5), rel=1e-15)


def test_phi_dz_against_finite_difference():
    p = WrightParams(0.75, 0.25)
    h = 1e-5
    fd = (wright_phi(p, -0.7 + h).value - wright_phi(p, -0.7 - h).value) / (2 * h)
    assert wright_phi_dz(p, -0.7).value == pytest.approx(fd, rel=1e-8)


def test_phi_dz_gaussian_derivative():
    # d/dz exp(-z^2/4)/sqrt(pi) = -(z/2) exp(-z^2/4)/sqrt(pi)
    assert wright_phi_dz(WrightParams(0.5, 0.5), -1.0).value == pytest.approx(0.5 * math.exp(-0.25) / SQPI,
                                                                             rel=1e-13)


# --- f_family ------------------------------------------------------------------


def test_f_family_mu0_branch():
    assert f_family(FFamilyParams(0, 0.5, 0.5), 1.0).value == pytest.approx(math.exp(-0.25) / SQPI, rel=1e-13)


def test_f_family_mu2_against_quadrature_oracle():
    assert f_family(FFamilyParams(2, 0.5, 0.75), 1.0).value == pytest.approx(frozen("f_mu2_d0.5_b0.75_z1"),
                                                                            rel=1e-10)


@pytest.mark.parametrize("method", ["auto", "contour", "quadrature"])
def test_f_family_mu1_against_quadrature_oracle(method):
    v = f_family(FFamilyParams(1, -0.2, 0.75), 0.5, method=method).value
    assert v == pytest.approx(frozen("f_mu1_d-0.2_b0.75_z0.5"), rel=1e-9)


def test_f_family_domain():
    with pytest.raises(DomainError):
        f_family(FFamilyParams(1, 0.5, 0.75), 0.0)
    with pytest.raises(DomainError):
        f_family(FFamilyParams(0, 0.5, 0.75), -1.0)


def test_f_family_dz_limit_at_origin():
    # z f(z; 2, .) stays finite as z -> 0, so the derivative tends to -1/Gamma(delta - beta), not 0
    p = FFamilyParams(0, 0.5, 0.75)
    limit = -1 / math.gamma(-0.25)
    assert f_family_dz(p, 0.0).value == pytest.approx(limit, rel=1e-15)
    assert f_family_dz(p, 1e-9).value == pytest.approx(limit, rel=1e-6)


def test_f_family_dz_against_finite_difference():
    p = FFamilyParams(1, 0.3, 0.75)
    h = 1e-4
    fd = (f_family(p, 0.8 + h).value - f_family(p, 0.8 - h).value) / (2 * h)
    assert f_family_dz(p, 0.8).value == pytest.approx(fd, rel=1e-6)


def test_f_family_dz_gaussian_chain():
    shifted = f_family(FFamilyParams(2, -0.5, 0.5), 1.0).value
    d = f_family_dz(FFamilyParams(0, 0.5, 0.5), 1.0).value
    assert d == pytest.approx(-0.5 * shifted, rel=1e-14)
    assert d == pytest.approx(-0.5 * math.exp(-0.25) / SQPI, rel=1e-12)


def test_derivative_identity_random_box():
    assert derivative_identity_error(draws=100) <= 1e-6


@settings(max_examples=40, deadline=None)
@given(mu=st.sampled_from([0.0, 1.0, 2.0, 3.0]), delta=st.floats(-1.0, 2.0),
       beta=st.floats(0.55, 0.9), z=st.floats(0.1, 2.0))
def test_derivative_identity_property(mu, delta, beta, z):
    p = FFamilyParams(mu, delta, beta)
    h = 1e-3 * z
    f = [f_family(p, z + k * h).value for k in (-2, -1, 1, 2)]
    fd = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
    d = f_family_dz(p, z).value
    assert abs(d - fd) <= max(1e-6, 1e-4 * abs(d))


@pytest.mark.parametrize("beta,delta,z", [(0.875, 0.0, 2.0), (0.6, 1.3, 0.4), (0.75, -0.7, 3.5)])
def test_mu0_derivative_against_series_oracle(beta, delta, z):
    # d/dz Phi(-beta, delta, -z) = -Phi(-beta, delta - beta, -z)
    ref = -float(oracles.wright_series(beta, delta - beta, -z, dps=40))
    assert f_family_dz(FFamilyParams(0, delta, beta), z).value == pytest.approx(ref, rel=1e-12)


def test_tables_agree_with_direct_evaluation():
    z = np.linspace(0.0, 6.0, 61)
    tab = phi_table(0.75, 0.25)
    assert np.allclose(tab(z), wright_phi_array(0.75, 0.25, -z), rtol=1e-11, atol=1e-15)
    assert np.allclose(f_family_array(2.0, -0.75, 0.75, z[1:], fast=True),
                       f_family_array(2.0, -0.75, 0.75, z[1:]), rtol=1e-10, atol=1e-15)


def test_decay_envelope_for_mu_above_one():
    """|f| z^(mu-1) exp(+sigma z^(2/(2-alpha))) stays bounded on refinement of [1, 50]."""
    mu, delta, beta = 2.0, 0.5, 0.75
    p = 1.0 / (1.0 - beta)

    def ratio_max(n, sigma):
        z = np.geomspace(1.0, 50.0, n)
        v = np.abs(f_family_array(mu, delta, beta, z))
        keep = v > 1e-290
        return np.max(v[keep] * z[keep] ** (mu - 1) * np.exp(sigma * z[keep] ** p))

    z = np.geomspace(1.0, 50.0, 40)
    v = np.abs(f_family_array(mu, delta, beta, z))
    keep = v > 1e-290
    slope = np.polyfit(z[keep] ** p, np.log(v[keep] * z[keep] ** (mu - 1)), 1)[0]
    sigma = -0.5 * slope
    coarse, fine = ratio_max(40, sigma), ratio_max(160, sigma)
    assert fine / coarse - 1 < 0.05


def test_series_passes_through_gamma_poles():
    # delta - beta m hits nonpositive integers where 1/Gamma vanishes; deep terms go through log space
    z = -np.linspace(3.5e-4, 0.9965, 86)
    v = wright_phi_array(0.875, 0.0, z)
    assert np.all(np.isfinite(v))
    for zi, vi in zip(z[::17], v[::17]):
        assert vi == pytest.approx(float(oracles.wright_series(0.875, 0.0, zi)), rel=1e-11)
