"""Tests for the hardware-impairment models and their moment formulas."""

import math

import numpy as np
import numpy.testing as npt
import pytest

from risfd.channels import Geometry, SystemDims, sample_channels
from risfd.impairments import (
    GAMMA_VARIANTS,
    ImpairmentProfile,
    bessel_ratio,
    received_covariance,
    receiver_distortion_cov,
    sample_phase_offsets,
    sample_tx_distortion,
)

from helpers import sample_rx_covariance

# Frozen oracle values for I1(k)/I0(k), computed once from the power series
# below at high precision.
RATIO_AT_4 = 0.8635226110245504
RATIO_AT_10 = 0.9485998259548459


def _series_ratio(kappa, terms=60):
    """Power-series evaluation of I1(kappa)/I0(kappa)."""
    half = kappa / 2.0
    i0 = sum(half ** (2 * m) / math.factorial(m) ** 2 for m in range(terms))
    i1 = sum(
        half ** (2 * m + 1) / (math.factorial(m) * math.factorial(m + 1))
        for m in range(terms)
    )
    return i1 / i0


def _quadrature_ratio(kappa, points=20001):
    """Direct quadrature of E[exp(j*theta)] for the wrapped-phase density."""
    theta = np.linspace(-np.pi, np.pi, points)
    weight = np.exp(kappa * (np.cos(theta) - 1.0))  # shifted for stability
    return np.trapezoid(np.cos(theta) * weight, theta) / np.trapezoid(weight, theta)


def test_bessel_ratio_endpoints():
    assert bessel_ratio(0.0) == 0.0
    assert bessel_ratio(np.inf) == 1.0
    assert bessel_ratio(1e8) == pytest.approx(1.0, abs=1e-7)


def test_bessel_ratio_frozen_values():
    npt.assert_allclose(bessel_ratio(4.0), RATIO_AT_4, rtol=1e-12)
    npt.assert_allclose(bessel_ratio(10.0), RATIO_AT_10, rtol=1e-12)


@pytest.mark.parametrize("kappa", [0.25, 0.5, 1.0, 2.0, 4.0, 10.0])
def test_bessel_ratio_against_series_and_quadrature(kappa):
    got = bessel_ratio(kappa)
    npt.assert_allclose(got, _series_ratio(kappa), rtol=1e-10)
    npt.assert_allclose(got, _quadrature_ratio(kappa), rtol=1e-7)


def test_bessel_ratio_monotone():
    grid = np.array([0.0, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 50.0])
    vals = np.array([bessel_ratio(k) for k in grid])
    assert np.all(np.diff(vals) > 0)
    assert np.all((vals >= 0) & (vals < 1))


def test_profile_flags_and_coherence():
    prof = ImpairmentProfile.ideal()
    assert prof.is_ideal
    assert prof.phase_coherence == 1.0
    assert ImpairmentProfile(kappa_ris=0.0).phase_coherence == 0.0
    hi = ImpairmentProfile(kappa_ris=4.0, sigma2_ta=0.1)
    assert not hi.is_ideal
    npt.assert_allclose(hi.phase_coherence, RATIO_AT_4, rtol=1e-12)


def test_profile_rejects_bad_values():
    with pytest.raises(ValueError):
        ImpairmentProfile(kappa_ris=-1.0)
    with pytest.raises(ValueError):
        ImpairmentProfile(sigma2_ta=-0.5)


def test_phase_offsets_concentrate_with_kappa():
    rng = np.random.default_rng(31)
    draws = 100000
    # uniform at zero concentration: circular mean vanishes
    th0 = sample_phase_offsets(0.0, (draws,), rng)
    assert np.abs(np.mean(np.exp(1j * th0))) < 0.01
    # matches the Bessel ratio at moderate concentrations
    for kappa in (1.0, 4.0, 10.0):
        th = sample_phase_offsets(kappa, (draws,), rng)
        got = np.mean(np.exp(1j * th))
        npt.assert_allclose(got.real, bessel_ratio(kappa), atol=0.01)
        npt.assert_allclose(got.imag, 0.0, atol=0.01)
    # infinite concentration collapses to exact zeros
    npt.assert_array_equal(sample_phase_offsets(np.inf, (5,), rng), np.zeros(5))


def test_tx_distortion_variance_and_zero():
    rng = np.random.default_rng(32)
    z = sample_tx_distortion(0.3, (100000,), rng)
    npt.assert_allclose(np.mean(np.abs(z) ** 2), 0.3, rtol=0.02)
    npt.assert_array_equal(sample_tx_distortion(0.0, (7,), rng), np.zeros(7))


def _unit_phases(rng, n):
    return np.exp(2j * np.pi * rng.random(n))


class TestReceivedCovariance:
    def test_exact_matches_sampled_moment(self):
        """The closed form tracks the sample covariance of the undistorted rx."""
        dims = SystemDims(2, 1, 2)
        rng = np.random.default_rng(41)
        ch = sample_channels(dims, Geometry.unit(), rng)
        prof = ImpairmentProfile(kappa_ris=4.0)
        phi = _unit_phases(rng, dims.n)
        p_a, p_u = 1.3, 0.7
        emp = sample_rx_covariance(ch, phi, p_a, p_u, 4.0, 60000, rng)
        gamma = received_covariance(ch, phi, p_a, p_u, prof, "exact")
        rel = np.linalg.norm(emp - gamma) / np.linalg.norm(gamma)
        assert rel < 0.05

    def test_exact_and_symmetrized_are_hermitian_psd(self):
        dims = SystemDims(3, 2, 4)
        rng = np.random.default_rng(42)
        ch = sample_channels(dims, Geometry.unit(), rng)
        prof = ImpairmentProfile(kappa_ris=2.0)
        phi = _unit_phases(rng, dims.n)
        for variant in ("exact", "symmetrized"):
            g = received_covariance(ch, phi, 1.0, 1.0, prof, variant)
            npt.assert_allclose(g, g.conj().T, atol=1e-12)
            assert np.linalg.eigvalsh(g).min() > -1e-10

    def test_literal_requires_square_user_link(self):
        dims = SystemDims(2, 1, 2)
        rng = np.random.default_rng(43)
        ch = sample_channels(dims, Geometry.unit(), rng)
        prof = ImpairmentProfile(kappa_ris=4.0)
        phi = _unit_phases(rng, dims.n)
        with pytest.raises(ValueError, match="k == m"):
            received_covariance(ch, phi, 1.0, 1.0, prof, "literal")

    def test_literal_is_not_hermitian(self):
        dims = SystemDims(2, 2, 3)
        rng = np.random.default_rng(44)
        ch = sample_channels(dims, Geometry.unit(), rng)
        prof = ImpairmentProfile(kappa_ris=4.0)
        phi = _unit_phases(rng, dims.n)
        g = received_covariance(ch, phi, 1.0, 1.0, prof, "literal")
        assert np.abs(g - g.conj().T).max() > 1e-3

    def test_unknown_variant_rejected(self):
        dims = SystemDims(2, 1, 2)
        ch = sample_channels(dims, Geometry.unit(), np.random.default_rng(45))
        with pytest.raises(ValueError, match="variant"):
            received_covariance(ch, np.ones(2), 1.0, 1.0, ImpairmentProfile(), "bogus")
        assert set(GAMMA_VARIANTS) == {"exact", "symmetrized", "literal"}


def test_receiver_distortion_cov_scales_diagonal():
    gamma = np.array([[2.0, 1.0 - 1j], [1.0 + 1j, 3.0]])
    out = receiver_distortion_cov(gamma, 0.5)
    npt.assert_allclose(out, np.diag([1.0, 1.5]))


def test_receiver_distortion_cov_rejects_bad_diagonals():
    with pytest.raises(ValueError, match="non-real"):
        receiver_distortion_cov(np.diag([1.0, 1.0 + 0.1j]), 0.5)
    with pytest.raises(ValueError, match="negative"):
        receiver_distortion_cov(np.diag([1.0, -1.0]), 0.5)
    # a tiny numerical negative is clipped, not fatal
    out = receiver_distortion_cov(np.diag([1.0, -1e-14]), 1.0)
    assert out[1, 1] == 0.0
