"""Tests for the model-error moments and the factored normal equations."""

import numpy as np
import numpy.testing as npt
import pytest

from risfd.error_stats import (
    NormalMatrix,
    TrainingErrorStats,
    aggregate_error_stats,
    error_correlation,
    error_mean,
    normal_equations,
    _phase_moments,
)
from risfd.impairments import ImpairmentProfile, bessel_ratio
from risfd.linalg import kron
from risfd.training import SystemDims, TrainingPlan, build_plan

from helpers import sample_error_moments


def _unit_phases(rng, n):
    return np.exp(2j * np.pi * rng.random(n))


def test_phase_moment_identities():
    rng = np.random.default_rng(50)
    n = 5
    phi = _unit_phases(rng, n)
    coh = 0.73
    m1, m2 = _phase_moments(phi, coh, n)
    npt.assert_allclose(np.diag(m1), (2.0 - 2.0 * coh) * np.ones(n), atol=1e-12)
    npt.assert_allclose(np.diag(m2), np.ones(n), atol=1e-12)
    i, j = 1, 3
    npt.assert_allclose(m1[i, j], (coh**2 - 2 * coh + 1) * phi[i] * phi[j].conj(), rtol=1e-12)
    npt.assert_allclose(m2[i, j], coh**2 * phi[i] * phi[j].conj(), rtol=1e-12)


def test_error_mean_touches_only_reflected_blocks():
    rng = np.random.default_rng(51)
    m, k, n = 3, 2, 4
    x_a = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    x_u = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    phi = _unit_phases(rng, n)
    coh = 0.86
    mean = error_mean(x_a, x_u, phi, coh)
    assert mean.shape == ((m + k) * (n + 1),)
    npt.assert_array_equal(mean[:m], np.zeros(m))
    npt.assert_array_equal(mean[m + n * m : m + n * m + k], np.zeros(k))
    npt.assert_allclose(mean[m : m + n * m], (coh - 1) * np.kron(phi, x_a), rtol=1e-14)
    npt.assert_allclose(mean[m + n * m + k :], (coh - 1) * np.kron(phi, x_u), rtol=1e-14)


def test_error_moments_match_sampling():
    rng = np.random.default_rng(52)
    m, k, n = 2, 1, 2
    kappa, var_ta, var_tu = 4.0, 0.1, 0.15
    coh = bessel_ratio(kappa)
    x_a = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    x_u = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    phi = _unit_phases(rng, n)
    emp_mean, emp_corr = sample_error_moments(
        x_a, x_u, phi, kappa, var_ta, var_tu, 200000, rng
    )
    mean = error_mean(x_a, x_u, phi, coh)
    corr = error_correlation(x_a, x_u, phi, coh, var_ta, var_tu)
    npt.assert_allclose(emp_mean, mean, atol=0.02)
    npt.assert_allclose(emp_corr, corr, atol=0.05)


def test_error_correlation_is_hermitian_psd():
    rng = np.random.default_rng(53)
    m, k, n = 3, 2, 4
    x_a = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    x_u = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    phi = _unit_phases(rng, n)
    corr = error_correlation(x_a, x_u, phi, 0.6, 0.2, 0.3)
    npt.assert_allclose(corr, corr.conj().T, atol=1e-12)
    evals = np.linalg.eigvalsh(corr)
    assert evals.min() > -1e-10


class TestTrainingErrorStats:
    def _stats(self, m=2, k=1, n=2, scheme=1):
        plan = build_plan(SystemDims(m, k, n), scheme, p_a=1.2, p_u=0.8)
        profile = ImpairmentProfile(kappa_ris=4.0, sigma2_ta=0.1, sigma2_tu=0.05)
        return plan, profile, aggregate_error_stats(plan, profile)

    def test_mean_rows_match_per_instant_formula(self):
        plan, profile, stats = self._stats()
        coh = profile.phase_coherence
        for t in (0, plan.l, plan.t - 1):
            want = error_mean(plan.ap_pilots[t], plan.ue_pilots[t], plan.ris_per_t[t], coh)
            npt.assert_allclose(stats.mean[t], want, rtol=1e-12, atol=1e-14)
        npt.assert_allclose(stats.v, plan.xs + stats.mean, rtol=1e-14)

    def test_sum_correlation_matches_per_instant_sum(self):
        plan, profile, stats = self._stats()
        brute = sum(stats.correlation(t) for t in range(plan.t))
        npt.assert_allclose(stats.sum_correlation, brute, rtol=1e-10, atol=1e-12)

    def test_sum_x_mean_matches_brute_sum(self):
        plan, profile, stats = self._stats()
        brute = plan.xs.T @ stats.mean.conj()
        npt.assert_allclose(stats.sum_x_mean, brute, rtol=1e-12, atol=1e-14)

    def test_normal_factor_matches_dense_assembly(self):
        """The small factor agrees with the h_dim-sized expected normal matrix."""
        from risfd.training import assemble_regressor

        plan, profile, stats = self._stats()
        m = plan.dims.m
        x = assemble_regressor(plan)
        e_mean = stats.mean_regressor_dense()
        dense = (
            x.conj().T @ x
            + x.conj().T @ e_mean
            + e_mean.conj().T @ x
            + stats.corr_regressor_dense()
        )
        npt.assert_allclose(
            kron(stats.normal_factor.conj(), np.eye(m)), dense, rtol=1e-10, atol=1e-10
        )

    def test_ideal_profile_collapses_to_pilot_gram(self):
        plan = build_plan(SystemDims(2, 1, 2), 1)
        stats = aggregate_error_stats(plan, ImpairmentProfile.ideal())
        npt.assert_array_equal(stats.mean, np.zeros_like(stats.mean))
        npt.assert_allclose(stats.normal_factor, plan.gram, rtol=1e-12, atol=1e-14)


class TestNormalMatrix:
    def test_detects_diagonal_for_schedule_plans(self):
        plan = build_plan(SystemDims(3, 2, 4), 1)
        nm = normal_equations(plan)
        assert nm.is_diagonal
        npt.assert_allclose(nm.diag, np.real(np.diag(plan.gram)), rtol=1e-12)

    def test_flags_off_diagonal_structure(self):
        dims = SystemDims(2, 1, 2)
        base = build_plan(dims, 1)
        skew = TrainingPlan(
            dims,
            base.s_a,
            base.s_u,
            1.0,
            1.0,
            np.ones((dims.n + 1, dims.n), dtype=complex),
            scheme=None,
        )
        nm = normal_equations(skew)
        assert not nm.is_diagonal

    def test_solver_paths_agree(self):
        plan = build_plan(SystemDims(2, 1, 3), 1)
        profile = ImpairmentProfile(kappa_ris=2.0, sigma2_ta=0.2, sigma2_tu=0.2)
        stats = aggregate_error_stats(plan, profile)
        nm = normal_equations(plan, stats)
        assert nm.is_diagonal
        forced = NormalMatrix(nm.small, nm.m, False, None)
        rng = np.random.default_rng(54)
        rhs = rng.standard_normal((nm.m, nm.small.shape[0])) + 1j * rng.standard_normal(
            (nm.m, nm.small.shape[0])
        )
        fast = nm.solve_right(rhs)
        slow = forced.solve_right(rhs)
        npt.assert_allclose(fast, slow, rtol=1e-10, atol=1e-12)
        npt.assert_allclose(nm.trace_inverse(), forced.trace_inverse(), rtol=1e-10)

    def test_rejects_non_hermitian_factor(self):
        bad = np.array([[1.0, 2.0], [0.5, 1.0]], dtype=complex)
        with pytest.raises(ValueError, match="[Hh]ermitian"):
            NormalMatrix.from_small(bad, 2)

    def test_dense_view_and_condition(self):
        plan = build_plan(SystemDims(2, 1, 2), 1)
        nm = normal_equations(plan)
        dense = nm.dense()
        assert dense.shape == (plan.dims.h_dim, plan.dims.h_dim)
        npt.assert_allclose(dense, kron(nm.small.conj(), np.eye(2)), rtol=1e-12)
        assert nm.condition() >= 1.0
