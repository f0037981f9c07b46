"""Least-squares channel estimators and their closed-form error predictions.

Both estimators act on the stacked receive block of a whole training phase.
Because every aggregate involved has the structure (small matrix) kron I_m,
the solves run in the x_dim-sized "small" space: the estimate is

    h_hat = vec( R @ small^{-1} ),   R = sum_t y_t u_t^H,

with u_t = x_t (plain LS, small = pilot gram) or u_t = x_t + E[e_t] and the
error moments folded into ``small`` (HI-aware variant).
"""

from dataclasses import dataclass

import numpy as np

from .channels import channel_matrix
from .error_stats import normal_equations
from .linalg import hermitian_solve, vec

__all__ = [
    "EstimateResult",
    "ls_estimate",
    "hi_estimate",
    "ls_mse",
    "hi_mse",
    "expected_hi_estimate",
    "MSE_VARIANTS",
]

MSE_VARIANTS = ("centered", "moment")


@dataclass
class EstimateResult:
    """Estimate plus how it was solved (path: "diagonal" or "dense")."""

    h_hat: np.ndarray
    solver_path: str
    condition: float


def _rx_matrix(rx, plan):
    rx = np.asarray(rx)
    tt, m = plan.t, plan.dims.m
    if rx.shape == (tt, m):
        return rx
    if rx.shape == (tt * m,):
        return rx.reshape(tt, m)
    raise ValueError(f"receive block must be ({tt}, {m}) or flat length {tt * m}, got {rx.shape}")


def _solve(plan, nm, weights, rx):
    r = rx.T @ weights.conj()
    sol = nm.solve_right(r)
    path = "diagonal" if nm.is_diagonal else "dense"
    return EstimateResult(h_hat=vec(sol), solver_path=path, condition=nm.condition())


def ls_estimate(plan, rx, normal=None):
    """Plain least squares, ignoring hardware impairments.

    ``normal`` optionally supplies a prebuilt NormalMatrix — useful to reuse
    one across many solves, or to force the dense solver path.
    """
    nm = normal_equations(plan) if normal is None else normal
    return _solve(plan, nm, plan.xs, _rx_matrix(rx, plan))


def hi_estimate(plan, stats, rx, normal=None):
    """Impairment-aware least squares using the aggregated error moments.

    ``normal`` optionally supplies a prebuilt NormalMatrix (see ls_estimate).
    """
    nm = normal_equations(plan, stats) if normal is None else normal
    return _solve(plan, nm, stats.v, _rx_matrix(rx, plan))


def ls_mse(plan, sigma2):
    """Exact MSE of the plain LS estimate under ideal hardware: sigma2 * tr((X^H X)^{-1})."""
    nm = normal_equations(plan)
    return float(sigma2) * plan.dims.m * nm.trace_inverse()


def _inv_rows(nm, v):
    """Rows v_t^T -> rows (small^{-1} v_t)^T."""
    if nm.is_diagonal:
        return v / nm.diag[None, :]
    return hermitian_solve(nm.small, v.T).T


def hi_mse(plan, stats, h, sigma2, sigma_ra=None, variant="centered"):
    """Closed-form MSE of the HI-aware estimate for a given channel vector.

    ``sigma_ra`` is the (m x m) receiver-distortion covariance to charge per
    pilot instant (e.g. block-averaged); omit for none.  Two variants:

    * "centered": second moment of the receive block taken about its mean
      (a true error covariance; reduces to ls_mse under ideal hardware);
    * "moment": raw second moment (adds the squared norm of the expected
      estimate; reduces to ls_mse + ||h||^2 under ideal hardware).
    """
    if variant not in MSE_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}, expected one of {MSE_VARIANTS}")
    dims = plan.dims
    hm = channel_matrix(h, dims)
    nm = normal_equations(plan, stats)
    inv_v = _inv_rows(nm, stats.v)
    w = np.sum(np.abs(inv_v) ** 2, axis=1)  # ||small^{-1} v_t||^2 per instant
    tr_static = float(sigma2) * dims.m
    if sigma_ra is not None:
        tr_static += float(np.trace(np.asarray(sigma_ra)).real)
    hmc = hm.conj()
    total = 0.0
    for t in range(plan.t):
        corr = stats.correlation(t)
        quad = np.einsum("ij,ij->", hm @ corr, hmc).real
        mean_term = np.sum(np.abs(hm @ stats.mean[t]) ** 2)
        total += w[t] * (quad - mean_term + tr_static)
    if variant == "moment":
        total += float(np.sum(np.abs(expected_hi_estimate(plan, stats, h)) ** 2))
    return float(total)


def expected_hi_estimate(plan, stats, h):
    """E[h_hat] of the HI-aware estimator under the error model, given h.

    Averaging the receive block gives E[R] = H (sum_t v_t v_t^H), so the
    expected estimate is vec(H V S^{-1}); comparing against h quantifies the
    estimator's (small, deterministic) bias for this channel draw.
    """
    hm = channel_matrix(h, plan.dims)
    nm = normal_equations(plan, stats)
    return vec(nm.solve_right(hm @ stats.v_gram))
