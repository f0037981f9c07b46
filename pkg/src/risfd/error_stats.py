"""First and second moments of the training-phase model error.

With hardware impairments the received pilot block obeys a linear model in
the stacked channel vector whose regressor is perturbed: row block t uses
x_t + e_t instead of the composite pilot x_t, where (blocks sized m, n*m, k,
n*k)

    e_t = [ d_ta ;
            (phi_t o w_t - phi_t) kron x_a + (phi_t o w_t) kron d_ta ;
            d_tu ;
            (phi_t o w_t - phi_t) kron x_u + (phi_t o w_t) kron d_tu ]

with w_t the vector of unit-modulus RIS phase-noise factors, ``o`` the
elementwise product, and d_ta / d_tu the transmit-distortion vectors.  The
moments below follow from E[w] = c (the phase coherence), E[w w^H] having
unit diagonal and c^2 off the diagonal, and the distortions being independent
zero-mean Gaussians.

Everything the estimators need is carried in a compact factored form: the
aggregate normal matrix over the whole training phase equals
(small factor)* kron I_m, so only x_dim-sized matrices are ever stored.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .linalg import hermitian_solve

__all__ = [
    "error_mean",
    "error_correlation",
    "TrainingErrorStats",
    "aggregate_error_stats",
    "NormalMatrix",
    "normal_equations",
    "DIAG_DETECT_RTOL",
]

DIAG_DETECT_RTOL = 1e-9


def _phase_moments(phi, coh, n):
    """M1 = E[(w-c)(w-c)^H]-weighted and M2 = E[w w^H]-weighted phase matrices.

    M1 = (c^2 - 2c + 1) phi phi^H + (1 - c^2) I   (diagonal entries 2 - 2c)
    M2 = c^2 phi phi^H + (1 - c^2) I               (unit diagonal)

    where phi is the deterministic per-block RIS phase vector.
    """
    outer = np.outer(phi, phi.conj())
    eye = np.eye(n)
    m1 = (coh**2 - 2.0 * coh + 1.0) * outer + (1.0 - coh**2) * eye
    m2 = coh**2 * outer + (1.0 - coh**2) * eye
    return m1, m2


def error_mean(x_a, x_u, phi, coh):
    """E[e_t] for one pilot instant: (coh - 1) on the two RIS-coupled blocks."""
    m, k, n = len(x_a), len(x_u), len(phi)
    out = np.zeros((m + k) * (n + 1), dtype=complex)
    out[m : m + n * m] = (coh - 1.0) * np.kron(phi, x_a)
    out[m + n * m + k :] = (coh - 1.0) * np.kron(phi, x_u)
    return out


def error_correlation(x_a, x_u, phi, coh, var_ta, var_tu):
    """E[e_t e_t^H] for one pilot instant (Hermitian, x_dim square)."""
    m, k, n = len(x_a), len(x_u), len(phi)
    d = (m + k) * (n + 1)
    o2 = m
    o3 = m + n * m
    o4 = o3 + k
    m1, m2 = _phase_moments(phi, coh, n)
    sig_a = var_ta * np.eye(m)
    sig_u = var_tu * np.eye(k)
    c = np.zeros((d, d), dtype=complex)
    c[:o2, :o2] = sig_a
    c[:o2, o2:o3] = coh * np.kron(phi.conj()[None, :], sig_a)
    c[o2:o3, :o2] = c[:o2, o2:o3].conj().T
    c[o2:o3, o2:o3] = np.kron(m1, np.outer(x_a, x_a.conj())) + np.kron(m2, sig_a)
    c[o2:o3, o4:] = np.kron(m1, np.outer(x_a, x_u.conj()))
    c[o4:, o2:o3] = np.kron(m1, np.outer(x_u, x_a.conj()))
    c[o3:o4, o3:o4] = sig_u
    c[o3:o4, o4:] = coh * np.kron(phi.conj()[None, :], sig_u)
    c[o4:, o3:o4] = c[o3:o4, o4:].conj().T
    c[o4:, o4:] = np.kron(m1, np.outer(x_u, x_u.conj())) + np.kron(m2, sig_u)
    return c


class TrainingErrorStats:
    """Aggregated error moments for a whole (plan, impairment profile) pair.

    The heavy aggregates are cached: per-instant means (t, x_dim), the summed
    correlation, the cross term sum_t x_t E[e_t]^H and the small normal factor

        small = sum_t [ x x^H + x e^H + e x^H + E[e e^H] ]

    whose conjugate kron I_m is the full normal matrix of the HI-aware
    estimator.  Per-block structure keeps everything closed-form: pilots
    repeat the same bases every block, so the sums collapse over blocks.
    """

    def __init__(self, plan, profile):
        self.plan = plan
        self.profile = profile
        self.coh = profile.phase_coherence
        self.var_ta = profile.sigma2_ta * plan.p_a
        self.var_tu = profile.sigma2_tu * plan.p_u

    @cached_property
    def mean(self):
        """(t, x_dim) array of E[e_t]."""
        plan = self.plan
        m, k, n = plan.dims.m, plan.dims.k, plan.dims.n
        tt = plan.t
        ph, xa, xu = plan.ris_per_t, plan.ap_pilots, plan.ue_pilots
        out = np.zeros((tt, plan.dims.x_dim), dtype=complex)
        scale = self.coh - 1.0
        out[:, m : m + n * m] = scale * np.einsum("tn,tm->tnm", ph, xa).reshape(tt, n * m)
        out[:, m + n * m + k :] = scale * np.einsum("tn,tk->tnk", ph, xu).reshape(tt, n * k)
        return out

    @cached_property
    def v(self):
        """(t, x_dim) effective mean regressor rows x_t + E[e_t]."""
        return self.plan.xs + self.mean

    def correlation(self, t):
        """E[e_t e_t^H] for pilot instant t."""
        plan = self.plan
        return error_correlation(
            plan.ap_pilots[t],
            plan.ue_pilots[t],
            plan.ris_per_t[t],
            self.coh,
            self.var_ta,
            self.var_tu,
        )

    @cached_property
    def sum_correlation(self):
        """sum_t E[e_t e_t^H], collapsed over the block structure."""
        plan = self.plan
        dims = plan.dims
        m, k, n = dims.m, dims.k, dims.n
        coh = self.coh
        o2, o3 = m, m + n * m
        o4 = o3 + k
        blocks = plan.phi_blocks
        l = plan.l
        # per-block pilot grams are identical, the phase sums are closed form
        ga = plan.p_a * (plan.s_a @ plan.s_a.conj().T)
        gu = plan.p_u * (plan.s_u @ plan.s_u.conj().T)
        gau = np.sqrt(plan.p_a * plan.p_u) * (plan.s_a @ plan.s_u.conj().T)
        sum_phi = blocks.sum(axis=0)
        sum_pp = blocks.T @ blocks.conj()
        eye_n = (n + 1) * np.eye(n)
        m1_sum = (coh**2 - 2.0 * coh + 1.0) * sum_pp + (1.0 - coh**2) * eye_n
        m2_sum = coh**2 * sum_pp + (1.0 - coh**2) * eye_n
        sig_a = self.var_ta * np.eye(m)
        sig_u = self.var_tu * np.eye(k)
        c = np.zeros((dims.x_dim, dims.x_dim), dtype=complex)
        c[:o2, :o2] = plan.t * sig_a
        c[:o2, o2:o3] = l * coh * np.kron(sum_phi.conj()[None, :], sig_a)
        c[o2:o3, :o2] = c[:o2, o2:o3].conj().T
        c[o2:o3, o2:o3] = np.kron(m1_sum, ga) + l * np.kron(m2_sum, sig_a)
        c[o2:o3, o4:] = np.kron(m1_sum, gau)
        c[o4:, o2:o3] = c[o2:o3, o4:].conj().T
        c[o3:o4, o3:o4] = plan.t * sig_u
        c[o3:o4, o4:] = l * coh * np.kron(sum_phi.conj()[None, :], sig_u)
        c[o4:, o3:o4] = c[o3:o4, o4:].conj().T
        c[o4:, o4:] = np.kron(m1_sum, gu) + l * np.kron(m2_sum, sig_u)
        return c

    @cached_property
    def sum_x_mean(self):
        """sum_t x_t E[e_t]^H."""
        return self.plan.xs.T @ self.mean.conj()

    @cached_property
    def normal_factor(self):
        """Small factor of the HI-aware normal matrix (x_dim square, Hermitian)."""
        cross = self.sum_x_mean
        return self.plan.gram + cross + cross.conj().T + self.sum_correlation

    @cached_property
    def v_gram(self):
        """sum_t v_t v_t^H of the mean regressor rows."""
        return self.v.T @ self.v.conj()

    # -- dense views, for oracle tests at small dimensions only --

    def mean_regressor_dense(self):
        """E[E], shape (t*m, h_dim): row blocks E[e_t]^T kron I_m."""
        eye = np.eye(self.plan.dims.m)
        return np.vstack([np.kron(e[None, :], eye) for e in self.mean])

    def corr_regressor_dense(self):
        """E[E^H E] = (sum_t E[e_t e_t^H])* kron I_m."""
        return np.kron(self.sum_correlation.conj(), np.eye(self.plan.dims.m))


def aggregate_error_stats(plan, profile):
    """Build the cached error-statistics aggregate for a plan/profile pair."""
    return TrainingErrorStats(plan, profile)


@dataclass
class NormalMatrix:
    """Normal matrix in factored form: full matrix = small* kron I_m."""

    small: np.ndarray
    m: int
    is_diagonal: bool
    diag: np.ndarray | None

    @classmethod
    def from_small(cls, small, m, rtol=DIAG_DETECT_RTOL):
        small = np.asarray(small)
        scale = np.abs(np.diag(small)).max()
        herm = np.abs(small - small.conj().T).max()
        if scale == 0 or herm > 1e-10 * max(scale, 1e-30):
            raise ValueError(
                f"normal factor is not Hermitian (defect {herm:.3e} vs scale {scale:.3e})"
            )
        off = small.copy()
        np.fill_diagonal(off, 0.0)
        is_diag = bool(np.abs(off).max() <= rtol * scale)
        diag = np.diag(small).real.copy() if is_diag else None
        return cls(small=small, m=m, is_diagonal=is_diag, diag=diag)

    def solve_right(self, r):
        """Return r @ small^{-1} for a stack of rows r (shape (m, x_dim)).

        Uses the cheap elementwise path when the factor is diagonal; otherwise
        one Hermitian factorization.  (Because the full matrix is
        small* kron I_m, this is exactly the full-size solve applied to the
        matricized estimate.)
        """
        if self.is_diagonal:
            if self.diag.min() <= 0:
                raise np.linalg.LinAlgError("diagonal normal matrix has a nonpositive entry")
            return r / self.diag[None, :]
        return hermitian_solve(self.small, r.conj().T).conj().T

    def trace_inverse(self):
        """trace(small^{-1}), real part (exact for the Hermitian factor)."""
        if self.is_diagonal:
            if self.diag.min() <= 0:
                raise np.linalg.LinAlgError("diagonal normal matrix has a nonpositive entry")
            return float(np.sum(1.0 / self.diag))
        inv = hermitian_solve(self.small, np.eye(self.small.shape[0]))
        return float(np.trace(inv).real)

    def condition(self):
        """2-norm condition estimate of the factor."""
        if self.is_diagonal:
            lo = self.diag.min()
            return float(self.diag.max() / lo) if lo > 0 else float("inf")
        return float(np.linalg.cond(self.small))

    def dense(self):
        """Materialize the full (h_dim square) normal matrix; tests only."""
        return np.kron(self.small.conj(), np.eye(self.m))


def normal_equations(plan, stats=None):
    """Normal matrix of the chosen estimator in factored form.

    Without ``stats`` this is the plain pilot gram (ideal-hardware LS);
    with ``stats`` the error moments are folded in (HI-aware estimator).
    Diagonality is detected at relative tolerance DIAG_DETECT_RTOL, in which
    case solves run on the diagonal without any dense factorization.
    """
    small = plan.gram if stats is None else stats.normal_factor
    return NormalMatrix.from_small(small, plan.dims.m)
