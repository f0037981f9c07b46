"""Training-phase design: pilot sequences and the RIS configuration schedule.

A training plan spans ``t = l * (n + 1)`` pilot instants, organized as n+1
blocks.  Within block b the RIS holds one configuration (row b of a DFT-based
schedule) while the AP and the users cycle once through the l columns of their
pilot bases ``s_a`` (m x l) and ``s_u`` (k x l), scaled by sqrt(p_a) and
sqrt(p_u).

Three pilot schemes are built in (``scheme`` argument):

1. full duplex: AP and users transmit together, s_a = [Q_m, Q_m],
   s_u = [P, -P], l = 2m;
2. half duplex: AP first, users second, s_a = [Q_m, 0], s_u = [0, P], l = 2m;
3. half duplex, short: s_a = [Q_m, 0], s_u = [0, Q_k], l = m + k.

Q_x is the unitary x-point DFT matrix and P packs floor(m/k) copies of Q_k
plus a zero-padded Q_(m mod k) tail so that the users fill all m slots.

Composite pilots x_t = [x_a; phi_t kron x_a; x_u; phi_t kron x_u] satisfy,
for every scheme: unit-modulus RIS entries, sum_t phi_t = 0,
sum_t phi_t phi_t^H = t*I, diagonal pilot grams and zero AP/user cross-gram —
which together make the stacked regressor's normal matrix diagonal.
"""

import hashlib
from functools import cached_property

import numpy as np

from .channels import SystemDims
from .linalg import dft_matrix

__all__ = [
    "TrainingPlan",
    "OrthogonalityReport",
    "build_plan",
    "ue_pilot_basis",
    "ris_phase_schedule",
    "assemble_regressor",
    "verify_orthogonality",
    "training_energy",
    "equalize_energy",
    "plan_fingerprint",
    "plan_summary",
]

SCHEMES = (1, 2, 3)


def ue_pilot_basis(m, k):
    """k x m orthogonal-row user pilot basis.

    Concatenates floor(m/k) unitary k-DFT blocks and, when k does not divide
    m, a zero-padded (m mod k)-DFT tail.  Rows are orthogonal with squared
    norms floor(m/k) + 1 (first m mod k rows) and floor(m/k) (the rest).
    """
    if not 1 <= k <= m:
        raise ValueError(f"user basis needs 1 <= k <= m, got k={k}, m={m}")
    q, r = divmod(m, k)
    parts = [dft_matrix(k, normalized=True)] * q
    if r:
        tail = np.zeros((k, r), dtype=complex)
        tail[:r, :] = dft_matrix(r, normalized=True)
        parts.append(tail)
    return np.hstack(parts)


def ris_phase_schedule(n):
    """Per-block RIS phases, shape (n+1, n).

    Row b holds rows 2..n+1 of column b of the unnormalized (n+1)-point DFT
    matrix, so that prepending the implicit direct-path 1 gives a full set of
    orthogonal columns: the blocks satisfy sum_b phi_b = 0 and
    sum_b phi_b phi_b^H = (n+1) I_n.
    """
    f = dft_matrix(n + 1, normalized=False)
    return f[1:, :].T.copy()


class TrainingPlan:
    """Pilot bases, powers and RIS schedule for one training phase."""

    def __init__(self, dims, s_a, s_u, p_a, p_u, phi_blocks, scheme=None):
        s_a = np.asarray(s_a, dtype=complex)
        s_u = np.asarray(s_u, dtype=complex)
        phi_blocks = np.asarray(phi_blocks, dtype=complex)
        if s_a.shape[0] != dims.m:
            raise ValueError(f"s_a must have {dims.m} rows, got {s_a.shape}")
        if s_u.shape[0] != dims.k:
            raise ValueError(f"s_u must have {dims.k} rows, got {s_u.shape}")
        if s_a.shape[1] != s_u.shape[1]:
            raise ValueError("s_a and s_u must have the same number of columns")
        if phi_blocks.shape != (dims.n + 1, dims.n):
            raise ValueError(
                f"phi_blocks must be (n+1, n) = {(dims.n + 1, dims.n)}, got {phi_blocks.shape}"
            )
        if p_a <= 0 or p_u <= 0:
            raise ValueError("pilot powers must be positive")
        self.dims = dims
        self.s_a = s_a
        self.s_u = s_u
        self.p_a = float(p_a)
        self.p_u = float(p_u)
        self.phi_blocks = phi_blocks
        self.scheme = scheme

    @property
    def l(self):
        """Pilots per RIS block."""
        return self.s_a.shape[1]

    @property
    def t(self):
        """Total training length l * (n + 1)."""
        return self.l * (self.dims.n + 1)

    @cached_property
    def ap_pilots(self):
        """(t, m) AP pilot vectors, power included."""
        return np.sqrt(self.p_a) * np.tile(self.s_a.T, (self.dims.n + 1, 1))

    @cached_property
    def ue_pilots(self):
        """(t, k) user pilot vectors, power included."""
        return np.sqrt(self.p_u) * np.tile(self.s_u.T, (self.dims.n + 1, 1))

    @cached_property
    def ris_per_t(self):
        """(t, n) RIS phase vector active at each pilot instant."""
        return np.repeat(self.phi_blocks, self.l, axis=0)

    @cached_property
    def xs(self):
        """(t, x_dim) composite pilot vectors [x_a; phi kron x_a; x_u; phi kron x_u]."""
        tt, m, k, n = self.t, self.dims.m, self.dims.k, self.dims.n
        xa, xu, ph = self.ap_pilots, self.ue_pilots, self.ris_per_t
        out = np.empty((tt, self.dims.x_dim), dtype=complex)
        out[:, :m] = xa
        out[:, m : m + n * m] = np.einsum("tn,tm->tnm", ph, xa).reshape(tt, n * m)
        out[:, m + n * m : m + n * m + k] = xu
        out[:, m + n * m + k :] = np.einsum("tn,tk->tnk", ph, xu).reshape(tt, n * k)
        return out

    @cached_property
    def gram(self):
        """sum_t x_t x_t^H of the composite pilots (x_dim square)."""
        return self.xs.T @ self.xs.conj()


def build_plan(dims, scheme, p_a=1.0, p_u=1.0):
    """Construct the training plan for one of the built-in pilot schemes."""
    m, k = dims.m, dims.k
    q_m = dft_matrix(m, normalized=True)
    if scheme == 1:
        p = ue_pilot_basis(m, k)
        s_a = np.hstack([q_m, q_m])
        s_u = np.hstack([p, -p])
    elif scheme == 2:
        p = ue_pilot_basis(m, k)
        s_a = np.hstack([q_m, np.zeros((m, m))])
        s_u = np.hstack([np.zeros((k, m)), p])
    elif scheme == 3:
        s_a = np.hstack([q_m, np.zeros((m, k))])
        s_u = np.hstack([np.zeros((k, m)), dft_matrix(k, normalized=True)])
    else:
        raise ValueError(f"unknown scheme {scheme!r}, expected one of {SCHEMES}")
    return TrainingPlan(dims, s_a, s_u, p_a, p_u, ris_phase_schedule(dims.n), scheme=scheme)


def assemble_regressor(plan):
    """Materialize the dense (t*m, h_dim) regressor with row blocks x_t^T kron I_m.

    Only sensible at small dimensions; estimation itself never builds this.
    Requires t >= x_dim so the result can have full column rank.
    """
    dims = plan.dims
    if plan.t < dims.x_dim:
        raise ValueError(
            f"training too short for full column rank: t={plan.t} < x_dim={dims.x_dim}"
        )
    eye = np.eye(dims.m)
    return np.vstack([np.kron(x[None, :], eye) for x in plan.xs])


class OrthogonalityReport:
    """Residuals of the five training-plan conditions plus normal-matrix shape."""

    def __init__(self, plan, tol=1e-9):
        dims = plan.dims
        ph = plan.ris_per_t
        self.tol = tol
        self.unit_modulus_dev = float(np.abs(np.abs(ph) - 1.0).max())
        self.phase_sum_dev = float(np.abs(ph.sum(axis=0)).max())
        gram_phi = ph.T @ ph.conj()
        self.phase_gram_dev = float(
            np.abs(gram_phi - plan.t * np.eye(dims.n)).max() / plan.t
        )
        ga = plan.ap_pilots.T @ plan.ap_pilots.conj()
        gu = plan.ue_pilots.T @ plan.ue_pilots.conj()
        cross = plan.ap_pilots.T @ plan.ue_pilots.conj()
        scale_a = max(np.abs(np.diag(ga)).max(), 1e-30)
        scale_u = max(np.abs(np.diag(gu)).max(), 1e-30)
        self.ap_gram_offdiag = float(_offdiag_max(ga) / scale_a)
        self.ue_gram_offdiag = float(_offdiag_max(gu) / scale_u)
        self.cross_gram_dev = float(np.abs(cross).max() / np.sqrt(scale_a * scale_u))
        big = plan.gram
        self.normal_offdiag = float(_offdiag_max(big) / max(np.abs(np.diag(big)).max(), 1e-30))
        self.normal_diagonal = self.normal_offdiag < tol

    @property
    def ok(self):
        return all(
            dev < self.tol
            for dev in (
                self.unit_modulus_dev,
                self.phase_sum_dev,
                self.phase_gram_dev,
                self.ap_gram_offdiag,
                self.ue_gram_offdiag,
                self.cross_gram_dev,
            )
        )

    def describe(self):
        lines = [
            f"unit-modulus RIS entries      max dev {self.unit_modulus_dev:.3e}",
            f"zero phase sum                max dev {self.phase_sum_dev:.3e}",
            f"phase gram = t*I              max dev {self.phase_gram_dev:.3e} (rel)",
            f"AP pilot gram diagonal        max off {self.ap_gram_offdiag:.3e} (rel)",
            f"UE pilot gram diagonal        max off {self.ue_gram_offdiag:.3e} (rel)",
            f"AP/UE cross gram zero         max dev {self.cross_gram_dev:.3e} (rel)",
            f"composite normal matrix       max off {self.normal_offdiag:.3e} (rel)"
            + ("  [diagonal]" if self.normal_diagonal else "  [NOT diagonal]"),
            "conditions " + ("all satisfied" if self.ok else "VIOLATED"),
        ]
        return "\n".join(lines)


def _offdiag_max(a):
    b = a.copy()
    np.fill_diagonal(b, 0.0)
    return np.abs(b).max() if b.size else 0.0


def verify_orthogonality(plan, tol=1e-9):
    """Check the five design conditions on a plan; see OrthogonalityReport."""
    return OrthogonalityReport(plan, tol=tol)


def training_energy(plan):
    """Total transmitted pilot energy (e_a, e_u), measured from the pilots.

    Equals p * (n+1) * trace(s s^H) for each side.
    """
    e_a = float(np.sum(np.abs(plan.ap_pilots) ** 2))
    e_u = float(np.sum(np.abs(plan.ue_pilots) ** 2))
    return e_a, e_u


def equalize_energy(reference, target):
    """Powers (p_a, p_u) that give ``target``'s bases the energies of ``reference``.

    Rebuild the target plan with these powers to make the scheme comparison
    energy-fair.  Rejects a target with a zero-energy pilot basis.
    """
    ref_a, ref_u = training_energy(reference)
    blocks = target.dims.n + 1
    tr_a = float(np.sum(np.abs(target.s_a) ** 2))
    tr_u = float(np.sum(np.abs(target.s_u) ** 2))
    if tr_a <= 0 or tr_u <= 0:
        raise ValueError("target plan has a zero-energy pilot basis")
    return ref_a / (blocks * tr_a), ref_u / (blocks * tr_u)


def plan_fingerprint(plan):
    """Hex digest identifying the full plan content (bases, powers, schedule)."""
    blob = hashlib.sha256()
    dims = plan.dims
    blob.update(f"{dims.m},{dims.k},{dims.n},{plan.l},{plan.scheme}".encode())
    blob.update(np.ascontiguousarray(plan.s_a).tobytes())
    blob.update(np.ascontiguousarray(plan.s_u).tobytes())
    blob.update(np.float64(plan.p_a).tobytes())
    blob.update(np.float64(plan.p_u).tobytes())
    blob.update(np.ascontiguousarray(plan.phi_blocks).tobytes())
    return blob.hexdigest()


def plan_summary(plan):
    """Human-readable provenance dump of a plan."""
    dims = plan.dims
    e_a, e_u = training_energy(plan)
    return "\n".join(
        [
            f"scheme        = {plan.scheme if plan.scheme is not None else 'custom'}",
            f"dims          = m={dims.m} k={dims.k} n={dims.n}",
            f"pilots/block  = {plan.l}",
            f"length        = {plan.t}",
            f"powers        = p_a={plan.p_a:.10g} p_u={plan.p_u:.10g}",
            f"energy        = e_a={e_a:.10g} e_u={e_u:.10g}",
            f"fingerprint   = {plan_fingerprint(plan)}",
        ]
    )
