"""Hardware-impairment models.

Three impairments ride on top of the ideal system:

* RIS phase noise: each reflection coefficient is rotated by an i.i.d. von
  Mises angle with concentration ``kappa_ris`` (mean direction 0).  The factor
  that survives averaging is the circular coherence  phi = I1(kappa)/I0(kappa).
* Transmitter distortion: additive Gaussian noise on each transmit antenna,
  variance proportional to the transmit power (sigma2_ta at the AP, sigma2_tu
  at the users).
* Receiver distortion at the AP: additive Gaussian noise whose per-antenna
  variance tracks the undistorted received power, sigma2_ra * diag(Gamma).
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.special

from .channels import complex_normal

__all__ = [
    "ImpairmentProfile",
    "bessel_ratio",
    "sample_phase_offsets",
    "sample_tx_distortion",
    "received_covariance",
    "receiver_distortion_cov",
    "GAMMA_VARIANTS",
]

GAMMA_VARIANTS = ("exact", "symmetrized", "literal")


@dataclass(frozen=True)
class ImpairmentProfile:
    """Severity of each hardware impairment.

    ``kappa_ris`` may be ``math.inf`` for a perfectly calibrated RIS (no phase
    noise at all); severities of exactly zero disable the respective distortion.
    """

    kappa_ris: float = math.inf
    sigma2_ta: float = 0.0
    sigma2_tu: float = 0.0
    sigma2_ra: float = 0.0

    def __post_init__(self):
        if self.kappa_ris < 0:
            raise ValueError("kappa_ris must be >= 0")
        for name in ("sigma2_ta", "sigma2_tu", "sigma2_ra"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @classmethod
    def ideal(cls):
        return cls()

    @property
    def is_ideal(self):
        return (
            math.isinf(self.kappa_ris)
            and self.sigma2_ta == 0.0
            and self.sigma2_tu == 0.0
            and self.sigma2_ra == 0.0
        )

    @property
    def phase_coherence(self):
        """Mean resultant length of the phase-noise distribution, in [0, 1]."""
        return bessel_ratio(self.kappa_ris)


def bessel_ratio(kappa):
    """I1(kappa) / I0(kappa), the circular coherence E[exp(j*theta)].

    Exactly 0 at kappa = 0 (uniform angles) and exactly 1 at kappa = inf;
    strictly increasing in between.  Evaluated with exponentially-scaled
    Bessel functions so large kappa stays stable.
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    if kappa == 0:
        return 0.0
    if math.isinf(kappa):
        return 1.0
    return float(scipy.special.i1e(kappa) / scipy.special.i0e(kappa))


def sample_phase_offsets(kappa, shape, rng):
    """Draw von Mises phase-noise angles (mean 0, concentration kappa).

    kappa = 0 yields uniform angles on (-pi, pi]; kappa = inf yields exact
    zeros.  Sampling uses the Best-Fisher rejection construction.
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    if math.isinf(kappa):
        return np.zeros(shape)
    return rng.vonmises(0.0, kappa, size=shape)


def sample_tx_distortion(var, shape, rng):
    """Additive transmitter-distortion draws: CN(0, var) per entry.

    ``var`` is the full distortion variance (severity times transmit power);
    var = 0 returns exact zeros while still consuming the same stream draws,
    so toggling a severity does not shift the other draws of a trial.
    """
    return complex_normal(rng, shape, 1.0) * np.sqrt(var)


def received_covariance(ch, ris_phases, p_a, p_u, profile, variant="exact"):
    """Covariance of the undistorted AP receive signal for one RIS configuration.

    Symbols are zero-mean with per-antenna power ``p_a`` (AP) and ``p_u``
    (users); the expectation also runs over the i.i.d. phase-noise angles.
    Three variants of the phase-noise average are offered:

    * ``"exact"``: E[P W P^H] = phi^2 W + (1 - phi^2) diag(diag(W)) for the
      random reflection matrix P — correct for any channel draw.
    * ``"symmetrized"``: the diag(diag(W)) term replaced by the identity,
      which matches "exact" in expectation when the RIS links have unit gain.
    * ``"literal"``: like "symmetrized" but with the user-link quadratic term
      written as h_ua @ g_a^H — kept only for comparison; its output is not
      Hermitian, cannot drive a distortion covariance, and the mismatched
      product only exists when k == m (rejected otherwise).

    Returns an m x m matrix (Hermitian PSD for "exact"/"symmetrized").
    """
    if variant not in GAMMA_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}, expected one of {GAMMA_VARIANTS}")
    phi = np.asarray(ris_phases)
    coh = profile.phase_coherence
    r = ch.h_ra * phi  # h_ra @ diag(ris_phases)
    casc_a = r @ ch.h_ar  # AP cascade through the RIS
    casc_u = r @ ch.h_ur  # user cascade

    def quad(w):
        # E over phase noise of (r P~) W (r P~)^H with W = h h^H of the feed link
        if variant == "exact":
            spread = np.diag(np.real(np.diag(w)))
        else:
            spread = np.eye(w.shape[0])
        return r @ (coh**2 * w + (1.0 - coh**2) * spread) @ r.conj().T

    ap_term = (
        ch.g_a @ ch.g_a.conj().T
        + coh * (ch.g_a @ casc_a.conj().T + casc_a @ ch.g_a.conj().T)
        + quad(ch.h_ar @ ch.h_ar.conj().T)
    )
    if variant == "literal":
        if ch.h_ua.shape[1] != ch.g_a.shape[0]:
            raise ValueError(
                "literal variant writes the user-link term as h_ua @ g_a^H, "
                f"which needs k == m (got k={ch.h_ua.shape[1]}, m={ch.g_a.shape[0]})"
            )
        ue_direct = ch.h_ua @ ch.g_a.conj().T
    else:
        ue_direct = ch.h_ua @ ch.h_ua.conj().T
    ue_term = (
        ue_direct
        + coh * (ch.h_ua @ casc_u.conj().T + casc_u @ ch.h_ua.conj().T)
        + quad(ch.h_ur @ ch.h_ur.conj().T)
    )
    return p_a * ap_term + p_u * ue_term


def receiver_distortion_cov(gamma, sigma2_ra):
    """Receiver-distortion covariance sigma2_ra * diag(diag(Gamma)).

    Rejects a ``gamma`` whose diagonal is not real nonnegative (beyond a small
    tolerance), since that cannot be a covariance diagonal.
    """
    gamma = np.asarray(gamma)
    d = np.diag(gamma)
    scale = max(np.abs(d).max(), 1.0)
    if np.abs(d.imag).max() > 1e-10 * scale:
        raise ValueError("gamma diagonal has a non-real component; not a valid power")
    if d.real.min() < -1e-10 * scale:
        raise ValueError("gamma diagonal has a negative entry; not a valid power")
    return sigma2_ra * np.diag(np.clip(d.real, 0.0, None))
