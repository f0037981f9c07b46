"""System dimensions, link geometry and channel generation.

The node layout is an access point (AP) with ``m`` antennas operating in full
duplex, ``k`` single-antenna uplink users and a reconfigurable intelligent
surface (RIS) with ``n`` passive elements.  Five block-fading channels matter:

===========  =========  ====================================
name         shape      link
===========  =========  ====================================
``g_a``      (m, m)     AP tx -> AP rx (self-interference)
``h_ar``     (n, m)     AP -> RIS
``h_ra``     (m, n)     RIS -> AP
``h_ua``     (m, k)     users -> AP (direct)
``h_ur``     (n, k)     users -> RIS
===========  =========  ====================================

All entries are i.i.d. circularly-symmetric complex Gaussian with per-entry
variance set by the link's distance-based gain; the self-interference channel
has unit variance.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import khatri_rao, unvec, vec

__all__ = [
    "SystemDims",
    "Geometry",
    "ChannelSet",
    "path_gain",
    "complex_normal",
    "sample_channels",
    "stack_channels",
    "channel_matrix",
    "save_channels",
    "load_channels",
]


@dataclass(frozen=True)
class SystemDims:
    """Antenna/user/element counts (m AP antennas, k users, n RIS elements)."""

    m: int
    k: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.k < 1 or self.n < 1:
            raise ValueError(f"dimensions must be positive, got {self}")

    @property
    def x_dim(self):
        """Length of one composite pilot vector: (m + k) * (n + 1)."""
        return (self.m + self.k) * (self.n + 1)

    @property
    def h_dim(self):
        """Length of the stacked channel parameter vector: m * x_dim."""
        return self.m * self.x_dim


@dataclass(frozen=True)
class Geometry:
    """Link distances (meters) and path-loss exponents."""

    d_ar: float = 20.0
    d_ur: float = 20.0
    d_au: float = 30.0
    ple_ar: float = 2.1
    ple_ur: float = 4.2
    ple_au: float = 2.2

    @classmethod
    def reference(cls):
        """Reference deployment: AP-RIS 20 m, UE-RIS 20 m, AP-UE 30 m."""
        return cls()

    @classmethod
    def unit(cls):
        """All links at 1 m, i.e. unit gain on every channel."""
        return cls(d_ar=1.0, d_ur=1.0, d_au=1.0)

    def gains(self):
        """Per-entry variances (beta_ar, beta_ur, beta_au)."""
        return (
            path_gain(self.d_ar, self.ple_ar),
            path_gain(self.d_ur, self.ple_ur),
            path_gain(self.d_au, self.ple_au),
        )


def path_gain(distance, exponent):
    """Distance-based power gain d**(-exponent), equal to 1 at d = 1 m."""
    if distance <= 0:
        raise ValueError(f"distance must be positive, got {distance}")
    return float(distance) ** (-float(exponent))


@dataclass(frozen=True)
class ChannelSet:
    """One realization of the five block-fading channels."""

    g_a: np.ndarray
    h_ar: np.ndarray
    h_ra: np.ndarray
    h_ua: np.ndarray
    h_ur: np.ndarray

    @property
    def dims(self):
        m, n = self.h_ra.shape
        return SystemDims(m=m, k=self.h_ua.shape[1], n=n)


def complex_normal(rng, shape, var=1.0):
    """Circularly-symmetric complex Gaussian draws with per-entry variance ``var``."""
    if var < 0:
        raise ValueError(f"variance must be nonnegative, got {var}")
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z * np.sqrt(var / 2.0)


def sample_channels(dims, geo, rng):
    """Draw one independent realization of all five channels.

    ``rng`` is split into one substream per channel, so toggling or reusing a
    single channel does not perturb the draws of the others.
    """
    beta_ar, beta_ur, beta_au = geo.gains()
    r_ga, r_ar, r_ra, r_ua, r_ur = rng.spawn(5)
    return ChannelSet(
        g_a=complex_normal(r_ga, (dims.m, dims.m), 1.0),
        h_ar=complex_normal(r_ar, (dims.n, dims.m), beta_ar),
        h_ra=complex_normal(r_ra, (dims.m, dims.n), beta_ar),
        h_ua=complex_normal(r_ua, (dims.m, dims.k), beta_au),
        h_ur=complex_normal(r_ur, (dims.n, dims.k), beta_ur),
    )


def stack_channels(ch):
    """Stack all unknowns into the parameter vector the estimators recover.

    Layout (lengths m*m, m*m*n, m*k, m*k*n):

        [ vec(g_a) ;
          vec(h_ar^T *col* h_ra) ;      AP cascade through the RIS
          vec(h_ua) ;
          vec(h_ur^T *col* h_ra) ]      user cascade through the RIS

    where ``*col*`` is the column-wise Kronecker product: column n of the AP
    cascade block is (row n of h_ar) kron (column n of h_ra).
    """
    return np.concatenate(
        [
            vec(ch.g_a),
            vec(khatri_rao(ch.h_ar.T, ch.h_ra)),
            vec(ch.h_ua),
            vec(khatri_rao(ch.h_ur.T, ch.h_ra)),
        ]
    )


def channel_matrix(h, dims):
    """Reshape the stacked parameter vector into its m x (m+k)(n+1) matrix form.

    The matrix form satisfies  y = channel_matrix(h) @ x  for a composite pilot
    x = [x_a; phi kron x_a; x_u; phi kron x_u] under ideal hardware.
    """
    h = np.asarray(h)
    if h.size != dims.h_dim:
        raise ValueError(f"expected parameter vector of length {dims.h_dim}, got {h.size}")
    return unvec(h, dims.m)


def save_channels(path, ch):
    """Persist a :class:`ChannelSet` to an .npz archive (keys = field names)."""
    np.savez(path, g_a=ch.g_a, h_ar=ch.h_ar, h_ra=ch.h_ra, h_ua=ch.h_ua, h_ur=ch.h_ur)


def load_channels(path):
    with np.load(path) as data:
        return ChannelSet(
            g_a=data["g_a"],
            h_ar=data["h_ar"],
            h_ra=data["h_ra"],
            h_ua=data["h_ua"],
            h_ur=data["h_ur"],
        )
