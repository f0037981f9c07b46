"""Brute-force sampling oracles shared by the unit and acceptance tests.

These recompute moments straight from the definitions — no reuse of the
closed forms under test.
"""

import numpy as np


def sample_error_moments(x_a, x_u, phi, kappa, var_ta, var_tu, draws, rng, chunk=20000):
    """Mean and raw second moment of the per-instant regressor error.

    The error is built literally: distorted pilots pass through phase-noisy
    reflections, and the composite ideal pilot is subtracted.
    """
    m, k, n = len(x_a), len(x_u), len(phi)
    d = (m + k) * (n + 1)
    total = np.zeros(d, dtype=complex)
    outer = np.zeros((d, d), dtype=complex)
    left = draws
    while left > 0:
        b = min(chunk, left)
        left -= b
        w = np.exp(1j * rng.vonmises(0.0, kappa, (b, n)))
        d_a = (rng.standard_normal((b, m)) + 1j * rng.standard_normal((b, m))) * np.sqrt(var_ta / 2)
        d_u = (rng.standard_normal((b, k)) + 1j * rng.standard_normal((b, k))) * np.sqrt(var_tu / 2)
        ref = w * phi
        blk2 = (ref[:, :, None] * (x_a + d_a)[:, None, :]).reshape(b, -1)
        blk2 -= np.kron(phi, x_a)[None, :]
        blk4 = (ref[:, :, None] * (x_u + d_u)[:, None, :]).reshape(b, -1)
        blk4 -= np.kron(phi, x_u)[None, :]
        e = np.concatenate([d_a, blk2, d_u, blk4], axis=1)
        total += e.sum(axis=0)
        outer += e.T @ e.conj()
    return total / draws, outer / draws


def sample_rx_covariance(ch, phi, p_a, p_u, kappa, draws, rng, chunk=2000):
    """Second moment of the undistorted receive signal over symbols and phases.

    Unit-power circular Gaussian symbols scaled to p_a / p_u; fresh phase
    noise per draw; no transceiver distortion, no thermal noise.
    """
    m = ch.g_a.shape[0]
    k = ch.h_ua.shape[1]
    n = len(phi)
    acc = np.zeros((m, m), dtype=complex)
    left = draws
    while left > 0:
        b = min(chunk, left)
        left -= b
        x_a = (rng.standard_normal((b, m)) + 1j * rng.standard_normal((b, m))) * np.sqrt(p_a / 2)
        x_u = (rng.standard_normal((b, k)) + 1j * rng.standard_normal((b, k))) * np.sqrt(p_u / 2)
        pn = np.exp(1j * rng.vonmises(0.0, kappa, (b, n))) * phi
        y = x_a @ ch.g_a.T + x_u @ ch.h_ua.T
        y += np.einsum("mn,bn,nj,bj->bm", ch.h_ra, pn, ch.h_ar, x_a, optimize=True)
        y += np.einsum("mn,bn,nj,bj->bm", ch.h_ra, pn, ch.h_ur, x_u, optimize=True)
        acc += y.T @ y.conj()
    return acc / draws
