"""Conversions between the real circle basis and complex exponentials.

Real coefficients a_j live in the basis of spectral_basis (phi_0 const,
phi_{2k-1} ~ sin, phi_{2k} ~ cos).  Complex coefficients c_n, n = -k..k,
are taken against the orthonormal exponentials e^{i n theta}/sqrt(2 pi) and
stored at array position n + k.  Both bases are orthonormal, so sums of
squares agree on both sides.
"""

from __future__ import annotations

import numpy as np

_R2 = np.sqrt(2.0)


def n_modes(k_max: int) -> int:
    return 2 * k_max + 1


def wave_numbers(k_max: int) -> np.ndarray:
    return np.arange(-k_max, k_max + 1)


def real_to_complex(a: np.ndarray) -> np.ndarray:
    """Real basis coefficients (..., 2k+1) -> complex exponential coefficients (..., 2k+1)."""
    a = np.asarray(a, dtype=float)
    k = (a.shape[-1] - 1) // 2
    c = np.zeros(a.shape[:-1] + (2 * k + 1,), dtype=complex)
    c[..., k] = a[..., 0]
    if k:
        s = a[..., 1::2]
        co = a[..., 2::2]
        c[..., k + 1:] = (co - 1j * s) / _R2
        c[..., :k] = ((co + 1j * s) / _R2)[..., ::-1]
    return c


def complex_to_real(c: np.ndarray, k_max: int) -> np.ndarray:
    """Project complex coefficients (centred, any odd length) onto real modes |n| <= k_max."""
    c = np.asarray(c)
    kc = (c.shape[-1] - 1) // 2
    if kc < k_max:
        pad = [(0, 0)] * (c.ndim - 1) + [(k_max - kc, k_max - kc)]
        c = np.pad(c, pad)
        kc = k_max
    a = np.zeros(c.shape[:-1] + (2 * k_max + 1,))
    a[..., 0] = c[..., kc].real
    if k_max:
        pos = c[..., kc + 1: kc + k_max + 1]
        neg = c[..., kc - k_max: kc][..., ::-1]
        a[..., 2::2] = ((pos + neg) / _R2).real
        a[..., 1::2] = ((1j * (pos - neg)) / _R2).real
    return a


def potential_hat(cos_c: np.ndarray, sin_c: np.ndarray) -> np.ndarray:
    """Fourier stack V = sum c_k cos k theta + s_k sin k theta -> plain coefficients V_p of e^{i p theta}.

    Input shape (K+1, ...) each; output shape (..., 2K+1), centred.
    """
    cos_c = np.asarray(cos_c, dtype=float)
    sin_c = np.asarray(sin_c, dtype=float)
    K = cos_c.shape[0] - 1
    cos_c = np.moveaxis(cos_c, 0, -1)
    sin_c = np.moveaxis(sin_c, 0, -1)
    v = np.zeros(cos_c.shape[:-1] + (2 * K + 1,), dtype=complex)
    v[..., K] = cos_c[..., 0]
    if K:
        pos = 0.5 * (cos_c[..., 1:] - 1j * sin_c[..., 1:])
        v[..., K + 1:] = pos
        v[..., :K] = np.conj(pos)[..., ::-1]
    return v


def convolve(v_hat: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Coefficients of the pointwise product, batched over leading axes.

    v_hat: (..., 2K+1) plain Fourier coefficients of V.
    c:     (..., 2k+1) orthonormal exponential coefficients of u.
    Returns (..., 2(K+k)+1) orthonormal exponential coefficients of V u.
    """
    v_hat = np.asarray(v_hat)
    c = np.asarray(c)
    K = (v_hat.shape[-1] - 1) // 2
    k = (c.shape[-1] - 1) // 2
    lead = np.broadcast_shapes(v_hat.shape[:-1], c.shape[:-1])
    out = np.zeros(lead + (2 * (K + k) + 1,), dtype=complex)
    for p in range(-K, K + 1):
        out[..., p + K: p + K + 2 * k + 1] += v_hat[..., p + K, None] * c
    return out


def synthesis_matrix(k_max: int) -> np.ndarray:
    """U with complex = U @ real (unitary)."""
    return real_to_complex(np.eye(2 * k_max + 1)).T


def multiplication_matrices(v_hat: np.ndarray, k_max: int) -> np.ndarray:
    """Galerkin matrices M_{jl} = int V phi_j phi_l, batched over leading axes of v_hat."""
    v_hat = np.asarray(v_hat)
    K = (v_hat.shape[-1] - 1) // 2
    n = wave_numbers(k_max)
    diff = n[:, None] - n[None, :]
    mask = np.abs(diff) <= K
    toeplitz = np.zeros(v_hat.shape[:-1] + diff.shape, dtype=complex)
    toeplitz[..., mask] = v_hat[..., (diff[mask] + K)]
    U = synthesis_matrix(k_max)
    M = U.conj().T @ toeplitz @ U
    return M.real


def synthesize(a: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Evaluate sum_j a_j phi_j(theta); a has shape (..., 2k+1), result (..., len(theta))."""
    a = np.asarray(a, dtype=float)
    k = (a.shape[-1] - 1) // 2
    theta = np.asarray(theta, dtype=float)
    out = a[..., 0, None] / np.sqrt(2 * np.pi) * np.ones_like(theta)
    for w in range(1, k + 1):
        out = out + (a[..., 2 * w - 1, None] * np.sin(w * theta) + a[..., 2 * w, None] * np.cos(w * theta)) / np.sqrt(np.pi)
    return out
