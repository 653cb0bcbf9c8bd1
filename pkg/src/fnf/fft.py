"""Discrete Fourier transforms on plain numpy arrays.

All transforms act on the last axis and broadcast over the leading ones.
Power-of-two lengths go through an iterative radix-2 Cooley-Tukey kernel;
every other length falls back to a dense O(N^2) DFT matrix.
"""
from functools import lru_cache

import numpy as np

from .errors import DimensionError


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@lru_cache(maxsize=None)
def _bit_reversal(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=None)
def _twiddles(size: int) -> np.ndarray:
    half = size // 2
    return np.exp(-2j * np.pi * np.arange(half) / size)


@lru_cache(maxsize=None)
def dft_matrix(n: int) -> np.ndarray:
    # k*j reduced mod n keeps the angle small, which keeps the table accurate
    kj = np.outer(np.arange(n), np.arange(n)) % n
    return np.exp(-2j * np.pi * kj / n)


def _radix2(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    lead = x.shape[:-1]
    a = x[..., _bit_reversal(n)]
    size = 2
    while size <= n:
        half = size // 2
        a = a.reshape(*lead, n // size, size)
        even = a[..., :half]
        odd = a[..., half:] * _twiddles(size)
        a = np.concatenate([even + odd, even - odd], axis=-1)
        size *= 2
    return a.reshape(*lead, n)


def fft(x: np.ndarray) -> np.ndarray:
    """Complex forward DFT along the last axis (no normalization)."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    if n < 1:
        raise DimensionError(f"fft needs at least one sample, got shape {x.shape}")
    if n == 1:
        return x.copy()
    if is_power_of_two(n):
        return _radix2(x)
    return x @ dft_matrix(n)


def ifft(z: np.ndarray) -> np.ndarray:
    """Inverse of :func:`fft`, including the 1/N factor."""
    z = np.asarray(z, dtype=np.complex128)
    return np.conj(fft(np.conj(z))) / z.shape[-1]


def rfft(x: np.ndarray) -> np.ndarray:
    """Real-input DFT keeping the floor(N/2)+1 non-redundant bins."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    return fft(x)[..., : n // 2 + 1]


def irfft(z: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`rfft` for a length-``n`` real signal.

    The imaginary parts of bin 0 and (for even ``n``) the Nyquist bin do not
    belong to any real signal and are ignored.
    """
    z = np.asarray(z, dtype=np.complex128)
    k = z.shape[-1]
    if n < 1 or k != n // 2 + 1:
        raise DimensionError(
            f"irfft: {k} modes is inconsistent with a length-{n} signal "
            f"(expected {max(n, 0) // 2 + 1})"
        )
    full = np.empty(z.shape[:-1] + (n,), dtype=np.complex128)
    full[..., :k] = z
    full[..., 0] = z[..., 0].real
    if n % 2 == 0:
        full[..., n // 2] = z[..., n // 2].real
    # mirror the strictly-interior bins
    tail = n - k
    if tail:
        full[..., k:] = np.conj(z[..., 1 : tail + 1][..., ::-1])
    return ifft(full).real


def hermitian_weights(n: int) -> np.ndarray:
    """Multiplicity of each retained rfft bin inside the full spectrum."""
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    return w
