"""Slow, obviously-correct reference computations used only by the tests."""
import cmath
import math

import numpy as np


def naive_matmul(a, b):
    a, b = np.asarray(a), np.asarray(b)
    m, k = a.shape
    k2, n = b.shape
    assert k == k2
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            s = 0.0
            for t in range(k):
                s += a[i, t] * b[t, j]
            out[i, j] = s
    return out


def naive_dft(x):
    n = len(x)
    return np.array([
        sum(x[j] * cmath.exp(-2j * math.pi * k * j / n) for j in range(n)) for k in range(n)
    ])


def naive_rdft(x):
    return naive_dft(x)[: len(x) // 2 + 1]


def naive_irdft(z, n):
    """Inverse DFT of the Hermitian extension of the retained bins."""
    full = [0j] * n
    for k in range(n):
        full[k] = z[k] if k <= n // 2 else z[n - k].conjugate()
    return np.array([
        (sum(full[k] * cmath.exp(2j * math.pi * k * t / n) for k in range(n)) / n).real for t in range(n)
    ])


def gelu_tanh(x: float) -> float:
    from mpmath import mp, mpf, sqrt, tanh, pi
    mp.dps = 40
    x = mpf(x)
    return float(mpf("0.5") * x * (1 + tanh(sqrt(2 / pi) * (x + mpf("0.044715") * x**3))))


def central_diff(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        orig = x[i]
        x[i] = orig + h
        fp = f(x)
        x[i] = orig - h
        fm = f(x)
        x[i] = orig
        g[i] = (fp - fm) / (2 * h)
    return g
