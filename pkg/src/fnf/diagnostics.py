"""Verification helpers shared by the CLI ``gradcheck``/``selftest`` commands and the tests."""
from __future__ import annotations

import time
from typing import Callable

import numpy as np

from . import fft as kfft
from . import tensor as T
from .autodiff import grad_check
from .block import FnfBlock, block_param_count, fnf_forward
from .model import ForecastModel, build_variant
from .tensor import ComplexTensor
from .train import l1_loss


def fnf_blocks(model) -> list[FnfBlock]:
    found = []

    def walk(m):
        if isinstance(m, FnfBlock):
            found.append(m)
        for child in m._children.values():
            walk(child)

    walk(model)
    return found


def kink_margin(model: ForecastModel, x: np.ndarray, y: np.ndarray, mode: str = "train") -> float:
    """Distance of the nearest non-differentiable point hit by ``l1_loss(model(x), y)``.

    Covers the softshrink threshold in every block and the zero of the L1 residual.
    """
    blocks = fnf_blocks(model)
    for b in blocks:
        b.probe = []
    try:
        pred = model(x, mode).data
    finally:
        probes = [(b, b.probe) for b in blocks]
        for b in blocks:
            b.probe = None
    margin = float(np.abs(pred - y).min())
    for b, mags in probes:
        lam = float(b.lam.data)
        for m in mags:
            margin = min(margin, float(np.abs(m - lam).min()))
    return margin


def model_grad_check(variant: str = "P", *, D: int = 4, tokens: int = 8, M: int = 3, H: int = 4,
                     batch: int = 2, seed: int = 0, lam: float = 0.05, margin: float = 1e-3,
                     max_tries: int = 200, mode: str = "eval") -> float:
    """Max relative gradient error of the L1 loss over every parameter of a small model.

    Patch length 4 with stride 4 makes the temporal token count equal ``tokens``.
    Inputs are redrawn until every kink is at least ``margin`` away.
    """
    P = S = 4
    L = P + (tokens - 1) * S
    model = build_variant(variant, L=L, H=H, M=M, P=P, S=S, D=D, layers=1, lambda_init=lam, seed=seed)
    rng = np.random.default_rng(seed)
    for p in model.parameters():
        if p.name in ("W_r", "W_i", "b_r", "b_i"):
            # complex layers start at std 0.02; widen so the spectral path carries signal
            p.data[...] = 0.5 * rng.standard_normal(p.shape)
    for _ in range(max_tries):
        x = rng.normal(size=(batch, L, M))
        y = rng.normal(size=(batch, H, M))
        if kink_margin(model, x, y, mode) >= margin:
            break
    else:
        raise RuntimeError("could not draw a kink-free input")
    return grad_check(lambda: l1_loss(model(x, mode), y), model.parameters())


def fft_oracle_error(max_n: int = 64, seed: int = 0) -> tuple[float, float]:
    """(max |fast - naive DFT|, max round-trip error) over lengths 1..max_n."""
    rng = np.random.default_rng(seed)
    worst_dft = worst_rt = 0.0
    for n in range(1, max_n + 1):
        x = rng.normal(size=n)
        k = np.arange(n)
        naive = np.exp(-2j * np.pi * np.outer(k, k) / n) @ x
        worst_dft = max(worst_dft, float(np.abs(kfft.fft(x) - naive).max()))
        worst_rt = max(worst_rt, float(np.abs(kfft.irfft(kfft.rfft(x), n) - x).max()))
    return worst_dft, worst_rt


def time_forward(t_values, d_model: int = 16, batch: int = 8, repeats: int = 7, seed: int = 0) -> np.ndarray:
    """Median wall-clock of one block forward for each token count."""
    rng = np.random.default_rng(seed)
    block = FnfBlock(d_model, rng)
    out = []
    for t in t_values:
        x = rng.normal(size=(batch, t, d_model))
        fnf_forward(block, x)
        samples = []
        for _ in range(repeats):
            start = time.perf_counter()
            fnf_forward(block, x)
            samples.append(time.perf_counter() - start)
        out.append(np.median(samples))
    return np.asarray(out)


def scaling_fit(t_values, seconds) -> tuple[float, float]:
    """Residual sums of squares of the one-parameter fits c*T*log2(T) and c*T^2."""
    t = np.asarray(t_values, dtype=float)
    y = np.asarray(seconds, dtype=float)

    def rss(basis):
        c = basis @ y / (basis @ basis)
        r = y - c * basis
        return float(r @ r)

    return rss(t * np.log2(t)), rss(t * t)


def selftest() -> list[tuple[str, bool, str]]:
    """Fast sanity checks; each entry is (name, passed, detail)."""
    results = []

    def check(name: str, fn: Callable[[], tuple[bool, str]]):
        try:
            ok, detail = fn()
        except Exception as exc:  # report, don't abort the run
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))

    def fft_check():
        dft, rt = fft_oracle_error()
        return dft <= 1e-9 and rt <= 1e-9, f"dft err {dft:.2e}, round trip {rt:.2e}"

    def count_check():
        rng = np.random.default_rng(0)
        counts = {d: FnfBlock(d, rng).num_parameters(exclude_nonneg=True) for d in (2, 4, 8, 128)}
        return all(c == block_param_count(d) for d, c in counts.items()), str(counts)

    def softshrink_check():
        out = T.softshrink(ComplexTensor.from_numpy(np.array([3 + 4j])), 1.0).numpy()[0]
        return abs(out - (2.4 + 3.2j)) <= 1e-12, f"S_1(3+4i) = {out}"

    def shape_check():
        x = np.random.default_rng(0).normal(size=(2, 64, 3))
        shapes = {v: build_variant(v, L=64, H=16, M=3, P=8, S=4, D=16, layers=1)(x).shape for v in "IUSP"}
        return all(s == (2, 16, 3) for s in shapes.values()), str(shapes)

    def grad_check_small():
        err = model_grad_check("P")
        return err <= 1e-4, f"max relative error {err:.2e}"

    check("fft_oracle", fft_check)
    check("block_param_count", count_check)
    check("softshrink", softshrink_check)
    check("variant_shapes", shape_check)
    check("model_gradient", grad_check_small)
    return results
