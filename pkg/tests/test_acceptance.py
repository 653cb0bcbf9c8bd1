"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``. The lines appear in the normal
output, and every test also asserts, so a FAIL line comes with a red test.
Criteria 8 and 9 train real models and take a few minutes together.
"""
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from fnf import fft as kfft
from fnf import tensor as T
from fnf.autodiff import grad_check
from fnf.block import FnfBlock, block_param_count, spectral_branch
from fnf.checkpoint import load_checkpoint, save_checkpoint
from fnf.data import synth_generate
from fnf.diagnostics import model_grad_check, scaling_fit, time_forward
from fnf.model import VARIANTS, build_variant
from fnf.tensor import ComplexTensor
from fnf.train import TrainConfig, evaluate, prepare_data, train
from oracles import naive_dft, naive_rdft
from test_autodiff import _primitive_cases
from test_block import generic_block, real_weight_block, zero_biases


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}: {detail}")
        assert ok, detail
    return emit


def test_01_fft_oracle(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    dft_err = rdft_err = round_trip = 0.0
    for n in range(1, 65):
        x = rng.normal(size=n)
        dft_err = max(dft_err, np.abs(kfft.fft(x) - naive_dft(x)).max())
        rdft_err = max(rdft_err, np.abs(kfft.rfft(x) - naive_rdft(x)).max())
        round_trip = max(round_trip, np.abs(kfft.irfft(kfft.rfft(x), n) - x).max())
    elapsed = time.perf_counter() - start
    ok = max(dft_err, rdft_err) <= 1e-9 and round_trip <= 1e-9 and elapsed < 5
    verdict(1, "FFT oracle", ok, f"dft {dft_err:.1e}, rdft {rdft_err:.1e}, round trip {round_trip:.1e}, "
            f"{elapsed:.2f}s")


def test_02_parameter_count(verdict):
    rng = np.random.default_rng(0)
    counts = {d: FnfBlock(d, rng).num_parameters(exclude_nonneg=True) for d in (2, 4, 8, 128)}
    expected = {d: 7 * d * d + 7 * d for d in counts}
    verdict(2, "block parameter count", counts == expected, f"got {counts}, want {expected}")


def test_03_gradient_fidelity(verdict):
    start = time.perf_counter()
    prim = {name: grad_check(f, params) for name, f, params in _primitive_cases(np.random.default_rng(7))}
    worst_name = max(prim, key=prim.get)
    model_err = model_grad_check("P", D=4, tokens=8, M=3)
    elapsed = time.perf_counter() - start
    ok = prim[worst_name] <= 1e-6 and model_err <= 1e-4 and elapsed < 60
    verdict(3, "gradient fidelity", ok, f"{len(prim)} primitives worst {prim[worst_name]:.1e} ({worst_name}), "
            f"P model {model_err:.1e}, {elapsed:.1f}s")


def test_04_spectral_dichotomy(verdict):
    rng = np.random.default_rng(4)
    lin = real_weight_block(4, seed=1)
    lin.lam.data[...] = 0.0
    h = rng.normal(size=(2, 16, 4))
    base = spectral_branch(lin, h, disable_nonlinear=True).data
    local = 0.0
    for t0 in range(16):
        hp = h.copy()
        hp[:, t0] += rng.normal(size=(2, 4))
        diff = np.abs(spectral_branch(lin, hp, disable_nonlinear=True).data - base)
        local = max(local, np.delete(diff, t0, axis=1).max())

    nonlin = generic_block(4, seed=3)
    base = spectral_branch(nonlin, h).data
    hp = h.copy()
    hp[:, 7] += 0.5
    off = np.delete(np.abs(spectral_branch(nonlin, hp).data - base), 7, axis=1)
    frac = float(np.mean(off > 1e-8))
    verdict(4, "spectral dichotomy", local <= 1e-10 and frac >= 0.99,
            f"linear off-token change {local:.1e}, nonlinear off-token fraction changed {frac:.3f}")


def test_05_shift_equivariance(verdict):
    rng = np.random.default_rng(5)
    worst = 0.0
    for t in (8, 16, 63):
        block = generic_block(4, seed=t)
        zero_biases(block)
        h = rng.normal(size=(2, t, 4))
        base = spectral_branch(block, h, disable_nonlinear=True).data
        for s in rng.integers(-2 * t, 2 * t, size=20):
            shifted = spectral_branch(block, np.roll(h, s, axis=1), disable_nonlinear=True).data
            worst = max(worst, np.abs(shifted - np.roll(base, s, axis=1)).max())
    verdict(5, "shift equivariance", worst <= 1e-8, f"max error {worst:.1e} over 60 shifts")


def test_06_softshrink_contract(verdict):
    point = T.softshrink(ComplexTensor.from_numpy(np.array([3 + 4j])), 1.0).numpy()[0]
    point_err = abs(point - (2.4 + 3.2j))

    rng = np.random.default_rng(6)
    z = rng.normal(size=2000) + 1j * rng.normal(size=2000)
    zeros, phase_err = [], 0.0
    for lam in np.linspace(0.0, 3.0, 13):
        out = T.softshrink(ComplexTensor.from_numpy(z), lam).numpy()
        live = out != 0
        phase_err = max(phase_err, np.abs(np.angle(out[live] / z[live])).max(initial=0.0))
        zeros.append(int((~live).sum()))
    monotone = all(a <= b for a, b in zip(zeros, zeros[1:]))
    # a phase difference at the last-bit level of angle() is the floating-point floor
    ok = point_err <= 1e-12 and phase_err <= 4 * np.finfo(float).eps * np.pi and monotone
    verdict(6, "softshrink contract", ok, f"S_1(3+4i) err {point_err:.1e}, phase err {phase_err:.1e}, "
            f"zero counts {zeros[0]}..{zeros[-1]} monotone={monotone}")


def test_07_pipeline_inversion(verdict):
    rng = np.random.default_rng(7)
    model = build_variant("P", L=64, H=16, M=3, P=8, S=4, D=16, layers=1)
    h = model.hyper
    model.embed.W.data[...] = 0
    model.embed.W.data[: h.P, : h.P] = np.eye(h.P)
    model.embed.b.data[...] = 0
    model.proj.W.data[...] = 0
    for step in range(h.H):
        t = h.L - h.H + step
        n = min(t // h.S, h.N - 1)
        p = t - n * h.S
        model.proj.W.data[step, n * h.D + p] = 1.0
        model.proj.b.data[step] = -model.pe[n, p]
    x = rng.normal(5.0, 3.0, size=(2, 64, 3))
    persist = np.abs(model(x, "eval", bypass_backbone=True).data - x[:, -h.H:, :]).max()

    c = np.array([10.0, -3.0, 0.25])
    x = rng.normal(size=(4, 64, 3))
    cov = 0.0
    for v in VARIANTS:
        m = build_variant(v, L=64, H=16, M=3, P=8, S=4, D=16, layers=1, seed=1)
        for mode in ("eval", "train"):
            cov = max(cov, np.abs(m(x + c, mode).data - m(x, mode).data - c).max())
    verdict(7, "pipeline inversion", persist <= 1e-9 and cov <= 1e-6,
            f"persistence err {persist:.1e}, shift covariance err {cov:.1e} (all variants, both modes)")


def test_08_desk_learning(verdict):
    start = time.perf_counter()
    table = synth_generate(0, 1, 1000, 0.0, noise=0.0, n_components=1, periods=(16.0, 16.0))
    cfg = TrainConfig.desk(variant="I", max_epochs=200, seed=0)
    result = train(cfg, prepare_data(table, cfg.L, cfg.H, cfg.split_spec()))
    losses = [row["train_loss"] for row in result.history]
    hit = next((row["epoch"] for row in result.history if row["train_loss"] < 0.05), None)
    elapsed = time.perf_counter() - start
    verdict(8, "desk-scale learning", hit is not None and elapsed < 300,
            f"train L1 < 0.05 at epoch {hit}, best {min(losses):.4f} over {len(losses)} epochs, {elapsed:.1f}s")


def test_09_ablation_direction(verdict):
    start = time.perf_counter()
    table = synth_generate(0, 4, 2000, 0.8)
    maes = {}
    for v in ("I", "P"):
        maes[v] = []
        for seed in range(5):
            cfg = TrainConfig.desk(variant=v, max_epochs=30, seed=seed)
            bundle = prepare_data(table, cfg.L, cfg.H, cfg.split_spec())
            maes[v].append(evaluate(train(cfg, bundle).model, bundle.test)[1])
    mean_i, mean_p = np.mean(maes["I"]), np.mean(maes["P"])
    elapsed = time.perf_counter() - start
    verdict(9, "ablation direction", mean_p <= mean_i and elapsed < 1800,
            f"mean test MAE P {mean_p:.5f} vs I {mean_i:.5f} over 5 seeds, {elapsed:.0f}s")


def test_10_complexity_scaling(verdict):
    t = [64, 128, 256, 512, 1024]
    seconds = time_forward(t, repeats=9)
    rss_nlogn, rss_quad = scaling_fit(t, seconds)
    verdict(10, "complexity scaling", 2 * rss_nlogn <= rss_quad,
            f"RSS T log T {rss_nlogn:.2e} vs T^2 {rss_quad:.2e} (ratio {rss_quad / rss_nlogn:.1f})")


def test_11_determinism_and_checkpoint(verdict):
    table = synth_generate(3, 3, 1200, 0.5)
    cfg = TrainConfig.desk(variant="P", max_steps=10, seed=11)
    bundle = prepare_data(table, cfg.L, cfg.H, cfg.split_spec())
    first = train(cfg, bundle)
    second = train(cfg, prepare_data(table, cfg.L, cfg.H, cfg.split_spec()))
    trace_equal = len(first.step_losses) == 10 and first.step_losses == second.step_losses

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "p.ckpt"
        save_checkpoint(first.model, path)
        restored = load_checkpoint(path)
    x, _ = bundle.test.arrays()
    pred_equal = np.array_equal(first.model(x, "eval").data, restored(x, "eval").data)
    metrics_equal = evaluate(first.model, bundle.test) == evaluate(restored, bundle.test)
    verdict(11, "determinism and checkpoint", trace_equal and pred_equal and metrics_equal,
            f"10-step traces identical={trace_equal}, restored predictions identical={pred_equal}, "
            f"metrics identical={metrics_equal}")
