import numpy as np
import pytest

from fnf import tensor as T
from fnf.autodiff import grad_check
from fnf.block import FnfBlock, block_param_count, fnf_forward, selective_activation, spectral_branch
from fnf.errors import DimensionError


def generic_block(d, seed=0, lam=0.05, scale=0.5):
    r = np.random.default_rng(seed)
    b = FnfBlock(d, r)
    for p in b.parameters():
        p.data[...] = lam if p.nonneg else scale * r.standard_normal(p.shape)
    return b


def real_weight_block(d, seed=0):
    block = generic_block(d, seed)
    block.clin1.W_i.data[...] = 0
    block.clin2.W_i.data[...] = 0
    return block


def zero_biases(block):
    for layer in (block.expand, block.out):
        layer.b.data[...] = 0
    for layer in (block.clin1, block.clin2):
        layer.b_r.data[...] = 0
        layer.b_i.data[...] = 0


@pytest.mark.parametrize("d", [2, 4, 8, 128])
def test_param_count(d):
    block = FnfBlock(d, np.random.default_rng(0))
    assert block.num_parameters(exclude_nonneg=True) == 7 * d * d + 7 * d == block_param_count(d)
    assert block.num_parameters() == 7 * d * d + 7 * d + 1


def test_param_count_values():
    assert block_param_count(4) == 140
    assert block_param_count(128) == 115_584


def test_zero_in_zero_out():
    block = generic_block(4)
    zero_biases(block)
    out = block(np.zeros((2, 8, 4))).data
    assert not out.any()


def test_shape_preserved(rng):
    block = FnfBlock(6, rng)
    for shape in [(5, 6), (3, 7, 6), (2, 3, 9, 6)]:
        assert block(rng.normal(size=shape)).shape == shape


def test_wrong_width(rng):
    with pytest.raises(DimensionError):
        FnfBlock(4, rng)(np.ones((3, 5)))


class TestSpectralBranch:
    def test_linear_path_is_pointwise_for_real_weights(self, rng):
        block = real_weight_block(4, seed=1)
        h = rng.normal(size=(2, 16, 4))
        base = spectral_branch(block, h, disable_nonlinear=True).data
        for t0 in (0, 5, 15):
            hp = h.copy()
            hp[:, t0] += rng.normal(size=(2, 4))
            diff = np.abs(spectral_branch(block, hp, disable_nonlinear=True).data - base)
            assert np.delete(diff, t0, axis=1).max() <= 1e-10
            assert diff[:, t0].max() > 1e-3

    def test_linear_path_splits_into_pointwise_and_hilbert_parts(self, rng):
        # composite weight A + iB acts as A x[t] + B (Hx)[t], H = irfft(i * rfft(.))
        block = generic_block(3, seed=2)
        zero_biases(block)
        h = rng.normal(size=(10, 3))
        W = (block.clin2.W_r.data + 1j * block.clin2.W_i.data) @ (block.clin1.W_r.data + 1j * block.clin1.W_i.data)
        hil = np.fft.irfft(1j * np.fft.rfft(h, axis=0), 10, axis=0)
        expect = h @ W.real.T + hil @ W.imag.T
        np.testing.assert_allclose(spectral_branch(block, h, disable_nonlinear=True).data, expect, atol=1e-9)

    def test_imaginary_weights_break_locality(self, rng):
        block = generic_block(4, seed=1)
        h = rng.normal(size=(1, 16, 4))
        hp = h.copy()
        hp[:, 3] += 1.0
        diff = np.abs(spectral_branch(block, hp, disable_nonlinear=True).data
                      - spectral_branch(block, h, disable_nonlinear=True).data)
        assert np.delete(diff, 3, axis=1).max() > 1e-3

    def test_nonlinear_path_mixes_globally(self, rng):
        block = generic_block(4, seed=3)
        h = rng.normal(size=(2, 16, 4))
        base = spectral_branch(block, h).data
        hp = h.copy()
        hp[:, 7] += 0.5
        diff = np.abs(spectral_branch(block, hp).data - base)
        off = np.delete(diff, 7, axis=1)
        assert np.mean(off > 1e-8) >= 0.99

    def test_identity_layers_round_trip(self, rng):
        block = FnfBlock(4, rng)
        for c in (block.clin1, block.clin2):
            c.W_r.data[...] = np.eye(4)
            c.W_i.data[...] = 0
            c.b_r.data[...] = 0
            c.b_i.data[...] = 0
        h = rng.normal(size=(3, 9, 4))
        np.testing.assert_allclose(spectral_branch(block, h, disable_nonlinear=True).data, h, atol=1e-9)

    @pytest.mark.parametrize("t", [8, 16, 63])
    def test_shift_equivariance(self, t, rng):
        block = generic_block(4, seed=t)
        zero_biases(block)
        h = rng.normal(size=(2, t, 4))
        base = spectral_branch(block, h, disable_nonlinear=True).data
        for s in rng.integers(-2 * t, 2 * t, size=20):
            shifted = spectral_branch(block, np.roll(h, s, axis=1), disable_nonlinear=True).data
            assert np.abs(shifted - np.roll(base, s, axis=1)).max() <= 1e-8


class TestSelectiveActivation:
    def test_modes(self, rng):
        p = rng.normal(size=(3, 4))
        assert not selective_activation(np.zeros_like(p), p).data.any()
        np.testing.assert_array_equal(selective_activation(np.ones_like(p), p).data, p)
        np.testing.assert_array_equal(selective_activation(np.full_like(p, 2.0), p).data, 2 * p)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            selective_activation(np.ones(3), np.ones(4))


def test_dead_gate_leaves_only_output_bias(rng):
    block = generic_block(4, seed=5)
    block.expand.W.data[:4] = 0
    block.expand.b.data[:4] = 0
    out = block(rng.normal(size=(2, 8, 4))).data
    np.testing.assert_array_equal(out, np.broadcast_to(block.out.b.data, out.shape))


def _kink_free_input(block, d, t, rng, margin=0.1):
    """Resample until every pre-softshrink spectral magnitude sits at least ``margin`` from lambda."""
    lam = float(block.lam.data)
    for _ in range(1000):
        x = rng.normal(size=(2, t, d))
        e = block.expand(x)
        z = T.rfft(e[..., d:], axis=-2)
        from fnf import nn
        z = block.clin2(nn.complex_gelu(block.clin1(z)))
        if np.abs(z.magnitude() - lam).min() >= margin:
            return x
    raise AssertionError("no kink-free input found")


def test_block_grad_check(rng):
    block = generic_block(4, seed=11, lam=0.3, scale=0.4)
    x = _kink_free_input(block, 4, 8, rng)
    w = rng.normal(size=x.shape)
    err = grad_check(lambda: T.sum_(T.mul(fnf_forward(block, x), w)), block.parameters())
    assert err <= 1e-4
