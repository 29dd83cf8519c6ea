import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from graph2text.errors import ShapeError
from graph2text.toy.gradcheck import grad_check, relative_error
from graph2text.toy.model import (
    ModelConfig,
    forward,
    init_params,
    loss_and_grads,
    make_batch,
    parameter_shapes,
    sequence_losses,
)

SMALL = ModelConfig(vocab_size=30, embed_dim=8, layers=2, heads=2, ff_dim=16, max_positions=32)


def _seqs(rng, n, vocab, lo=1, hi=7):
    return [rng.integers(3, vocab, size=int(rng.integers(lo, hi))).tolist() for _ in range(n)]


def test_config_invariants():
    with pytest.raises(ValueError):
        ModelConfig(vocab_size=10, embed_dim=7, heads=2)
    with pytest.raises(ValueError):
        ModelConfig(vocab_size=0)
    defaults = ModelConfig(vocab_size=10)
    assert (defaults.embed_dim, defaults.layers, defaults.heads, defaults.ff_dim, defaults.max_positions) == (
        64,
        2,
        2,
        128,
        256,
    )


def test_init_shapes_and_finite():
    params = init_params(SMALL, 0)
    assert {k: v.shape for k, v in params.weights.items()} == parameter_shapes(SMALL)
    assert params.all_finite()
    assert params.num_parameters() == sum(int(np.prod(s)) for s in parameter_shapes(SMALL).values())


@pytest.mark.parametrize("vocab", [30, 200, 1000])
def test_initial_loss_near_log_vocab(vocab):
    config = ModelConfig(vocab_size=vocab)
    rng = np.random.default_rng(1)
    _, loss = forward(init_params(config, 0), _seqs(rng, 4, vocab), _seqs(rng, 4, vocab))
    assert abs(loss - math.log(vocab)) <= 0.05 * math.log(vocab)


@given(st.integers(0, 2**31))
def test_logprobs_normalized(seed):
    rng = np.random.default_rng(seed)
    logprobs, loss = forward(init_params(SMALL, seed % 7), _seqs(rng, 3, 30), _seqs(rng, 3, 30))
    assert np.isfinite(loss)
    np.testing.assert_allclose(np.logaddexp.reduce(logprobs, axis=-1), 0.0, atol=1e-5)


def test_identical_samples_identical_losses():
    params = init_params(SMALL, 0)
    batch = make_batch(SMALL, [[5, 6, 7]] * 4, [[8, 9]] * 4)
    _, logprobs, _ = loss_and_grads(params, batch, need_grads=False)
    losses = sequence_losses(logprobs, batch)
    assert np.all(losses == losses[0])


def test_padding_does_not_change_per_sample_loss():
    params = init_params(SMALL, 0)
    alone = make_batch(SMALL, [[5, 6]], [[8]])
    padded = make_batch(SMALL, [[5, 6], [4, 5, 6, 7, 8]], [[8], [9, 10, 11, 12]])
    a = sequence_losses(loss_and_grads(params, alone, False)[1], alone)[0]
    b = sequence_losses(loss_and_grads(params, padded, False)[1], padded)[0]
    assert a == pytest.approx(b, rel=1e-12)


def test_decoder_is_causal():
    params = init_params(SMALL, 3)
    a, _ = forward(params, [[5, 6, 7]], [[8, 9, 10, 11]])
    b, _ = forward(params, [[5, 6, 7]], [[8, 9, 20, 21]])
    # Positions 0..2 only see bos, 8, 9.
    np.testing.assert_array_equal(a[0, :3], b[0, :3])
    assert not np.allclose(a[0, 3], b[0, 3])


def test_shape_errors():
    params = init_params(SMALL, 0)
    with pytest.raises(ShapeError):
        forward(params, [[5, 99]], [[6]])
    with pytest.raises(ShapeError):
        forward(params, [[5]], [[6], [7]])
    with pytest.raises(ShapeError):
        forward(params, [[5] * 40], [[6]])
    with pytest.raises(ShapeError):
        forward(params, [[]], [[6]])


def test_grad_check_correct_backward():
    params = init_params(SMALL, 0)
    rng = np.random.default_rng(0)
    sample = (_seqs(rng, 1, 30)[0], _seqs(rng, 1, 30)[0])
    assert grad_check(params, sample, epsilon=1e-4, n_params=200) < 1e-3


def test_grad_check_catches_corrupted_gradient():
    params = init_params(SMALL, 0)

    def corrupted(p, batch):
        grads = loss_and_grads(p, batch)[2]
        return {k: g * 1.5 + 0.01 for k, g in grads.items()}

    assert grad_check(params, ([4, 5, 6], [7, 8]), n_params=200, grad_fn=corrupted) > 1e-1


def test_grad_check_rejects_empty_target():
    with pytest.raises(ShapeError):
        grad_check(init_params(SMALL, 0), ([4, 5], []))


def test_relative_error_floor():
    assert relative_error(0.0, 1e-9) == pytest.approx(1e-3)
    assert relative_error(2.0, 1.0) == pytest.approx(0.5)
