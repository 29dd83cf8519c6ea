import numpy as np
import pytest
from hypothesis import given, strategies as st

from graph2text.toy.decode import EOS, beam_search, decode, decode_many, greedy_decode, sequence_logprob
from graph2text.toy.model import ModelConfig, init_params

CONFIG = ModelConfig(vocab_size=12, embed_dim=8, layers=1, heads=2, ff_dim=16, max_positions=32)


def sharp_model(seed):
    # Larger output weights give peaked, source-dependent distributions.
    params = init_params(CONFIG, seed)
    params.weights["out.w"] *= 150
    return params


def _norm(params, src, out):
    return sequence_logprob(params, src, out) / len(out)


@given(st.integers(0, 2**31))
def test_beam_one_equals_greedy(seed):
    params = sharp_model(seed % 1000)
    src = np.random.default_rng(seed).integers(3, 12, size=4).tolist()
    assert decode(params, src, beam_size=1, max_len=10) == greedy_decode(params, [src], 10)[0]


def test_beam_dominates_greedy_on_random_models():
    failures = 0
    for seed in range(100):
        params = sharp_model(seed)
        src = np.random.default_rng(seed).integers(3, 12, size=5).tolist()
        greedy = decode(params, src, 1, 12)
        beam = decode(params, src, 3, 12)
        failures += _norm(params, src, beam) < _norm(params, src, greedy) - 1e-12
    assert failures == 0


def test_max_len_one_gives_single_token():
    params = sharp_model(0)
    for beam in (1, 3, 5):
        assert len(decode(params, [4, 5], beam, max_len=1)) == 1


def test_outputs_end_at_eos_and_avoid_specials():
    params = sharp_model(1)
    for beam in (1, 3):
        out = decode(params, [4, 5, 6], beam, max_len=20)
        assert EOS not in out[:-1]
        assert not {0, 1} & set(out)


def test_decode_many_matches_single():
    params = sharp_model(2)
    sources = [[4, 5], [6, 7, 8], [9]]
    assert decode_many(params, sources, 1, 8) == [decode(params, s, 1, 8) for s in sources]
    assert decode_many(params, sources, 3, 8) == [beam_search(params, s, 3, 8) for s in sources]


def test_invalid_beam():
    with pytest.raises(ValueError):
        decode(sharp_model(0), [4], beam_size=0)
