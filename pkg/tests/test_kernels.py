import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from graph2text import kernels
from graph2text._accel import HAVE_NUMBA

pytestmark = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not importable")

NP, NB = kernels.numpy_kernels, kernels.numba_kernels
SHAPES = st.tuples(st.integers(1, 9), st.integers(1, 17))


def _arr(seed, shape, scale=3.0):
    return np.random.default_rng(seed).normal(scale=scale, size=shape)


@given(SHAPES, st.integers(0, 2**31))
def test_softmax_equivalence(shape, seed):
    x = _arr(seed, shape)
    a = NP.softmax_rows(x)
    np.testing.assert_allclose(NB.softmax_rows(x), a, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(a.sum(axis=1), 1.0, rtol=1e-12)
    da = _arr(seed + 1, shape)
    np.testing.assert_allclose(NB.softmax_rows_backward(a, da), NP.softmax_rows_backward(a, da), atol=1e-12)


@given(SHAPES, st.integers(0, 2**31))
def test_layer_norm_equivalence(shape, seed):
    x = _arr(seed, shape)
    g, b = _arr(seed + 1, shape[1]), _arr(seed + 2, shape[1])
    for u, v in zip(NB.layer_norm(x, g, b, 1e-5), NP.layer_norm(x, g, b, 1e-5)):
        np.testing.assert_allclose(u, v, rtol=1e-10, atol=1e-12)
    _, xhat, rstd = NP.layer_norm(x, g, b, 1e-5)
    dy = _arr(seed + 3, shape)
    for u, v in zip(NB.layer_norm_backward(dy, xhat, rstd, g), NP.layer_norm_backward(dy, xhat, rstd, g)):
        np.testing.assert_allclose(u, v, rtol=1e-10, atol=1e-10)


@given(SHAPES, st.integers(0, 2**31))
def test_gelu_equivalence(shape, seed):
    x, dy = _arr(seed, shape), _arr(seed + 1, shape)
    # 1 + tanh cancels for very negative x, so tiny outputs differ by round-off.
    np.testing.assert_allclose(NB.gelu(x), NP.gelu(x), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(NB.gelu_backward(x, dy), NP.gelu_backward(x, dy), rtol=1e-12, atol=1e-12)


@given(SHAPES, st.integers(0, 2**31))
def test_cross_entropy_equivalence(shape, seed):
    rows, vocab = shape
    logits = _arr(seed, shape, scale=10.0)
    rng = np.random.default_rng(seed)
    targets = rng.integers(0, vocab, size=rows)
    weights = rng.random(rows)
    weights /= weights.sum()
    for u, v in zip(NB.cross_entropy(logits, targets, weights), NP.cross_entropy(logits, targets, weights)):
        np.testing.assert_allclose(u, v, rtol=1e-10, atol=1e-12)


def test_kernel_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(3, 5))
    eps = 1e-6
    dy = rng.normal(size=(3, 5))
    num = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += eps
        xm[idx] -= eps
        num[idx] = ((NP.gelu(xp) - NP.gelu(xm)) * dy).sum() / (2 * eps)
    np.testing.assert_allclose(NP.gelu_backward(x, dy), num, rtol=1e-6, atol=1e-8)


def test_env_flag_selects_numpy_backend():
    code = "from graph2text import kernels; print(kernels.BACKEND)"
    env = {**os.environ, "GRAPH2TEXT_NUMBA": "0"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env["GRAPH2TEXT_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numba"


def test_benchmark_runs(capsys):
    import importlib.util
    from pathlib import Path

    path = Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    bench.main(["--rows", "4", "--cols", "3", "--repeats", "1", "--number", "1"])
    out = capsys.readouterr().out
    assert all(name in out for name in ("softmax_rows", "layer_norm_backward", "cross_entropy"))
