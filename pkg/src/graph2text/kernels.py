"""Row-wise numeric kernels for the toy transformer.

Every kernel exists twice: a vectorized numpy version and a loop version
compiled with numba. Both take C-contiguous float64 2-D arrays (rows are
independent) and return new arrays. The module-level names dispatch to the
numba versions unless ``GRAPH2TEXT_NUMBA=0``.
"""

from types import SimpleNamespace

import numpy as np

from ._accel import NUMBA_ENABLED, njit

GELU_C = np.sqrt(2.0 / np.pi)


# -- numpy ----------------------------------------------------------------------


def softmax_rows_np(x):
    e = np.exp(x - x.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_backward_np(a, da):
    return a * (da - (da * a).sum(axis=1, keepdims=True))


def layer_norm_np(x, gamma, beta, eps):
    mu = x.mean(axis=1, keepdims=True)
    xc = x - mu
    rstd = 1.0 / np.sqrt((xc * xc).mean(axis=1) + eps)
    xhat = xc * rstd[:, None]
    return xhat * gamma + beta, xhat, rstd


def layer_norm_backward_np(dy, xhat, rstd, gamma):
    dxhat = dy * gamma
    dx = rstd[:, None] * (
        dxhat - dxhat.mean(axis=1, keepdims=True) - xhat * (dxhat * xhat).mean(axis=1, keepdims=True)
    )
    return dx, (dy * xhat).sum(axis=0), dy.sum(axis=0)


def gelu_np(x):
    return 0.5 * x * (1.0 + np.tanh(GELU_C * (x + 0.044715 * x**3)))


def gelu_backward_np(x, dy):
    t = np.tanh(GELU_C * (x + 0.044715 * x**3))
    dt = GELU_C * (1.0 + 3 * 0.044715 * x * x) * (1.0 - t * t)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * dt)


def cross_entropy_np(logits, targets, weights):
    """Weighted NLL sum, per-row log-probabilities and d(loss)/d(logits)."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logprobs = shifted - logz
    rows = np.arange(len(targets))
    loss = -(weights * logprobs[rows, targets]).sum()
    grad = np.exp(logprobs)
    grad[rows, targets] -= 1.0
    grad *= weights[:, None]
    return loss, logprobs, grad


# -- numba ------------------------------------------------------------------------


@njit
def softmax_rows_nb(x):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        m = x[i, 0]
        for j in range(1, x.shape[1]):
            if x[i, j] > m:
                m = x[i, j]
        s = 0.0
        for j in range(x.shape[1]):
            e = np.exp(x[i, j] - m)
            out[i, j] = e
            s += e
        for j in range(x.shape[1]):
            out[i, j] /= s
    return out


@njit
def softmax_rows_backward_nb(a, da):
    out = np.empty_like(a)
    for i in range(a.shape[0]):
        dot = 0.0
        for j in range(a.shape[1]):
            dot += da[i, j] * a[i, j]
        for j in range(a.shape[1]):
            out[i, j] = a[i, j] * (da[i, j] - dot)
    return out


@njit
def layer_norm_nb(x, gamma, beta, eps):
    n, d = x.shape
    y = np.empty_like(x)
    xhat = np.empty_like(x)
    rstd = np.empty(n)
    for i in range(n):
        mu = 0.0
        for j in range(d):
            mu += x[i, j]
        mu /= d
        var = 0.0
        for j in range(d):
            c = x[i, j] - mu
            var += c * c
        r = 1.0 / np.sqrt(var / d + eps)
        rstd[i] = r
        for j in range(d):
            h = (x[i, j] - mu) * r
            xhat[i, j] = h
            y[i, j] = h * gamma[j] + beta[j]
    return y, xhat, rstd


@njit
def layer_norm_backward_nb(dy, xhat, rstd, gamma):
    n, d = dy.shape
    dx = np.empty_like(dy)
    dgamma = np.zeros(d)
    dbeta = np.zeros(d)
    for i in range(n):
        m1 = 0.0
        m2 = 0.0
        for j in range(d):
            g = dy[i, j] * gamma[j]
            m1 += g
            m2 += g * xhat[i, j]
            dgamma[j] += dy[i, j] * xhat[i, j]
            dbeta[j] += dy[i, j]
        m1 /= d
        m2 /= d
        for j in range(d):
            dx[i, j] = rstd[i] * (dy[i, j] * gamma[j] - m1 - xhat[i, j] * m2)
    return dx, dgamma, dbeta


@njit
def gelu_nb(x):
    out = np.empty_like(x)
    c = np.sqrt(2.0 / np.pi)
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            v = x[i, j]
            out[i, j] = 0.5 * v * (1.0 + np.tanh(c * (v + 0.044715 * v * v * v)))
    return out


@njit
def gelu_backward_nb(x, dy):
    out = np.empty_like(x)
    c = np.sqrt(2.0 / np.pi)
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            v = x[i, j]
            t = np.tanh(c * (v + 0.044715 * v * v * v))
            dt = c * (1.0 + 3 * 0.044715 * v * v) * (1.0 - t * t)
            out[i, j] = dy[i, j] * (0.5 * (1.0 + t) + 0.5 * v * dt)
    return out


@njit
def cross_entropy_nb(logits, targets, weights):
    n, v = logits.shape
    logprobs = np.empty_like(logits)
    grad = np.empty_like(logits)
    loss = 0.0
    for i in range(n):
        m = logits[i, 0]
        for j in range(1, v):
            if logits[i, j] > m:
                m = logits[i, j]
        s = 0.0
        for j in range(v):
            s += np.exp(logits[i, j] - m)
        logz = np.log(s)
        w = weights[i]
        for j in range(v):
            lp = logits[i, j] - m - logz
            logprobs[i, j] = lp
            grad[i, j] = w * np.exp(lp)
        loss -= w * logprobs[i, targets[i]]
        grad[i, targets[i]] -= w
    return loss, logprobs, grad


numpy_kernels = SimpleNamespace(
    softmax_rows=softmax_rows_np,
    softmax_rows_backward=softmax_rows_backward_np,
    layer_norm=layer_norm_np,
    layer_norm_backward=layer_norm_backward_np,
    gelu=gelu_np,
    gelu_backward=gelu_backward_np,
    cross_entropy=cross_entropy_np,
)

numba_kernels = SimpleNamespace(
    softmax_rows=softmax_rows_nb,
    softmax_rows_backward=softmax_rows_backward_nb,
    layer_norm=layer_norm_nb,
    layer_norm_backward=layer_norm_backward_nb,
    gelu=gelu_nb,
    gelu_backward=gelu_backward_nb,
    cross_entropy=cross_entropy_nb,
)

active = numba_kernels if NUMBA_ENABLED else numpy_kernels
BACKEND = "numba" if NUMBA_ENABLED else "numpy"

softmax_rows = active.softmax_rows
softmax_rows_backward = active.softmax_rows_backward
layer_norm = active.layer_norm
layer_norm_backward = active.layer_norm_backward
gelu = active.gelu
gelu_backward = active.gelu_backward
cross_entropy = active.cross_entropy
