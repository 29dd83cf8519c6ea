"""A small pre-LN transformer encoder-decoder with a hand-written backward pass."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .. import kernels as K
from ..errors import ShapeError

NEG_INF = -1e9


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    embed_dim: int = 64
    layers: int = 2
    heads: int = 2
    ff_dim: int = 128
    max_positions: int = 256
    ln_eps: float = 1e-5

    def __post_init__(self):
        if self.embed_dim % self.heads:
            raise ValueError("embed_dim must be divisible by heads")
        if min(self.vocab_size, self.embed_dim, self.layers, self.heads, self.ff_dim, self.max_positions) < 1:
            raise ValueError("model dimensions must be positive")


@dataclass
class ModelParams:
    config: ModelConfig
    weights: dict = field(default_factory=dict)

    def copy(self) -> ModelParams:
        return ModelParams(self.config, {k: v.copy() for k, v in self.weights.items()})

    def all_finite(self) -> bool:
        return all(np.isfinite(w).all() for w in self.weights.values())

    def num_parameters(self) -> int:
        return sum(w.size for w in self.weights.values())


def _attn_names(prefix):
    return [f"{prefix}.{n}" for n in ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")]


def parameter_shapes(c: ModelConfig) -> dict[str, tuple]:
    d, f, v = c.embed_dim, c.ff_dim, c.vocab_size
    shapes: dict[str, tuple] = {"enc.emb": (v, d), "dec.emb": (v, d)}

    def ln(name):
        shapes[f"{name}.g"] = (d,)
        shapes[f"{name}.b"] = (d,)

    def attn(name):
        for w, b in zip(_attn_names(name)[::2], _attn_names(name)[1::2]):
            shapes[w] = (d, d)
            shapes[b] = (d,)

    def ff(name):
        shapes.update({f"{name}.w1": (d, f), f"{name}.b1": (f,), f"{name}.w2": (f, d), f"{name}.b2": (d,)})

    for i in range(c.layers):
        ln(f"enc.{i}.ln1"), attn(f"enc.{i}.self"), ln(f"enc.{i}.ln2"), ff(f"enc.{i}.ff")
    ln("enc.ln")
    for i in range(c.layers):
        ln(f"dec.{i}.ln1"), attn(f"dec.{i}.self"), ln(f"dec.{i}.ln2"), attn(f"dec.{i}.cross")
        ln(f"dec.{i}.ln3"), ff(f"dec.{i}.ff")
    ln("dec.ln")
    shapes["out.w"] = (d, v)
    shapes["out.b"] = (v,)
    return shapes


def init_params(config: ModelConfig, seed: int = 0) -> ModelParams:
    """Embeddings ~ N(0, 1), projections ~ N(0, 1/fan_in), output layer ~ N(0, 0.02^2).

    The small output layer keeps the initial predictive distribution close
    to uniform, so the starting loss is about ln(vocab size).
    """
    rng = np.random.default_rng(seed)
    weights = {}
    for name, shape in parameter_shapes(config).items():
        leaf = name.rsplit(".", 1)[1]
        if name.endswith(".emb"):
            w = rng.standard_normal(shape)
        elif name == "out.w":
            w = 0.02 * rng.standard_normal(shape)
        elif leaf == "g":
            w = np.ones(shape)
        elif len(shape) == 2:
            w = rng.standard_normal(shape) / np.sqrt(shape[0])
        else:
            w = np.zeros(shape)
        weights[name] = w
    return ModelParams(config, weights)


@lru_cache(maxsize=8)
def positional_encoding(max_positions: int, dim: int) -> np.ndarray:
    pos = np.arange(max_positions)[:, None]
    rates = np.exp(-np.log(10000.0) * (np.arange(0, dim, 2) / dim))
    table = np.zeros((max_positions, dim))
    table[:, 0::2] = np.sin(pos * rates)
    table[:, 1::2] = np.cos(pos * rates[: dim // 2])
    table.setflags(write=False)
    return table


# -- batching -------------------------------------------------------------------------


@dataclass
class Batch:
    src: np.ndarray  # (B, S) int
    src_mask: np.ndarray  # (B, S) bool
    dec_in: np.ndarray  # (B, T) int, starts with bos
    labels: np.ndarray  # (B, T) int, ends with eos
    label_mask: np.ndarray  # (B, T) bool


def _pad(seqs, width, fill=0):
    out = np.full((len(seqs), width), fill, dtype=np.int64)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = s
    return out


def make_batch(
    config: ModelConfig, sources: Sequence[Sequence[int]], targets: Sequence[Sequence[int]], bos=1, eos=2, pad=0
) -> Batch:
    if len(sources) != len(targets) or not sources:
        raise ShapeError(f"{len(sources)} sources vs {len(targets)} targets")
    for seq in list(sources) + list(targets):
        if any(not 0 <= int(t) < config.vocab_size for t in seq):
            raise ShapeError(f"token id outside vocabulary of size {config.vocab_size}")
    if any(len(s) == 0 for s in sources):
        raise ShapeError("empty source sequence")
    s_len = max(len(s) for s in sources)
    t_len = max(len(t) for t in targets) + 1
    if max(s_len, t_len) > config.max_positions:
        raise ShapeError(f"sequence longer than max_positions={config.max_positions}")
    src = _pad(sources, s_len, pad)
    dec_in = _pad([[bos] + list(t) for t in targets], t_len, pad)
    labels = _pad([list(t) + [eos] for t in targets], t_len, pad)
    lengths = np.array([len(t) + 1 for t in targets])
    label_mask = np.arange(t_len)[None, :] < lengths[:, None]
    src_mask = np.arange(s_len)[None, :] < np.array([len(s) for s in sources])[:, None]
    return Batch(src, src_mask, dec_in, labels, label_mask)


# -- layers ----------------------------------------------------------------------------


def _rows(x):
    return np.ascontiguousarray(x.reshape(-1, x.shape[-1]))


def _linear_backward(dy, x, w_name, b_name, W, grads):
    grads[w_name] += _rows(x).T @ _rows(dy)
    grads[b_name] += dy.reshape(-1, dy.shape[-1]).sum(axis=0)
    return dy @ W[w_name].T


def _ln(W, name, x, eps):
    y, xhat, rstd = K.layer_norm(_rows(x), W[f"{name}.g"], W[f"{name}.b"], eps)
    return y.reshape(x.shape), (name, xhat, rstd, x.shape)


def _ln_backward(dy, cache, W, grads):
    name, xhat, rstd, shape = cache
    dx, dg, db = K.layer_norm_backward(_rows(dy), xhat, rstd, W[f"{name}.g"])
    grads[f"{name}.g"] += dg
    grads[f"{name}.b"] += db
    return dx.reshape(shape)


def _split_heads(x, heads):
    b, t, d = x.shape
    return x.reshape(b, t, heads, d // heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, h, t, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)


def _attention(W, name, q_in, kv_in, bias, heads):
    wq, bq, wk, bk, wv, bv, wo, bo = (W[n] for n in _attn_names(name))
    q = _split_heads(q_in @ wq + bq, heads)
    k = _split_heads(kv_in @ wk + bk, heads)
    v = _split_heads(kv_in @ wv + bv, heads)
    scale = 1.0 / np.sqrt(q.shape[-1])
    scores = (q @ k.transpose(0, 1, 3, 2)) * scale + bias
    a = K.softmax_rows(_rows(scores)).reshape(scores.shape)
    o = _merge_heads(a @ v)
    return o @ wo + bo, (name, q_in, kv_in, q, k, v, a, o, scale)


def _attention_backward(dout, cache, W, grads, heads):
    name, q_in, kv_in, q, k, v, a, o, scale = cache
    n_wq, n_bq, n_wk, n_bk, n_wv, n_bv, n_wo, n_bo = _attn_names(name)
    do = _split_heads(_linear_backward(dout, o, n_wo, n_bo, W, grads), heads)
    da = do @ v.transpose(0, 1, 3, 2)
    dv = a.transpose(0, 1, 3, 2) @ do
    ds = K.softmax_rows_backward(_rows(a), _rows(da)).reshape(a.shape) * scale
    dq = ds @ k
    dk = ds.transpose(0, 1, 3, 2) @ q
    dq_in = _linear_backward(_merge_heads(dq), q_in, n_wq, n_bq, W, grads)
    dkv_in = _linear_backward(_merge_heads(dk), kv_in, n_wk, n_bk, W, grads)
    dkv_in = dkv_in + _linear_backward(_merge_heads(dv), kv_in, n_wv, n_bv, W, grads)
    return dq_in, dkv_in


def _ff(W, name, x):
    h = x @ W[f"{name}.w1"] + W[f"{name}.b1"]
    g = K.gelu(_rows(h)).reshape(h.shape)
    return g @ W[f"{name}.w2"] + W[f"{name}.b2"], (name, x, h, g)


def _ff_backward(dout, cache, W, grads):
    name, x, h, g = cache
    dg = _linear_backward(dout, g, f"{name}.w2", f"{name}.b2", W, grads)
    dh = K.gelu_backward(_rows(h), _rows(dg)).reshape(h.shape)
    return _linear_backward(dh, x, f"{name}.w1", f"{name}.b1", W, grads)


# -- encoder / decoder -------------------------------------------------------------------


def _embed(W, name, ids, c):
    return W[name][ids] + positional_encoding(c.max_positions, c.embed_dim)[: ids.shape[1]]


def _source_bias(src_mask):
    return np.where(src_mask, 0.0, NEG_INF)[:, None, None, :]


def _causal_bias(t):
    return np.triu(np.full((t, t), NEG_INF), k=1)[None, None]


def encode(params: ModelParams, src: np.ndarray, src_mask: np.ndarray):
    c, W = params.config, params.weights
    bias = _source_bias(src_mask)
    x = _embed(W, "enc.emb", src, c)
    caches = []
    for i in range(c.layers):
        h, ln1 = _ln(W, f"enc.{i}.ln1", x, c.ln_eps)
        a, att = _attention(W, f"enc.{i}.self", h, h, bias, c.heads)
        x = x + a
        h, ln2 = _ln(W, f"enc.{i}.ln2", x, c.ln_eps)
        f, ffc = _ff(W, f"enc.{i}.ff", h)
        x = x + f
        caches.append((ln1, att, ln2, ffc))
    out, ln_f = _ln(W, "enc.ln", x, c.ln_eps)
    return out, (caches, ln_f)


def _encode_backward(d_out, cache, params, grads, src):
    c, W = params.config, params.weights
    caches, ln_f = cache
    dx = _ln_backward(d_out, ln_f, W, grads)
    for i in reversed(range(c.layers)):
        ln1, att, ln2, ffc = caches[i]
        dx = dx + _ln_backward(_ff_backward(dx, ffc, W, grads), ln2, W, grads)
        dq, dkv = _attention_backward(dx, att, W, grads, c.heads)
        dx = dx + _ln_backward(dq + dkv, ln1, W, grads)
    np.add.at(grads["enc.emb"], src, dx)


def decode_states(params: ModelParams, dec_in: np.ndarray, memory: np.ndarray, src_mask: np.ndarray):
    c, W = params.config, params.weights
    src_bias = _source_bias(src_mask)
    self_bias = _causal_bias(dec_in.shape[1])
    y = _embed(W, "dec.emb", dec_in, c)
    caches = []
    for i in range(c.layers):
        h, ln1 = _ln(W, f"dec.{i}.ln1", y, c.ln_eps)
        a, satt = _attention(W, f"dec.{i}.self", h, h, self_bias, c.heads)
        y = y + a
        h, ln2 = _ln(W, f"dec.{i}.ln2", y, c.ln_eps)
        a, catt = _attention(W, f"dec.{i}.cross", h, memory, src_bias, c.heads)
        y = y + a
        h, ln3 = _ln(W, f"dec.{i}.ln3", y, c.ln_eps)
        f, ffc = _ff(W, f"dec.{i}.ff", h)
        y = y + f
        caches.append((ln1, satt, ln2, catt, ln3, ffc))
    out, ln_f = _ln(W, "dec.ln", y, c.ln_eps)
    return out, (caches, ln_f)


def _decode_backward(d_out, cache, params, grads, dec_in):
    c, W = params.config, params.weights
    caches, ln_f = cache
    dy = _ln_backward(d_out, ln_f, W, grads)
    d_memory = 0.0
    for i in reversed(range(c.layers)):
        ln1, satt, ln2, catt, ln3, ffc = caches[i]
        dy = dy + _ln_backward(_ff_backward(dy, ffc, W, grads), ln3, W, grads)
        dq, dmem = _attention_backward(dy, catt, W, grads, c.heads)
        d_memory = d_memory + dmem
        dy = dy + _ln_backward(dq, ln2, W, grads)
        dq, dkv = _attention_backward(dy, satt, W, grads, c.heads)
        dy = dy + _ln_backward(dq + dkv, ln1, W, grads)
    np.add.at(grads["dec.emb"], dec_in, dy)
    return d_memory


def output_logits(params: ModelParams, states: np.ndarray) -> np.ndarray:
    return states @ params.weights["out.w"] + params.weights["out.b"]


def step_logprobs(params: ModelParams, dec_in, memory, src_mask) -> np.ndarray:
    """Log-probabilities of the next token after each prefix in ``dec_in``."""
    states, _ = decode_states(params, dec_in, memory, src_mask)
    last = _rows(output_logits(params, states[:, -1:, :]))
    return last - np.logaddexp.reduce(last, axis=1, keepdims=True)


@dataclass
class DecoderState:
    """Per-layer key/value caches for incremental decoding.

    Self-attention keys and values grow by one position per step; the
    cross-attention projections of the encoder memory are computed once.
    """

    self_k: list
    self_v: list
    cross_k: list
    cross_v: list
    src_bias: np.ndarray
    position: int = 0

    def select(self, rows) -> DecoderState:
        """Reorder or repeat the batch rows (beam search bookkeeping)."""
        rows = np.asarray(rows, dtype=np.int64)
        return DecoderState(
            [k[rows] for k in self.self_k],
            [v[rows] for v in self.self_v],
            [k[rows] for k in self.cross_k],
            [v[rows] for v in self.cross_v],
            self.src_bias[rows],
            self.position,
        )


def start_decoding(params: ModelParams, memory: np.ndarray, src_mask: np.ndarray) -> DecoderState:
    c, W = params.config, params.weights
    b = memory.shape[0]
    dh = c.embed_dim // c.heads
    cross_k, cross_v = [], []
    for i in range(c.layers):
        name = f"dec.{i}.cross"
        cross_k.append(_split_heads(memory @ W[f"{name}.wk"] + W[f"{name}.bk"], c.heads))
        cross_v.append(_split_heads(memory @ W[f"{name}.wv"] + W[f"{name}.bv"], c.heads))
    empty = [np.zeros((b, c.heads, 0, dh)) for _ in range(c.layers)]
    return DecoderState(empty, list(empty), cross_k, cross_v, _source_bias(src_mask))


def _cached_attention(W, name, h, k, v, bias, heads):
    q = _split_heads(h @ W[f"{name}.wq"] + W[f"{name}.bq"], heads)
    scores = (q @ k.transpose(0, 1, 3, 2)) / np.sqrt(q.shape[-1]) + bias
    a = K.softmax_rows(_rows(scores)).reshape(scores.shape)
    return _merge_heads(a @ v) @ W[f"{name}.wo"] + W[f"{name}.bo"]


def decode_step(params: ModelParams, state: DecoderState, tokens) -> np.ndarray:
    """Feed one token per row; returns next-token log-probabilities (B, V).

    Equivalent to :func:`step_logprobs` on the full prefix, in time linear
    in the prefix length. ``state`` is advanced in place.
    """
    c, W = params.config, params.weights
    if state.position >= c.max_positions:
        raise ShapeError(f"decoding past max_positions={c.max_positions}")
    tokens = np.asarray(tokens, dtype=np.int64)
    y = W["dec.emb"][tokens][:, None, :] + positional_encoding(c.max_positions, c.embed_dim)[state.position]
    for i in range(c.layers):
        h, _ = _ln(W, f"dec.{i}.ln1", y, c.ln_eps)
        name = f"dec.{i}.self"
        k_new = _split_heads(h @ W[f"{name}.wk"] + W[f"{name}.bk"], c.heads)
        v_new = _split_heads(h @ W[f"{name}.wv"] + W[f"{name}.bv"], c.heads)
        state.self_k[i] = np.concatenate([state.self_k[i], k_new], axis=2)
        state.self_v[i] = np.concatenate([state.self_v[i], v_new], axis=2)
        y = y + _cached_attention(W, name, h, state.self_k[i], state.self_v[i], 0.0, c.heads)
        h, _ = _ln(W, f"dec.{i}.ln2", y, c.ln_eps)
        y = y + _cached_attention(W, f"dec.{i}.cross", h, state.cross_k[i], state.cross_v[i], state.src_bias, c.heads)
        h, _ = _ln(W, f"dec.{i}.ln3", y, c.ln_eps)
        f, _ = _ff(W, f"dec.{i}.ff", h)
        y = y + f
    state.position += 1
    out, _ = _ln(W, "dec.ln", y, c.ln_eps)
    logits = _rows(output_logits(params, out))
    return logits - np.logaddexp.reduce(logits, axis=1, keepdims=True)


# -- loss and gradients -----------------------------------------------------------------------


def loss_and_grads(params: ModelParams, batch: Batch, need_grads: bool = True):
    """Mean token cross-entropy over unpadded label positions, with gradients.

    Returns ``(loss, log-probabilities (B, T, V), grads or None)``.
    """
    c, W = params.config, params.weights
    memory, enc_cache = encode(params, batch.src, batch.src_mask)
    states, dec_cache = decode_states(params, batch.dec_in, memory, batch.src_mask)
    logits = output_logits(params, states)
    weights = batch.label_mask.reshape(-1).astype(np.float64)
    weights /= weights.sum()
    loss, logprobs, dlogits = K.cross_entropy(_rows(logits), batch.labels.reshape(-1), weights)
    logprobs = logprobs.reshape(logits.shape)
    if not need_grads:
        return loss, logprobs, None
    grads = {k: np.zeros_like(v) for k, v in W.items()}
    dlogits = dlogits.reshape(logits.shape)
    grads["out.w"] += _rows(states).T @ _rows(dlogits)
    grads["out.b"] += dlogits.reshape(-1, c.vocab_size).sum(axis=0)
    d_states = dlogits @ W["out.w"].T
    d_memory = _decode_backward(d_states, dec_cache, params, grads, batch.dec_in)
    _encode_backward(d_memory, enc_cache, params, grads, batch.src)
    return loss, logprobs, grads


def forward(params: ModelParams, source_ids, target_ids):
    """Log-probabilities over the shifted targets and the mean token loss.

    ``source_ids`` / ``target_ids`` are lists of id sequences (targets
    without bos/eos). Log-probabilities have shape (batch, max target
    length + 1, vocab); the extra position predicts eos.
    """
    batch = make_batch(params.config, source_ids, target_ids)
    loss, logprobs, _ = loss_and_grads(params, batch, need_grads=False)
    return logprobs, loss


def sequence_losses(logprobs: np.ndarray, batch: Batch) -> np.ndarray:
    """Per-sample mean token negative log-likelihood."""
    picked = np.take_along_axis(logprobs, batch.labels[..., None], axis=-1)[..., 0]
    mask = batch.label_mask
    return -(picked * mask).sum(axis=1) / mask.sum(axis=1)
