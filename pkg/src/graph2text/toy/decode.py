from __future__ import annotations

from typing import Sequence

import numpy as np

from .model import ModelParams, decode_step, encode, loss_and_grads, make_batch, start_decoding

BOS, EOS, PAD = 1, 2, 0


def _allowed(lp: np.ndarray) -> np.ndarray:
    # pad and bos are never generated.
    lp = lp.copy()
    lp[:, [PAD, BOS]] = -np.inf
    return lp


def _encode_sources(params: ModelParams, sources: Sequence[Sequence[int]]):
    batch = make_batch(params.config, sources, [[] for _ in sources])
    memory, _ = encode(params, batch.src, batch.src_mask)
    return memory, batch.src_mask


def greedy_decode(params: ModelParams, sources: Sequence[Sequence[int]], max_len: int) -> list[list[int]]:
    """Batched argmax decoding; each output ends with eos unless cut at ``max_len``."""
    max_len = min(max_len, params.config.max_positions)
    memory, src_mask = _encode_sources(params, sources)
    state = start_decoding(params, memory, src_mask)
    n = len(sources)
    tokens = np.full(n, BOS, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    outputs: list[list[int]] = [[] for _ in range(n)]
    for _ in range(max_len):
        nxt = _allowed(decode_step(params, state, tokens)).argmax(axis=1)
        for i in np.flatnonzero(~done):
            outputs[i].append(int(nxt[i]))
        done |= nxt == EOS
        if done.all():
            break
        tokens = nxt
    return outputs


def beam_search(params: ModelParams, source: Sequence[int], beam_size: int, max_len: int) -> list[int]:
    """Beam search ranked by cumulative log-probability.

    Hypotheses are compared by log-probability divided by length (eos
    included). The search runs until no open beam can still beat the best
    finished one, or ``max_len`` tokens were generated; open beams at
    ``max_len`` compete with the finished ones.
    """
    max_len = min(max_len, params.config.max_positions)
    memory, src_mask = _encode_sources(params, [source])
    state = start_decoding(params, memory, src_mask)
    beams: list[tuple[float, list[int]]] = [(0.0, [])]
    finished: list[tuple[float, list[int]]] = []
    tokens = np.array([BOS], dtype=np.int64)
    for step in range(max_len):
        lp = _allowed(decode_step(params, state, tokens))
        candidates = []
        for b, (score, toks) in enumerate(beams):
            top = np.argsort(-lp[b], kind="stable")[: beam_size + 1]
            candidates.extend((score + lp[b, t], toks + [int(t)], b) for t in top)
        candidates.sort(key=lambda c: -c[0])
        beams, parents = [], []
        for score, toks, parent in candidates:
            if toks[-1] == EOS:
                finished.append((score, toks))
            else:
                beams.append((score, toks))
                parents.append(parent)
            if len(beams) == beam_size:
                break
        if not beams:
            break
        if finished:
            # Log-probs are <= 0, so an open beam's normalized score can at
            # best reach score / max_len; stop once none can win.
            best = max(score / len(toks) for score, toks in finished)
            if all(score / max_len <= best for score, _ in beams):
                break
        state = state.select(parents)
        tokens = np.array([toks[-1] for _, toks in beams], dtype=np.int64)
    return max(finished + beams, key=lambda c: c[0] / len(c[1]))[1]


def decode(params: ModelParams, source_ids: Sequence[int], beam_size: int = 1, max_len: int = 64) -> list[int]:
    """Decode one source; ``beam_size`` 1 is plain greedy search."""
    if beam_size < 1:
        raise ValueError("beam_size must be >= 1")
    if beam_size == 1:
        return greedy_decode(params, [source_ids], max_len)[0]
    return beam_search(params, source_ids, beam_size, max_len)


def decode_many(params: ModelParams, sources, beam_size: int = 1, max_len: int = 64) -> list[list[int]]:
    if beam_size == 1:
        return greedy_decode(params, sources, max_len)
    return [beam_search(params, s, beam_size, max_len) for s in sources]


def sequence_logprob(params: ModelParams, source: Sequence[int], output: Sequence[int]) -> float:
    """Total log-probability of ``output`` (generated ids, eos included if present)."""
    target = list(output[:-1]) if output and output[-1] == EOS else list(output)
    batch = make_batch(params.config, [source], [target])
    _, logprobs, _ = loss_and_grads(params, batch, need_grads=False)
    n = len(output)
    return float(logprobs[0, np.arange(n), np.asarray(output, dtype=np.int64)].sum())
