"""Span-masking corpus generation for language-model adaptation."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Iterator, Optional

import numpy as np

from .errors import InconsistentPair, TooManySpans

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseConfig:
    style: str = "single-mask"  # single-mask | sentinel
    mask_ratio: float = 0.15
    mean_span_length: float = 3.0
    seed: int = 0
    mask_token: str = "⟨mask⟩"
    sentinel_prefix: str = "⟨extra_id_"
    sentinel_suffix: str = "⟩"
    max_sentinels: int = 100

    def __post_init__(self):
        if self.style not in ("single-mask", "sentinel"):
            raise ValueError(f"unknown noise style {self.style!r}")
        if not 0 < self.mask_ratio < 1:
            raise ValueError("mask_ratio must lie in (0, 1)")
        if self.mean_span_length < 1:
            raise ValueError("mean_span_length must be >= 1")
        if self.max_sentinels < 1:
            raise ValueError("max_sentinels must be >= 1")

    def sentinel(self, index: int) -> str:
        return f"{self.sentinel_prefix}{index}{self.sentinel_suffix}"

    def sentinel_index(self, token: str) -> Optional[int]:
        pre, suf = self.sentinel_prefix, self.sentinel_suffix
        if token.startswith(pre) and token.endswith(suf):
            middle = token[len(pre) : len(token) - len(suf)]
            if middle.isdigit():
                return int(middle)
        return None


@dataclass(frozen=True)
class NoisedPair:
    input_tokens: tuple[str, ...]
    target_tokens: tuple[str, ...]
    masked_count: int
    original_length: int

    def to_json(self) -> dict:
        return {
            "input": " ".join(self.input_tokens),
            "target": " ".join(self.target_tokens),
            "masked_count": self.masked_count,
            "original_length": self.original_length,
        }


def mask_budget(length: int, ratio: float) -> int:
    """round-half-up(ratio * length), at least 1 and at most ``length``."""
    exact = Decimal(repr(ratio)) * length
    return min(length, max(1, int(exact.quantize(Decimal(1), rounding=ROUND_HALF_UP))))


def sample_spans(length: int, c: NoiseConfig, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Draw non-overlapping ``(start, end)`` spans covering the mask budget.

    Span lengths are Poisson(mean_span_length) clipped to [1, remaining
    budget]. Spans are kept non-adjacent; when the unmasked tokens cannot
    separate them all, trailing spans are merged.
    """
    budget = mask_budget(length, c.mask_ratio)
    lengths = []
    remaining = budget
    while remaining:
        span = min(max(int(rng.poisson(c.mean_span_length)), 1), remaining)
        lengths.append(span)
        remaining -= span
    unmasked = length - budget
    while len(lengths) - 1 > unmasked:
        last = lengths.pop()
        lengths[-1] += last
    k = len(lengths)
    # Interior gaps get one token each; the spare tokens are spread over the
    # k + 1 gaps as a uniformly random composition (stars and bars).
    spare = unmasked - (k - 1)
    bars = np.sort(rng.choice(spare + k, size=k, replace=False))
    extra = np.diff(np.concatenate(([-1], bars, [spare + k]))) - 1
    spans = []
    pos = 0
    for i, span in enumerate(lengths):
        pos += int(extra[i]) + (1 if i else 0)
        spans.append((pos, pos + span))
        pos += span
    return spans


def noise(text: str, c: NoiseConfig, seed=None) -> NoisedPair:
    """Mask whitespace-token spans of ``text``.

    ``seed`` overrides ``c.seed`` (anything :func:`numpy.random.default_rng`
    accepts); corpus-level callers pass a per-record derived seed.
    """
    tokens = text.split()
    if not tokens:
        raise ValueError("cannot noise an empty text")
    rng = np.random.default_rng(c.seed if seed is None else seed)
    spans = sample_spans(len(tokens), c, rng)
    if c.style == "sentinel" and len(spans) + 1 > c.max_sentinels:
        raise TooManySpans(f"{len(spans)} spans need {len(spans) + 1} sentinels, max is {c.max_sentinels}")

    source: list[str] = []
    target: list[str] = []
    cursor = 0
    for i, (start, end) in enumerate(spans):
        source.extend(tokens[cursor:start])
        if c.style == "sentinel":
            source.append(c.sentinel(i))
            target.append(c.sentinel(i))
            target.extend(tokens[start:end])
        else:
            source.append(c.mask_token)
        cursor = end
    source.extend(tokens[cursor:])
    if c.style == "sentinel":
        target.append(c.sentinel(len(spans)))
    else:
        target = list(tokens)
    masked = sum(end - start for start, end in spans)
    return NoisedPair(tuple(source), tuple(target), masked, len(tokens))


def _mask_alignment_ok(source: list[str], target: list[str], mask: str) -> bool:
    # reachable[j]: source[:i] can expand to target[:j], each mask covering >= 1 token.
    reachable = [True] + [False] * len(target)
    for tok in source:
        nxt = [False] * (len(target) + 1)
        if tok == mask:
            run = False
            for j in range(1, len(target) + 1):
                run = run or reachable[j - 1]
                nxt[j] = run
        else:
            for j in range(1, len(target) + 1):
                nxt[j] = reachable[j - 1] and target[j - 1] == tok
        reachable = nxt
    return reachable[-1]


def reconstruct(p: NoisedPair, c: NoiseConfig) -> list[str]:
    """Splice the target spans back into the noised input."""
    source, target = list(p.input_tokens), list(p.target_tokens)
    if c.style == "single-mask":
        if not _mask_alignment_ok(source, target, c.mask_token):
            raise InconsistentPair("noised input is not a masking of the target")
        return target

    spans: list[list[str]] = []
    expected = 0
    for tok in target:
        idx = c.sentinel_index(tok)
        if idx is None:
            if not spans:
                raise InconsistentPair("target must start with a sentinel")
            spans[-1].append(tok)
            continue
        if idx != expected:
            raise InconsistentPair(f"target sentinel {idx} out of order (expected {expected})")
        if spans and not spans[-1]:
            raise InconsistentPair(f"empty span before sentinel {idx}")
        spans.append([])
        expected += 1
    if not spans or spans[-1]:
        raise InconsistentPair("target must end with a closing sentinel")
    spans.pop()

    out = []
    seen = 0
    for tok in source:
        idx = c.sentinel_index(tok)
        if idx is None:
            out.append(tok)
            continue
        if idx != seen or idx >= len(spans):
            raise InconsistentPair(f"input sentinel {idx} does not match the target")
        out.extend(spans[idx])
        seen += 1
    if seen != len(spans):
        raise InconsistentPair(f"input has {seen} sentinels, target has {len(spans)}")
    return out


def noise_corpus(
    texts: Iterable[str], c: NoiseConfig, errors: Optional[list] = None
) -> Iterator[NoisedPair]:
    """Noise each text with a seed derived from ``(c.seed, record index)``.

    Failing records are logged (and appended to ``errors`` as
    ``(index, exception)``) and skipped; output keeps input order.
    """
    for index, text in enumerate(texts):
        try:
            yield noise(text, c, seed=[c.seed, index])
        except (ValueError, TooManySpans) as exc:
            log.warning("record %d: %s", index, exc)
            if errors is not None:
                errors.append((index, exc))
