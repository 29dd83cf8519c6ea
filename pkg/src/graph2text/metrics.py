"""Surface metrics: corpus/sentence BLEU, chrF++ and exact-match METEOR.

All three share :func:`tokenize`, which splits on whitespace after
separating every punctuation character from its neighbours.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .errors import EmptyHypothesisSet, LengthMismatch

_PUNCT_RE = re.compile(r"([^\w\s])")
TOKENIZER_NAME = "punct-split"


def tokenize(text: str) -> list[str]:
    return _PUNCT_RE.sub(r" \1 ", text).split()


@dataclass(frozen=True)
class NGramProfile:
    counts: Counter
    order: int

    @classmethod
    def of(cls, items: Sequence, order: int) -> NGramProfile:
        counts = Counter(tuple(items[i : i + order]) for i in range(len(items) - order + 1))
        return cls(counts, order)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def overlap(self, other: NGramProfile) -> int:
        return sum(min(c, other.counts[g]) for g, c in self.counts.items() if g in other.counts)


@dataclass(frozen=True)
class MetricReport:
    metric_name: str
    corpus_score: float
    sentence_scores: list = field(default_factory=list)
    config_digest: str = ""

    def to_json(self) -> dict:
        return {
            "metric": self.metric_name,
            "corpus_score": self.corpus_score,
            "sentence_scores": list(self.sentence_scores),
            "config": self.config_digest,
        }


def _check_inputs(hypotheses, references):
    if len(hypotheses) == 0:
        raise EmptyHypothesisSet("no hypotheses to score")
    if len(hypotheses) != len(references):
        raise LengthMismatch(
            f"{len(hypotheses)} hypotheses but {len(references)} reference sets",
            line=min(len(hypotheses), len(references)) + 1,
        )
    for i, refs in enumerate(references):
        if isinstance(refs, str) or len(refs) == 0:
            raise LengthMismatch(f"hypothesis {i + 1} needs a non-empty list of references", line=i + 1)


def _clip(score: float) -> float:
    return min(100.0, max(0.0, score))


# -- BLEU ---------------------------------------------------------------------


def _bleu_stats(hyp: list[str], refs: list[list[str]], max_order: int):
    matches, totals = [], []
    for n in range(1, max_order + 1):
        hyp_ngrams = NGramProfile.of(hyp, n)
        max_ref = Counter()
        for ref in refs:
            for gram, count in NGramProfile.of(ref, n).counts.items():
                max_ref[gram] = max(max_ref[gram], count)
        matches.append(sum(min(c, max_ref[g]) for g, c in hyp_ngrams.counts.items()))
        totals.append(hyp_ngrams.total)
    # Closest reference length, ties broken towards the shorter one.
    ref_len = min((abs(len(r) - len(hyp)), len(r)) for r in refs)[1]
    return matches, totals, len(hyp), ref_len


def _bleu_from_stats(matches, totals, hyp_len, ref_len, smooth=False) -> float:
    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    orders = 0
    for m, t in zip(matches, totals):
        if t == 0:
            continue  # effective order: hypothesis too short for this n
        orders += 1
        if m == 0:
            if not smooth:
                return 0.0
            log_sum += math.log(1.0 / (2 * hyp_len))
        else:
            log_sum += math.log(m / t)
    if orders == 0:
        return 0.0
    bp = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    return _clip(100.0 * bp * math.exp(log_sum / orders))


def bleu(hypotheses: Sequence[str], references: Sequence[Sequence[str]], max_order: int = 4) -> MetricReport:
    """Corpus BLEU with clipped n-gram precisions pooled over the corpus.

    Sentence scores use floor smoothing: an order with no matches counts
    as precision ``1 / (2 * hypothesis length)``.
    """
    _check_inputs(hypotheses, references)
    corpus_m = [0] * max_order
    corpus_t = [0] * max_order
    corpus_h = corpus_r = 0
    sentence_scores = []
    for hyp, refs in zip(hypotheses, references):
        m, t, h, r = _bleu_stats(tokenize(hyp), [tokenize(x) for x in refs], max_order)
        sentence_scores.append(_bleu_from_stats(m, t, h, r, smooth=True))
        corpus_m = [a + b for a, b in zip(corpus_m, m)]
        corpus_t = [a + b for a, b in zip(corpus_t, t)]
        corpus_h += h
        corpus_r += r
    score = _bleu_from_stats(corpus_m, corpus_t, corpus_h, corpus_r)
    digest = f"bleu|order={max_order}|tok={TOKENIZER_NAME}|ref-len=closest|sent-smooth=floor-1/2h"
    return MetricReport("bleu", score, sentence_scores, digest)


# -- chrF++ -------------------------------------------------------------------


def _chrf_stats(hyp: str, ref: str, char_order: int, word_order: int) -> list[int]:
    stats = []
    hyp_chars, ref_chars = "".join(hyp.split()), "".join(ref.split())
    for n in range(1, char_order + 1):
        hp, rp = NGramProfile.of(hyp_chars, n), NGramProfile.of(ref_chars, n)
        stats += [hp.total, rp.total, hp.overlap(rp)]
    hyp_words, ref_words = tokenize(hyp), tokenize(ref)
    for n in range(1, word_order + 1):
        hp, rp = NGramProfile.of(hyp_words, n), NGramProfile.of(ref_words, n)
        stats += [hp.total, rp.total, hp.overlap(rp)]
    return stats


def _chrf_from_stats(stats: Sequence[int], beta: float) -> float:
    # Precision and recall are averaged over the orders where both sides
    # have n-grams, then combined into one F-beta.
    factor = beta**2
    avg_p = avg_r = 0.0
    orders = 0
    for i in range(0, len(stats), 3):
        n_hyp, n_ref, n_match = stats[i : i + 3]
        if n_hyp > 0 and n_ref > 0:
            avg_p += n_match / n_hyp
            avg_r += n_match / n_ref
            orders += 1
    if orders == 0:
        return 0.0
    avg_p /= orders
    avg_r /= orders
    if avg_p + avg_r == 0:
        return 0.0
    return _clip(100.0 * (1 + factor) * avg_p * avg_r / (factor * avg_p + avg_r))


def chrf_pp(
    hypotheses: Sequence[str],
    references: Sequence[Sequence[str]],
    char_order: int = 6,
    word_order: int = 2,
    beta: float = 2.0,
) -> MetricReport:
    """chrF++: character 1..6-grams (whitespace ignored) plus word 1..2-grams."""
    _check_inputs(hypotheses, references)
    total = [0] * (3 * (char_order + word_order))
    sentence_scores = []
    for hyp, refs in zip(hypotheses, references):
        best, best_score = None, -1.0
        for ref in refs:
            stats = _chrf_stats(hyp, ref, char_order, word_order)
            score = _chrf_from_stats(stats, beta)
            if score > best_score:
                best, best_score = stats, score
        sentence_scores.append(best_score)
        total = [a + b for a, b in zip(total, best)]
    digest = f"chrf|char-order={char_order}|word-order={word_order}|beta={beta:g}|tok={TOKENIZER_NAME}"
    return MetricReport("chrf++", _chrf_from_stats(total, beta), sentence_scores, digest)


# -- METEOR (exact match only) ---------------------------------------------------


def align_exact(hyp: Sequence[str], ref: Sequence[str]) -> list[tuple[int, int]]:
    """Maximum exact unigram alignment, preferring to extend the current chunk.

    Each hypothesis token takes the reference position right after the
    previous match when that token fits there, else the leftmost unused
    occurrence.
    """
    free: dict[str, list[int]] = {}
    for j, tok in enumerate(ref):
        free.setdefault(tok, []).append(j)
    pairs = []
    prev = None
    for i, tok in enumerate(hyp):
        slots = free.get(tok)
        if not slots:
            prev = None
            continue
        j = prev[1] + 1 if prev and prev[0] == i - 1 and prev[1] + 1 in slots else slots[0]
        slots.remove(j)
        pairs.append((i, j))
        prev = (i, j)
    return pairs


def count_chunks(pairs: Sequence[tuple[int, int]]) -> int:
    chunks = 0
    prev = None
    for i, j in sorted(pairs):
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def _meteor_stats(hyp: list[str], ref: list[str]):
    pairs = align_exact(hyp, ref)
    matches = len(pairs)
    chunks = count_chunks(pairs)
    # A perfect, fully ordered match carries no fragmentation penalty.
    if matches == len(hyp) == len(ref) and chunks == 1:
        chunks = 0
    return matches, chunks, len(hyp), len(ref)


def _meteor_from_stats(matches, chunks, hyp_len, ref_len, alpha=0.9, beta=3.0, gamma=0.5) -> float:
    if matches == 0:
        return 0.0
    p, r = matches / hyp_len, matches / ref_len
    fmean = p * r / (alpha * p + (1 - alpha) * r)
    penalty = gamma * (chunks / matches) ** beta
    return _clip(100.0 * fmean * (1 - penalty))


def meteor_exact(hypotheses: Sequence[str], references: Sequence[Sequence[str]]) -> MetricReport:
    """Exact-match METEOR: Fmean = 10PR / (R + 9P) with a 0.5 * frag^3 penalty."""
    _check_inputs(hypotheses, references)
    agg = [0, 0, 0, 0]
    sentence_scores = []
    for hyp, refs in zip(hypotheses, references):
        h = tokenize(hyp)
        scored = [(_meteor_from_stats(*s), s) for s in (_meteor_stats(h, tokenize(r)) for r in refs)]
        best_score, best = max(scored, key=lambda x: x[0])
        sentence_scores.append(best_score)
        agg = [a + b for a, b in zip(agg, best)]
    digest = f"meteor|modules=exact|alpha=0.9|beta=3|gamma=0.5|tok={TOKENIZER_NAME}|case=sensitive"
    return MetricReport("meteor", _meteor_from_stats(*agg), sentence_scores, digest)


METRICS = {"bleu": bleu, "chrf": chrf_pp, "meteor": meteor_exact}
