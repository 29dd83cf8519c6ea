import json
import math
import re
from collections import Counter
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from graph2text.errors import EmptyHypothesisSet, LengthMismatch
from graph2text.metrics import METRICS, align_exact, bleu, chrf_pp, count_chunks, meteor_exact, tokenize

FIXTURE = json.loads((Path(__file__).parent / "fixtures" / "metric_pairs.json").read_text(encoding="utf-8"))

SENTENCE = st.lists(st.sampled_from(["a", "b", "c", "the", "cat", ",", "."]), min_size=1, max_size=12).map(" ".join)


def brute_chrf(hyp, ref, char_order=6, word_order=2, beta=2.0):
    """Enumerate every n-gram of both sides; average P and R over orders present on both."""

    def grams(seq, n):
        return Counter(tuple(seq[i : i + n]) for i in range(len(seq) - n + 1))

    hc, rc = hyp.replace(" ", ""), ref.replace(" ", "")
    hw = re.sub(r"([^\w\s])", r" \1 ", hyp).split()
    rw = re.sub(r"([^\w\s])", r" \1 ", ref).split()
    ps, rs = [], []
    for seq_h, seq_r, top in ((hc, rc, char_order), (hw, rw, word_order)):
        for n in range(1, top + 1):
            gh, gr = grams(seq_h, n), grams(seq_r, n)
            if gh and gr:
                m = sum((gh & gr).values())
                ps.append(m / sum(gh.values()))
                rs.append(m / sum(gr.values()))
    p, r = sum(ps) / len(ps), sum(rs) / len(rs)
    return 0.0 if p + r == 0 else 100 * (1 + beta**2) * p * r / (beta**2 * p + r)


def test_tokenizer():
    assert tokenize("Rome's capital, Italy.") == ["Rome", "'", "s", "capital", ",", "Italy", "."]


def test_bleu_hand_counted_zero():
    assert bleu(["the the the the"], [["the cat"]]).corpus_score == 0.0


def test_bleu_sentence_floor_smoothing():
    report = bleu(["the the the the"], [["the cat"]])
    # p1 = 1/4 (clipped), p2..p4 floored at 1/(2*4); hyp longer than ref so BP = 1.
    expected = 100 * math.exp((math.log(1 / 4) + 3 * math.log(1 / 8)) / 4)
    assert report.sentence_scores[0] == pytest.approx(expected)


def test_chrf_abc_abd():
    score = chrf_pp(["abc"], [["abd"]]).corpus_score
    assert score == pytest.approx(brute_chrf("abc", "abd"))
    assert score == pytest.approx(100 * 7 / 24)


def test_meteor_identical_and_reversed():
    words = "w0 w1 w2 w3 w4 w5 w6 w7 w8 w9"
    assert meteor_exact([words], [[words]]).corpus_score == 100.0
    reversed_words = " ".join(reversed(words.split()))
    # Ten singleton chunks: penalty 0.5 * (10/10)^3 with Fmean 1.
    assert meteor_exact([reversed_words], [[words]]).corpus_score == pytest.approx(50.0)


def test_meteor_zero_overlap():
    assert meteor_exact(["x y z"], [["a b c"]]).corpus_score == 0.0


def test_alignment_prefers_contiguous_chunks():
    pairs = align_exact("a b a b".split(), "a b x a b".split())
    assert pairs == [(0, 0), (1, 1), (2, 3), (3, 4)]
    assert count_chunks(pairs) == 2


def test_fixture_matches_reference_scorer():
    hyps = [p["hypothesis"] for p in FIXTURE["pairs"]]
    refs = [p["references"] for p in FIXTURE["pairs"]]
    assert len(hyps) == 50
    assert bleu(hyps, refs).corpus_score == pytest.approx(FIXTURE["bleu"], abs=0.1)
    assert chrf_pp(hyps, refs).corpus_score == pytest.approx(FIXTURE["chrf_pp"], abs=0.1)


@pytest.mark.parametrize("name", sorted(METRICS))
def test_errors(name):
    fn = METRICS[name]
    with pytest.raises(EmptyHypothesisSet):
        fn([], [])
    with pytest.raises(LengthMismatch) as info:
        fn(["a", "b"], [["a"]])
    assert info.value.line == 2
    with pytest.raises(LengthMismatch):
        fn(["a"], [[]])


@pytest.mark.parametrize("name", sorted(METRICS))
def test_perfect_corpus_scores_100(name):
    texts = [p["references"][0] for p in FIXTURE["pairs"]]
    assert METRICS[name](texts, [[t] for t in texts]).corpus_score == 100.0


@given(st.lists(st.tuples(SENTENCE, SENTENCE), min_size=1, max_size=6))
def test_bleu_meteor_100_iff_token_identical(pairs):
    hyps = [h for h, _ in pairs]
    refs = [[r] for _, r in pairs]
    identical = all(tokenize(h) == tokenize(r) for h, r in pairs)
    for fn in (bleu, meteor_exact):
        assert (fn(hyps, refs).corpus_score == 100.0) == identical


@given(st.lists(st.tuples(SENTENCE, SENTENCE), min_size=1, max_size=6))
def test_chrf_100_iff_identical(pairs):
    hyps = [h for h, _ in pairs]
    refs = [[r] for _, r in pairs]
    identical = all(h == r for h, r in pairs)
    assert (chrf_pp(hyps, refs).corpus_score == pytest.approx(100.0)) == identical


@given(SENTENCE, SENTENCE)
def test_chrf_matches_brute_force(hyp, ref):
    assert chrf_pp([hyp], [[ref]]).corpus_score == pytest.approx(brute_chrf(hyp, ref))


@given(st.lists(st.tuples(SENTENCE, SENTENCE), min_size=2, max_size=6), st.randoms(use_true_random=False))
def test_pair_order_invariance(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    for fn in (bleu, chrf_pp):
        a = fn([h for h, _ in pairs], [[r] for _, r in pairs]).corpus_score
        b = fn([h for h, _ in shuffled], [[r] for _, r in shuffled]).corpus_score
        assert a == pytest.approx(b)


@given(SENTENCE)
def test_appending_wrong_token_never_helps(sentence):
    perfect = bleu([sentence], [[sentence]]).sentence_scores[0]
    worse = bleu([sentence + " zzz"], [[sentence]]).sentence_scores[0]
    assert worse <= perfect


@given(st.lists(st.tuples(SENTENCE, st.lists(SENTENCE, min_size=1, max_size=3)), min_size=1, max_size=5))
def test_scores_bounded(pairs):
    hyps = [h for h, _ in pairs]
    refs = [r for _, r in pairs]
    for fn in METRICS.values():
        report = fn(hyps, refs)
        assert 0.0 <= report.corpus_score <= 100.0
        assert all(0.0 <= s <= 100.0 for s in report.sentence_scores)
