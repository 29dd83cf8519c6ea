"""Regenerate tests/fixtures/metric_pairs.json with an independent scorer.

Run with an interpreter that has sacrebleu installed (it is not a package
dependency):

    /path/to/venv/bin/python scripts/make_metric_fixture.py

Texts are pre-tokenized with the package tokenizer rule (punctuation split
off) and scored with sacrebleu ``tokenize="none"`` so that both sides see
identical tokens.
"""

import json
import random
import re
from pathlib import Path

import sacrebleu
from sacrebleu.metrics import BLEU, CHRF

WORDS = (
    "the a river city museum was built in born is located near capital of Italy Rome Alan Bean pilot "
    "team played for league and which has population runs through mountain region famous writer "
    "novel published by company founded airport serves club ground"
).split()
PUNCT = [",", ".", "(", ")", "'s", ";"]


def tokenize(text):
    return re.sub(r"([^\w\s])", r" \1 ", text).split()


def sentence(rng, n):
    out = []
    for _ in range(n):
        out.append(rng.choice(PUNCT) if rng.random() < 0.1 else rng.choice(WORDS))
    return " ".join(out)


def perturb(rng, ref):
    toks = ref.split()
    out = []
    for t in toks:
        r = rng.random()
        if r < 0.15:
            continue
        if r < 0.3:
            out.append(rng.choice(WORDS))
        else:
            out.append(t)
        if rng.random() < 0.05:
            out.append(rng.choice(WORDS))
    if rng.random() < 0.2 and len(out) > 3:
        i = rng.randrange(len(out) - 2)
        out[i], out[i + 1] = out[i + 1], out[i]
    return " ".join(out) or rng.choice(WORDS)


def main():
    rng = random.Random(20240607)
    pairs = []
    for _ in range(50):
        ref = sentence(rng, rng.randint(4, 25))
        second = perturb(rng, ref) if rng.random() < 0.3 else None
        hyp = perturb(rng, ref)
        pairs.append({"hypothesis": hyp, "references": [ref] + ([second] if second else [])})
    n_refs = max(len(p["references"]) for p in pairs)
    hyps = [" ".join(tokenize(p["hypothesis"])) for p in pairs]
    # sacrebleu takes one stream per reference position; missing ones are None.
    streams = [
        [" ".join(tokenize(p["references"][k])) if k < len(p["references"]) else None for p in pairs]
        for k in range(n_refs)
    ]
    bleu_metric = BLEU(tokenize="none")
    chrf_metric = CHRF(word_order=2)
    bleu = bleu_metric.corpus_score(hyps, streams)
    chrf = chrf_metric.corpus_score(hyps, streams)
    fixture = {
        "provenance": (
            f"sacrebleu {sacrebleu.__version__}; BLEU(tokenize='none'), CHRF(word_order=2) "
            "on texts pre-tokenized with re.sub(r'([^\\w\\s])', r' \\1 ', text).split(); "
            "generated by scripts/make_metric_fixture.py"
        ),
        "bleu_signature": str(bleu_metric.get_signature()),
        "chrf_signature": str(chrf_metric.get_signature()),
        "bleu": bleu.score,
        "chrf_pp": chrf.score,
        "pairs": pairs,
    }
    out = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "metric_pairs.json"
    out.write_text(json.dumps(fixture, indent=2) + "\n", encoding="utf-8")
    print(f"bleu {bleu.score:.4f} chrF++ {chrf.score:.4f} -> {out}")


if __name__ == "__main__":
    main()
