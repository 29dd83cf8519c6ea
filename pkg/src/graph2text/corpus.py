"""Corpus ingestion, canonical JSON-lines I/O, statistics and sampling."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, TextIO, Union

import numpy as np

from .errors import CorpusError, EmptyCorpus, IncompatibleFormats, ParseError
from .experiment import ExperimentManifest, Phase
from .graph import SPLITS, AmrGraph, KnowledgeGraph, Sample, graph_order, validate_amr
from .kg import LinearizationScheme
from .metrics import tokenize
from .penman import format_sidecar, parse_penman, read_sidecar, serialize_penman

log = logging.getLogger(__name__)

FORMATS = ("amr-sidecar", "kg-jsonl", "text")
PathLike = Union[str, Path]


@dataclass(frozen=True)
class RecordError:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


# -- JSON-lines schema ---------------------------------------------------------


def sample_to_json(s: Sample) -> dict:
    record: dict = {"id": s.id}
    g = s.payload
    if isinstance(g, KnowledgeGraph):
        record["title"] = g.title
        record["entities"] = list(g.entities)
        record["triples"] = [[t.head, t.relation, t.tail] for t in g.triples]
    else:
        record["amr"] = serialize_penman(g)
    record["references"] = list(s.references)
    record["split"] = s.split
    record["category"] = s.category
    return record


def sample_from_json(record: dict, default_id: str = "") -> Sample:
    if not isinstance(record, dict):
        raise ValueError("record is not a JSON object")
    if "amr" in record:
        payload = parse_penman(record["amr"])
    else:
        triples = record.get("triples")
        if triples is None:
            raise ValueError("record has neither 'triples' nor 'amr'")
        for t in triples:
            if not isinstance(t, (list, tuple)) or len(t) != 3:
                raise ValueError(f"triple {t!r} is not a [head, relation, tail] list")
        entities = record.get("entities")
        if entities is None:
            payload = KnowledgeGraph.from_triples(triples, title=record.get("title"))
        else:
            payload = KnowledgeGraph(entities=entities, triples=triples, title=record.get("title"))
    references = record.get("references")
    if not isinstance(references, list) or not references:
        raise ValueError("record has no references")
    return Sample(
        id=str(record.get("id", default_id)),
        payload=payload,
        references=references,
        split=record.get("split", "train"),
        category=record.get("category"),
    )


def write_jsonl(samples: Iterable[Sample], out: Union[PathLike, TextIO]) -> int:
    """Write the canonical JSON-lines form; returns the record count."""
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8") as fh:
            return write_jsonl(samples, fh)
    n = 0
    for s in samples:
        out.write(json.dumps(sample_to_json(s), ensure_ascii=False) + "\n")
        n += 1
    return n


def write_sidecar(samples: Iterable[Sample], out: TextIO) -> int:
    n = 0
    for s in samples:
        if n:
            out.write("\n")
        out.write(format_sidecar({"id": s.id, "snt": s.references[0]}, s.payload))
        n += 1
    return n


# -- ingestion -------------------------------------------------------------------


def _iter_jsonl(lines: Iterable[str], split, errors) -> Iterator[Sample]:
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            if split is not None:
                record = {**record, "split": split}
            yield sample_from_json(record, default_id=f"line{lineno}")
        except (ValueError, ParseError) as exc:
            errors.append(RecordError(lineno, str(exc)))


def _iter_sidecar(lines: Iterable[str], split, errors) -> Iterator[Sample]:
    for n, (lineno, meta, text) in enumerate(read_sidecar(lines)):
        try:
            if not text:
                raise ValueError("block has no graph")
            if not meta.get("snt"):
                raise ValueError("block has no '# ::snt' reference")
            yield Sample(
                id=meta.get("id") or f"amr-{n}",
                payload=parse_penman(text),
                references=[meta["snt"]],
                split=split or "train",
            )
        except (ValueError, ParseError) as exc:
            errors.append(RecordError(lineno, str(exc)))


def ingest(
    source: Union[PathLike, Iterable[str]],
    fmt: str,
    split: Optional[str] = None,
    errors: Optional[list] = None,
) -> Iterator[Sample]:
    """Stream samples from an AMR release file or canonical JSON-lines.

    Bad records are logged and appended to ``errors`` as
    :class:`RecordError`; the stream only fails (with :class:`CorpusError`)
    when no record parses at all. ``split`` overrides the split of every
    record.
    """
    if fmt not in ("amr-sidecar", "kg-jsonl"):
        raise ValueError(f"unknown corpus format {fmt!r}")
    if split is not None and split not in SPLITS:
        raise ValueError(f"unknown split {split!r}")
    errors = [] if errors is None else errors
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            yield from ingest(fh, fmt, split, errors)
        return
    reader = _iter_sidecar if fmt == "amr-sidecar" else _iter_jsonl
    count = 0
    for sample in reader(source, split, errors):
        count += 1
        yield sample
    for err in errors:
        log.warning("%s", err)
    if count == 0:
        detail = f": {errors[0]}" if errors else ""
        raise CorpusError(f"no records parsed{detail}")


def read_texts(path: PathLike) -> Iterator[str]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield line.rstrip("\n")


# -- filtering, statistics, sampling ------------------------------------------------


def filter_silver(samples: Iterable[Sample]) -> tuple[list[Sample], int]:
    """Drop samples whose AMR payload fails validation."""
    kept, rejected = [], 0
    for s in samples:
        if isinstance(s.payload, AmrGraph) and validate_amr(s.payload):
            rejected += 1
        else:
            kept.append(s)
    return kept, rejected


@dataclass
class CorpusStats:
    split_sizes: dict = field(default_factory=lambda: {s: 0 for s in SPLITS})
    relation_vocabulary_size: int = 0
    avg_nodes: float = 0.0
    avg_target_tokens: float = 0.0

    def to_json(self) -> dict:
        return {
            "split_sizes": dict(self.split_sizes),
            "relation_vocabulary_size": self.relation_vocabulary_size,
            "avg_nodes": self.avg_nodes,
            "avg_target_tokens": self.avg_target_tokens,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["statistic", "value"])
        for split, n in self.split_sizes.items():
            writer.writerow([f"n_{split}", n])
        writer.writerow(["relations", self.relation_vocabulary_size])
        writer.writerow(["avg_nodes", f"{self.avg_nodes:.4f}"])
        writer.writerow(["avg_target_tokens", f"{self.avg_target_tokens:.4f}"])
        return buf.getvalue()


class StatsAccumulator:
    """Mergeable partial sums behind :func:`compute_stats`."""

    def __init__(self):
        self.split_sizes = {s: 0 for s in SPLITS}
        self.relations: set[str] = set()
        self.nodes = 0
        self.tokens = 0
        self.count = 0

    def add(self, s: Sample) -> None:
        self.split_sizes[s.split] += 1
        self.relations |= s.payload.relations()
        self.nodes += graph_order(s.payload)[0]
        self.tokens += len(tokenize(s.references[0]))
        self.count += 1

    def merge(self, other: StatsAccumulator) -> StatsAccumulator:
        for split, n in other.split_sizes.items():
            self.split_sizes[split] += n
        self.relations |= other.relations
        self.nodes += other.nodes
        self.tokens += other.tokens
        self.count += other.count
        return self

    def result(self) -> CorpusStats:
        if self.count == 0:
            raise EmptyCorpus("cannot compute statistics of an empty corpus")
        return CorpusStats(
            split_sizes=dict(self.split_sizes),
            relation_vocabulary_size=len(self.relations),
            avg_nodes=self.nodes / self.count,
            avg_target_tokens=self.tokens / self.count,
        )


def compute_stats(samples: Iterable[Sample]) -> CorpusStats:
    acc = StatsAccumulator()
    for s in samples:
        acc.add(s)
    return acc.result()


def subsample_size(n: int, fraction: float) -> int:
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    return max(1, int(Decimal(repr(fraction)) * n))


def subsample_indices(n: int, fraction: float, seed: int) -> list[int]:
    """Sorted indices of a seeded sample without replacement.

    All fractions under one seed take a prefix of the same permutation, so
    smaller subsets are nested in larger ones.
    """
    k = subsample_size(n, fraction)
    if k >= n:
        return list(range(n))
    order = np.random.default_rng(seed).permutation(n)
    return sorted(order[:k].tolist())


def subsample(samples: Iterable[Sample], fraction: float, seed: int) -> list[Sample]:
    samples = list(samples)
    if not samples:
        return []
    return [samples[i] for i in subsample_indices(len(samples), fraction, seed)]


@dataclass(frozen=True)
class VocabExtension:
    tokens: tuple[str, ...]
    source: str


def extract_vocab_extension(
    samples: Iterable[Sample], kind: str, scheme: LinearizationScheme = LinearizationScheme()
) -> VocabExtension:
    """Tokens to register with a model vocabulary before fine-tuning.

    ``edge-labels``: every distinct AMR relation label (edges and
    attributes), sorted. ``kg-tags``: the scheme's three triple tags.
    """
    if kind == "kg-tags":
        return VocabExtension((scheme.head_tag, scheme.relation_tag, scheme.tail_tag), kind)
    if kind != "edge-labels":
        raise ValueError(f"unknown vocabulary extension kind {kind!r}")
    labels: set[str] = set()
    for s in samples:
        if isinstance(s.payload, AmrGraph):
            labels |= s.payload.relations()
    return VocabExtension(tuple(sorted(labels)), kind)


def split_seen_unseen(test: Iterable[Sample], train: Iterable[Sample]) -> tuple[list[Sample], list[Sample]]:
    """Partition test samples by whether their category occurs in training."""
    train_categories = {s.category for s in train if s.category is not None}
    seen, unseen = [], []
    for s in test:
        (seen if s.category in train_categories else unseen).append(s)
    return seen, unseen


# -- task-adaptive pretraining plans --------------------------------------------------


def _has_graphs(path: PathLike, fmt: str) -> bool:
    if fmt == "text":
        return False
    try:
        next(iter(ingest(path, fmt)))
    except (CorpusError, StopIteration):
        return False
    return True


def pair_pretrain_finetune(
    pretrain: tuple[PathLike, str],
    finetune: tuple[PathLike, str],
    mode: str,
    seed: int = 0,
    name: Optional[str] = None,
    output_dir: Optional[str] = None,
    evaluate: bool = False,
) -> ExperimentManifest:
    """Plan an adaptation phase followed by fine-tuning on the task data.

    ``sta`` adapts on graph/text pairs and needs a graph corpus; ``lma``
    only routes the pretraining corpus's reference texts through span
    masking.
    """
    (pre_path, pre_fmt), (ft_path, ft_fmt) = pretrain, finetune
    for fmt in (pre_fmt, ft_fmt):
        if fmt not in FORMATS:
            raise ValueError(f"unknown corpus format {fmt!r}")
    if ft_fmt == "text":
        raise IncompatibleFormats("the fine-tuning corpus must contain graphs")
    if mode == "sta":
        if not _has_graphs(pre_path, pre_fmt):
            raise IncompatibleFormats(f"sta pretraining needs graph/text pairs, {pre_path} has none")
        adapt = Phase("sta", [str(pre_path)], [f"format:{pre_fmt}", "linearize"], seed)
    elif mode == "lma":
        source = "lines" if pre_fmt == "text" else "references"
        adapt = Phase("lma", [str(pre_path)], [f"format:{pre_fmt}", f"texts:{source}", "noise"], seed)
    else:
        raise ValueError(f"unknown adaptation mode {mode!r}")
    phases = [adapt, Phase("finetune", [str(ft_path)], [f"format:{ft_fmt}", "linearize"], seed)]
    if evaluate:
        phases.append(Phase("evaluate", [str(ft_path)], ["split:test", "score:bleu,chrf,meteor"], seed))
    name = name or f"{mode}-{Path(pre_path).stem}-to-{Path(ft_path).stem}"
    return ExperimentManifest(name=name, phases=phases, output_dir=output_dir)
