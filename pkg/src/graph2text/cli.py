"""Command-line entry point: ``graph2text <subcommand> ...``.

Every subcommand that writes to a file also writes ``<output>.manifest.json``
(or ``manifest.json`` inside an output directory) holding the exact
arguments. ``graph2text rerun MANIFEST`` replays it; outputs are
byte-identical because nothing time- or host-dependent is recorded.

Exit codes: 0 on success, 1 on bad records or invalid options, 2 on
misaligned scoring inputs and empty or unreadable corpora.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .corpus import (
    FORMATS,
    compute_stats,
    ingest,
    pair_pretrain_finetune,
    sample_from_json,
    sample_to_json,
    subsample_indices,
    subsample_size,
)
from .errors import (
    CorpusError,
    EmptyCorpus,
    EmptyHypothesisSet,
    Graph2TextError,
    IncompatibleFormats,
    LengthMismatch,
)
from .graph import KnowledgeGraph
from .kg import LinearizationScheme, LinearizedSample
from .metrics import METRICS, chrf_pp
from .noising import NoiseConfig, noise_corpus
from .pipeline import TRANSFORMS, linearize_sample

log = logging.getLogger("graph2text")

DEFAULT_FRACTIONS = (0.01, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0)
BUCKETS = ("1", "2", "3", "4", "5", "6", "7+")
MANIFEST_SUFFIX = ".manifest.json"

# Exit status for misaligned inputs and empty corpora.
EXIT_DATA = 2


class CommandError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


# -- helpers -----------------------------------------------------------------------


def _read_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yield fh


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, sort_keys=True) + "\n"


def _guess_format(path: str) -> str:
    return "kg-jsonl" if path.endswith((".jsonl", ".json")) else "amr-sidecar"


def _load_corpus(path: str, fmt: Optional[str], split: Optional[str] = None) -> list:
    errors: list = []
    samples = list(ingest(path, fmt or _guess_format(path), split=split, errors=errors))
    for err in errors:
        print(f"warning: {path}: {err}", file=sys.stderr)
    return samples


def _load_linearized(path: str) -> list[LinearizedSample]:
    out = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if line.strip():
            try:
                out.append(LinearizedSample.from_json(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise CommandError(f"{path}: line {lineno}: {exc}") from exc
    return out


def _manifest_path(args) -> Optional[Path]:
    if args.output is None or args.output == "-":
        return None
    out = Path(args.output)
    return out / "manifest.json" if getattr(args, "_output_is_dir", False) else Path(str(out) + MANIFEST_SUFFIX)


def _write_manifest(args) -> None:
    path = _manifest_path(args)
    if path is None:
        return
    recorded = {k: v for k, v in sorted(vars(args).items()) if not k.startswith("_") and k != "func"}
    manifest = {"graph2text_version": __version__, "command": args.command, "args": recorded}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_dump_json(manifest), encoding="utf-8")


def _scheme(args) -> LinearizationScheme:
    kwargs = {}
    if getattr(args, "separator", None):
        kwargs["separator"] = args.separator
    if args.t5_prefix:
        return LinearizationScheme.t5(mode=args.scheme, **kwargs)
    return LinearizationScheme(mode=args.scheme, **kwargs)


def _check_aligned(hyps: list[str], ref_sets: list[list[str]], names: Sequence[str]) -> None:
    for name, refs in zip(names, ref_sets):
        if len(refs) != len(hyps):
            line = min(len(refs), len(hyps)) + 1
            raise LengthMismatch(
                f"{len(hyps)} hypotheses but {len(refs)} lines in {name}; first unmatched line {line}", line=line
            )


# -- subcommands -----------------------------------------------------------------


def cmd_ingest(args) -> None:
    samples = _load_corpus(args.input, args.input_format, args.split)
    with _output(args.output) as fh:
        for s in samples:
            fh.write(json.dumps(sample_to_json(s), ensure_ascii=False) + "\n")


def cmd_stats(args) -> None:
    samples = _load_corpus(args.input, args.input_format)
    stats = compute_stats(samples)
    text = stats.to_csv() if args.format == "csv" else _dump_json(stats.to_json())
    with _output(args.output) as fh:
        fh.write(text)


def cmd_linearize(args) -> None:
    samples = _load_corpus(args.input, args.input_format)
    scheme = _scheme(args)
    transforms = tuple(args.transform or ["order"])
    lines = []
    for i, s in enumerate(samples):
        try:
            lin = linearize_sample(s, transforms, scheme, args.seed, i)
        except (Graph2TextError, ValueError) as exc:
            raise CommandError(f"record {s.id}: {exc}") from exc
        lines.append(json.dumps(lin.to_json(), ensure_ascii=False) + "\n")
    with _output(args.output) as fh:
        fh.writelines(lines)


def cmd_noise(args) -> None:
    texts = [t for t in _read_lines(args.input) if t.strip()]
    config = NoiseConfig(
        style=args.style, mask_ratio=args.mask_ratio, mean_span_length=args.mean_span_length, seed=args.seed
    )
    errors: list = []
    pairs = list(noise_corpus(texts, config, errors))
    for index, exc in errors:
        print(f"warning: text {index + 1}: {exc}", file=sys.stderr)
    with _output(args.output) as fh:
        for p in pairs:
            fh.write(json.dumps(p.to_json(), ensure_ascii=False) + "\n")
    if errors:
        raise CommandError(f"{len(errors)} text(s) could not be noised")


def cmd_subsample(args) -> None:
    if args.output is None:
        raise CommandError("subsample needs --output DIR")
    args._output_is_dir = True
    # Raw lines are copied so the full-size subset is byte-identical to the input.
    kept = []
    for lineno, line in enumerate(_read_lines(args.input), start=1):
        if not line.strip():
            continue
        try:
            sample = sample_from_json(json.loads(line), default_id=f"line{lineno}")
        except (ValueError, Graph2TextError) as exc:
            print(f"warning: {args.input}: line {lineno}: {exc}", file=sys.stderr)
            continue
        if sample.split == "train":
            kept.append(line)
    if not kept:
        raise CommandError(f"{args.input} has no train split records", EXIT_DATA)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for fraction in args.fractions:
        idx = subsample_indices(len(kept), fraction, args.seed)
        assert len(idx) == subsample_size(len(kept), fraction)
        name = f"train-{fraction:g}.jsonl"
        with open(out_dir / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(kept[i] + "\n" for i in idx)
        rows.append((f"{fraction:g}", len(idx), name))
    with open(out_dir / "subsets.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fraction", "size", "file"])
        writer.writerows(rows)


def _score_inputs(args) -> tuple[list[str], list[list[str]]]:
    hyps = _read_lines(args.hyp)
    ref_files = [_read_lines(r) for r in args.ref]
    _check_aligned(hyps, ref_files, args.ref)
    return hyps, [list(refs) for refs in zip(*ref_files)] if ref_files else []


def cmd_score(args) -> None:
    if not args.ref:
        raise CommandError("score needs at least one --ref file")
    hyps, refs = _score_inputs(args)
    reports = {name: METRICS[name](hyps, refs) for name in args.metrics}
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", "corpus_score"])
        for name, r in reports.items():
            writer.writerow([name, f"{r.corpus_score:.4f}"])
        text = buf.getvalue()
    else:
        text = _dump_json({name: r.to_json() for name, r in reports.items()})
    with _output(args.output) as fh:
        fh.write(text)


def bucket_key(n_triples: int) -> str:
    return str(n_triples) if n_triples < 7 else "7+"


def bucket_scores(hyps: Sequence[str], refs: Sequence[Sequence[str]], triple_counts: Sequence[int]) -> list:
    """``(bucket, n, chrF++)`` rows for non-empty triple-count buckets, in bucket order."""
    groups: dict[str, list[int]] = {}
    for i, n in enumerate(triple_counts):
        groups.setdefault(bucket_key(n), []).append(i)
    rows = []
    for key in BUCKETS:
        if key in groups:
            idx = groups[key]
            report = chrf_pp([hyps[i] for i in idx], [refs[i] for i in idx])
            rows.append((key, len(idx), report.corpus_score))
    return rows


def line_chart_svg(rows, title: str = "chrF++ by number of triples", width: int = 480, height: int = 320) -> str:
    """Self-contained SVG polyline of ``(label, n, score)`` rows."""
    pad = 48
    n = len(rows)
    xs = [pad + (width - 2 * pad) * (i / max(n - 1, 1)) for i in range(n)]
    ys = [height - pad - (height - 2 * pad) * (score / 100.0) for _, _, score in rows]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
    ]
    for tick in (0, 25, 50, 75, 100):
        y = height - pad - (height - 2 * pad) * tick / 100
        parts.append(f'<text x="{pad - 6}" y="{y + 4:.1f}" text-anchor="end" font-size="10">{tick}</text>')
    points = " ".join(f"{x:.1f},{y:.1f}" for x, y in zip(xs, ys))
    parts.append(f'<polyline points="{points}" fill="none" stroke="steelblue" stroke-width="2"/>')
    for (label, count, _), x, y in zip(rows, xs, ys):
        parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" fill="steelblue"/>')
        parts.append(f'<text x="{x:.1f}" y="{height - pad + 16}" text-anchor="middle" font-size="10">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_bucket_score(args) -> None:
    graphs = _load_corpus(args.graphs, "kg-jsonl")
    if not all(isinstance(s.payload, KnowledgeGraph) for s in graphs):
        raise CommandError("bucket-score needs knowledge-graph records")
    hyps = _read_lines(args.hyp)
    if args.ref:
        hyps, refs = _score_inputs(args)
    else:
        refs = [list(s.references) for s in graphs]
    _check_aligned(hyps, [graphs], [args.graphs])
    rows = bucket_scores(hyps, refs, [len(s.payload.triples) for s in graphs])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bucket", "n", "score"])
    for key, count, score in rows:
        writer.writerow([key, count, f"{score:.4f}"])
    with _output(args.output) as fh:
        fh.write(buf.getvalue())
    if args.svg:
        Path(args.svg).write_text(line_chart_svg(rows), encoding="utf-8")


def cmd_run_ablation(args) -> None:
    from .toy.ablation import AblationConfig, rows_to_csv, run_ablation

    settings = json.loads(Path(args.config).read_text(encoding="utf-8")) if args.config else {}
    for key in ("epochs", "n_entities", "n_train", "n_dev", "n_test"):
        if getattr(args, key) is not None:
            settings[key] = getattr(args, key)
    settings["seeds"] = args.seeds if args.seeds else settings.get("seeds", [args.seed])
    config = AblationConfig(**settings)
    splits = None
    if args.corpus:
        samples = _load_corpus(args.corpus, "kg-jsonl")
        splits = {name: [s for s in samples if s.split == name] for name in ("train", "dev", "test")}
        missing = [name for name, items in splits.items() if not items]
        if missing:
            raise CommandError(f"{args.corpus} has no {', '.join(missing)} split")
    rows = run_ablation(config, splits)
    with _output(args.output) as fh:
        fh.write(rows_to_csv(rows))


def cmd_train_toy(args) -> None:
    from .toy.checkpoint import history_csv, save_checkpoint
    from .toy.train import TrainConfig, train

    if args.output is None or args.output == "-":
        raise CommandError("train-toy needs --output CHECKPOINT")
    config = TrainConfig(
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        beam_size=args.beam_size,
        epochs=args.epochs,
        seed=args.seed,
    )
    model = {"embed_dim": args.embed_dim, "ff_dim": args.ff_dim, "layers": args.layers, "heads": args.heads}
    result = train(_load_linearized(args.train), _load_linearized(args.dev), config, model_config=model)
    save_checkpoint(args.output, result.params, result.vocab, {"train": config.to_dict(), "best_epoch": result.best_epoch})
    Path(args.output + ".log.csv").write_text(history_csv(result.history), encoding="utf-8")


def cmd_decode_toy(args) -> None:
    from .toy.checkpoint import load_checkpoint
    from .toy.train import generate

    params, vocab, _ = load_checkpoint(args.checkpoint)
    samples = _load_linearized(args.input)
    outputs = generate(params, vocab, samples, args.beam_size, args.max_len) if samples else []
    with _output(args.output) as fh:
        fh.writelines(line + "\n" for line in outputs)


def _corpus_spec(text: str) -> tuple[str, str]:
    path, _, fmt = text.rpartition(":")
    if not path or fmt not in FORMATS:
        raise CommandError(f"expected PATH:FORMAT with FORMAT in {FORMATS}, got {text!r}")
    return path, fmt


def cmd_plan(args) -> None:
    manifest = pair_pretrain_finetune(
        _corpus_spec(args.pretrain),
        _corpus_spec(args.finetune),
        args.mode,
        seed=args.seed,
        name=args.name,
        output_dir=args.output_dir,
        evaluate=args.evaluate,
    )
    with _output(args.output) as fh:
        fh.write(manifest.to_json())


def cmd_rerun(args) -> None:
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    recorded = dict(manifest["args"])
    if args.output is not None:
        recorded["output"] = args.output
    ns = argparse.Namespace(**recorded)
    ns.func = COMMANDS[manifest["command"]]
    _dispatch(ns)


COMMANDS = {
    "ingest": cmd_ingest,
    "stats": cmd_stats,
    "linearize": cmd_linearize,
    "noise": cmd_noise,
    "subsample": cmd_subsample,
    "score": cmd_score,
    "bucket-score": cmd_bucket_score,
    "run-ablation": cmd_run_ablation,
    "train-toy": cmd_train_toy,
    "decode-toy": cmd_decode_toy,
    "plan": cmd_plan,
}


# -- parser ------------------------------------------------------------------------


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=default(0), help="base random seed (default 0)")
    parser.add_argument("--output", "-o", default=default(None), help="output file or directory (default stdout)")
    parser.add_argument(
        "--format", choices=["json", "csv", "jsonl"], default=default(None), help="output format where several apply"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graph2text", description="Graph-to-text data, metric and toy-model tooling.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _global_flags(p, suppress=True)
        return p

    p = add("ingest", "parse an AMR release file or JSON-lines corpus into canonical JSON-lines")
    p.add_argument("input")
    p.add_argument("--input-format", choices=["amr-sidecar", "kg-jsonl"])
    p.add_argument("--split", choices=["train", "dev", "test"], help="override the split of every record")

    p = add("stats", "corpus statistics (split sizes, relation types, avg nodes, avg target tokens)")
    p.add_argument("input")
    p.add_argument("--input-format", choices=["amr-sidecar", "kg-jsonl"])

    p = add("linearize", "turn graphs into model inputs")
    p.add_argument("input")
    p.add_argument("--input-format", choices=["amr-sidecar", "kg-jsonl"])
    p.add_argument("--transform", action="append", choices=TRANSFORMS, help="repeatable; applied as a chain")
    p.add_argument("--scheme", choices=["tagged", "neutral"], default="tagged")
    p.add_argument("--separator", help="neutral separator token")
    p.add_argument("--t5-prefix", action="store_true", help="prepend the T5 task prefix")

    p = add("noise", "span-mask a text file (one text per line) for language-model adaptation")
    p.add_argument("input")
    p.add_argument("--style", choices=["single-mask", "sentinel"], default="single-mask")
    p.add_argument("--mask-ratio", type=float, default=0.15)
    p.add_argument("--mean-span-length", type=float, default=3.0)

    p = add("subsample", "nested seeded subsets of the train split, one file per fraction")
    p.add_argument("input", help="canonical JSON-lines corpus")
    p.add_argument("--fractions", type=float, nargs="+", default=list(DEFAULT_FRACTIONS))

    p = add("score", "corpus BLEU / chrF++ / METEOR of a hypothesis file")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", action="append", default=[], help="repeatable; one reference per line")
    p.add_argument("--metrics", nargs="+", choices=sorted(METRICS), default=["bleu", "chrf", "meteor"])

    p = add("bucket-score", "chrF++ grouped by number of triples (1..6, 7+)")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", action="append", default=[], help="defaults to the references stored with the graphs")
    p.add_argument("--graphs", required=True, help="JSON-lines KG corpus aligned with the hypotheses")
    p.add_argument("--svg", help="also write a line chart here")

    p = add("run-ablation", "order vs shuffled-label training of the toy model")
    p.add_argument("--config", help="JSON file with ablation settings")
    p.add_argument("--corpus", help="JSON-lines KG corpus with train/dev/test splits instead of synthetic data")
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--epochs", type=int)
    p.add_argument("--n-entities", type=int)
    p.add_argument("--n-train", type=int)
    p.add_argument("--n-dev", type=int)
    p.add_argument("--n-test", type=int)

    p = add("train-toy", "train the toy encoder-decoder on linearized JSON-lines")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, choices=[2, 4, 8], default=8)
    p.add_argument("--beam-size", type=int, choices=[1, 3, 5], default=1)
    p.add_argument("--embed-dim", type=int, default=64)
    p.add_argument("--ff-dim", type=int, default=128)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--heads", type=int, default=2)

    p = add("decode-toy", "generate text for linearized inputs with a toy checkpoint")
    p.add_argument("input")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--beam-size", type=int, choices=[1, 3, 5], default=1)
    p.add_argument("--max-len", type=int, default=64)

    p = add("plan", "experiment manifest pairing an adaptation corpus with fine-tuning data")
    p.add_argument("--pretrain", required=True, help="PATH:FORMAT")
    p.add_argument("--finetune", required=True, help="PATH:FORMAT")
    p.add_argument("--mode", choices=["lma", "sta"], required=True)
    p.add_argument("--name")
    p.add_argument("--output-dir")
    p.add_argument("--evaluate", action="store_true", help="append an evaluation phase")

    p = add("rerun", "replay a manifest written next to an earlier output")
    p.add_argument("manifest")

    for name, func in COMMANDS.items():
        sub.choices[name].set_defaults(func=func)
    sub.choices["rerun"].set_defaults(func=cmd_rerun)
    return parser


def _dispatch(args) -> None:
    args.func(args)
    if args.command != "rerun":
        _write_manifest(args)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    del args.verbose
    try:
        _dispatch(args)
    except LengthMismatch as exc:
        print(f"error: line {exc.line}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (EmptyCorpus, CorpusError, EmptyHypothesisSet, IncompatibleFormats) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (Graph2TextError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
