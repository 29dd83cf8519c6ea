"""JSON checkpoints and CSV training logs for the toy model."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .model import ModelConfig, ModelParams, parameter_shapes
from .vocab import Vocab

CHECKPOINT_VERSION = 1


def checkpoint_dict(params: ModelParams, vocab: Vocab, extra: dict | None = None) -> dict:
    if len(vocab) != params.config.vocab_size:
        raise ValueError("vocabulary size does not match the model")
    return {
        "version": CHECKPOINT_VERSION,
        "config": asdict(params.config),
        "vocab": vocab.to_list(),
        "weights": {
            name: {"shape": list(w.shape), "data": w.ravel().tolist()} for name, w in sorted(params.weights.items())
        },
        "extra": extra or {},
    }


def save_checkpoint(path: Union[str, Path], params: ModelParams, vocab: Vocab, extra: dict | None = None) -> None:
    # repr-based float serialization round-trips float64 exactly.
    text = json.dumps(checkpoint_dict(params, vocab, extra), ensure_ascii=False, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_checkpoint(path: Union[str, Path]) -> tuple[ModelParams, Vocab, dict]:
    record = json.loads(Path(path).read_text(encoding="utf-8"))
    if record.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {record.get('version')!r}")
    config = ModelConfig(**record["config"])
    expected = parameter_shapes(config)
    weights = {}
    for name, entry in record["weights"].items():
        shape = tuple(entry["shape"])
        if expected.get(name) != shape:
            raise ValueError(f"weight {name} has shape {shape}, expected {expected.get(name)}")
        weights[name] = np.asarray(entry["data"], dtype=np.float64).reshape(shape)
    if set(weights) != set(expected):
        raise ValueError("checkpoint weights do not match the model configuration")
    vocab = Vocab.from_list(record["vocab"])
    return ModelParams(config, weights), vocab, record.get("extra", {})


def history_csv(history: Sequence) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epoch", "loss", "dev_bleu"])
    for r in history:
        writer.writerow([r.epoch, repr(float(r.loss)), repr(float(r.dev_bleu))])
    return buf.getvalue()
