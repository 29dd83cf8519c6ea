from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import Divergence
from ..kg import LinearizedSample
from ..metrics import bleu, tokenize
from .decode import decode_many
from .model import ModelConfig, ModelParams, init_params, loss_and_grads, make_batch
from .vocab import Vocab

log = logging.getLogger(__name__)

# Fine-tuning learning rate used for the pretrained models; kept as a preset.
PRETRAINED_FINETUNE_LR = 3e-5


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 8
    beam_size: int = 1
    epochs: int = 20
    seed: int = 0
    lr_schedule: str = "linear-decay-no-warmup"
    clip_norm: Optional[float] = 1.0
    max_decode_len: int = 64
    adam_betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.batch_size not in (2, 4, 8):
            raise ValueError("batch_size must be one of 2, 4, 8")
        if self.beam_size not in (1, 3, 5):
            raise ValueError("beam_size must be one of 1, 3, 5")
        if self.learning_rate <= 0 or self.epochs < 1:
            raise ValueError("learning_rate and epochs must be positive")
        if self.lr_schedule != "linear-decay-no-warmup":
            raise ValueError(f"unsupported lr schedule {self.lr_schedule!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["adam_betas"] = list(self.adam_betas)
        return d


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    dev_bleu: float


@dataclass
class TrainResult:
    params: ModelParams
    vocab: Vocab
    history: list = field(default_factory=list)
    best_epoch: int = 0


class Adam:
    def __init__(self, params: ModelParams, betas=(0.9, 0.999), eps=1e-8):
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.weights.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.weights.items()}

    def step(self, params: ModelParams, grads: dict, lr: float) -> None:
        self.t += 1
        c1 = 1 - self.b1**self.t
        c2 = 1 - self.b2**self.t
        for name in sorted(params.weights):
            g = grads[name]
            m, v = self.m[name], self.v[name]
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            params.weights[name] -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def clip_gradients(grads: dict, max_norm: float) -> float:
    norm = float(np.sqrt(sum(float((g * g).sum()) for _, g in sorted(grads.items()))))
    if norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for g in grads.values():
            g *= scale
    return norm


def encode_samples(samples: Sequence[LinearizedSample], vocab: Vocab):
    sources = [vocab.encode(s.input_tokens) for s in samples]
    targets = [vocab.encode(tokenize(s.target_text)) for s in samples]
    return sources, targets


def build_vocab(samples: Sequence[LinearizedSample]) -> Vocab:
    return Vocab.build(list(s.input_tokens) + tokenize(s.target_text) for s in samples)


def generate(
    params: ModelParams, vocab: Vocab, samples: Sequence[LinearizedSample], beam_size: int = 1, max_len: int = 64
) -> list[str]:
    sources = [vocab.encode(s.input_tokens) for s in samples]
    return [" ".join(vocab.decode(ids)) for ids in decode_many(params, sources, beam_size, max_len)]


def evaluate_bleu(params, vocab, samples, beam_size=1, max_len=64) -> float:
    hyps = generate(params, vocab, samples, beam_size, max_len)
    return bleu(hyps, [list(s.references) for s in samples]).corpus_score


def train(
    train_set: Sequence[LinearizedSample],
    dev_set: Sequence[LinearizedSample],
    config: TrainConfig = TrainConfig(),
    model_config: Optional[dict] = None,
    vocab: Optional[Vocab] = None,
) -> TrainResult:
    """Adam with linear learning-rate decay to zero and no warm-up.

    Dev BLEU is computed after every epoch; the parameters of the best
    epoch (earliest on ties) are returned. Deterministic given the seed.
    """
    if not train_set:
        raise ValueError("training set is empty")
    if not dev_set:
        raise ValueError("dev set is empty; it is needed for model selection")
    vocab = vocab or build_vocab(train_set)
    mc = ModelConfig(vocab_size=len(vocab), **(model_config or {}))
    params = init_params(mc, config.seed)
    opt = Adam(params, config.adam_betas, config.adam_eps)
    sources, targets = encode_samples(train_set, vocab)
    n = len(sources)
    steps_per_epoch = -(-n // config.batch_size)
    total_steps = steps_per_epoch * config.epochs
    rng = np.random.default_rng(config.seed)
    step = 0
    best, best_bleu, best_epoch = params.copy(), -1.0, 0
    history = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = make_batch(mc, [sources[i] for i in idx], [targets[i] for i in idx])
            loss, _, grads = loss_and_grads(params, batch)
            if not np.isfinite(loss):
                raise Divergence(f"non-finite loss at epoch {epoch}, step {step}")
            if config.clip_norm:
                clip_gradients(grads, config.clip_norm)
            lr = config.learning_rate * (1 - step / total_steps)
            opt.step(params, grads, lr)
            step += 1
            epoch_loss += loss * len(idx)
        if not params.all_finite():
            raise Divergence(f"non-finite parameters after epoch {epoch}")
        dev_bleu = evaluate_bleu(params, vocab, dev_set, config.beam_size, config.max_decode_len)
        record = EpochRecord(epoch, epoch_loss / n, dev_bleu)
        history.append(record)
        log.info("epoch %d loss %.4f dev BLEU %.2f", epoch, record.loss, dev_bleu)
        if dev_bleu > best_bleu:
            best, best_bleu, best_epoch = params.copy(), dev_bleu, epoch
    return TrainResult(best, vocab, history, best_epoch)
