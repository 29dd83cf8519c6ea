from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

from ..kg import HEAD_TAG, NEUTRAL_SEPARATOR, RELATION_TAG, TAIL_TAG

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)
SCHEME_TOKENS = (HEAD_TAG, RELATION_TAG, TAIL_TAG, NEUTRAL_SEPARATOR)
MASK = "⟨mask⟩"


class Vocab:
    """Token/id mapping with fixed reserved ids.

    Ids 0-3 are pad, bos, eos, unk; the scheme tags, the mask token and
    ``n_sentinels`` sentinel tokens follow; corpus tokens come after.
    """

    pad_id, bos_id, eos_id, unk_id = 0, 1, 2, 3

    def __init__(self, tokens: Iterable[str] = (), n_sentinels: int = 0):
        reserved = list(SPECIALS) + list(SCHEME_TOKENS) + [MASK]
        reserved += [f"⟨extra_id_{i}⟩" for i in range(n_sentinels)]
        self.n_reserved = len(reserved)
        self.itos: list[str] = []
        self.stoi: dict[str, int] = {}
        for tok in reserved:
            self._add(tok)
        for tok in tokens:
            self._add(tok)

    def _add(self, tok: str) -> None:
        if tok not in self.stoi:
            self.stoi[tok] = len(self.itos)
            self.itos.append(tok)

    @classmethod
    def build(cls, sequences: Iterable[Sequence[str]], min_count: int = 1, n_sentinels: int = 0) -> Vocab:
        counts = Counter(tok for seq in sequences for tok in seq)
        kept = sorted(tok for tok, c in counts.items() if c >= min_count)
        return cls(kept, n_sentinels=n_sentinels)

    def extend(self, tokens: Iterable[str]) -> None:
        for tok in tokens:
            self._add(tok)

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, tok: str) -> bool:
        return tok in self.stoi

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.stoi.get(t, self.unk_id) for t in tokens]

    def decode(self, ids: Sequence[int]) -> list[str]:
        out = []
        for i in ids:
            i = int(i)
            if i == self.eos_id:
                break
            if i in (self.pad_id, self.bos_id):
                continue
            out.append(self.itos[i])
        return out

    def to_list(self) -> list[str]:
        return list(self.itos)

    @classmethod
    def from_list(cls, itos: Sequence[str]) -> Vocab:
        vocab = cls.__new__(cls)
        vocab.itos = list(itos)
        vocab.stoi = {t: i for i, t in enumerate(vocab.itos)}
        if vocab.itos[:4] != list(SPECIALS):
            raise ValueError("vocabulary does not start with the reserved tokens")
        vocab.n_reserved = sum(1 for t in vocab.itos if t in SPECIALS or t in SCHEME_TOKENS or t == MASK or t.startswith("⟨extra_id_"))
        return vocab
