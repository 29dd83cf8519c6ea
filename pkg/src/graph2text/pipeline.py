"""Sample-to-model-input transform chains shared by the CLI and the ablation runner."""

from __future__ import annotations

from typing import Sequence

from .graph import AmrGraph, KnowledgeGraph, Sample
from .kg import LinearizationScheme, LinearizedSample, corrupt_graph, linearize_kg, shuffle_kg
from .penman import linearize_amr, shuffle_labels, strip_structure

TRANSFORMS = ("order", "shuf-unit", "shuf-triple", "strip-parens", "corrupt-swap", "corrupt-case")
_GRAPH_LEVEL = {"corrupt-swap": "swap", "corrupt-case": "case"}


def record_seed(seed: int, index: int) -> list[int]:
    """Per-record seed material; independent of how records are sharded."""
    return [int(seed), int(index)]


def linearize_sample(
    sample: Sample,
    transforms: Sequence[str] = ("order",),
    scheme: LinearizationScheme = LinearizationScheme(),
    seed: int = 0,
    index: int = 0,
) -> LinearizedSample:
    """Apply a transform chain: graph corruptions, linearization, then token shuffles.

    ``order`` is the plain linearization and may be omitted. Shuffles need
    neutral-separator KG input (``shuf-triple`` is KG only); ``strip-parens``
    and label shuffling of AMR act on the PENMAN token stream.
    """
    transforms = tuple(transforms) or ("order",)
    unknown = [t for t in transforms if t not in TRANSFORMS]
    if unknown:
        raise ValueError(f"unknown transform(s) {unknown}")
    payload = sample.payload
    is_kg = isinstance(payload, KnowledgeGraph)
    for t in transforms:
        if t in _GRAPH_LEVEL:
            if not is_kg:
                raise ValueError(f"{t} applies to knowledge graphs only")
            payload = corrupt_graph(payload, _GRAPH_LEVEL[t])
    if is_kg:
        tokens = linearize_kg(payload, scheme)
    elif isinstance(payload, AmrGraph):
        tokens = linearize_amr(payload)
    else:
        raise ValueError(f"sample {sample.id!r} has no graph payload")

    n_prefix = len(scheme.prefix_tokens()) if is_kg else 0
    head, body = tokens[:n_prefix], tokens[n_prefix:]
    rs = record_seed(seed, index)
    for t in transforms:
        if t == "strip-parens":
            if is_kg:
                raise ValueError("strip-parens applies to AMR only")
            body = strip_structure(body)
        elif t in ("shuf-unit", "shuf-triple"):
            if not is_kg:
                if t == "shuf-triple":
                    raise ValueError("shuf-triple applies to knowledge graphs only")
                # Bag of labels: structure goes first, then the labels are permuted.
                body = shuffle_labels(strip_structure(body), rs)
            else:
                if scheme.mode != "neutral":
                    raise ValueError(f"{t} needs the neutral-separator scheme")
                body = shuffle_kg(body, t.split("-")[1], rs, scheme.separator)
    refs = tuple(sample.references)
    return LinearizedSample(
        input_tokens=head + body,
        target_text=refs[0] if refs else "",
        scheme=scheme,
        sample_id=sample.id,
        transforms=transforms,
        references=refs,
    )
