import pytest

from graph2text.experiment import ExperimentManifest, Phase


def test_manifest_round_trip():
    m = ExperimentManifest("x", [Phase("sta", ["a.jsonl"], ["linearize"], 3), Phase("finetune", ["b.jsonl"])], "out")
    assert ExperimentManifest.from_json(m.to_json()) == m
    assert m.to_json() == ExperimentManifest.from_json(m.to_json()).to_json()


def test_manifest_invariants():
    with pytest.raises(ValueError):
        ExperimentManifest("x", [])
    with pytest.raises(ValueError):
        ExperimentManifest("x", [Phase("evaluate", []), Phase("finetune", [])])
    with pytest.raises(ValueError):
        Phase("pretrain", [])
