import pytest

from graph2text.toy.ablation import AblationConfig, rows_to_csv, run_ablation
from graph2text.toy.synth import directional_splits

SMALL = dict(n_train=40, n_dev=10, n_test=10, n_entities=6, epochs=1, model={"embed_dim": 16, "ff_dim": 32})


def test_rows_and_determinism():
    config = AblationConfig(seeds=(3,), **SMALL)
    rows = run_ablation(config)
    assert [(r.variant, r.seed) for r in rows] == [("order", 3), ("shuf", 3)]
    assert rows_to_csv(rows) == rows_to_csv(run_ablation(config))
    assert rows_to_csv(rows).splitlines()[0] == "variant,bleu,direction_accuracy,seed"


def test_missing_split_rejected():
    splits = directional_splits(20, 5, 5, 6, 0)
    splits["dev"] = []
    with pytest.raises(ValueError):
        run_ablation(AblationConfig(**SMALL), splits)


def test_config_validation():
    with pytest.raises(ValueError):
        AblationConfig(variants=("order", "reverse"))
    with pytest.raises(ValueError):
        AblationConfig(seeds=())
