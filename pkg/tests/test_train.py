import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hignn import tensor as T
from hignn.chem import parse_smiles, scaffold_smiles
from hignn.config import ConfigError, TrainConfig, parse_config
from hignn.data import (
    DataError,
    Dataset,
    Split,
    featurize_all,
    load_csv,
    make_split,
)
from hignn.metrics import NoValidTask, average_precision, evaluate_predictions, rmse, roc_auc
from hignn.model import HignnModel, ModelConfig
from hignn.train import AdamW, AllMasked, NumericFailure, history_csv, loss, train_model

from conftest import ESOL, esol_smiles


def pair_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return total / (len(pos) * len(neg))


def _dataset(smiles, y):
    y = np.asarray(y, float).reshape(len(smiles), -1)
    return Dataset(list(smiles), y, ~np.isnan(y), [f"t{i}" for i in range(y.shape[1])],
                   "REGRESSION", list(range(len(smiles))))


# metrics

def test_auc_reference_case():
    assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75


def test_auc_perfect_and_rmse_zero():
    assert roc_auc([0.1, 0.2, 0.9], [0, 0, 1]) == 1.0
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.booleans()), min_size=2, max_size=50))
def test_auc_equals_pair_counting(points):
    scores = [s / 5 for s, _ in points]
    labels = [y for _, y in points]
    if all(labels) or not any(labels):
        return
    assert abs(roc_auc(scores, labels) - pair_auc(scores, labels)) <= 1e-12


def test_average_precision_matches_sklearn():
    sk = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(2, 40))
        y = rng.random(n) > 0.6
        if not y.any():
            y[0] = True
        s = np.round(rng.random(n), 1)
        assert abs(average_precision(s, y) - sk.average_precision_score(y, s)) <= 1e-12


def test_metric_skips_invalid_tasks():
    pred = np.array([[0.1, 0.5], [0.9, 0.5], [0.4, 0.2]])
    labels = np.array([[0, 1], [1, 1], [0, 1]], float)
    mask = np.ones_like(labels, bool)
    res = evaluate_predictions(pred, labels, mask, "BINARY_MULTITASK")
    assert res["skipped"] == [1] and res["mean"] == 1.0
    with pytest.raises(NoValidTask):
        evaluate_predictions(pred, labels, np.zeros_like(mask), "BINARY_MULTITASK")


def test_metric_row_order_invariant():
    rng = np.random.default_rng(1)
    p, y = rng.random((30, 1)), (rng.random((30, 1)) > 0.5).astype(float)
    m = np.ones_like(y, bool)
    perm = rng.permutation(30)
    a = evaluate_predictions(p, y, m, "BINARY_MULTITASK")["mean"]
    b = evaluate_predictions(p[perm], y[perm], m[perm], "BINARY_MULTITASK")["mean"]
    assert a == b


# loss

def test_loss_examples():
    y = np.array([[1.0, 2.0], [3.0, 4.0]])
    mask = np.ones_like(y, bool)
    assert float(loss(T.Tensor(y), y, mask, "REGRESSION").data) == 0.0
    assert float(loss(T.Tensor(np.zeros((1, 1))), np.ones((1, 1)), np.ones((1, 1), bool),
                      "BINARY_MULTITASK").data) == pytest.approx(math.log(2), abs=1e-15)
    with pytest.raises(AllMasked):
        loss(T.Tensor(y), y, np.zeros_like(mask), "REGRESSION")


def test_masked_rows_do_not_change_loss():
    rng = np.random.default_rng(2)
    p, y = rng.standard_normal((4, 2)), rng.standard_normal((4, 2))
    m = rng.random((4, 2)) > 0.3
    m[0, 0] = True
    base = loss(T.Tensor(p), y, m, "REGRESSION").data
    p2 = np.vstack([p, rng.standard_normal((3, 2))])
    y2 = np.vstack([y, np.full((3, 2), np.nan)])
    m2 = np.vstack([m, np.zeros((3, 2), bool)])
    assert loss(T.Tensor(p2), y2, m2, "REGRESSION").data == base


# optimizer

def test_adamw_zero_lr_is_fixpoint():
    p = T.Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    before = p.data.copy()
    opt = AdamW([p], lr=0.0, weight_decay=0.1)
    for _ in range(20):
        p.grad = np.ones_like(p.data)
        opt.step()
    assert np.array_equal(p.data, before)


def test_adamw_first_step():
    p = T.Tensor(np.array([1.0, -2.0]), requires_grad=True)
    opt = AdamW([p], lr=0.1, weight_decay=0.5)
    p.grad = np.array([0.3, -4.0])
    opt.step()
    # bias-corrected first step moves each entry by lr * (sign(g) + wd * p)
    want = np.array([1.0, -2.0]) - 0.1 * (np.array([1.0, -2.0]) * 0.5 + np.sign([0.3, -4.0]) *
                                          np.array([0.3, 4.0]) / (np.array([0.3, 4.0]) + 1e-8))
    assert np.allclose(p.data, want, atol=1e-15)


# data and splits

def test_load_csv_masks_and_drops(tmp_path, caplog):
    path = tmp_path / "d.csv"
    path.write_text("smiles,a,b\nCCO,1.5,\nC1CC,2,3\nc1ccccc1,,0\n")
    ds = load_csv(str(path))
    assert ds.smiles == ["CCO", "c1ccccc1"]
    assert ds.mask.tolist() == [[True, False], [False, True]]
    assert ds.task_type == "REGRESSION"
    assert "dropped 1" in caplog.text


def test_load_csv_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("smi,y\nC,1\n")
    with pytest.raises(DataError):
        load_csv(str(bad))
    bad.write_text("smiles,y\nC,abc\n")
    with pytest.raises(DataError, match="line 2"):
        load_csv(str(bad))


def test_binary_detection(tmp_path):
    path = tmp_path / "b.csv"
    path.write_text("smiles,y\nCCO,1\nCC,0\nCCC,\n")
    assert load_csv(str(path)).task_type == "BINARY_MULTITASK"


def test_random_split_sizes_and_determinism():
    ds = _dataset(esol_smiles(100), np.arange(100.0))
    a = make_split(ds, "random", seed=3)
    assert (len(a.train), len(a.val), len(a.test)) == (80, 10, 10)
    assert a == make_split(ds, "random", seed=3)
    assert a != make_split(ds, "random", seed=4)
    a.validate(100)


def test_scaffold_split_has_no_leakage():
    smiles = esol_smiles(400, seed=1)
    ds = _dataset(smiles, np.zeros(400))
    sp = make_split(ds, "scaffold")
    sets = [{scaffold_smiles(parse_smiles(smiles[i])) for i in part}
            for part in (sp.train, sp.val, sp.test)]
    assert not (sets[0] & sets[1] or sets[0] & sets[2] or sets[1] & sets[2])
    assert len(sp.train) >= 320 and len(sp.train) + len(sp.val) >= 360
    sp.validate(400)


def test_split_errors():
    with pytest.raises(DataError):
        make_split(_dataset(["C", "CC"], [1, 2]))
    with pytest.raises(ValueError):
        make_split(_dataset(["C", "CC", "CCC"], [1, 2, 3]), ratio=(0.5, 0.5, 0.5))
    with pytest.raises(DataError):
        Split.from_json('{"train": [0, 1], "val": [1], "test": []}', 3)


def test_split_json_round_trip():
    sp = make_split(_dataset(esol_smiles(30), np.zeros(30)), "random", seed=2)
    assert Split.from_json(sp.to_json(), 30) == sp


# config

def test_config_parsing():
    run = parse_config("# comment\nd = 16\nK=2\nlr=0.01\nseed=4\nextras=false\nmode=NO_FA\n")
    assert run.model.d == 16 and run.model.K == 2 and not run.model.extras
    assert run.model.mode == "NO_FA" and run.model.seed == 4 and run.train.seed == 4
    assert run.train.lr == 0.01 and run.train.batch_size == 32


@pytest.mark.parametrize("text", ["bogus=1", "d=abc", "d", "n_tasks=3", "a=3", "task_type=X"])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


# training

def _tiny_run(ds, samples, split, **kw):
    model = HignnModel(ModelConfig(d=8, K=2, a=2, r=2, dropout=0.1, seed=kw.pop("seed", 0)))
    cfg = TrainConfig(**{"epochs": 2, "batch_size": 8, **kw})
    return model, train_model(model, ds, samples, split, cfg)


def test_memorizes_single_row():
    ds = _dataset(["CC(=O)Nc1ccccc1"], [2.5])
    samples = featurize_all(ds.smiles)
    model = HignnModel(ModelConfig(d=16, K=2, a=2, r=2, dropout=0.0))
    opt = AdamW(model.parameters(), lr=1e-2)
    from hignn.model import make_batch
    batch = make_batch(samples)
    y, m = np.array([[1.0]]), np.ones((1, 1), bool)
    for _ in range(500):
        opt.zero_grad()
        with T.Tape() as tape:
            value = loss(model.forward(batch)[0], y, m, "REGRESSION")
        tape.backward(value)
        opt.step()
    assert float(value.data) < 1e-3


def test_training_is_deterministic_and_lr0_is_fixpoint():
    smiles = esol_smiles(40, seed=6)
    ds = _dataset(smiles, np.linspace(-2, 2, 40))
    samples = featurize_all(smiles)
    split = make_split(ds, "random", seed=0)
    _, r1 = _tiny_run(ds, samples, split, seed=1)
    _, r2 = _tiny_run(ds, samples, split, seed=1)
    assert history_csv(r1.history) == history_csv(r2.history)
    for k in r1.model.params:
        assert np.array_equal(r1.model.params[k].data, r2.model.params[k].data)
    model, r0 = _tiny_run(ds, samples, split, lr=0.0, weight_decay=0.0)
    init = HignnModel.init_params(model.config)
    for k in init:
        assert np.array_equal(model.params[k].data, init[k].data)


def test_best_epoch_is_kept():
    smiles = esol_smiles(40, seed=8)
    ds = _dataset(smiles, np.linspace(-1, 1, 40))
    samples = featurize_all(smiles)
    split = make_split(ds, "random", seed=1)
    _, res = _tiny_run(ds, samples, split, epochs=4)
    vals = [row["val_metric"] for row in res.history]
    assert res.best_epoch == int(np.argmin(vals)) + 1


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nan_guard():
    smiles = esol_smiles(12, seed=2)
    ds = _dataset(smiles, np.full(12, np.nan))
    ds.labels[:] = 1.0
    ds.labels[0, 0] = np.inf
    ds.mask[:] = True
    samples = featurize_all(smiles)
    with pytest.raises(NumericFailure):
        _tiny_run(ds, samples, Split(list(range(10)), [10], [11]))


def test_esol_file_loads():
    ds = load_csv(str(ESOL))
    assert len(ds) == 1128 and ds.tasks == ["logS"] and ds.mask.all()
