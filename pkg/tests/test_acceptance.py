"""Acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line (also echoed in the terminal summary
and written to acceptance_logs/acceptance.txt) before asserting.
"""

import csv
import itertools
import json
import subprocess
import sys
import time
from collections import Counter

import numpy as np
import pytest

from hignn import tensor as T
from hignn.brics import fragment
from hignn.chem import parse_smiles, permute_atoms
from hignn.config import TrainConfig
from hignn.data import featurize_all, featurize_molecule, featurize_sample, load_csv, make_split
from hignn.encoder import MESSAGE_SCHEMES
from hignn.explain import explain
from hignn.metrics import roc_auc
from hignn.model import MODES, HignnModel, ModelConfig, make_batch
from hignn.train import train_model

from conftest import DATA, ESOL, LOGS, esol_smiles, report
from oracles import model_loop

DRUGS = DATA / "drugs_sample.csv"
BACE = DATA / "bace.csv"


def _random_model(cfg, seed, scale=0.5):
    model = HignnModel(cfg)
    rng = np.random.default_rng(seed)
    for t in model.params.values():
        t.data = rng.standard_normal(t.data.shape) * scale
    return model


# 1. gradients

def test_c1_gradient_check():
    # default initialization of the d=8, a=2, K=2, r=2 model on two molecules
    # with two fragments each, over five initialization seeds
    start = time.perf_counter()
    samples = [featurize_sample(s) for s in ("CC(=O)c1ccccc1", "O=C(O)c1ccccc1")]
    assert [s.fragments.n_fragments for s in samples] == [2, 2]
    batch = make_batch(samples)
    y = np.array([[0.4], [-0.9]])
    mask = np.ones_like(y, bool)
    block, entry = {}, {}
    for seed in range(5):
        model = HignnModel(ModelConfig(d=8, K=2, a=2, r=2, seed=seed))

        def f():
            return T.mse(model.forward(batch)[0], y, mask)

        with T.Tape() as tape:
            value = f()
        tape.backward(value)
        for name, p in model.params.items():
            num = T.numeric_grad(lambda: f().data, p.data, h=1e-6)
            block[seed, name] = T.block_rel_error(p.grad, num)
            entry[seed, name] = T.max_rel_error(p.grad, num)
    elapsed = time.perf_counter() - start
    worst = max(block, key=block.get)
    ok = block[worst] <= 1e-4 and elapsed < 60
    report(1, ok, f"max block relative error {block[worst]:.2e} (seed {worst[0]}, {worst[1]}) <= 1e-4 "
                  f"over {len(block)} blocks, {elapsed:.1f}s < 60s; "
                  f"per-entry max {max(entry.values()):.2e}")
    assert ok


# 2. loop oracle

def test_c2_loop_equivalence():
    rng = np.random.default_rng(2024)
    pool = esol_smiles()
    worst = 0.0
    for i in range(100):
        cfg = ModelConfig(d=8, K=int(rng.integers(1, 4)), a=int(rng.choice([1, 2, 4])),
                          r=int(rng.choice([1, 2, 4, 8])), dropout=0.0,
                          message_scheme=str(rng.choice(MESSAGE_SCHEMES)),
                          mode=str(rng.choice(MODES)), n_tasks=int(rng.integers(1, 4)))
        model = _random_model(cfg, seed=i)
        smiles = [pool[j] for j in rng.choice(len(pool), size=int(rng.integers(1, 4)), replace=False)]
        batch = make_batch([featurize_sample(s) for s in smiles], cfg.uses_fragments)
        out, enc = model.forward(batch)
        y, h_G, s_G = model_loop(batch, model.params, cfg)
        err = max(np.max(np.abs(out.data - np.array(y))), np.max(np.abs(enc.h_G - np.array(h_G))))
        if s_G is not None:
            err = max(err, np.max(np.abs(enc.s_G - np.array(s_G))))
        worst = max(worst, float(err))
    ok = worst <= 1e-10
    report(2, ok, f"100 random instances, max |engine - loop| = {worst:.2e} <= 1e-10")
    assert ok


# 3. atom relabeling

def test_c3_permutation_invariance():
    rng = np.random.default_rng(3)
    model = HignnModel(ModelConfig(seed=3))
    worst = 0.0
    for s in esol_smiles(50, seed=33):
        mol = parse_smiles(s)
        order = rng.permutation(mol.n_atoms).tolist()
        runs = []
        for m in (mol, permute_atoms(mol, order)):
            sample = featurize_molecule(m, s)
            out, enc = model.forward(make_batch([sample]))
            runs.append((out.data, enc.h_G, enc.s_G))
        for a, b in zip(*runs):
            worst = max(worst, float(np.max(np.abs(a - b))))
    ok = worst <= 1e-9
    report(3, ok, f"50 molecules, max change in h_G, s_G, y = {worst:.2e} <= 1e-9")
    assert ok


# 4. BRICS against RDKit

def _rdkit_fragments(Chem, BRICS, smiles):
    mol = max(Chem.GetMolFrags(Chem.MolFromSmiles(smiles), asMols=True),
              key=lambda m: m.GetNumAtoms())
    out = Counter()
    for frag in Chem.GetMolFrags(BRICS.BreakBRICSBonds(mol), asMols=True, sanitizeFrags=False):
        rw = Chem.RWMol(frag)
        dummies = [a.GetIdx() for a in rw.GetAtoms() if a.GetAtomicNum() == 0]
        for i in dummies:
            nb = rw.GetAtomWithIdx(i).GetNeighbors()[0]
            nb.SetNumExplicitHs(nb.GetNumExplicitHs() + 1)
        for i in sorted(dummies, reverse=True):
            rw.RemoveAtom(i)
        m = rw.GetMol()
        Chem.SanitizeMol(m)
        out[Chem.MolToSmiles(Chem.RemoveHs(m))] += 1
    return out


def test_c4_brics_oracle():
    pytest.importorskip("rdkit")
    from rdkit import Chem, RDLogger
    from rdkit.Chem import BRICS
    RDLogger.DisableLog("rdApp.*")

    rng = np.random.default_rng(4)
    esol = esol_smiles()
    with open(DRUGS, newline="") as fh:
        drugs = [row["smiles"] for row in csv.DictReader(fh)]
    corpus = [esol[i] for i in rng.choice(len(esol), 100, replace=False)] + drugs[:100]
    mismatches = []
    for s in corpus:
        ours = Counter(Chem.MolToSmiles(Chem.MolFromSmiles(f))
                       for f in fragment(parse_smiles(s)).smiles())
        ref = _rdkit_fragments(Chem, BRICS, s)
        if ours != ref:
            mismatches.append((s, sorted(ours.elements()), sorted(ref.elements())))
    LOGS.mkdir(exist_ok=True)
    with open(LOGS / "brics_discrepancies.txt", "w") as fh:
        fh.write(f"{len(mismatches)} of {len(corpus)} molecules differ\n")
        for s, ours, ref in mismatches:
            fh.write(f"{s}\n  ours:  {ours}\n  rdkit: {ref}\n")
    rate = 1 - len(mismatches) / len(corpus)
    ok = rate >= 0.95
    report(4, ok, f"{len(corpus)} molecules (100 ESOL, 100 approved drugs), fragment multisets "
                  f"agree on {rate:.1%} >= 95%, log in acceptance_logs/brics_discrepancies.txt")
    assert ok


# 5. ROC-AUC against pair counting

def _pair_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return total / (len(pos) * len(neg))


def test_c5_auc_oracle():
    rng = np.random.default_rng(5)
    unequal = 0
    for _ in range(1000):
        n = int(rng.integers(2, 51))
        labels = rng.random(n) < rng.uniform(0.1, 0.9)
        labels[0], labels[1] = True, False
        scores = np.round(rng.random(n), int(rng.integers(1, 4)))  # rounding forces ties
        unequal += roc_auc(scores, labels) != _pair_auc(scores.tolist(), labels.tolist())
    ref = roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    ok = unequal == 0 and ref == 0.75
    report(5, ok, f"1000 instances, {unequal} differ from pair counting; reference case = {ref!r}")
    assert ok


# 6 and 8. ESOL training

_runs = {}


def _esol_run(mode, seed):
    if (mode, seed) not in _runs:
        if "data" not in _runs:
            ds = load_csv(str(ESOL))
            _runs["data"] = (ds, featurize_all(ds.smiles))
        ds, samples = _runs["data"]
        split = make_split(ds, "random", seed=seed)
        start = time.perf_counter()
        res = train_model(HignnModel(ModelConfig(mode=mode, seed=seed)), ds, samples, split,
                          TrainConfig(seed=seed))
        _runs[mode, seed] = (res, split, time.perf_counter() - start)
    return _runs[mode, seed]


@pytest.mark.slow
def test_c6_esol_regression():
    res, split, elapsed = _esol_run("FULL", 0)
    ds, _ = _runs["data"]
    y_train = ds.labels[split.train, 0]
    y_test = ds.labels[split.test, 0]
    baseline = float(np.sqrt(np.mean((y_test - y_train.mean()) ** 2)))
    best = res.history[res.best_epoch - 1]
    rmse = best["test_metric"]
    ok = rmse <= 1.10 and rmse < baseline and elapsed < 30 * 60
    report(6, ok, f"ESOL test RMSE {rmse:.4f} <= 1.10 and < mean-predictor {baseline:.4f}; "
                  f"best epoch {res.best_epoch}/100, {elapsed / 60:.1f} min < 30")
    assert ok


# 7. BACE

@pytest.mark.slow
def test_c7_bace_scaffold():
    if not BACE.exists():
        report(7, False, f"BACE data not available ({BACE.name} missing, no network access); "
                         "criterion not measured")
        pytest.xfail("BACE dataset is not available offline")
    ds = load_csv(str(BACE))
    samples = featurize_all(ds.smiles)
    split = make_split(ds, "scaffold", seed=0)
    start = time.perf_counter()
    cfg = ModelConfig(task_type=ds.task_type, n_tasks=ds.n_tasks)
    res = train_model(HignnModel(cfg), ds, samples, split, TrainConfig())
    elapsed = time.perf_counter() - start
    auc = res.history[res.best_epoch - 1]["test_metric"]
    ok = auc >= 0.70 and elapsed < 45 * 60
    report(7, ok, f"BACE scaffold test ROC-AUC {auc:.4f} >= 0.70, {elapsed / 60:.1f} min < 45")
    assert ok


@pytest.mark.slow
def test_c8_ablation_trend():
    vals = {}
    for mode in ("FULL", "NO_ALL"):
        vals[mode] = [min(r["val_metric"] for r in _esol_run(mode, s)[0].history) for s in range(3)]
    full, plain = float(np.mean(vals["FULL"])), float(np.mean(vals["NO_ALL"]))
    ok = full <= plain + 0.05
    report(8, ok, f"ESOL mean val RMSE over seeds 0-2: FULL {full:.4f} <= NO_ALL {plain:.4f} + 0.05 "
                  f"(FULL {[round(v, 4) for v in vals['FULL']]}, "
                  f"NO_ALL {[round(v, 4) for v in vals['NO_ALL']]})")
    assert ok


# 9. explanations of uncleavable molecules

def test_c9_self_fragment():
    model = HignnModel(ModelConfig(seed=9))
    uncleavable = [s for s in esol_smiles() if fragment(parse_smiles(s)).n_fragments == 1]
    bad = []
    for s in uncleavable:
        exp = explain(model, s)
        if len(exp.fragments) != 1 or exp.fragments[0].cosine != 1.0:
            bad.append(s)
    ok = not bad and len(uncleavable) > 0
    report(9, ok, f"{len(uncleavable)} uncleavable ESOL molecules, {len(bad)} without a single "
                  "fragment at cosine exactly 1")
    assert ok


# 10. determinism of the train command

def test_c10_cli_determinism(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("epochs=3\nseed=7\n")
    split = tmp_path / "split.json"
    hignn = [sys.executable, "-m", "hignn.cli"]
    subprocess.run(hignn + ["split", "--in", str(ESOL), "--seed", "7", "--out", str(split)],
                   check=True, capture_output=True)
    outputs = []
    for run in ("a", "b"):
        ck, hist = tmp_path / f"{run}.json", tmp_path / f"{run}.csv"
        subprocess.run(hignn + ["train", "--config", str(cfg), "--data", str(ESOL), "--split",
                                str(split), "--out", str(ck), "--history", str(hist)],
                       check=True, capture_output=True)
        outputs.append((ck.read_bytes(), hist.read_bytes()))
    (ck_a, h_a), (ck_b, h_b) = outputs
    json.loads(ck_a)
    ok = ck_a == ck_b and h_a == h_b
    report(10, ok, f"two train runs (ESOL, 3 epochs, seed 7): checkpoints identical={ck_a == ck_b} "
                   f"({len(ck_a)} bytes), histories identical={h_a == h_b}")
    assert ok
