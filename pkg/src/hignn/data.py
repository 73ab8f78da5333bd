"""Datasets, featurization caching and train/val/test splits."""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .brics import FragmentSet, fragment
from .chem import ChemError, Molecule, parse_smiles
from .chem.scaffold import scaffold_smiles
from .featurize import featurize_graph

logger = logging.getLogger(__name__)

SPLIT_METHODS = ("random", "scaffold")


class DataError(ValueError):
    """Malformed dataset, split or label file."""


@dataclass
class Dataset:
    smiles: list[str]
    labels: np.ndarray          # (n, n_tasks), NaN where missing
    mask: np.ndarray            # (n, n_tasks) bool
    tasks: list[str]
    task_type: str = "REGRESSION"
    source_rows: list[int] = field(default_factory=list)  # CSV line of each row

    def __len__(self):
        return len(self.smiles)

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    def subset(self, idx) -> "Dataset":
        idx = list(idx)
        return Dataset([self.smiles[i] for i in idx], self.labels[idx], self.mask[idx],
                       self.tasks, self.task_type, [self.source_rows[i] for i in idx])


def _detect_task_type(labels, mask) -> str:
    values = labels[mask]
    if values.size and np.isin(values, (0.0, 1.0)).all():
        return "BINARY_MULTITASK"
    return "REGRESSION"


def load_csv(path: str, task_type: str | None = None, tasks: list[str] | None = None) -> Dataset:
    """Read a CSV with a "smiles" column; every other column is a task.

    Empty cells are missing labels. Rows whose SMILES fail to parse are
    dropped and counted in a warning.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "smiles" not in reader.fieldnames:
            raise DataError(f"{path}: header must contain a 'smiles' column")
        columns = tasks or [c for c in reader.fieldnames if c != "smiles"]
        missing_cols = [c for c in columns if c not in reader.fieldnames]
        if missing_cols:
            raise DataError(f"{path}: missing task columns {missing_cols}")
        if not columns:
            raise DataError(f"{path}: no task columns")
        smiles, labels, mask, lines = [], [], [], []
        dropped = 0
        for line, row in enumerate(reader, start=2):
            s = (row.get("smiles") or "").strip()
            try:
                parse_smiles(s)
            except ChemError as exc:
                dropped += 1
                logger.debug("%s line %d: %s", path, line, exc)
                continue
            vals, present = [], []
            for c in columns:
                cell = (row.get(c) or "").strip()
                if cell == "":
                    vals.append(np.nan)
                    present.append(False)
                    continue
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(f"{path} line {line}: bad label {cell!r} in column {c!r}") from None
                present.append(True)
            smiles.append(s)
            labels.append(vals)
            mask.append(present)
            lines.append(line)
    if dropped:
        logger.warning("%s: dropped %d unparseable rows", path, dropped)
    labels = np.array(labels, dtype=np.float64).reshape(-1, len(columns))
    mask = np.array(mask, dtype=bool).reshape(-1, len(columns))
    kind = task_type or _detect_task_type(labels, mask)
    return Dataset(smiles, labels, mask, list(columns), kind, lines)


@dataclass
class Sample:
    smiles: str
    mol: Molecule
    fragments: FragmentSet
    graph: tuple
    fragment_graphs: list


def featurize_sample(smiles: str, extras: bool = True) -> Sample:
    return featurize_molecule(parse_smiles(smiles), smiles, extras)


def featurize_molecule(mol, smiles: str = "", extras: bool = True) -> Sample:
    """Sample for an already parsed molecule; atom order is kept as given."""
    frags = fragment(mol)
    graph = featurize_graph(mol, None, extras)
    if frags.n_fragments == 1:
        frag_graphs = [graph]
    else:
        frag_graphs = [featurize_graph(mol, f, extras) for f in frags.fragments]
    return Sample(smiles, mol, frags, graph, frag_graphs)


def _featurize_chunk(args):
    chunk, extras = args
    return [featurize_sample(s, extras) for s in chunk]


def featurize_all(smiles: list[str], extras: bool = True, workers: int | None = None) -> list[Sample]:
    """Featurize in input order; HIGNN_THREADS sets the worker count."""
    if workers is None:
        workers = int(os.environ.get("HIGNN_THREADS", "1") or 1)
    if workers <= 1 or len(smiles) < 64:
        return [featurize_sample(s, extras) for s in smiles]
    size = (len(smiles) + workers - 1) // workers
    chunks = [(smiles[i:i + size], extras) for i in range(0, len(smiles), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_featurize_chunk, chunks))
    return [s for part in parts for s in part]


@dataclass
class Split:
    train: list[int]
    val: list[int]
    test: list[int]
    method: str = "random"
    seed: int = 0

    def partition(self, name: str) -> list[int]:
        if name not in ("train", "val", "test"):
            raise DataError(f"unknown partition {name!r}")
        return getattr(self, name)

    def to_json(self) -> str:
        return json.dumps({"method": self.method, "seed": self.seed, "train": self.train,
                           "val": self.val, "test": self.test}, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str, n_rows: int | None = None) -> "Split":
        try:
            raw = json.loads(text)
            split = cls([int(i) for i in raw["train"]], [int(i) for i in raw["val"]],
                        [int(i) for i in raw["test"]], raw.get("method", "random"),
                        int(raw.get("seed", 0)))
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"malformed split file: {exc}") from None
        split.validate(n_rows)
        return split

    def validate(self, n_rows: int | None = None):
        allidx = self.train + self.val + self.test
        if len(set(allidx)) != len(allidx):
            raise DataError("split partitions overlap")
        if n_rows is not None and sorted(allidx) != list(range(n_rows)):
            raise DataError(f"split does not cover the {n_rows} dataset rows exactly")


def _cut(n: int, ratio) -> tuple[int, int]:
    n_train = int(np.floor(ratio[0] * n + 1e-9))
    n_val = int(np.floor(ratio[1] * n + 1e-9))
    return n_train, n_val


def random_split(n: int, ratio=(0.8, 0.1, 0.1), seed: int = 0) -> Split:
    perm = np.random.default_rng(seed).permutation(n).tolist()
    n_train, n_val = _cut(n, ratio)
    return Split(perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:],
                 "random", seed)


def scaffold_split(smiles: list[str], ratio=(0.8, 0.1, 0.1), seed: int = 0) -> Split:
    """Largest scaffold groups first into train, then val, the rest to test."""
    groups: dict[str, list[int]] = {}
    for i, s in enumerate(smiles):
        groups.setdefault(scaffold_smiles(parse_smiles(s)), []).append(i)
    ordered = sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    n = len(smiles)
    train, val, test = [], [], []
    for _, members in ordered:
        if len(train) < ratio[0] * n - 1e-9:
            train.extend(members)
        elif len(val) < ratio[1] * n - 1e-9:
            val.extend(members)
        else:
            test.extend(members)
    split = Split(train, val, test, "scaffold", seed)
    assert_no_scaffold_leak(smiles, split)
    return split


def assert_no_scaffold_leak(smiles: list[str], split: Split):
    seen: dict[str, str] = {}
    for name in ("train", "val", "test"):
        for i in split.partition(name):
            key = scaffold_smiles(parse_smiles(smiles[i]))
            if seen.setdefault(key, name) != name:
                raise AssertionError(f"scaffold {key!r} appears in {seen[key]} and {name}")


def make_split(dataset: Dataset, method: str = "random", ratio=(0.8, 0.1, 0.1),
               seed: int = 0) -> Split:
    if abs(sum(ratio) - 1.0) > 1e-9:
        raise ValueError(f"split ratio must sum to 1, got {ratio}")
    if len(dataset) < 3:
        raise DataError(f"need at least 3 rows to split, got {len(dataset)}")
    if method == "random":
        return random_split(len(dataset), ratio, seed)
    if method == "scaffold":
        return scaffold_split(dataset.smiles, ratio, seed)
    raise ValueError(f"unknown split method {method!r}")
