import csv
from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).resolve().parents[1] / "data"
ESOL = DATA / "esol.csv"


def esol_smiles(n=None, seed=None):
    with open(ESOL, newline="") as fh:
        smiles = [row["smiles"] for row in csv.DictReader(fh)]
    if seed is not None:
        idx = np.random.default_rng(seed).permutation(len(smiles))
        smiles = [smiles[i] for i in idx]
    return smiles if n is None else smiles[:n]


@pytest.fixture(scope="session")
def esol_corpus():
    return esol_smiles()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance lines collected by test_acceptance.py, echoed after the run
ACCEPTANCE: dict[int, str] = {}
LOGS = Path(__file__).resolve().parents[1] / "acceptance_logs"


def report(n: int, ok: bool, text: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {text}"
    ACCEPTANCE[n] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
        LOGS.mkdir(exist_ok=True)
        (LOGS / "acceptance.txt").write_text("".join(ACCEPTANCE[n] + "\n" for n in sorted(ACCEPTANCE)))
