"""Molecule-fragment cosine similarity explanations."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .chem import canonical_smiles
from .data import featurize_sample
from .encoder import batch_graphs, encode
from .model import HignnModel, make_batch
from .train import Scaler

logger = logging.getLogger(__name__)


def cosine(u: np.ndarray, v: np.ndarray) -> tuple[float, bool]:
    """Cosine similarity and a zero-vector flag (cosine 0 when either norm is 0).

    u.v / sqrt(|u|^2 |v|^2) returns exactly 1 for identical vectors, since
    the square root of a correctly rounded square is exact.
    """
    uu, vv = float(u @ u), float(v @ v)
    if uu == 0.0 or vv == 0.0:
        return 0.0, True
    c = float(u @ v) / math.sqrt(uu * vv)
    return min(1.0, max(-1.0, c)), False


@dataclass
class FragmentScore:
    atoms: list[int]
    smiles: str
    cosine: float
    zero_vector: bool = False


@dataclass
class Explanation:
    smiles: str                  # canonical SMILES of the input
    input: str
    fragments: list[FragmentScore]
    atom_scores: list[float]     # indexed by input atom order
    prediction: list[float]
    warnings: list[str] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "smiles": self.smiles, "input": self.input,
            "fragments": [{"atoms": f.atoms, "smiles": f.smiles, "cosine": f.cosine,
                           "zero_vector": f.zero_vector} for f in self.fragments],
            "atom_scores": self.atom_scores, "prediction": self.prediction,
            "warnings": self.warnings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)


def _embed(model: HignnModel, graph) -> np.ndarray:
    h_G, _ = encode(batch_graphs([graph]), model.config.encoder, model.params, train=False)
    return h_G.data[0]


def explain(model: HignnModel, smiles: str, scaler: Scaler | None = None) -> Explanation:
    """Score each BRICS fragment by cosine(h_G, s_t) in eval mode.

    Every graph is encoded on its own, so a fragment identical to the whole
    molecule reproduces h_G bit for bit.
    """
    sample = featurize_sample(smiles, model.config.extras)
    out = model.predict(make_batch([sample], model.config.uses_fragments))[0]
    if scaler is not None and model.config.task_type == "REGRESSION":
        out = scaler.inverse(out)
    h_G = _embed(model, sample.graph)
    frags, warnings = [], []
    for atoms, graph, smi in zip(sample.fragments.fragments, sample.fragment_graphs,
                                 sample.fragments.smiles()):
        c, zero = cosine(h_G, _embed(model, graph))
        if zero:
            warnings.append(f"zero vector for fragment {smi}")
            logger.warning("%s: zero-norm embedding for fragment %s", smiles, smi)
        frags.append(FragmentScore(sorted(atoms), smi, c, zero))
    scores = [0.0] * sample.mol.n_atoms
    for f in frags:
        for a in f.atoms:
            scores[a] = f.cosine
    frags.sort(key=lambda f: -f.cosine)
    return Explanation(canonical_smiles(sample.mol), smiles, frags, scores,
                       [float(v) for v in out], warnings)
