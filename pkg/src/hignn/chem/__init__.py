"""Molecular graphs from SMILES: parsing, perception, canonical output, scaffolds."""

from .molecule import (
    AromaticityError,
    Atom,
    Bond,
    BondOrder,
    BondStereo,
    ChemError,
    Chirality,
    Hybridization,
    Molecule,
    SmilesSyntaxError,
    UnclosedRing,
    ValenceError,
    permute_atoms,
)
from .canon import canonical_smiles
from .scaffold import scaffold_smiles
from .smiles import parse_smiles

__all__ = [
    "AromaticityError", "Atom", "Bond", "BondOrder", "BondStereo", "ChemError",
    "Chirality", "Hybridization", "Molecule", "SmilesSyntaxError", "UnclosedRing",
    "ValenceError", "canonical_smiles", "parse_smiles", "permute_atoms",
    "scaffold_smiles",
]
