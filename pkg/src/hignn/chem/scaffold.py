"""Bemis-Murcko scaffolds."""

from __future__ import annotations

from .canon import canonical_smiles
from .molecule import BondOrder, Molecule, submolecule


def murcko_scaffold(m: Molecule) -> set[int]:
    """Atom indices of the ring systems plus the linkers joining them.

    Side chains are pruned from the leaves inward. A terminal atom
    double-bonded to the framework (carbonyl O, exocyclic =C) stays with its
    partner and is pruned only together with it. Acyclic
    molecules have an empty scaffold.
    """
    if not m.rings:
        return set()
    alive = set(range(m.n_atoms))

    def double_leaf(i):
        nb = [j for j in m.adjacency[i] if j in alive]
        return (not m.atoms[i].in_ring and len(nb) == 1
                and m.bond_between(i, nb[0]).order is BondOrder.DOUBLE)

    changed = True
    while changed:
        changed = False
        for i in sorted(alive):
            if i not in alive or m.atoms[i].in_ring or double_leaf(i):
                continue
            nb = [j for j in m.adjacency[i] if j in alive]
            leaves = [j for j in nb if double_leaf(j)]
            if len(nb) - len(leaves) <= 1:
                alive.discard(i)
                alive.difference_update(leaves)
                changed = True
    return alive


def scaffold_smiles(m: Molecule) -> str:
    """Canonical SMILES of the scaffold; empty string for acyclic molecules."""
    core = murcko_scaffold(m)
    if not core:
        return ""
    return canonical_smiles(submolecule(m, core))
