"""BRICS fragmentation.

Each environment is a plain predicate over (molecule, atom index). A bond is
cleavable when it is acyclic, has the order a pairing rule asks for, and its
two ends satisfy a permitted environment pair. Fragments are connected
components of the molecule with every cleavable bond removed; cleavage
sites are not materialized as dummy atoms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

from .chem.canon import canonical_smiles
from .chem.molecule import BondOrder, Molecule, submolecule


@dataclass(frozen=True)
class BricsEnvironment:
    id: str
    predicate: Callable[[Molecule, int], bool]
    description: str


@dataclass(frozen=True)
class FragmentSet:
    fragments: tuple[tuple[int, ...], ...]
    cleaved_bonds: tuple[tuple[int, int, tuple[str, str]], ...]
    parent: Molecule

    @property
    def n_fragments(self) -> int:
        return len(self.fragments)

    def smiles(self) -> list[str]:
        """Canonical SMILES of each fragment, cut bonds capped with hydrogen."""
        return [canonical_smiles(submolecule(self.parent, f)) for f in self.fragments]

    def to_record(self) -> dict:
        return {
            "smiles": self.parent.source_smiles,
            "n_fragments": self.n_fragments,
            "fragments": self.smiles(),
            "atom_sets": [list(f) for f in self.fragments],
            "cleaved_bonds": [[a, b, list(pair)] for a, b, pair in self.cleaved_bonds],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)


# atom and bond primitives

def _aliphatic(m, i, *elements):
    a = m.atoms[i]
    return not a.aromatic and a.element in elements


def _aromatic(m, i, *elements):
    a = m.atoms[i]
    return a.aromatic and a.element in elements


def _element(m, i, *elements):
    return m.atoms[i].element in elements


def _order(m, i, j):
    return m.bond_between(i, j).order


def _single(m, i, j):
    return _order(m, i, j) is BondOrder.SINGLE


def _chain_single(m, i, j):
    b = m.bond_between(i, j)
    return b.order is BondOrder.SINGLE and not b.in_ring


def _ring_single(m, i, j):
    b = m.bond_between(i, j)
    return b.order is BondOrder.SINGLE and b.in_ring


def _plain(m, i, j):
    # a bond with no order given: single or aromatic
    return _order(m, i, j) in (BondOrder.SINGLE, BondOrder.AROMATIC)


def _arom_bond(m, i, j):
    return _order(m, i, j) is BondOrder.AROMATIC


def _has_double(m, i):
    return any(_order(m, i, j) is BondOrder.DOUBLE for j in m.adjacency[i])


def _carbonyl_o(m, i, exclude=-1):
    """Atom i carries =O (aliphatic O) on a neighbor other than exclude."""
    return [j for j in m.adjacency[i] if j != exclude and _aliphatic(m, j, "O")
            and _order(m, i, j) is BondOrder.DOUBLE]


def _two_distinct(first, second):
    """True when some x in first and y in second are different atoms."""
    return any(x != y for x in first for y in second)


# environments

def _l1(m, i):
    if not _aliphatic(m, i, "C") or m.atoms[i].degree != 3 or not _carbonyl_o(m, i):
        return False
    return any(_plain(m, i, j) and _element(m, j, "C", "N", "O") for j in m.adjacency[i])


def _l2(m, i):
    if not _aliphatic(m, i, "N") or m.atoms[i].in_ring or m.atoms[i].degree == 1:
        return False
    if _has_double(m, i):
        return False
    return any(_chain_single(m, i, j) and _element(m, j, "C") for j in m.adjacency[i])


def _l3(m, i):
    if not _aliphatic(m, i, "O") or m.atoms[i].degree != 2:
        return False
    return any(_chain_single(m, i, j) and _element(m, j, "C", "H") for j in m.adjacency[i])


def _l4(m, i):
    if not _aliphatic(m, i, "C") or m.atoms[i].degree == 1 or _has_double(m, i):
        return False
    return any(_chain_single(m, i, j) and _element(m, j, "C") for j in m.adjacency[i])


def _l5(m, i):
    a = m.atoms[i]
    if not _aliphatic(m, i, "N") or a.degree == 1 or _has_double(m, i):
        return False
    for j in m.adjacency[i]:
        if _single(m, i, j) and not _element(m, j, "C", "S", "H"):
            return False
    if a.in_ring:
        # ring amide nitrogen belongs to L10
        for j in m.adjacency[i]:
            b = m.bond_between(i, j)
            if b.in_ring and _aliphatic(m, j, "C") and m.atoms[j].in_ring and _carbonyl_o(m, j):
                return False
    return True


def _l6(m, i):
    a = m.atoms[i]
    if not _aliphatic(m, i, "C") or a.degree != 3 or a.in_ring or not _carbonyl_o(m, i):
        return False
    return any(_chain_single(m, i, j) and _element(m, j, "C", "N", "O") for j in m.adjacency[i])


def _l7(m, i):
    if not _aliphatic(m, i, "C") or m.atoms[i].degree not in (2, 3):
        return False
    return any(_single(m, i, j) and _element(m, j, "C") for j in m.adjacency[i])


def _l8(m, i):
    a = m.atoms[i]
    if not _aliphatic(m, i, "C") or a.in_ring or a.degree == 1:
        return False
    return all(_single(m, i, j) for j in m.adjacency[i])


def _l9(m, i):
    if not _aromatic(m, i, "N") or m.atoms[i].formal_charge != 0:
        return False
    ring_nbrs = [j for j in m.adjacency[i]
                 if _arom_bond(m, i, j) and _aromatic(m, j, "C", "N", "O", "S")]
    return len(ring_nbrs) >= 2


def _l10(m, i):
    if not _aliphatic(m, i, "N") or not m.atoms[i].in_ring:
        return False
    ring_nbrs = [j for j in m.adjacency[i] if m.bond_between(i, j).in_ring]
    acyl = [j for j in ring_nbrs if _aliphatic(m, j, "C") and _carbonyl_o(m, j, exclude=i)]
    other = [j for j in ring_nbrs if _aliphatic(m, j, "C", "N", "O", "S")]
    return _two_distinct(acyl, other)


def _l11(m, i):
    if not _aliphatic(m, i, "S") or m.atoms[i].degree != 2:
        return False
    return any(_chain_single(m, i, j) and _element(m, j, "C") for j in m.adjacency[i])


def _l12(m, i):
    if not _aliphatic(m, i, "S") or m.atoms[i].degree != 4:
        return False
    if len(_carbonyl_o(m, i)) < 2:
        return False
    return any(_plain(m, i, j) and _element(m, j, "C") for j in m.adjacency[i])


def _l13(m, i):
    if not _aliphatic(m, i, "C"):
        return False
    ring = [j for j in m.adjacency[i] if _ring_single(m, i, j)]
    first = [j for j in ring if _aliphatic(m, j, "C", "N", "O", "S")]
    second = [j for j in ring if _aliphatic(m, j, "N", "O", "S")]
    return _two_distinct(first, second)


def _l14(m, i):
    if not _aromatic(m, i, "C"):
        return False
    ring = [j for j in m.adjacency[i] if _arom_bond(m, i, j)]
    first = [j for j in ring if _aromatic(m, j, "C", "N", "O", "S")]
    second = [j for j in ring if _aromatic(m, j, "N", "O", "S")]
    return _two_distinct(first, second)


def _l15(m, i):
    if not _aliphatic(m, i, "C"):
        return False
    ring = [j for j in m.adjacency[i] if _ring_single(m, i, j) and _aliphatic(m, j, "C")]
    return len(ring) >= 2


def _l16(m, i):
    if not _aromatic(m, i, "C"):
        return False
    ring = [j for j in m.adjacency[i] if _arom_bond(m, i, j) and _aromatic(m, j, "C")]
    return len(ring) >= 2


ENVIRONMENTS: dict[str, BricsEnvironment] = {e.id: e for e in (
    BricsEnvironment("L1", _l1, "acyl carbon of an amide, ester or ketone"),
    BricsEnvironment("L2", _l2, "acyclic amine nitrogen (no pairings; covered by L5)"),
    BricsEnvironment("L3", _l3, "ether or ester oxygen on an acyclic bond"),
    BricsEnvironment("L4", _l4, "saturated aliphatic carbon linker"),
    BricsEnvironment("L5", _l5, "amine nitrogen bearing only C, S or H single bonds"),
    BricsEnvironment("L6", _l6, "acyclic carbonyl carbon"),
    BricsEnvironment("L7", _l7, "alkene carbon with a carbon substituent"),
    BricsEnvironment("L8", _l8, "saturated acyclic carbon"),
    BricsEnvironment("L9", _l9, "neutral aromatic nitrogen"),
    BricsEnvironment("L10", _l10, "lactam nitrogen"),
    BricsEnvironment("L11", _l11, "thioether sulfur"),
    BricsEnvironment("L12", _l12, "sulfonyl sulfur"),
    BricsEnvironment("L13", _l13, "ring carbon next to a ring heteroatom"),
    BricsEnvironment("L14", _l14, "aromatic carbon next to an aromatic heteroatom"),
    BricsEnvironment("L15", _l15, "ring carbon between two ring carbons"),
    BricsEnvironment("L16", _l16, "aromatic carbon between two aromatic carbons"),
)}

# Permitted pairings, lowest-numbered first: (env1, env2, bond order).
PAIR_RULES: tuple[tuple[str, str, BondOrder], ...] = tuple(
    (f"L{a}", f"L{b}", BondOrder.DOUBLE if (a, b) == (7, 7) else BondOrder.SINGLE)
    for a, b in sorted((
        (1, 3), (1, 5), (1, 10),
        (3, 4), (3, 13), (3, 14), (3, 15), (3, 16),
        (4, 5), (4, 11),
        (5, 12), (5, 14), (5, 16), (5, 13), (5, 15),
        (6, 13), (6, 14), (6, 15), (6, 16),
        (7, 7),
        (8, 9), (8, 10), (8, 13), (8, 14), (8, 15), (8, 16),
        (9, 13), (9, 14), (9, 15), (9, 16),
        (10, 13), (10, 14), (10, 15), (10, 16),
        (11, 13), (11, 14), (11, 15), (11, 16),
        (13, 14), (13, 15), (13, 16),
        (14, 14), (14, 15), (14, 16),
        (15, 16),
        (16, 16),
    ))
)


def environment_labels(m: Molecule) -> list[set[str]]:
    """Environment ids satisfied by each atom."""
    return [{eid for eid, env in ENVIRONMENTS.items() if env.predicate(m, i)}
            for i in range(m.n_atoms)]


def brics_bonds(m: Molecule) -> list[tuple[int, int, tuple[str, str]]]:
    """Cleavable bonds as (a, b, (env_a, env_b)), sorted by atom indices.

    A bond matching several pairings records the lowest-numbered one.
    """
    labels = environment_labels(m)
    found: dict[tuple[int, int], tuple[int, int, tuple[str, str]]] = {}
    for e1, e2, order in PAIR_RULES:
        for bond in m.bonds:
            if bond.in_ring or bond.order is not order:
                continue
            key = (min(bond.a, bond.b), max(bond.a, bond.b))
            if key in found:
                continue
            for a, b in (key, key[::-1]):
                if e1 in labels[a] and e2 in labels[b]:
                    found[key] = (a, b, (e1, e2))
                    break
    return [found[k] for k in sorted(found)]


def fragment(m: Molecule) -> FragmentSet:
    """Split m at every BRICS bond; the whole molecule when nothing is cleavable."""
    cut = brics_bonds(m)
    removed = {frozenset((a, b)) for a, b, _ in cut}
    seen = [False] * m.n_atoms
    fragments = []
    for s in range(m.n_atoms):
        if seen[s]:
            continue
        comp = []
        stack = [s]
        seen[s] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for j in m.adjacency[v]:
                if not seen[j] and frozenset((v, j)) not in removed:
                    seen[j] = True
                    stack.append(j)
        fragments.append(tuple(sorted(comp)))
    return FragmentSet(tuple(fragments), tuple(cut), m)
