"""Immutable molecular graph types produced by the SMILES parser."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace


class ChemError(ValueError):
    """Base class for molecule construction failures."""


class SmilesSyntaxError(ChemError):
    pass


class UnclosedRing(SmilesSyntaxError):
    pass


class ValenceError(ChemError):
    pass


class AromaticityError(ChemError):
    pass


class BondOrder(enum.Enum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4


class Hybridization(enum.Enum):
    SP = "SP"
    SP2 = "SP2"
    SP3 = "SP3"
    SP3D = "SP3D"
    SP3D2 = "SP3D2"
    OTHER = "OTHER"


class Chirality(enum.Enum):
    NONE = "NONE"
    CW = "CW"
    CCW = "CCW"


class BondStereo(enum.Enum):
    NONE = "NONE"
    ANY = "ANY"
    E = "E"
    Z = "Z"


@dataclass(frozen=True)
class Atom:
    index: int
    element: str
    formal_charge: int = 0
    explicit_h: int = 0
    implicit_h: int = 0
    aromatic: bool = False
    in_ring: bool = False
    degree: int = 0
    hybridization: Hybridization = Hybridization.OTHER
    chiral: Chirality = Chirality.NONE
    radical_electrons: int = 0
    bracket: bool = False

    @property
    def total_h(self) -> int:
        return self.explicit_h + self.implicit_h


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: BondOrder
    conjugated: bool = False
    in_ring: bool = False
    stereo: BondStereo = BondStereo.NONE
    # Kekule order (1, 2 or 3); equals order.value for non-aromatic bonds.
    kekule: int = 1

    def other(self, i: int) -> int:
        return self.b if i == self.a else self.a


@dataclass(frozen=True)
class Molecule:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    adjacency: tuple[tuple[int, ...], ...]
    rings: tuple[tuple[int, ...], ...]
    source_smiles: str = ""
    # Neighbor order used to interpret each atom's @/@@ tag; -1 marks an implicit H.
    chiral_order: tuple[tuple[int, ...], ...] = field(default=(), compare=False, repr=False)
    _bond_index: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        index = {}
        for k, bond in enumerate(self.bonds):
            index[(bond.a, bond.b)] = k
            index[(bond.b, bond.a)] = k
        object.__setattr__(self, "_bond_index", index)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    def bond_between(self, i: int, j: int) -> Bond | None:
        k = self._bond_index.get((i, j))
        return None if k is None else self.bonds[k]

    def bond_index(self, i: int, j: int) -> int | None:
        return self._bond_index.get((i, j))

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.adjacency[i]

    def __hash__(self):
        return hash((self.atoms, self.bonds))


def submolecule(m: Molecule, atom_ids) -> Molecule:
    """Induced subgraph on atom_ids, with cut bonds capped by implicit hydrogens.

    Atoms are renumbered in ascending parent order. A stereocenter that loses
    more than one neighbor, or a double bond whose end lost a neighbor, drops
    its stereo tag.
    """
    keep = sorted(set(atom_ids))
    remap = {old: new for new, old in enumerate(keep)}
    lost_h = {i: 0 for i in keep}
    lost_n = {i: 0 for i in keep}
    for b in m.bonds:
        ina, inb = b.a in remap, b.b in remap
        if ina and not inb:
            lost_h[b.a] += b.kekule
            lost_n[b.a] += 1
        elif inb and not ina:
            lost_h[b.b] += b.kekule
            lost_n[b.b] += 1
    adjacency = tuple(tuple(remap[j] for j in m.adjacency[i] if j in remap) for i in keep)
    atoms = []
    chiral_order = []
    for new, old in enumerate(keep):
        a = m.atoms[old]
        chiral = a.chiral
        order = list(m.chiral_order[old]) if m.chiral_order else []
        if lost_n[old]:
            gone = [x for x in order if x != -1 and x not in remap]
            if chiral is not Chirality.NONE and (len(gone) > 1 or -1 in order):
                chiral = Chirality.NONE
            order = [x for x in order if x == -1 or x in remap] if chiral is Chirality.NONE \
                else [-1 if (x != -1 and x not in remap) else x for x in order]
        chiral_order.append(tuple(x if x == -1 else remap[x] for x in order))
        atoms.append(Atom(
            index=new, element=a.element, formal_charge=a.formal_charge,
            explicit_h=a.explicit_h, implicit_h=a.implicit_h + lost_h[old],
            aromatic=a.aromatic, in_ring=a.in_ring, degree=len(adjacency[new]),
            hybridization=a.hybridization, chiral=chiral,
            radical_electrons=a.radical_electrons, bracket=a.bracket,
        ))
    bonds = []
    for b in m.bonds:
        if b.a in remap and b.b in remap:
            stereo = b.stereo
            if lost_n[b.a] or lost_n[b.b]:
                stereo = BondStereo.NONE
            bonds.append(Bond(remap[b.a], remap[b.b], b.order, b.conjugated, b.in_ring,
                              stereo, b.kekule))
    rings = tuple(tuple(remap[i] for i in r) for r in m.rings if all(i in remap for i in r))
    return Molecule(tuple(atoms), tuple(bonds), adjacency, rings, "", tuple(chiral_order))


def permute_atoms(m: Molecule, order) -> Molecule:
    """Relabel atoms so that new atom k is old atom order[k].

    Bonds keep their relative order, and stereo tags carry over unchanged
    because they are stored relative to neighbor identities.
    """
    order = [int(i) for i in order]
    if sorted(order) != list(range(m.n_atoms)):
        raise ValueError("order must be a permutation of the atom indices")
    remap = {old: new for new, old in enumerate(order)}
    atoms = tuple(replace(m.atoms[old], index=new) for new, old in enumerate(order))
    bonds = tuple(replace(b, a=remap[b.a], b=remap[b.b]) for b in m.bonds)
    adjacency = tuple(tuple(remap[j] for j in m.adjacency[old]) for old in order)
    rings = tuple(tuple(remap[i] for i in r) for r in m.rings)
    chiral_order = tuple(tuple(x if x == -1 else remap[x] for x in m.chiral_order[old])
                         for old in order) if m.chiral_order else ()
    return Molecule(atoms, bonds, adjacency, rings, "", chiral_order)
