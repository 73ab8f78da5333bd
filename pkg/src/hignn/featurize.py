"""Atom and bond feature vectors.

Atom layout (46 wide with extras, 40 without):
    0-15   element one-hot: B C N O F Si P S Cl As Se Br Te I At other
    16-21  heavy degree one-hot 0..5 (clamped)
    22     formal charge (raw integer)
    23     radical electrons
    24-29  hybridization one-hot: SP SP2 SP3 SP3D SP3D2 OTHER
    30     aromatic
    31-35  total hydrogens one-hot 0..4 (clamped)
    36     chiral center
    37-38  chirality CW, CCW
    39     ring membership
    40-44  pharmacophore: donor acceptor basic acid halogen
    45     Murcko scaffold membership

Bond layout (10 wide):
    0-3    order one-hot: single double triple aromatic
    4      conjugated
    5      in ring
    6-9    stereo one-hot: none any E Z
"""

from __future__ import annotations

import numpy as np

from .chem.molecule import BondOrder, BondStereo, Chirality, ChemError, Hybridization, Molecule
from .chem.scaffold import murcko_scaffold

ELEMENTS = ("B", "C", "N", "O", "F", "Si", "P", "S", "Cl", "As", "Se", "Br", "Te", "I", "At")
HYBRIDIZATIONS = (Hybridization.SP, Hybridization.SP2, Hybridization.SP3,
                  Hybridization.SP3D, Hybridization.SP3D2, Hybridization.OTHER)
BOND_ORDERS = (BondOrder.SINGLE, BondOrder.DOUBLE, BondOrder.TRIPLE, BondOrder.AROMATIC)
STEREOS = (BondStereo.NONE, BondStereo.ANY, BondStereo.E, BondStereo.Z)
HALOGENS = ("F", "Cl", "Br", "I")

N_ATOM_BASE = 40
N_ATOM_EXTRA = 46
N_BOND = 10


class DisconnectedSubset(ChemError):
    """Atom subset is empty, out of range or does not induce a connected graph."""


def atom_dim(extras: bool = True) -> int:
    return N_ATOM_EXTRA if extras else N_ATOM_BASE


def _is_carbonyl_like(m: Molecule, c: int) -> bool:
    """C, S or P carrying a double bond to O or S."""
    if m.atoms[c].element not in ("C", "S", "P"):
        return False
    for j in m.adjacency[c]:
        if m.atoms[j].element in ("O", "S") and m.bond_between(c, j).order is BondOrder.DOUBLE:
            return True
    return False


def _is_amide_n(m: Molecule, i: int) -> bool:
    a = m.atoms[i]
    if a.element != "N" or a.aromatic:
        return False
    return any(m.bond_between(i, j).order is BondOrder.SINGLE and _is_carbonyl_like(m, j)
               for j in m.adjacency[i])


def _h_count(m: Molecule, i: int) -> int:
    """Implicit, bracket and explicit-atom hydrogens on atom i."""
    return m.atoms[i].total_h + sum(1 for j in m.adjacency[i] if m.atoms[j].element == "H")


def _acid_atoms(m: Molecule) -> set[int]:
    out = set()
    for c, a in enumerate(m.atoms):
        if a.element not in ("C", "S", "P"):
            continue
        oxygens = [j for j in m.adjacency[c] if m.atoms[j].element == "O"]
        double_o = [j for j in oxygens if m.bond_between(c, j).order is BondOrder.DOUBLE]
        acidic = [j for j in oxygens if m.bond_between(c, j).order is BondOrder.SINGLE
                  and m.atoms[j].degree == 1
                  and (_h_count(m, j) >= 1 or m.atoms[j].formal_charge < 0)]
        if a.element == "C" and len(double_o) == 1 and acidic:
            out.update(double_o + acidic + [c])
        elif a.element == "S" and len(double_o) == 2 and acidic:
            out.update(double_o + acidic)
        elif a.element == "P" and len(double_o) == 1 and acidic:
            out.update(double_o + acidic)
    return out


def pharmacophore(m: Molecule) -> np.ndarray:
    """(N, 5) flags: donor, acceptor, basic, acid, halogen."""
    flags = np.zeros((m.n_atoms, 5))
    acid = _acid_atoms(m)
    for i, a in enumerate(m.atoms):
        if a.element in ("N", "O"):
            amide = _is_amide_n(m, i)
            flags[i, 0] = _h_count(m, i) >= 1
            pyrrole_nh = a.element == "N" and a.aromatic and _h_count(m, i) >= 1
            flags[i, 1] = a.formal_charge <= 0 and not pyrrole_nh and not amide
            if a.element == "N" and not a.aromatic and not amide and a.formal_charge >= 0:
                flags[i, 2] = all(m.bond_between(i, j).order is BondOrder.SINGLE
                                  for j in m.adjacency[i])
        flags[i, 3] = i in acid
        flags[i, 4] = a.element in HALOGENS
    return flags


def _atom_row(m, i, degree, pharm, scaffold, extras):
    a = m.atoms[i]
    row = np.zeros(atom_dim(extras))
    row[ELEMENTS.index(a.element) if a.element in ELEMENTS else 15] = 1
    row[16 + min(degree, 5)] = 1
    row[22] = a.formal_charge
    row[23] = a.radical_electrons
    row[24 + HYBRIDIZATIONS.index(a.hybridization)] = 1
    row[30] = a.aromatic
    row[31 + min(a.total_h, 4)] = 1
    row[36] = a.chiral is not Chirality.NONE
    row[37] = a.chiral is Chirality.CW
    row[38] = a.chiral is Chirality.CCW
    row[39] = a.in_ring
    if extras:
        row[40:45] = pharm[i]
        row[45] = i in scaffold
    return row


def atom_features(m: Molecule, i: int, extras: bool = True) -> np.ndarray:
    """Feature row for atom i of the whole molecule."""
    if not 0 <= i < m.n_atoms:
        raise IndexError(f"atom index {i} out of range for {m.n_atoms} atoms")
    pharm = pharmacophore(m) if extras else None
    scaffold = murcko_scaffold(m) if extras else set()
    return _atom_row(m, i, m.atoms[i].degree, pharm, scaffold, extras)


def bond_features(m: Molecule, bond) -> np.ndarray:
    """Feature row for a Bond (or a bond index)."""
    if isinstance(bond, (int, np.integer)):
        bond = m.bonds[bond]
    row = np.zeros(N_BOND)
    row[BOND_ORDERS.index(bond.order)] = 1
    row[4] = bond.conjugated
    row[5] = bond.in_ring
    row[6 + STEREOS.index(bond.stereo)] = 1
    return row


def featurize_graph(m: Molecule, subset=None, extras: bool = True):
    """Node matrix, directed edge list and edge matrix for m or an induced subgraph.

    Returns (x, edges, e) with x of shape (n, d_n), edges an int array of
    shape (2k, 2) holding (src, dst) in local indices, and e of shape
    (2k, 10). Each bond appears twice, forward then reverse, in parent bond
    order. Atoms keep every parent attribute except degree, which counts
    neighbors inside the subset only.
    """
    if subset is None:
        atoms = list(range(m.n_atoms))
    else:
        atoms = sorted(set(int(i) for i in subset))
        if not atoms or atoms[0] < 0 or atoms[-1] >= m.n_atoms:
            raise DisconnectedSubset("subset is empty or out of range")
    local = {a: k for k, a in enumerate(atoms)}
    # connectivity of the induced subgraph
    seen = {atoms[0]}
    stack = [atoms[0]]
    while stack:
        v = stack.pop()
        for j in m.adjacency[v]:
            if j in local and j not in seen:
                seen.add(j)
                stack.append(j)
    if len(seen) != len(atoms):
        raise DisconnectedSubset(f"subset of {len(atoms)} atoms is not connected")

    pharm = pharmacophore(m) if extras else None
    scaffold = murcko_scaffold(m) if extras else set()
    x = np.zeros((len(atoms), atom_dim(extras)))
    for k, a in enumerate(atoms):
        degree = sum(1 for j in m.adjacency[a] if j in local)
        x[k] = _atom_row(m, a, degree, pharm, scaffold, extras)
    edges = []
    rows = []
    for bond in m.bonds:
        if bond.a in local and bond.b in local:
            f = bond_features(m, bond)
            edges.append((local[bond.a], local[bond.b]))
            edges.append((local[bond.b], local[bond.a]))
            rows.extend((f, f))
    edge_arr = np.array(edges, dtype=np.int64).reshape(-1, 2)
    e = np.array(rows).reshape(-1, N_BOND)
    return x, edge_arr, e
