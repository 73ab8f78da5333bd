"""SMILES tokenizer and raw graph builder."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .elements import AROMATIC_SYMBOLS, ATOMIC_NUMBER, ORGANIC_SUBSET
from .molecule import Molecule, SmilesSyntaxError, UnclosedRing

logger = logging.getLogger(__name__)

BOND_SYMBOLS = "-=#:/\\"


@dataclass
class RawAtom:
    element: str
    aromatic: bool = False
    bracket: bool = False
    hcount: int = 0
    charge: int = 0
    chiral: str | None = None
    order: list = field(default_factory=list)


@dataclass
class RawBond:
    a: int
    b: int
    symbol: str | None
    # atom written immediately before the bond symbol, for / and \ semantics
    first: int = -1


@dataclass
class RawGraph:
    atoms: list[RawAtom]
    bonds: list[RawBond]


def _parse_bracket(s: str, i: int) -> tuple[RawAtom, int]:
    end = s.find("]", i)
    if end < 0:
        raise SmilesSyntaxError(f"unterminated bracket atom at position {i}")
    body = s[i + 1:end]
    j = 0
    while j < len(body) and body[j].isdigit():
        j += 1  # isotope: parsed and discarded
    if j >= len(body):
        raise SmilesSyntaxError(f"empty bracket atom at position {i}")
    aromatic = False
    if body[j].isupper():
        sym = body[j]
        if j + 1 < len(body) and body[j + 1].islower() and body[j:j + 2] in ATOMIC_NUMBER:
            sym = body[j:j + 2]
        if sym not in ATOMIC_NUMBER:
            raise SmilesSyntaxError(f"unknown element {sym!r} at position {i}")
        j += len(sym)
    elif body[j].islower():
        two = body[j:j + 2]
        if two in AROMATIC_SYMBOLS:
            sym = AROMATIC_SYMBOLS[two]
            j += 2
        elif body[j] in AROMATIC_SYMBOLS:
            sym = AROMATIC_SYMBOLS[body[j]]
            j += 1
        else:
            raise SmilesSyntaxError(f"bad aromatic symbol in {body!r}")
        aromatic = True
    else:
        raise SmilesSyntaxError(f"bad bracket atom {body!r}")

    chiral = None
    if j < len(body) and body[j] == "@":
        if body[j:j + 2] == "@@":
            chiral, j = "@@", j + 2
        else:
            chiral, j = "@", j + 1
        if j < len(body) and body[j].isupper() and body[j] != "H":
            raise SmilesSyntaxError(f"unsupported chirality class in {body!r}")
    hcount = 0
    if j < len(body) and body[j] == "H":
        j += 1
        hcount = 1
        if j < len(body) and body[j].isdigit():
            hcount = int(body[j])
            j += 1
    charge = 0
    if j < len(body) and body[j] in "+-":
        sign = 1 if body[j] == "+" else -1
        k = j + 1
        if k < len(body) and body[k].isdigit():
            while k < len(body) and body[k].isdigit():
                k += 1
            charge = sign * int(body[j + 1:k])
        else:
            while k < len(body) and body[k] == body[j]:
                k += 1
            charge = sign * (k - j)
        j = k
    if j < len(body) and body[j] == ":":
        j += 1
        while j < len(body) and body[j].isdigit():
            j += 1
    if j != len(body):
        raise SmilesSyntaxError(f"trailing characters in bracket atom {body!r}")
    return RawAtom(sym, aromatic, True, hcount, charge, chiral), end + 1


def _ring_bond_symbol(s1, s2):
    if s1 and s2 and s1 != s2:
        if {s1, s2} <= {"/", "\\"}:
            return s1
        raise SmilesSyntaxError(f"conflicting ring closure bonds {s1!r} and {s2!r}")
    return s1 or s2


def tokenize_graph(s: str) -> RawGraph:
    """Build the raw atom/bond lists from a SMILES string."""
    if not s or not s.strip():
        raise SmilesSyntaxError("empty SMILES")
    s = s.strip()
    atoms: list[RawAtom] = []
    bonds: list[RawBond] = []
    pairs: set[tuple[int, int]] = set()
    stack: list[int] = []
    rings: dict[int, tuple[int, str | None, int]] = {}
    prev: int | None = None
    pending: str | None = None
    i = 0

    def add_bond(a, b, sym, first):
        key = (min(a, b), max(a, b))
        if a == b or key in pairs:
            raise SmilesSyntaxError(f"duplicate or self bond between atoms {a} and {b}")
        pairs.add(key)
        bonds.append(RawBond(a, b, sym, first))

    def add_atom(atom):
        nonlocal prev, pending
        idx = len(atoms)
        atoms.append(atom)
        if prev is not None:
            add_bond(prev, idx, pending, prev)
            atom.order.append(prev)
            atoms[prev].order.append(idx)
        elif pending is not None:
            raise SmilesSyntaxError(f"bond symbol {pending!r} without a preceding atom")
        if atom.hcount and atom.chiral:
            atom.order.append(-1)
        prev, pending = idx, None

    while i < len(s):
        c = s[i]
        if c == "(":
            if prev is None or pending is not None:
                raise SmilesSyntaxError(f"unexpected '(' at position {i}")
            stack.append(prev)
            i += 1
        elif c == ")":
            if not stack:
                raise SmilesSyntaxError(f"unmatched ')' at position {i}")
            if pending is not None:
                raise SmilesSyntaxError(f"dangling bond before ')' at position {i}")
            prev = stack.pop()
            i += 1
        elif c in BOND_SYMBOLS:
            if pending is not None or prev is None:
                raise SmilesSyntaxError(f"unexpected bond symbol {c!r} at position {i}")
            pending = c
            i += 1
        elif c == ".":
            if pending is not None or stack:
                raise SmilesSyntaxError(f"unexpected '.' at position {i}")
            prev = None
            i += 1
        elif c.isdigit() or c == "%":
            if prev is None:
                raise SmilesSyntaxError(f"ring closure without atom at position {i}")
            if c == "%":
                if not s[i + 1:i + 3].isdigit() or len(s[i + 1:i + 3]) != 2:
                    raise SmilesSyntaxError(f"bad %nn ring number at position {i}")
                num, i = int(s[i + 1:i + 3]), i + 3
            else:
                num, i = int(c), i + 1
            if num in rings:
                other, sym0, slot = rings.pop(num)
                sym = _ring_bond_symbol(sym0, pending)
                first = other if sym0 else prev
                add_bond(other, prev, sym, first)
                atoms[prev].order.append(other)
                atoms[other].order[slot] = prev
            else:
                rings[num] = (prev, pending, len(atoms[prev].order))
                atoms[prev].order.append(None)
            pending = None
        elif c == "[":
            atom, i = _parse_bracket(s, i)
            add_atom(atom)
        elif c == "*":
            raise SmilesSyntaxError("wildcard atoms are not supported")
        else:
            two = s[i:i + 2]
            if two in ("Cl", "Br"):
                add_atom(RawAtom(two))
                i += 2
            elif c in ORGANIC_SUBSET:
                add_atom(RawAtom(c))
                i += 1
            elif c in AROMATIC_SYMBOLS:
                add_atom(RawAtom(AROMATIC_SYMBOLS[c], aromatic=True))
                i += 1
            else:
                raise SmilesSyntaxError(f"bad token {c!r} at position {i}")
    if rings:
        raise UnclosedRing(f"unclosed ring closure digit(s) {sorted(rings)}")
    if stack:
        raise SmilesSyntaxError("unclosed branch '('")
    if pending is not None:
        raise SmilesSyntaxError("SMILES ends with a bond symbol")
    if not atoms:
        raise SmilesSyntaxError("no atoms")
    return RawGraph(atoms, bonds)


def largest_component(graph: RawGraph, smiles: str = "") -> RawGraph:
    """Keep the largest connected component (first one on ties)."""
    n = len(graph.atoms)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for bond in graph.bonds:
        parent[find(bond.a)] = find(bond.b)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    if len(groups) == 1:
        return graph
    keep = max(groups.values(), key=lambda g: (len(g), -g[0]))
    logger.warning("%r has %d components; keeping the largest (%d atoms)",
                   smiles, len(groups), len(keep))
    remap = {old: new for new, old in enumerate(keep)}
    atoms = []
    for old in keep:
        atom = graph.atoms[old]
        atom.order = [remap[x] if x is not None and x >= 0 else x for x in atom.order]
        atoms.append(atom)
    bonds = [RawBond(remap[b.a], remap[b.b], b.symbol, remap[b.first])
             for b in graph.bonds if b.a in remap]
    return RawGraph(atoms, bonds)


def parse_smiles(s: str) -> Molecule:
    """Parse a SMILES string into a fully perceived :class:`Molecule`.

    Multi-component input keeps only the largest component. Raises
    ``SmilesSyntaxError``, ``UnclosedRing``, ``ValenceError`` or
    ``AromaticityError`` on bad input.
    """
    from .perception import perceive

    graph = largest_component(tokenize_graph(s), s)
    return perceive(graph, s)
