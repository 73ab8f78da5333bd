"""Canonical SMILES writer.

Atoms are ranked by iterated neighborhood refinement with deterministic
tie-breaking, then written by a depth-first walk that visits neighbors in
rank order. The output reparses to an isomorphic molecule with the same
atom and bond attributes, stereo included.
"""

from __future__ import annotations

from .elements import ATOMIC_NUMBER, DEFAULT_VALENCE, ORGANIC_SUBSET, allowed_valences
from .molecule import BondOrder, BondStereo, Chirality, Molecule

_ORDER_SYMBOL = {BondOrder.SINGLE: "", BondOrder.DOUBLE: "=", BondOrder.TRIPLE: "#",
                 BondOrder.AROMATIC: ""}
_AROMATIC_WRITABLE = {"B", "C", "N", "O", "P", "S", "Se", "As", "Te"}


def _chiral_labels(m: Molecule, ranks: list[int]) -> list[int]:
    """Parity of each stereocenter relative to its neighbors' ranks.

    0 when the atom carries no tag or its neighbors are not yet distinct.
    """
    labels = [0] * m.n_atoms
    for i, a in enumerate(m.atoms):
        if a.chiral is Chirality.NONE or not m.chiral_order:
            continue
        src = list(m.chiral_order[i])
        keys = [-1 if x == -1 else ranks[x] for x in src]
        if len(set(keys)) != len(keys) or len(src) < 3:
            continue
        by_rank = [x for _, x in sorted(zip(keys, src))]
        flip = _parity(src, by_rank)
        cw = a.chiral is Chirality.CW
        labels[i] = 1 + (cw ^ bool(flip))
    return labels


def _refine(m: Molecule, ranks: list[int]) -> list[int]:
    """Split rank classes by neighbor ranks and stereo parity until stable."""
    n = m.n_atoms
    while True:
        labels = _chiral_labels(m, ranks)
        keys = []
        for i in range(n):
            nbrs = sorted((ranks[j], m.bond_between(i, j).order.value) for j in m.adjacency[i])
            keys.append((ranks[i], tuple(nbrs), labels[i]))
        order = sorted(set(keys))
        lookup = {k: r for r, k in enumerate(order)}
        new = [lookup[k] for k in keys]
        if len(order) == len(set(ranks)):
            return new
        ranks = new


def canonical_ranks(m: Molecule) -> list[int]:
    """Distinct canonical ranks 0..N-1 for the atoms of m."""
    inv = []
    for a in m.atoms:
        inv.append((ATOMIC_NUMBER[a.element], a.degree, a.total_h, a.formal_charge,
                    a.aromatic, a.in_ring, a.radical_electrons))
    order = sorted(set(inv))
    ranks = _refine(m, [order.index(x) for x in inv])
    while len(set(ranks)) < m.n_atoms:
        # break the lowest tie by promoting its first member, then refine again
        counts = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied = min(r for r, c in counts.items() if c > 1)
        pick = min(i for i in range(m.n_atoms) if ranks[i] == tied)
        ranks = [2 * r + (1 if r > tied or (r == tied and i != pick) else 0)
                 for i, r in enumerate(ranks)]
        ranks = _refine(m, ranks)
    return ranks


def _needs_bracket(m: Molecule, i: int) -> bool:
    a = m.atoms[i]
    if a.element not in ORGANIC_SUBSET or a.formal_charge or a.radical_electrons:
        return True
    if a.chiral is not Chirality.NONE:
        return True
    if a.aromatic and a.element not in _AROMATIC_WRITABLE:
        return True
    used = 0
    single_count = 0
    has_arom_double = False
    for j in m.adjacency[i]:
        b = m.bond_between(i, j)
        used += b.kekule
        if b.order is BondOrder.AROMATIC:
            single_count += 1
            has_arom_double = has_arom_double or b.kekule == 2
        else:
            single_count += b.order.value
    fit = [v for v in DEFAULT_VALENCE[a.element] if v >= used]
    if not fit or fit[0] - used != a.total_h:
        return True
    if a.aromatic:
        # the parser decides who gets an aromatic double bond from unbracketed valence
        wants = single_count + 1 <= min(allowed_valences(a.element, 0))
        if wants != has_arom_double:
            return True
    return False


def _atom_text(m: Molecule, i: int, chiral: Chirality) -> str:
    a = m.atoms[i]
    sym = a.element.lower() if a.aromatic and a.element in _AROMATIC_WRITABLE else a.element
    if not _needs_bracket(m, i):
        return sym
    out = "[" + sym
    if chiral is Chirality.CCW:
        out += "@"
    elif chiral is Chirality.CW:
        out += "@@"
    if a.total_h:
        out += "H" + (str(a.total_h) if a.total_h > 1 else "")
    q = a.formal_charge
    if q:
        out += ("+" if q > 0 else "-") + (str(abs(q)) if abs(q) > 1 else "")
    return out + "]"


def _parity(src: list[int], dst: list[int]) -> int:
    """0 if dst is an even permutation of src, else 1."""
    pos = {x: k for k, x in enumerate(src)}
    perm = [pos[x] for x in dst]
    seen = [False] * len(perm)
    swaps = 0
    for k in range(len(perm)):
        length = 0
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        if length:
            swaps += length - 1
    return swaps % 2


def _cip_top(m: Molecule, center: int, other: int) -> int | None:
    from .perception import _cip_key

    subs = sorted(j for j in m.adjacency[center] if j != other)
    if len(subs) == 1:
        return subs[0]
    atoms = [_HView(a) for a in m.atoms]
    adj_orders = [[(j, m.bond_between(i, j).kekule) for j in m.adjacency[i]]
                  for i in range(m.n_atoms)]
    k0, k1 = (_cip_key(x, center, atoms, adj_orders) for x in subs)
    if k0 == k1:
        return None
    return subs[0] if k0 > k1 else subs[1]


class _HView:
    __slots__ = ("element", "hcount_total")

    def __init__(self, atom):
        self.element = atom.element
        self.hcount_total = atom.total_h


def canonical_smiles(m: Molecule) -> str:
    """Deterministic SMILES for m; isomorphic inputs give the same string."""
    n = m.n_atoms
    ranks = canonical_ranks(m)

    # pass 1: depth-first tree and ring-closure edges
    visited = [False] * n
    parent = [-1] * n
    children: list[list[int]] = [[] for _ in range(n)]
    openings: list[list[int]] = [[] for _ in range(n)]
    closings: list[list[int]] = [[] for _ in range(n)]
    dfs_order = []
    start = min(range(n), key=lambda i: ranks[i])
    stack = [(start, -1)]
    closure_seen = set()
    while stack:
        v, p = stack.pop()
        if visited[v]:
            continue
        visited[v] = True
        parent[v] = p
        if p >= 0:
            children[p].append(v)
        dfs_order.append(v)
        nbrs = sorted(m.adjacency[v], key=lambda j: ranks[j])
        for j in nbrs:
            if j != p and visited[j]:
                key = (min(v, j), max(v, j))
                if key not in closure_seen:
                    closure_seen.add(key)
                    openings[j].append(v)
                    closings[v].append(j)
        for j in reversed(nbrs):
            if not visited[j]:
                stack.append((j, v))
    # a neighbor pushed twice may have become a ring partner instead of a child
    pos = {v: k for k, v in enumerate(dfs_order)}
    for v in range(n):
        openings[v].sort(key=lambda j: pos[j])

    # which atom is written before each bond symbol
    first = {}
    for v in range(n):
        for c in children[v]:
            first[frozenset((v, c))] = v
        for j in closings[v]:
            first[frozenset((v, j))] = v

    # directional marks for stereo double bonds
    direction: dict[frozenset, str] = {}
    stereo_bonds = sorted((b for b in m.bonds),
                          key=lambda b: sorted((pos[b.a], pos[b.b])))
    for bond in stereo_bonds:
        if bond.stereo not in (BondStereo.E, BondStereo.Z):
            continue
        refs = []
        for center, other in ((bond.a, bond.b), (bond.b, bond.a)):
            top = _cip_top(m, center, other)
            if top is None:
                break
            refs.append((center, top))
        if len(refs) != 2:
            continue
        signs = []
        for center, x in refs:
            key = frozenset((center, x))
            if key in direction:
                up = direction[key] == "/"
                signs.append((1 if up else -1) * (1 if first[key] == x else -1))
            else:
                signs.append(None)
        if signs[0] is None and signs[1] is None:
            # write '/' on whichever reference bond comes first in the output
            lead = min((0, 1), key=lambda t: sorted(pos[x] for x in refs[t]))
            center, x = refs[lead]
            signs[lead] = 1 if first[frozenset((center, x))] == x else -1
        want_same = bond.stereo is BondStereo.Z
        if signs[0] is None:
            signs[0] = signs[1] if want_same else -signs[1]
        if signs[1] is None:
            signs[1] = signs[0] if want_same else -signs[0]
        for (center, x), sign in zip(refs, signs):
            key = frozenset((center, x))
            if key not in direction:
                up = sign * (1 if first[key] == x else -1) > 0
                direction[key] = "/" if up else "\\"

    def bond_text(i, j):
        key = frozenset((i, j))
        if key in direction:
            return direction[key]
        b = m.bond_between(i, j)
        if b.order is BondOrder.SINGLE and m.atoms[i].aromatic and m.atoms[j].aromatic:
            return "-"
        return _ORDER_SYMBOL[b.order]

    # pass 2: write
    digits: dict[frozenset, int] = {}
    free: list[int] = []
    next_digit = [1]

    def take_digit():
        if free:
            free.sort()
            return free.pop(0)
        d = next_digit[0]
        next_digit[0] += 1
        return d

    def digit_text(d):
        return str(d) if d < 10 else f"%{d:02d}"

    out: list[str] = []
    stack2: list = [start]
    while stack2:
        item = stack2.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        v = item
        p = parent[v]
        if p >= 0:
            out.append(bond_text(p, v))
        # neighbor order as the parser will see it, for chirality
        written = [p] if p >= 0 else []
        if m.atoms[v].chiral is not Chirality.NONE and m.atoms[v].total_h:
            written.append(-1)
        ring_text = ""
        released = []
        for j in closings[v]:
            key = frozenset((v, j))
            d = digits.pop(key)
            ring_text += bond_text(v, j) + digit_text(d)
            released.append(d)
            written.append(j)
        for j in openings[v]:
            d = take_digit()
            digits[frozenset((v, j))] = d
            ring_text += digit_text(d)
            written.append(j)
        free.extend(released)
        written.extend(children[v])
        chiral = m.atoms[v].chiral
        if chiral is not Chirality.NONE:
            src = [x for x in m.chiral_order[v]] if m.chiral_order else []
            if sorted(src) == sorted(written) and _parity(src, written):
                chiral = Chirality.CW if chiral is Chirality.CCW else Chirality.CCW
        out.append(_atom_text(m, v, chiral) + ring_text)
        kids = children[v]
        # push in reverse so the first child is emitted first
        for k in range(len(kids) - 1, -1, -1):
            if k < len(kids) - 1:
                stack2.append(")")
                stack2.append(kids[k])
                stack2.append("(")
            else:
                stack2.append(kids[k])
    return "".join(out)
