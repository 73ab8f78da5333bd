"""Chemistry perception on a raw SMILES graph.

Runs ring finding, kekulization of aromatic input, aromaticity perception for
Kekule-written rings, implicit hydrogen assignment, hybridization, bond
conjugation and double-bond stereo, then freezes everything into a
:class:`Molecule`.
"""

from __future__ import annotations

from collections import deque

from .elements import ATOMIC_NUMBER, DEFAULT_VALENCE, VALENCE_ELECTRONS, allowed_valences
from .molecule import (
    AromaticityError,
    Atom,
    Bond,
    BondOrder,
    BondStereo,
    Chirality,
    Hybridization,
    Molecule,
    ValenceError,
)
from .smiles import RawGraph

_ORDER_OF_SYMBOL = {"-": 1, "/": 1, "\\": 1, "=": 2, "#": 3}


def find_bridges(n: int, edges: list[tuple[int, int]]) -> set[int]:
    """Indices of edges whose removal disconnects the graph."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for k, (a, b) in enumerate(edges):
        adj[a].append((b, k))
        adj[b].append((a, k))
    disc = [-1] * n
    low = [0] * n
    bridges = set()
    timer = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, via, it = stack[-1]
            advanced = False
            for w, k in it:
                if k == via:
                    continue
                if disc[w] < 0:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, k, iter(adj[w])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if not advanced:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    low[u] = min(low[u], low[v])
                    if low[v] > disc[u]:
                        bridges.add(via)
    return bridges


def _shortest_path(adj, src, dst, banned_edge):
    prev = {src: None}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        if v == dst:
            break
        for w, k in adj[v]:
            if k == banned_edge or w in prev:
                continue
            prev[w] = v
            queue.append(w)
    if dst not in prev:
        return None
    path = [dst]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


def _canonical_cycle(path):
    k = path.index(min(path))
    cyc = path[k:] + path[:k]
    if len(cyc) > 2 and cyc[-1] < cyc[1]:
        cyc = [cyc[0]] + cyc[1:][::-1]
    return tuple(cyc)


def find_rings(n: int, edges: list[tuple[int, int]], ring_edges: set[int]) -> list[tuple[int, ...]]:
    """Smallest set of smallest rings.

    Candidate cycles are the shortest cycle through every ring bond plus the
    fundamental cycles of a spanning tree; a greedy GF(2) elimination keeps
    the smallest linearly independent subset.
    """
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for k in sorted(ring_edges):
        a, b = edges[k]
        adj[a].append((b, k))
        adj[b].append((a, k))
    edge_id = {}
    for k in ring_edges:
        a, b = edges[k]
        edge_id[(a, b)] = edge_id[(b, a)] = k

    candidates = set()
    for k in sorted(ring_edges):
        a, b = edges[k]
        path = _shortest_path(adj, a, b, k)
        if path is not None:
            candidates.add(_canonical_cycle(path))

    # Fundamental cycles guarantee a full basis even when shortest cycles collide.
    seen = [False] * n
    tree_parent: dict[int, int | None] = {}
    back_edges = []
    for root in range(n):
        if seen[root] or not adj[root]:
            continue
        seen[root] = True
        tree_parent[root] = None
        queue = deque([root])
        used = set()
        while queue:
            v = queue.popleft()
            for w, k in adj[v]:
                if k in used:
                    continue
                used.add(k)
                if not seen[w]:
                    seen[w] = True
                    tree_parent[w] = v
                    queue.append(w)
                else:
                    back_edges.append(k)
    for k in back_edges:
        a, b = edges[k]
        pa, pb = [a], [b]
        while tree_parent[pa[-1]] is not None:
            pa.append(tree_parent[pa[-1]])
        while tree_parent[pb[-1]] is not None:
            pb.append(tree_parent[pb[-1]])
        common = set(pa) & set(pb)
        ia = next(i for i, x in enumerate(pa) if x in common)
        ib = pb.index(pa[ia])
        candidates.add(_canonical_cycle(pa[:ia + 1] + pb[:ib][::-1]))

    n_components = sum(1 for v in range(n) if adj[v] and tree_parent.get(v, 0) is None)
    n_ring_atoms = sum(1 for v in range(n) if adj[v])
    needed = len(ring_edges) - n_ring_atoms + n_components
    basis: dict[int, int] = {}
    rings = []
    for cyc in sorted(candidates, key=lambda c: (len(c), c)):
        if len(rings) == needed:
            break
        mask = 0
        for i in range(len(cyc)):
            mask |= 1 << edge_id[(cyc[i], cyc[(i + 1) % len(cyc)])]
        while mask:
            top = mask.bit_length() - 1
            if top not in basis:
                basis[top] = mask
                rings.append(cyc)
                break
            mask ^= basis[top]
    return sorted(rings, key=lambda c: (len(c), c))


def _kekulize(n, atoms, bonds, orders, aromatic_bond):
    """Assign alternating double bonds inside aromatic systems.

    Returns the set of aromatic bond indices that become double.
    """
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    used = [0] * n
    for k, (a, b) in enumerate(bonds):
        o = 1 if aromatic_bond[k] else orders[k]
        used[a] += o
        used[b] += o
        if aromatic_bond[k]:
            adj[a].append((b, k))
            adj[b].append((a, k))
    need = set()
    for i, atom in enumerate(atoms):
        if not atom.aromatic:
            continue
        if atom.bracket:
            allowed = allowed_valences(atom.element, atom.charge)
            u = used[i] + atom.hcount
            if allowed is not None and u not in allowed and (u + 1) in allowed:
                need.add(i)
            elif allowed is None and u < 3:
                need.add(i)
        else:
            if used[i] + 1 <= DEFAULT_VALENCE[atom.element][0]:
                need.add(i)

    partner: dict[int, int] = {}
    chosen: set[int] = set()

    def candidates(i):
        return [(j, k) for j, k in adj[i] if j in need and j not in partner]

    def solve():
        free = [i for i in sorted(need) if i not in partner]
        if not free:
            return True
        i = min(free, key=lambda x: (len(candidates(x)), x))
        for j, k in candidates(i):
            partner[i], partner[j] = j, i
            chosen.add(k)
            if solve():
                return True
            del partner[i], partner[j]
            chosen.discard(k)
        return False

    if not solve():
        raise AromaticityError("cannot kekulize aromatic system")
    return chosen


def _pi_contribution(i, ring, atoms, adj_orders, aromatic_atoms, ring_set):
    """Pi electrons atom i donates to ring, or None if it breaks conjugation."""
    atom = atoms[i]
    doubles = [(j, o) for j, o in adj_orders[i] if o >= 2]
    if any(o == 3 for _, o in doubles) or len(doubles) > 1:
        return None
    if doubles:
        j = doubles[0][0]
        if j in ring_set:
            return 1
        if j in aromatic_atoms:
            return 1
        if atom.element == "C" and atoms[j].element in ("O", "S", "N"):
            return 0
        return None
    n_conn = len(adj_orders[i]) + atom.hcount_total
    if atom.element in ("N", "P") and atom.charge == 0 and n_conn == 3:
        return 2
    if atom.element in ("O", "S", "Se", "Te") and atom.charge == 0 and n_conn == 2:
        return 2
    if atom.element == "C" and atom.charge == -1 and n_conn == 3:
        return 2
    if atom.element == "B" and atom.charge == 0 and n_conn == 3:
        return 0
    return None


def _charge_separate_nitro(graph: RawGraph) -> None:
    """Rewrite pentavalent N=O (nitro, N-oxide) as [N+][O-] in place."""
    atoms = graph.atoms
    valence = [0] * len(atoms)
    heavy = [0] * len(atoms)
    for bond in graph.bonds:
        o = _ORDER_OF_SYMBOL.get(bond.symbol, 1)
        valence[bond.a] += o
        valence[bond.b] += o
        heavy[bond.a] += 1
        heavy[bond.b] += 1
    for bond in graph.bonds:
        if bond.symbol != "=":
            continue
        for n_idx, o_idx in ((bond.a, bond.b), (bond.b, bond.a)):
            nat, oat = atoms[n_idx], atoms[o_idx]
            if nat.element != "N" or nat.charge != 0 or oat.element != "O" or heavy[o_idx] != 1:
                continue
            if oat.charge != 0 or (oat.bracket and oat.hcount):
                continue
            total = valence[n_idx] + nat.hcount + (1 if nat.aromatic else 0)
            if total < 5:
                continue
            bond.symbol = "-"
            nat.charge, oat.charge = 1, -1
            nat.bracket = oat.bracket = True
            valence[n_idx] -= 1
            valence[o_idx] -= 1
            break


def _ring_total(ring_set, order, atoms, adj_orders, aromatic_atoms):
    total = 0
    for i in order:
        c = _pi_contribution(i, None, atoms, adj_orders, aromatic_atoms, ring_set)
        if c is None:
            return None
        total += c
    return total


def _aromatic_rings(n, atoms, edges, kekule, rings):
    """Hueckel test on each ring and on fused ring pairs, iterated to a fixpoint."""
    adj_orders: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for k, (a, b) in enumerate(edges):
        adj_orders[a].append((b, kekule[k]))
        adj_orders[b].append((a, kekule[k]))
    aromatic_atoms: set[int] = set()
    aromatic = []
    found = set()
    changed = True
    while changed:
        changed = False
        for ring in rings:
            if ring in found:
                continue
            total = _ring_total(set(ring), ring, atoms, adj_orders, aromatic_atoms)
            if total is not None and total % 4 == 2:
                found.add(ring)
                aromatic.append(ring)
                aromatic_atoms.update(ring)
                changed = True
        if changed:
            continue
        # fused pairs sharing exactly one bond, judged on their envelope
        for x, r1 in enumerate(rings):
            for r2 in rings[x + 1:]:
                if r1 in found and r2 in found:
                    continue
                if len(set(r1) & set(r2)) != 2:
                    continue
                env = set(r1) | set(r2)
                total = _ring_total(env, sorted(env), atoms, adj_orders, aromatic_atoms)
                if total is not None and total % 4 == 2:
                    for r in (r1, r2):
                        if r not in found:
                            found.add(r)
                            aromatic.append(r)
                    aromatic_atoms.update(env)
                    changed = True
    return aromatic


def perceive(graph: RawGraph, smiles: str = "") -> Molecule:
    _charge_separate_nitro(graph)
    atoms = graph.atoms
    n = len(atoms)
    edges = [(b.a, b.b) for b in graph.bonds]
    bridges = find_bridges(n, edges)
    ring_edges = set(range(len(edges))) - bridges

    in_ring = [False] * n
    for k in ring_edges:
        a, b = edges[k]
        in_ring[a] = in_ring[b] = True
    for i, atom in enumerate(atoms):
        if atom.aromatic and not in_ring[i]:
            raise AromaticityError(f"aromatic atom {i} ({atom.element}) is not in a ring")
    rings = find_rings(n, edges, ring_edges)

    orders = []
    candidate = []
    for k, b in enumerate(graph.bonds):
        sym = b.symbol
        both_aromatic = atoms[b.a].aromatic and atoms[b.b].aromatic
        if sym is None or sym == ":":
            if sym == ":" and not both_aromatic:
                raise AromaticityError(f"aromatic bond between non-aromatic atoms {b.a}-{b.b}")
            orders.append(1)
            candidate.append(both_aromatic and k in ring_edges)
        else:
            orders.append(_ORDER_OF_SYMBOL[sym])
            candidate.append(False)

    doubles = _kekulize(n, atoms, edges, orders, candidate)
    kekule = [2 if k in doubles else orders[k] for k in range(len(edges))]

    # implicit hydrogens from default valences
    used = [0] * n
    for k, (a, b) in enumerate(edges):
        used[a] += kekule[k]
        used[b] += kekule[k]
    implicit = [0] * n
    radicals = [0] * n
    for i, atom in enumerate(atoms):
        allowed = allowed_valences(atom.element, atom.charge)
        if atom.bracket:
            total = used[i] + atom.hcount
            if allowed is not None:
                if total > max(allowed):
                    raise ValenceError(f"atom {i} ({atom.element}) has valence {total}")
                fit = [v for v in allowed if v >= total]
                if fit and fit[0] > total and atom.element != "H":
                    radicals[i] = fit[0] - total
            continue
        fit = [v for v in allowed if v >= used[i]]
        if not fit:
            raise ValenceError(f"atom {i} ({atom.element}) has valence {used[i]}")
        implicit[i] = fit[0] - used[i]
    for i, atom in enumerate(atoms):
        atom.hcount_total = atom.hcount + implicit[i]

    aromatic_rings = _aromatic_rings(n, atoms, edges, kekule, rings)
    bond_of = {}
    for k, (a, b) in enumerate(edges):
        bond_of[(a, b)] = bond_of[(b, a)] = k
    aromatic_bond = [False] * len(edges)
    aromatic_atoms = set()
    for ring in aromatic_rings:
        aromatic_atoms.update(ring)
        for x in range(len(ring)):
            aromatic_bond[bond_of[(ring[x], ring[(x + 1) % len(ring)])]] = True

    adjacency = [[] for _ in range(n)]
    for a, b in edges:
        adjacency[a].append(b)
        adjacency[b].append(a)

    conj = _conjugation(n, atoms, edges, kekule, aromatic_bond, aromatic_atoms, radicals)
    hyb = _hybridization(n, atoms, edges, kekule, aromatic_atoms, radicals, adjacency, conj)
    stereo = _double_bond_stereo(graph, kekule, aromatic_bond, adjacency, rings)

    final_atoms = []
    for i, atom in enumerate(atoms):
        chiral = Chirality.NONE
        if atom.chiral == "@":
            chiral = Chirality.CCW
        elif atom.chiral == "@@":
            chiral = Chirality.CW
        final_atoms.append(Atom(
            index=i, element=atom.element, formal_charge=atom.charge,
            explicit_h=atom.hcount, implicit_h=implicit[i],
            aromatic=i in aromatic_atoms, in_ring=in_ring[i],
            degree=len(adjacency[i]), hybridization=hyb[i], chiral=chiral,
            radical_electrons=radicals[i], bracket=atom.bracket,
        ))
    final_bonds = []
    for k, (a, b) in enumerate(edges):
        order = BondOrder.AROMATIC if aromatic_bond[k] else BondOrder(kekule[k])
        final_bonds.append(Bond(a, b, order, conjugated=conj[k], in_ring=k in ring_edges,
                                stereo=stereo[k], kekule=kekule[k]))
    chiral_order = tuple(tuple(atom.order) for atom in atoms)
    return Molecule(tuple(final_atoms), tuple(final_bonds),
                    tuple(tuple(x) for x in adjacency), tuple(rings), smiles, chiral_order)


def _lone_pairs(atom, bond_electrons, radicals):
    ve = VALENCE_ELECTRONS.get(atom.element)
    if ve is None:
        return 0
    return max(0, (ve - atom.charge - bond_electrons - atom.hcount_total - radicals) // 2)


def _conjugation(n, atoms, edges, kekule, aromatic_bond, aromatic_atoms, radicals):
    bond_e = [0] * n
    for k, (a, b) in enumerate(edges):
        bond_e[a] += kekule[k]
        bond_e[b] += kekule[k]
    # hypervalent P/S double bonds (P=S, sulfone S=O) are not pi systems
    hyper = [atoms[i].element in ("P", "S") and bond_e[i] + atoms[i].hcount_total > 3
             for i in range(n)]
    unsat = [False] * n
    for k, (a, b) in enumerate(edges):
        if aromatic_bond[k] or (kekule[k] >= 2 and not hyper[a] and not hyper[b]):
            unsat[a] = unsat[b] = True
    donor = [
        not unsat[i] and atoms[i].element in ("N", "O")
        and _lone_pairs(atoms[i], bond_e[i], radicals[i]) > 0
        for i in range(n)
    ]
    conj = [False] * len(edges)
    for k, (a, b) in enumerate(edges):
        if aromatic_bond[k]:
            conj[k] = True
        elif kekule[k] == 1 and ((unsat[a] and (unsat[b] or donor[b]))
                                 or (unsat[b] and donor[a])):
            conj[k] = True
    touched = set()
    for k, (a, b) in enumerate(edges):
        if conj[k]:
            touched.update((a, b))
    for k, (a, b) in enumerate(edges):
        if (kekule[k] >= 2 and not aromatic_bond[k] and not hyper[a] and not hyper[b]
                and (a in touched or b in touched)):
            conj[k] = True
    return conj


_STERIC_HYB = {2: Hybridization.SP, 3: Hybridization.SP2, 4: Hybridization.SP3,
               5: Hybridization.SP3D, 6: Hybridization.SP3D2}


def _hybridization(n, atoms, edges, kekule, aromatic_atoms, radicals, adjacency, conj):
    bond_e = [0] * n
    has_multiple = [False] * n
    for k, (a, b) in enumerate(edges):
        bond_e[a] += kekule[k]
        bond_e[b] += kekule[k]
        if kekule[k] >= 2:
            has_multiple[a] = has_multiple[b] = True
    conj_atom = [False] * n
    for k, (a, b) in enumerate(edges):
        if conj[k]:
            conj_atom[a] = conj_atom[b] = True
    out = []
    for i, atom in enumerate(atoms):
        if atom.element not in VALENCE_ELECTRONS or atom.element == "H":
            out.append(Hybridization.OTHER)
            continue
        if i in aromatic_atoms:
            out.append(Hybridization.SP2)
            continue
        lp = _lone_pairs(atom, bond_e[i], radicals[i])
        steric = len(adjacency[i]) + atom.hcount_total + lp + (1 if radicals[i] else 0)
        if atom.element in ("C", "N", "O") and not has_multiple[i] and lp and conj_atom[i]:
            steric = 3
        out.append(_STERIC_HYB.get(steric, Hybridization.OTHER))
    return out


def _direction_sign(bond, neighbor, center):
    up = bond.symbol == "/"
    if bond.first == neighbor:
        return 1 if up else -1
    return -1 if up else 1


def _cip_key(start, parent, atoms, adj_orders, depth=8):
    """Sphere-by-sphere priority key for the branch start <- parent.

    Approximates CIP ranking: multiple bonds add duplicate atoms, ring
    closures end in a duplicate and implicit hydrogens count as Z=1.
    """
    z = [ATOMIC_NUMBER[a.element] for a in atoms]
    key = [(z[start],)]
    # node: (atom, parent, path); duplicates carry atom=-1 and are leaves
    frontier = [(start, parent, frozenset((start, parent)))]
    for _ in range(depth):
        level = []
        nxt = []
        for atom, par, path in frontier:
            if atom < 0:
                level.append(())
                continue
            kids = [1] * atoms[atom].hcount_total
            for j, order in adj_orders[atom]:
                dup = order - 1
                if j == par:
                    kids.extend([z[j]] * dup)
                    continue
                kids.extend([z[j]] * dup)
                kids.append(z[j])
                if j in path:
                    continue
                nxt.append((j, atom, path | {j}))
            level.append(tuple(sorted(kids, reverse=True)))
        if not nxt and not any(level):
            break
        key.append(tuple(sorted(level, reverse=True)))
        nxt.sort(key=lambda node: -z[node[0]])
        frontier = nxt
    return key


def _double_bond_stereo(graph, kekule, aromatic_bond, adjacency, rings):
    directional = {}
    for bond in graph.bonds:
        if bond.symbol in ("/", "\\"):
            directional[(bond.a, bond.b)] = directional[(bond.b, bond.a)] = bond
    stereo = [BondStereo.NONE] * len(graph.bonds)
    if not directional:
        return stereo
    atoms = graph.atoms
    adj_orders = [[] for _ in atoms]
    for k, bond in enumerate(graph.bonds):
        adj_orders[bond.a].append((bond.b, kekule[k]))
        adj_orders[bond.b].append((bond.a, kekule[k]))
    small_ring_bonds = set()
    for ring in rings:
        if len(ring) < 8:
            for x in range(len(ring)):
                small_ring_bonds.add(frozenset((ring[x], ring[(x + 1) % len(ring)])))
    for k, bond in enumerate(graph.bonds):
        if kekule[k] != 2 or aromatic_bond[k]:
            continue
        if frozenset((bond.a, bond.b)) in small_ring_bonds:
            continue
        signs = []
        for center, other in ((bond.a, bond.b), (bond.b, bond.a)):
            subs = [x for x in sorted(adjacency[center]) if x != other]
            marked = [x for x in subs if (center, x) in directional]
            if not marked or len(subs) + atoms[center].hcount_total > 2:
                break
            sign = _direction_sign(directional[(center, marked[0])], marked[0], center)
            if len(subs) == 2:
                k0, k1 = (_cip_key(x, center, atoms, adj_orders) for x in subs)
                if k0 == k1:
                    break
                top = subs[0] if k0 > k1 else subs[1]
                if top != marked[0]:
                    sign = -sign
            signs.append(sign)
        if len(signs) == 2:
            stereo[k] = BondStereo.E if signs[0] != signs[1] else BondStereo.Z
    return stereo
