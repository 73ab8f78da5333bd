import json

import pytest

from hignn.brics import ENVIRONMENTS, PAIR_RULES, brics_bonds, fragment
from hignn.chem import BondOrder, canonical_smiles, parse_smiles

from conftest import esol_smiles


def test_sixteen_environments():
    assert sorted(ENVIRONMENTS, key=lambda k: int(k[1:])) == [f"L{i}" for i in range(1, 17)]


def test_pair_rules_reference_known_environments():
    for e1, e2, order in PAIR_RULES:
        assert e1 in ENVIRONMENTS and e2 in ENVIRONMENTS
        assert order in (BondOrder.SINGLE, BondOrder.DOUBLE)


def test_ethane_uncleavable():
    m = parse_smiles("CC")
    assert brics_bonds(m) == []
    fs = fragment(m)
    assert fs.n_fragments == 1 and fs.fragments == ((0, 1),)
    assert fs.cleaved_bonds == ()


def test_ring_bonds_never_cleaved():
    assert brics_bonds(parse_smiles("C1CCCCC1")) == []


def test_acetanilide_amide_bond():
    m = parse_smiles("CC(=O)Nc1ccccc1")
    bonds = brics_bonds(m)
    assert (1, 3, ("L1", "L5")) in bonds


def test_acetanilide_fragments():
    # the amide C-N and the anilide N-aryl bond are both BRICS bonds
    fs = fragment(parse_smiles("CC(=O)Nc1ccccc1"))
    assert fs.fragments == ((0, 1, 2), (3,), (4, 5, 6, 7, 8, 9))
    assert fs.smiles() == ["CC=O", "N", "c1ccccc1"]


def test_partition_properties():
    for s in esol_smiles(300, seed=5):
        m = parse_smiles(s)
        fs = fragment(m)
        atoms = sorted(i for f in fs.fragments for i in f)
        assert atoms == list(range(m.n_atoms))
        assert (fs.n_fragments == 1) == (len(fs.cleaved_bonds) == 0)
        for f in fs.fragments:
            members = set(f)
            seen, stack = {f[0]}, [f[0]]
            while stack:
                i = stack.pop()
                for j in m.adjacency[i]:
                    if j in members and j not in seen:
                        seen.add(j)
                        stack.append(j)
            assert seen == members


def test_record_is_json():
    rec = json.loads(fragment(parse_smiles("CCOC(=O)c1ccccc1")).to_json())
    assert rec["n_fragments"] == len(rec["fragments"]) == len(rec["atom_sets"])


def test_fragment_smiles_parse_back():
    for s in esol_smiles(100, seed=9):
        for f in fragment(parse_smiles(s)).smiles():
            assert canonical_smiles(parse_smiles(f)) == f


def test_matches_rdkit_partitions():
    pytest.importorskip("rdkit")
    from rdkit import Chem
    from rdkit.Chem import BRICS

    smiles = esol_smiles()
    bad = []
    for s in smiles:
        ref = Chem.MolFromSmiles(s)
        n = ref.GetNumAtoms()
        broken = BRICS.BreakBRICSBonds(ref)
        want = sorted(tuple(sorted(i for i in f if i < n)) for f in Chem.GetMolFrags(broken))
        if sorted(fragment(parse_smiles(s)).fragments) != want:
            bad.append(s)
    assert len(bad) <= 0.01 * len(smiles), bad[:5]
