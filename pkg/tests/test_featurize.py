import numpy as np
import pytest

from hignn.brics import fragment
from hignn.chem import parse_smiles
from hignn.featurize import (
    N_ATOM_BASE,
    N_ATOM_EXTRA,
    N_BOND,
    DisconnectedSubset,
    atom_features,
    bond_features,
    featurize_graph,
)

from conftest import esol_smiles

GROUPS = [(0, 16), (16, 22), (24, 30), (31, 36)]


def test_widths():
    m = parse_smiles("CCO")
    assert atom_features(m, 0, True).shape == (N_ATOM_EXTRA,) == (46,)
    assert atom_features(m, 0, False).shape == (N_ATOM_BASE,) == (40,)
    assert bond_features(m, m.bonds[0]).shape == (N_BOND,)


def test_one_hot_groups_and_binary_slots():
    for s in esol_smiles(150, seed=2):
        x, _, e = featurize_graph(parse_smiles(s))
        for lo, hi in GROUPS:
            assert np.all(x[:, lo:hi].sum(axis=1) == 1)
        binary = np.delete(x, 22, axis=1)
        assert np.isin(binary, (0.0, 1.0)).all()
        assert np.all(e[:, 0:4].sum(axis=1) == 1) and np.all(e[:, 6:10].sum(axis=1) == 1)


def test_methane_atom():
    x = atom_features(parse_smiles("C"), 0, True)
    assert x[1] == 1 and x[16] == 1 and x[35] == 1
    assert x[30] == 0 and x[39] == 0 and x[45] == 0
    assert x[40:45].sum() == 0


def test_benzene_atom():
    x = atom_features(parse_smiles("c1ccccc1"), 0, True)
    assert x[30] == 1 and x[39] == 1 and x[18] == 1 and x[32] == 1 and x[45] == 1


def test_acid_oxygen_pharmacophore():
    x = atom_features(parse_smiles("CC(=O)O"), 3, True)
    assert list(x[40:45]) == [1, 1, 0, 1, 0]


def test_bond_rows():
    b = bond_features(parse_smiles("c1ccccc1"), parse_smiles("c1ccccc1").bonds[0])
    assert b[3] == 1 and b[4] == 1 and b[5] == 1
    m = parse_smiles("CC")
    assert list(bond_features(m, m.bonds[0])) == [1, 0, 0, 0, 0, 0, 1, 0, 0, 0]
    m = parse_smiles("C/C=C/C")
    b = bond_features(m, m.bond_between(1, 2))
    assert b[1] == 1 and b[8] == 1


def test_full_subset_is_identity():
    m = parse_smiles("CC(=O)Nc1ccccc1")
    full = featurize_graph(m)
    sub = featurize_graph(m, range(m.n_atoms))
    for a, b in zip(full, sub):
        assert np.array_equal(a, b)


def test_fragment_degree_is_local():
    m = parse_smiles("CC(=O)Nc1ccccc1")
    aryl = [4, 5, 6, 7, 8, 9]
    x, _, _ = featurize_graph(m, aryl)
    # the ipso carbon loses its bond to N
    assert x[0, 18] == 1
    x_whole, _, _ = featurize_graph(m)
    assert x_whole[4, 19] == 1
    # the amide N fragment alone: an isolated atom with degree 0
    xn, edges, _ = featurize_graph(m, [3])
    assert xn[0, 16] == 1 and edges.shape == (0, 2)


def test_edges_listed_in_both_directions():
    x, edges, e = featurize_graph(parse_smiles("CCO"))
    assert edges.tolist() == [[0, 1], [1, 0], [1, 2], [2, 1]]
    assert np.array_equal(e[0], e[1])


@pytest.mark.parametrize("subset", [[], [0, 2], [99]])
def test_bad_subsets(subset):
    with pytest.raises(DisconnectedSubset):
        featurize_graph(parse_smiles("CCO"), subset)


def test_fragments_featurize():
    for s in esol_smiles(50, seed=4):
        m = parse_smiles(s)
        for f in fragment(m).fragments:
            x, edges, e = featurize_graph(m, f)
            assert x.shape == (len(f), N_ATOM_EXTRA)
            assert len(edges) == len(e)
