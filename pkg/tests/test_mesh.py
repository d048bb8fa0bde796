import numpy as np
import pytest

from hypgrav.mesh import (
    MaxRefinementError,
    UnbalancedTreeError,
    coarsen_cells,
    create_uniform,
    is_balanced,
    leaf_connectivity,
    refine_cells,
)

UNIT = ((0.0, 0.0), (1.0, 1.0))


def leaf_area_exact(tree):
    # integer identity: sum over leaves of 4**(Lmax - level) == 4**Lmax
    levels = [tree.cells[c].level for c in tree.leaf_ids()]
    lmax = max(levels)
    return sum(4 ** (lmax - l) for l in levels) == 4**lmax


def test_create_uniform_counts():
    t0 = create_uniform(UNIT, 0)
    assert len(t0.leaf_ids()) == 1 and t0.h(0) == 1.0
    t2 = create_uniform(((0.0, 0.0), (2.0, 2.0)), 2)
    assert len(t2.leaf_ids()) == 16 and t2.h(2) == 0.5
    sedov = create_uniform(((-4.0, -4.0), (4.0, 4.0)), 2)
    assert len(sedov.leaf_ids()) == 16 and sedov.h(2) == 2.0


def test_create_uniform_rejects_nonsquare():
    with pytest.raises(ValueError):
        create_uniform(((0.0, 0.0), (1.0, 2.0)), 1)


def test_refine_single_cell_no_smoothing():
    tree = create_uniform(UNIT, 1)
    target = tree.leaf_ids()[0]
    refined = refine_cells(tree, {target})
    assert refined == {target}
    assert len(tree.leaf_ids()) == 7
    assert is_balanced(tree)


def test_refine_ripples_into_coarser_neighbor():
    tree = create_uniform(UNIT, 1)
    first = tree.leaf_ids()[0]
    refine_cells(tree, {first})
    # refine a grandchild adjacent to a level-1 leaf: that leaf must split too
    kid = tree.cells[first].children[3]  # touches both level-1 neighbors
    refined = refine_cells(tree, {kid})
    assert kid in refined and len(refined) > 1
    assert is_balanced(tree)


def test_refine_empty_is_identity():
    tree = create_uniform(UNIT, 2)
    before = tree.leaf_ids()
    assert refine_cells(tree, set()) == set()
    assert tree.leaf_ids() == before


def test_refine_beyond_max_level_rejected():
    tree = create_uniform(UNIT, 1, max_level=1)
    with pytest.raises(MaxRefinementError):
        refine_cells(tree, {tree.leaf_ids()[0]})


def test_coarsen_full_family():
    tree = create_uniform(UNIT, 1)
    parent = 0
    kids = set(tree.cells[parent].children)
    assert coarsen_cells(tree, kids) == {parent}
    assert tree.leaf_ids() == [0]


def test_coarsen_partial_family_dropped():
    tree = create_uniform(UNIT, 1)
    kids = list(tree.cells[0].children)
    assert coarsen_cells(tree, set(kids[:3])) == set()
    assert len(tree.leaf_ids()) == 4


def test_coarsen_blocked_by_refined_sibling():
    tree = create_uniform(UNIT, 1)
    kids = list(tree.cells[0].children)
    refine_cells(tree, {kids[0]})
    # the sibling family is no longer four leaves, so nothing to coarsen
    assert coarsen_cells(tree, set(kids[1:])) == set()


def _leaf_at(tree, level, ix, iy):
    cid = tree.lookup(level, ix, iy)
    assert cid is not None and tree.cells[cid].leaf
    return cid


def test_coarsen_preserves_balance():
    tree = create_uniform(UNIT, 2)
    # refine the level-2 leaf at (1, 1); its children face the (1, 0) family
    refine_cells(tree, {_leaf_at(tree, 2, 1, 1)})

    def family(px, py):
        parent = tree.lookup(1, px, py)
        return set(tree.cells[parent].children)

    # coarsening the family across the face would put a level-1 leaf next to
    # level-3 leaves: silently dropped
    assert coarsen_cells(tree, family(1, 0)) == set()
    assert is_balanced(tree)
    # a family that only touches the refined cell at a corner may coarsen
    assert len(coarsen_cells(tree, family(1, 1))) == 1
    assert is_balanced(tree)


def test_connectivity_uniform_periodic():
    tree = create_uniform(UNIT, 1, periodic=(True, True))
    conn = leaf_connectivity(tree)
    assert conn.n_elements == 4
    assert len(conn.if_left) == 8
    assert len(conn.mt_large) == 0
    assert len(conn.bd_elem) == 0


def test_connectivity_single_cell_nonperiodic():
    tree = create_uniform(UNIT, 0)
    conn = leaf_connectivity(tree)
    assert len(conn.if_left) == 0
    assert len(conn.mt_large) == 0
    assert len(conn.bd_elem) == 4
    assert sorted(conn.bd_tags) == ["+x", "+y", "-x", "-y"]


def test_connectivity_periodic_with_one_refined():
    tree = create_uniform(UNIT, 1, periodic=(True, True))
    refine_cells(tree, {tree.leaf_ids()[0]})
    conn = leaf_connectivity(tree)
    assert conn.n_elements == 7
    # 4 conforming faces between the children + 4 between the coarse leaves
    assert len(conn.if_left) == 8
    assert len(conn.mt_large) == 4  # each coarse-fine face carries one mortar
    assert len(conn.bd_elem) == 0
    # every element face is covered exactly once
    assert 2 * len(conn.if_left) + 3 * len(conn.mt_large) == 4 * conn.n_elements


def test_connectivity_partition_covers_every_face():
    rng = np.random.default_rng(7)
    tree = create_uniform(UNIT, 2, periodic=(True, False))
    for _ in range(3):
        leaves = tree.leaf_ids()
        refine_cells(tree, set(rng.choice(leaves, size=2, replace=False)))
    conn = leaf_connectivity(tree)
    counts = np.zeros((conn.n_elements, 4), dtype=int)
    for e, ax in zip(conn.if_left, conn.if_axis):
        counts[e, 1 if ax == 0 else 3] += 1
    for e, ax in zip(conn.if_right, conn.if_axis):
        counts[e, 0 if ax == 0 else 2] += 1
    for L, lo, hi, ax, side in zip(
        conn.mt_large, conn.mt_small_lo, conn.mt_small_hi, conn.mt_axis, conn.mt_large_side
    ):
        large_face = (1 if side == 0 else 0) if ax == 0 else (3 if side == 0 else 2)
        small_face = (0 if side == 0 else 1) if ax == 0 else (2 if side == 0 else 3)
        counts[L, large_face] += 1
        counts[lo, small_face] += 1
        counts[hi, small_face] += 1
    for e, f in zip(conn.bd_elem, conn.bd_face):
        counts[e, f] += 1
    assert np.all(counts == 1)


def test_connectivity_rejects_unbalanced():
    tree = create_uniform(UNIT, 1)
    first = tree.leaf_ids()[0]
    refine_cells(tree, {first})
    # children[3] touches the level-1 leaves; splitting it by hand without the
    # ripple leaves level-3 cells next to level-1 cells
    kid = tree.cells[first].children[3]
    tree._split(kid)
    assert not is_balanced(tree)
    with pytest.raises(UnbalancedTreeError):
        leaf_connectivity(tree)


def test_random_adapt_sequence_invariants():
    rng = np.random.default_rng(42)
    tree = create_uniform(UNIT, 2, periodic=(True, True), max_level=6)
    for step in range(12):
        leaves = tree.leaf_ids()
        k = rng.integers(1, 4)
        pick = [c for c in rng.choice(leaves, size=k, replace=False)
                if tree.cells[c].level < tree.max_level]
        refine_cells(tree, set(pick))
        leaves = tree.leaf_ids()
        flag = set(rng.choice(leaves, size=min(len(leaves), 12), replace=False).tolist())
        coarsen_cells(tree, flag)
        assert is_balanced(tree)
        assert leaf_area_exact(tree)
    conn = leaf_connectivity(tree)
    assert conn.n_elements == len(tree.leaf_ids())
