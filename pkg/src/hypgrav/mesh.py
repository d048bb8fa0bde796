"""Hierarchical Cartesian quadtree over a square domain.

Cells live in a flat list with stable ids; positions are tracked as integer
indices per level so that neighbor lookups are exact coordinate hashing.
Refinement keeps the tree 2:1 balanced across faces by rippling refinement
into coarser neighbors. Connectivity classifies each leaf face as exactly one
of: conforming interface, mortar (coarse cell facing two fine cells), or
physical boundary.
"""

from dataclasses import dataclass, field

import numpy as np

FACE_TAGS = ("-x", "+x", "-y", "+y")

# children ordered c = cx + 2*cy, cx/cy = 0 for the lower half of each axis
_CHILD_OFFSETS = ((0, 0), (1, 0), (0, 1), (1, 1))


class MaxRefinementError(ValueError):
    """Raised when a refinement request exceeds the configured maximum level."""


class UnbalancedTreeError(ValueError):
    """Raised when an operation requires a 2:1 balanced tree."""


@dataclass
class Cell:
    level: int
    ix: int
    iy: int
    parent: int
    children: tuple | None = None
    leaf: bool = True


@dataclass
class Quadtree:
    xmin: float
    ymin: float
    size: float
    periodic: tuple = (False, False)
    max_level: int = 16
    cells: list = field(default_factory=list)
    _hash: dict = field(default_factory=dict)

    def h(self, level):
        return self.size / (1 << level)

    def cell_center(self, cid):
        c = self.cells[cid]
        h = self.h(c.level)
        return (self.xmin + h * (c.ix + 0.5), self.ymin + h * (c.iy + 0.5))

    def leaf_ids(self):
        return [i for i, c in enumerate(self.cells) if c is not None and c.leaf]

    def lookup(self, level, ix, iy):
        return self._hash.get((level, ix, iy))

    def _add_cell(self, cell):
        cid = len(self.cells)
        self.cells.append(cell)
        self._hash[(cell.level, cell.ix, cell.iy)] = cid
        return cid

    def _split(self, cid):
        cell = self.cells[cid]
        kids = []
        for cx, cy in _CHILD_OFFSETS:
            kids.append(
                self._add_cell(
                    Cell(cell.level + 1, 2 * cell.ix + cx, 2 * cell.iy + cy, cid)
                )
            )
        cell.children = tuple(kids)
        cell.leaf = False

    def _merge(self, parent_id):
        parent = self.cells[parent_id]
        for kid in parent.children:
            c = self.cells[kid]
            del self._hash[(c.level, c.ix, c.iy)]
            self.cells[kid] = None
        parent.children = None
        parent.leaf = True

    def neighbor_coords(self, cell, dim, sign):
        """Same-level neighbor indices across a face, or None outside the domain."""
        n_side = 1 << cell.level
        ix, iy = cell.ix, cell.iy
        if dim == 0:
            ix += sign
        else:
            iy += sign
        if dim == 0 and not (0 <= ix < n_side):
            if not self.periodic[0]:
                return None
            ix %= n_side
        if dim == 1 and not (0 <= iy < n_side):
            if not self.periodic[1]:
                return None
            iy %= n_side
        return cell.level, ix, iy


def create_uniform(domain, level, periodic=(False, False), max_level=16):
    """Uniform quadtree with 4**level leaves over a square domain.

    `domain` is ((xmin, ymin), (xmax, ymax)); the extent must be square.
    """
    (xmin, ymin), (xmax, ymax) = domain
    if not np.isclose(xmax - xmin, ymax - ymin) or xmax <= xmin:
        raise ValueError("domain must be square with positive extent")
    if level < 0 or level > max_level:
        raise ValueError("level must satisfy 0 <= level <= max_level")
    tree = Quadtree(float(xmin), float(ymin), float(xmax - xmin), tuple(periodic), max_level)
    tree._add_cell(Cell(0, 0, 0, -1))
    for _ in range(level):
        for cid in tree.leaf_ids():
            tree._split(cid)
    return tree


def _ripple_refine(tree, cid, refined):
    """Split cid, first refining any coarser face neighbor (keeps 2:1 balance)."""
    cell = tree.cells[cid]
    if cell.level >= tree.max_level:
        raise MaxRefinementError(f"cell {cid} already at maximum level {tree.max_level}")
    for dim in (0, 1):
        for sign in (-1, 1):
            coords = tree.neighbor_coords(cell, dim, sign)
            if coords is None:
                continue
            if tree.lookup(*coords) is None:
                level, ix, iy = coords
                coarse = tree.lookup(level - 1, ix // 2, iy // 2)
                if coarse is not None and tree.cells[coarse].leaf:
                    _ripple_refine(tree, coarse, refined)
    tree._split(cid)
    refined.add(cid)


def refine_cells(tree, ids):
    """Refine the given leaves; returns all cells actually refined, including
    those split by balance smoothing."""
    ids = list(dict.fromkeys(ids))
    for cid in ids:
        cell = tree.cells[cid]
        if cell is None or not cell.leaf:
            raise ValueError(f"cell {cid} is not a leaf")
        if cell.level >= tree.max_level:
            raise MaxRefinementError(
                f"refining cell {cid} would exceed maximum level {tree.max_level}"
            )
    refined = set()
    for cid in ids:
        if tree.cells[cid].leaf:  # may have been split by an earlier ripple
            _ripple_refine(tree, cid, refined)
    return refined


def _family_coarsenable(tree, parent_id, flagged):
    parent = tree.cells[parent_id]
    if parent is None or parent.children is None:
        return False
    kids = parent.children
    if not all(tree.cells[k] is not None and tree.cells[k].leaf for k in kids):
        return False
    if not all(k in flagged for k in kids):
        return False
    # after merging, the parent is a leaf at parent.level: every leaf touching
    # one of its faces must then be at most one level finer, so a refined
    # same-level neighbor of any child blocks the merge
    for kid in kids:
        cell = tree.cells[kid]
        for dim in (0, 1):
            sign = -1 if (cell.ix if dim == 0 else cell.iy) % 2 == 0 else 1
            coords = tree.neighbor_coords(cell, dim, sign)
            if coords is None:
                continue
            nid = tree.lookup(*coords)
            if nid is not None and not tree.cells[nid].leaf:
                return False
    return True


def coarsen_cells(tree, ids):
    """Coarsen families whose four sibling leaves are all flagged.

    Families that cannot be coarsened (incomplete flags, non-leaf siblings,
    or a 2:1 violation) are silently dropped. Returns the parent ids that
    became leaves.
    """
    flagged = set()
    for cid in ids:
        cell = tree.cells[cid]
        if cell is None or not cell.leaf:
            raise ValueError(f"cell {cid} is not a leaf")
        flagged.add(cid)
    parents = sorted(
        {tree.cells[cid].parent for cid in flagged if tree.cells[cid].parent >= 0}
    )
    coarsened = set()
    for pid in parents:
        if _family_coarsenable(tree, pid, flagged):
            tree._merge(pid)
            coarsened.add(pid)
    return coarsened


def _facing_children(cells, nid, dim, sign):
    """Children of cell nid adjacent to the face it shares with a (dim, sign)
    query from the other side, ordered by the transverse coordinate."""
    kids = cells[nid].children
    facing = 0 if sign > 0 else 1
    if dim == 0:
        return kids[facing], kids[facing + 2]
    return kids[2 * facing], kids[2 * facing + 1]


def is_balanced(tree):
    """True when every pair of face-adjacent leaves differs by at most one level."""
    for cid in tree.leaf_ids():
        cell = tree.cells[cid]
        for dim in (0, 1):
            for sign in (-1, 1):
                coords = tree.neighbor_coords(cell, dim, sign)
                if coords is None:
                    continue
                nid = tree.lookup(*coords)
                if nid is not None and not tree.cells[nid].leaf:
                    for kid in _facing_children(tree.cells, nid, dim, sign):
                        if not tree.cells[kid].leaf:
                            return False
    return True


@dataclass
class Connectivity:
    """Face classification of a balanced quadtree's leaves.

    Element indices are positions in `leaf_ids` (creation order). Interfaces
    and mortars are oriented along +axis: `left` is on the negative side.
    """

    leaf_ids: np.ndarray
    levels: np.ndarray
    h: np.ndarray
    centers: np.ndarray
    if_left: np.ndarray
    if_right: np.ndarray
    if_axis: np.ndarray
    mt_large: np.ndarray
    mt_small_lo: np.ndarray
    mt_small_hi: np.ndarray
    mt_axis: np.ndarray
    mt_large_side: np.ndarray  # 0: large on negative side, 1: on positive side
    bd_elem: np.ndarray
    bd_face: np.ndarray
    bd_tags: list

    @property
    def n_elements(self):
        return len(self.leaf_ids)

    def face_pairs(self):
        """All pairs of face-adjacent elements (for indicator smoothing)."""
        pairs = [np.stack([self.if_left, self.if_right], axis=1)]
        pairs.append(np.stack([self.mt_large, self.mt_small_lo], axis=1))
        pairs.append(np.stack([self.mt_large, self.mt_small_hi], axis=1))
        return np.concatenate(pairs, axis=0) if pairs else np.zeros((0, 2), int)


def leaf_connectivity(tree):
    if not is_balanced(tree):
        raise UnbalancedTreeError("connectivity requires a 2:1 balanced tree")
    leaf_ids = tree.leaf_ids()
    index = {cid: e for e, cid in enumerate(leaf_ids)}
    levels = np.array([tree.cells[c].level for c in leaf_ids])
    h = np.array([tree.h(l) for l in levels])
    centers = np.array([tree.cell_center(c) for c in leaf_ids])

    ifaces, mortars, bdry = [], [], []
    for cid in leaf_ids:
        cell = tree.cells[cid]
        e = index[cid]
        for face, (dim, sign) in enumerate(((0, -1), (0, 1), (1, -1), (1, 1))):
            coords = tree.neighbor_coords(cell, dim, sign)
            if coords is None:
                bdry.append((e, face, FACE_TAGS[face]))
                continue
            nid = tree.lookup(*coords)
            if nid is not None:
                ncell = tree.cells[nid]
                if ncell.leaf:
                    if sign > 0:  # register each conforming face from its - side
                        ifaces.append((e, index[nid], dim))
                else:
                    # neighbor is refined: this cell is the mortar's large side
                    lo, hi = _facing_children(tree.cells, nid, dim, sign)
                    side = 0 if sign > 0 else 1
                    mortars.append((e, index[lo], index[hi], dim, side))
            else:
                level, ix, iy = coords
                coarse = tree.lookup(level - 1, ix // 2, iy // 2) if level > 0 else None
                if coarse is not None and tree.cells[coarse].leaf:
                    pass  # small side of a mortar; registered by the large cell
                else:
                    bdry.append((e, face, FACE_TAGS[face]))

    def cols(rows, k):
        if not rows:
            return [np.zeros(0, dtype=np.int64) for _ in range(k)]
        return [np.array(col, dtype=np.int64) for col in zip(*rows)]

    if_left, if_right, if_axis = cols([(a, b, d) for a, b, d in ifaces], 3)
    mt_large, mt_lo, mt_hi, mt_axis, mt_side = cols(mortars, 5)
    bd_elem, bd_face = cols([(e, f) for e, f, _ in bdry], 2)
    return Connectivity(
        np.array(leaf_ids, dtype=np.int64),
        levels,
        h,
        centers,
        if_left,
        if_right,
        if_axis,
        mt_large,
        mt_lo,
        mt_hi,
        mt_axis,
        mt_side,
        bd_elem,
        bd_face,
        [t for _, _, t in bdry],
    )
