"""Adaptive mesh refinement controller.

The flow solution drives adaptation: the same modal-energy indicator used
for shock capturing assigns each element a target level (high above the
threshold, low otherwise), giving per-element flags lambda in {-1, 0, +1}.
Refinement is applied first (with 2:1 balance smoothing), then coarsening;
a family whose member was refined for balance is not coarsened. Both
solution fields are transferred conservatively with the same interpolation
and projection operators; the gravity field is adapted passively.
"""

from dataclasses import dataclass, field

import numpy as np

from .mesh import coarsen_cells, refine_cells
from .semidisc import BlendParams, blending_indicator


@dataclass
class AMRPolicy:
    level_low: int
    level_high: int
    threshold: float = 3.0e-4
    interval: int = 1
    indicator: BlendParams = field(
        default_factory=lambda: BlendParams(
            alpha_max=1.0, alpha_floor=1.0e-4, smooth=False
        )
    )

    def __post_init__(self):
        if self.level_low > self.level_high:
            raise ValueError("level_low must not exceed level_high")
        if self.threshold <= 0.0:
            raise ValueError("threshold must be positive")


def compute_lambda(policy, semi_euler, u_euler):
    """Per-element adaptation flag: sign of (target level - current level)."""
    alpha = blending_indicator(
        u_euler, semi_euler.basis, policy.indicator, semi_euler.equations.gamma,
        pairs=semi_euler.conn.face_pairs() if policy.indicator.smooth else None,
    )
    target = np.where(alpha > policy.threshold, policy.level_high, policy.level_low)
    return np.clip(target - semi_euler.conn.levels, -1, 1).astype(np.int64)


def adapt(tree, semi_euler, semi_gravity, u_euler, u_gravity, lam):
    """Jointly adapt the mesh and both solution fields.

    Returns (new flow state, new gravity state, changed flag)."""
    conn = semi_euler.conn
    transfer = semi_euler.transfer
    lam = np.asarray(lam)
    refine_ids = [conn.leaf_ids[e] for e in np.nonzero(lam > 0)[0]]
    coarsen_ids = [conn.leaf_ids[e] for e in np.nonzero(lam < 0)[0]]

    old_index = {cid: e for e, cid in enumerate(conn.leaf_ids)}
    # children snapshot for any family that might be merged
    family = {}
    for cid in coarsen_ids:
        pid = tree.cells[cid].parent
        if pid >= 0:
            family[pid] = tree.cells[pid].children

    refined = refine_cells(tree, refine_ids) if refine_ids else set()
    # refinement overrides coarsening: drop flags consumed by balance smoothing
    coarsen_ids = [cid for cid in coarsen_ids if tree.cells[cid].leaf]
    coarsened = coarsen_cells(tree, coarsen_ids) if coarsen_ids else set()
    if not refined and not coarsened:
        return u_euler, u_gravity, False

    # old refined cells keep their Cell entry (now non-leaf), so children data
    # can be interpolated on demand; coarsened families were snapshotted above
    semi_euler.rebuild()
    if semi_gravity is not None:
        semi_gravity.rebuild()
    new_conn = semi_euler.conn

    def transfer_state(u_old, semi):
        n = semi.basis.n_nodes
        nvar = u_old.shape[1]
        out = np.zeros((new_conn.n_elements, nvar, n, n))
        refined_children = {}
        for e_new, cid in enumerate(new_conn.leaf_ids):
            if cid in old_index:
                out[e_new] = u_old[old_index[cid]]
                continue
            cell = tree.cells[cid]
            if cell.parent in old_index or cell.parent in refined_children:
                if cell.parent not in refined_children:
                    refined_children[cell.parent] = transfer.refine_nodal(
                        u_old[old_index[cell.parent]]
                    )
                kids = tree.cells[cell.parent].children
                out[e_new] = refined_children[cell.parent][kids.index(cid)]
            elif cid in coarsened:
                kids = family[cid]
                out[e_new] = transfer.coarsen_nodal(
                    [u_old[old_index[k]] for k in kids]
                )
            else:
                raise RuntimeError(f"cannot map new leaf {cid} to old data")
        return out

    new_euler = transfer_state(u_euler, semi_euler)
    new_gravity = None
    if u_gravity is not None and semi_gravity is not None:
        new_gravity = transfer_state(u_gravity, semi_gravity)
    return new_euler, new_gravity, True


def adapt_step(policy, tree, semi_euler, semi_gravity, u_euler, u_gravity):
    lam = compute_lambda(policy, semi_euler, u_euler)
    return adapt(tree, semi_euler, semi_gravity, u_euler, u_gravity, lam)


def initial_adapt_cycle(
    policy, tree, semi_euler, semi_gravity, init_euler, init_gravity, max_cycles=8
):
    """Alternate (re)initialization and adaptation until the mesh is stable
    or the cycle cap is reached; the solution is re-sampled from the initial
    condition after every mesh change. Returns (u_euler, u_gravity, cycles),
    where each cycle is one initialize/flag/adapt round."""
    if max_cycles < 1:
        raise ValueError("max_cycles must be at least 1")

    def init_states():
        ue = semi_euler.new_state(init_euler)
        ug = semi_gravity.new_state(init_gravity) if semi_gravity is not None else None
        return ue, ug

    rounds = 0
    while rounds < max_cycles:
        rounds += 1
        u_euler, u_gravity = init_states()
        lam = compute_lambda(policy, semi_euler, u_euler)
        if not np.any(lam != 0):
            return u_euler, u_gravity, rounds
        refine_ids = [semi_euler.conn.leaf_ids[e] for e in np.nonzero(lam > 0)[0]]
        coarsen_ids = [semi_euler.conn.leaf_ids[e] for e in np.nonzero(lam < 0)[0]]
        changed = False
        if refine_ids:
            changed |= bool(refine_cells(tree, refine_ids))
        coarsen_ids = [cid for cid in coarsen_ids if tree.cells[cid].leaf]
        if coarsen_ids:
            changed |= bool(coarsen_cells(tree, coarsen_ids))
        if not changed:
            return u_euler, u_gravity, rounds
        semi_euler.rebuild()
        if semi_gravity is not None:
            semi_gravity.rebuild()
    u_euler, u_gravity = init_states()
    return u_euler, u_gravity, rounds
