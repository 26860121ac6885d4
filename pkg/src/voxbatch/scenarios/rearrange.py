"""Rearrangement scenario: carry each item to its outlined target cell."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import palette
from ..grid import ObjectKind, VoxelGrid
from ..state import EpisodeState
from ..rng import SeededRng
from . import common

ROOM = 12
SURFACE = 2
DEFAULTS = {"episode_length": 1024, "items": 4}


@dataclass
class RearrangeData:
    target_cells: dict                      # item object id -> (x, z)
    correct: dict = field(default_factory=dict)
    completed: bool = False

    def all_correct(self) -> bool:
        return all(self.correct.get(i, False) for i in self.target_cells)


def generate(seed: int, num_agents: int, params: dict, kind=None) -> EpisodeState:
    rng = SeededRng(seed)
    n_items = int(params["items"])
    nx = nz = ROOM + 2
    grid = VoxelGrid(nx, 8, nz)
    common.slab(grid, 0, 0, nx, nz, 0, SURFACE, palette.MAT_FLOOR)
    common.perimeter_walls(grid, SURFACE, SURFACE + 3, palette.MAT_WALL)

    interior = [(x, z) for x in range(1, nx - 1) for z in range(1, nz - 1)]
    spawn = (nx // 2, nz // 2)
    candidates = sorted(c for c in interior
                        if abs(c[0] - spawn[0]) + abs(c[1] - spawn[1]) > 1)
    picks = common.scatter_cells(rng, candidates, 2 * n_items)
    item_cells, target_cells = picks[:n_items], picks[n_items:]

    objects = []
    decor_lo, decor_hi, decor_rgb = [], [], []
    targets = {}
    for i in range(n_items):
        obj = common.centered_object(
            i, ObjectKind.REARRANGE_ITEM,
            (item_cells[i][0], SURFACE, item_cells[i][1]),
            common.ITEM_SIZE, item_id=i)
        objects.append(obj)
        targets[i] = target_cells[i]
        color = palette.COLLECTIBLE_COLORS[i % len(palette.COLLECTIBLE_COLORS)]
        lo, hi, rgb = common.frame_decor(
            (target_cells[i][0], SURFACE, target_cells[i][1]), color)
        decor_lo.append(lo)
        decor_hi.append(hi)
        decor_rgb.append(rgb)

    decor = (np.concatenate(decor_lo), np.concatenate(decor_hi),
             np.concatenate(decor_rgb))
    spawns = common.spread_spawns(num_agents, spawn[0] + 0.5, spawn[1] + 0.5, 3.0)
    agents = [common.make_agent(sx, float(SURFACE), sz) for sx, sz in spawns]
    data = RearrangeData(target_cells=targets)
    return common.build_state(kind, grid, agents, objects, data,
                              int(params["episode_length"]), rng, seed,
                              decor=decor)


def score(state: EpisodeState, events, rewards: np.ndarray) -> bool:
    data: RearrangeData = state.scenario_data
    for ai, obj_id, cell, _height in events.placed:
        obj = state.objects[obj_id]
        if obj.kind != ObjectKind.REARRANGE_ITEM:
            continue
        if data.target_cells.get(obj_id) == (cell[0], cell[2]) \
                and not data.correct.get(obj_id, False):
            data.correct[obj_id] = True
            rewards[ai] += 1.0
    for ai, obj_id, from_cell in events.picked_up:
        obj = state.objects[obj_id]
        if obj.kind != ObjectKind.REARRANGE_ITEM:
            continue
        if data.correct.get(obj_id, False) \
                and data.target_cells.get(obj_id) == (from_cell[0], from_cell[2]):
            data.correct[obj_id] = False
            rewards[ai] -= 1.0
    if not data.completed and data.all_correct():
        data.completed = True
        rewards += 10.0
        return True
    return False


def true_objective(state: EpisodeState) -> float:
    return 1.0 if state.scenario_data.completed else 0.0
