"""TowerBuilding scenario: stack boxes inside the marked build zone. The true
objective is the tallest settled stack achieved at any point in the episode."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import palette
from ..grid import BUILD_ZONE, VoxelGrid, solid_code
from ..state import EpisodeState
from ..rng import SeededRng
from . import common

ARENA = 14
SURFACE = 2
DEFAULTS = {"episode_length": 1536, "boxes": 12, "zone_side": 2}


@dataclass
class TowerData:
    zone_cells: frozenset                  # (x, z) footprint
    zone_lo: np.ndarray
    zone_hi: np.ndarray
    h_max: int = 0
    inside_zone: list = field(default_factory=list)   # per-agent previous overlap


def generate(seed: int, num_agents: int, params: dict, kind=None) -> EpisodeState:
    rng = SeededRng(seed)
    n_boxes = int(params["boxes"])
    zone_side = int(params["zone_side"])
    nx = nz = ARENA + 2
    grid = VoxelGrid(nx, 16, nz)
    common.slab(grid, 0, 0, nx, nz, 0, SURFACE, palette.MAT_FLOOR)
    common.perimeter_walls(grid, SURFACE, SURFACE + 6, palette.MAT_WALL)

    zx = nx // 2 - zone_side // 2
    zz = nz // 2 - zone_side // 2
    zone_cells = []
    for xi in range(zx, zx + zone_side):
        for zi in range(zz, zz + zone_side):
            grid.set(xi, SURFACE, zi, BUILD_ZONE)
            grid.set(xi, SURFACE - 1, zi, solid_code(palette.MAT_ZONE))
            zone_cells.append((xi, zi))

    spawn = (nx // 2, nz - 4)
    candidates = sorted(
        (x, z) for x in range(2, nx - 2) for z in range(2, nz - 2)
        if (x, z) not in zone_cells and abs(x - spawn[0]) + abs(z - spawn[1]) > 2)
    objects = []
    for cx, cz in common.scatter_cells(rng, candidates, n_boxes):
        objects.append(common.movable_box(len(objects), (cx, SURFACE, cz)))

    spawns = common.spread_spawns(num_agents, float(spawn[0]) + 0.5,
                                  float(spawn[1]) + 0.5, 3.0)
    agents = [common.make_agent(sx, float(SURFACE), sz, yaw=np.pi / 2)
              for sx, sz in spawns]
    data = TowerData(
        zone_cells=frozenset(zone_cells),
        zone_lo=np.array([zx, float(SURFACE), zz], dtype=np.float64),
        zone_hi=np.array([zx + zone_side, SURFACE + 1.0, zz + zone_side]),
        inside_zone=[False] * num_agents,
    )
    return common.build_state(kind, grid, agents, objects, data,
                              int(params["episode_length"]), rng, seed)


def score(state: EpisodeState, events, rewards: np.ndarray) -> bool:
    data: TowerData = state.scenario_data
    # +0.1 on the transition into zone overlap while carrying
    for ai, agent in enumerate(state.agents):
        lo = state.agents_lo[ai]
        hi = state.agents_hi[ai]
        inside = bool(np.all(lo < data.zone_hi) and np.all(data.zone_lo < hi))
        if inside and not data.inside_zone[ai] and agent.carrying is not None:
            rewards[ai] += 0.1
        data.inside_zone[ai] = inside
    for ai, _obj, cell, height in events.placed:
        if (cell[0], cell[2]) in data.zone_cells:
            rewards[ai] += 0.05 * (height + 2 ** height)
            if height > data.h_max:
                data.h_max = height
    return False  # runs to timeout


def true_objective(state: EpisodeState) -> float:
    return float(state.scenario_data.h_max)
