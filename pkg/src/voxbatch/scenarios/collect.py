"""Collect scenario: open arena with raised platforms and void gaps; gather
every green diamond while avoiding the red ones."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import palette
from ..grid import SOLID_BASE, VOID_BELOW, ObjectKind, VoxelGrid, solid_code
from ..physics import respawn_agent
from ..rng import SeededRng
from ..state import EpisodeState
from . import common

ARENA = 20                 # interior cells per side
SURFACE = 2                # floor slab fills iy in [0, SURFACE)
PLATFORM_TOP = SURFACE + 1

DEFAULTS = {"episode_length": 512, "green_diamonds": 5, "red_diamonds": 5,
            "platforms": 4, "void_patches": 5}


@dataclass
class CollectData:
    greens_left: int


def generate(seed: int, num_agents: int, params: dict, kind=None) -> EpisodeState:
    rng = SeededRng(seed)
    n_green = int(params["green_diamonds"])
    n_red = int(params["red_diamonds"])
    nx = nz = ARENA + 2
    grid = VoxelGrid(nx, 10, nz)
    common.slab(grid, 0, 0, nx, nz, 0, SURFACE, palette.MAT_FLOOR)
    common.perimeter_walls(grid, SURFACE, SURFACE + 5, palette.MAT_WALL)

    spawn_cell = (nx // 2, nz // 2)

    # raised platforms (climbable with one jump); never under the spawn area
    for _ in range(int(params["platforms"])):
        px = rng.randint(2, nx - 5)
        pz = rng.randint(2, nz - 5)
        pw = rng.randint(2, 3)
        pd = rng.randint(2, 3)
        if (px - 3 <= spawn_cell[0] <= px + pw + 2
                and pz - 3 <= spawn_cell[1] <= pz + pd + 2):
            continue
        grid.fill((px, SURFACE, pz), (px + pw, PLATFORM_TOP, pz + pd),
                  solid_code(palette.MAT_PLATFORM))

    # void gaps: floor removed entirely, marked VOID_BELOW at the bed level
    for _ in range(int(params["void_patches"])):
        vx = rng.randint(2, nx - 4)
        vz = rng.randint(2, nz - 4)
        vw = rng.randint(1, 2)
        vd = rng.randint(1, 2)
        for xi in range(vx, vx + vw):
            for zi in range(vz, vz + vd):
                if abs(xi - spawn_cell[0]) <= 2 and abs(zi - spawn_cell[1]) <= 2:
                    continue  # never undermine the spawn area
                for yi in range(SURFACE):
                    grid.set(xi, yi, zi, 0)
                grid.set(xi, 0, zi, VOID_BELOW)

    reachable = _reachable_cells(grid, spawn_cell)
    candidates = sorted(c for c in reachable
                        if abs(c[0] - spawn_cell[0]) + abs(c[1] - spawn_cell[1]) > 2)
    chosen = common.scatter_cells(rng, candidates, n_green + n_red)
    objects = []
    for i, (cx, cz) in enumerate(chosen):
        kind_i = ObjectKind.GREEN_DIAMOND if i < n_green else ObjectKind.RED_DIAMOND
        surface_y = _surface_height(grid, cx, cz)
        objects.append(common.diamond(len(objects), kind_i, (cx, surface_y, cz)))

    spawns = common.spread_spawns(num_agents, float(spawn_cell[0]) + 0.5,
                                  float(spawn_cell[1]) + 0.5, 4.0)
    agents = [common.make_agent(sx, float(SURFACE), sz) for sx, sz in spawns]
    data = CollectData(greens_left=n_green)
    return common.build_state(kind, grid, agents, objects, data,
                              int(params["episode_length"]), rng, seed)


def _surface_height(grid: VoxelGrid, ix: int, iz: int) -> int:
    for iy in range(grid.ny - 1, -1, -1):
        if grid.get(ix, iy, iz) >= SOLID_BASE:
            return iy + 1
    return 0


def _reachable_cells(grid: VoxelGrid, spawn) -> set[tuple[int, int]]:
    """Walkable columns reachable from spawn; a move is legal when the
    standing-surface height changes by at most one cell (jump range)."""
    heights = {}
    for ix in range(1, grid.nx - 1):
        for iz in range(1, grid.nz - 1):
            h = _surface_height(grid, ix, iz)
            if h == 0:
                continue  # void column
            if h > PLATFORM_TOP:
                continue  # perimeter wall
            heights[(ix, iz)] = h
    seen = {spawn}
    frontier = [spawn]
    while frontier:
        cx, cz = frontier.pop()
        for dx, dz in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nxt = (cx + dx, cz + dz)
            if nxt in seen or nxt not in heights:
                continue
            if abs(heights[nxt] - heights[(cx, cz)]) <= 1:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def score(state: EpisodeState, events, rewards: np.ndarray) -> bool:
    data: CollectData = state.scenario_data
    for ai, obj_id in events.touched:
        obj = state.objects[obj_id]
        if not obj.alive:
            continue
        if obj.kind == ObjectKind.GREEN_DIAMOND:
            obj.alive = False
            rewards[ai] += 1.0
            data.greens_left -= 1
        elif obj.kind == ObjectKind.RED_DIAMOND:
            obj.alive = False
            rewards[ai] -= 1.0
    if events.touched:
        state.refresh_object_flags()
    for ai in events.fell_into_void:
        rewards[ai] -= 0.5
        respawn_agent(state, ai, state.spawn_points[ai])
    if data.greens_left == 0:
        rewards += 5.0
        return True
    return False


def true_objective(state: EpisodeState) -> float:
    return 1.0 if state.scenario_data.greens_left == 0 else 0.0
