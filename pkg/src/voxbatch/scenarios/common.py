"""Shared generation helpers for the scenario builders."""

from __future__ import annotations

import math

import numpy as np

from .. import palette
from ..grid import (
    AgentState, DynamicObject, ObjectKind, Pose, VoxelGrid, solid_code,
)
from ..meshing import greedy_merge
from ..rng import SeededRng
from ..state import EpisodeState

DIAMOND_SIZE = 0.5
BOX_SIZE = 1.0
ITEM_SIZE = 0.8

# CollectibleShape aspect ratios, indexed by shape_id
SHAPE_DIMS = (
    (0.8, 0.8, 0.8),
    (0.5, 1.2, 0.5),
    (0.9, 0.4, 0.9),
)


def slab(grid: VoxelGrid, x0: int, z0: int, x1: int, z1: int,
         y0: int, y1: int, material: int) -> None:
    grid.fill((x0, y0, z0), (x1, y1, z1), solid_code(material))


def perimeter_walls(grid: VoxelGrid, y0: int, y1: int, material: int) -> None:
    code = solid_code(material)
    grid.fill((0, y0, 0), (grid.nx, y1, 1), code)
    grid.fill((0, y0, grid.nz - 1), (grid.nx, y1, grid.nz), code)
    grid.fill((0, y0, 0), (1, y1, grid.nz), code)
    grid.fill((grid.nx - 1, y0, 0), (grid.nx, y1, grid.nz), code)


def make_agent(x: float, y: float, z: float, yaw: float = 0.0) -> AgentState:
    return AgentState(pose=Pose(position=np.array([x, y, z]), yaw=yaw),
                      grounded=True)


def centered_object(obj_id: int, kind: ObjectKind, cell: tuple[int, int, int],
                    size, **extra) -> DynamicObject:
    """Object resting on the cell floor, centered in the cell footprint."""
    sx, sy, sz = size if isinstance(size, tuple) else (size, size, size)
    cx, cy, cz = cell[0] + 0.5, float(cell[1]), cell[2] + 0.5
    lo = np.array([cx - sx / 2, cy, cz - sz / 2])
    hi = np.array([cx + sx / 2, cy + sy, cz + sz / 2])
    return DynamicObject(id=obj_id, kind=kind, lo=lo, hi=hi, **extra)


def diamond(obj_id: int, kind: ObjectKind, cell) -> DynamicObject:
    return centered_object(obj_id, kind, cell, DIAMOND_SIZE)


def movable_box(obj_id: int, cell) -> DynamicObject:
    return centered_object(obj_id, ObjectKind.MOVABLE_BOX, cell, BOX_SIZE)


def scatter_cells(rng: SeededRng, candidates: list[tuple[int, int]],
                  count: int) -> list[tuple[int, int]]:
    """Pick `count` distinct cells, deterministic in rng order."""
    if count > len(candidates):
        raise ValueError(f"cannot scatter {count} among {len(candidates)} cells")
    pool = list(candidates)
    rng.shuffle(pool)
    return pool[:count]


def spread_spawns(num_agents: int, base_x: float, base_z: float,
                  z_extent: float) -> list[tuple[float, float]]:
    """Deterministic spawn layout: agents spread across z, then extra rows in x."""
    out = []
    per_row = max(1, int(z_extent // 1.5))
    for i in range(num_agents):
        row, col = divmod(i, per_row)
        dz = (col - (per_row - 1) / 2.0) * 1.5
        out.append((base_x + row * 1.2, base_z + dz))
    return out


def frame_decor(cell: tuple[int, int, int], color,
                thickness: float = 0.1, height: float = 0.15):
    """Four thin boxes outlining a cell on the floor (render-only)."""
    x, y, z = float(cell[0]), float(cell[1]), float(cell[2])
    t, h = thickness, height
    boxes = [
        ((x, y, z), (x + 1, y + h, z + t)),
        ((x, y, z + 1 - t), (x + 1, y + h, z + 1)),
        ((x, y, z), (x + t, y + h, z + 1)),
        ((x + 1 - t, y, z), (x + 1, y + h, z + 1)),
    ]
    lo = np.array([b[0] for b in boxes])
    hi = np.array([b[1] for b in boxes])
    rgb = np.tile(np.asarray(color, dtype=np.float64), (4, 1))
    return lo, hi, rgb


def build_state(kind, grid: VoxelGrid, agents, objects, data,
                episode_length: int, rng: SeededRng, seed: int,
                push_mode: bool = False, decor=None,
                spawn_points=None) -> EpisodeState:
    geom = greedy_merge(grid)
    state = EpisodeState(
        kind=kind, grid=grid, geom=geom, agents=agents, objects=objects,
        scenario_data=data, episode_length=episode_length, rng=rng, seed=seed,
        push_mode=push_mode,
        decor_lo=None if decor is None else decor[0],
        decor_hi=None if decor is None else decor[1],
        decor_rgb=None if decor is None else decor[2],
        spawn_points=spawn_points or [],
    )
    return state
