"""Hex-maze scenarios: depth-first backtracking over the hexagonal adjacency
graph. Hex cell walls do not align with the lattice, so they are rasterized
into the voxel grid as unit-voxel staircases; the merger packs them into many
small boxes, which is what makes the hex scenarios measurably slower than the
voxel-native ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import palette
from ..grid import ObjectKind, VoxelGrid, solid_code
from ..rng import SeededRng
from ..state import EpisodeState
from . import common

HEX_SIZE = 2.0             # circumradius; neighbor spacing = sqrt(3) * size
WALL_H = 3
SURFACE = 2

EXPLORE_DEFAULTS = {"episode_length": 1024, "radius": 7, "min_goal_frac": 0.7}
MEMORY_DEFAULTS = {"episode_length": 1024, "radius": 5, "matching": 3,
                   "nonmatching": 3}

# axial neighbor directions, pointy-top orientation
_HEX_DIRS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


def _axial_to_world(q: int, r: int) -> tuple[float, float]:
    x = HEX_SIZE * math.sqrt(3.0) * (q + r / 2.0)
    z = HEX_SIZE * 1.5 * r
    return x, z


def _hex_cells(radius: int) -> list[tuple[int, int]]:
    cells = []
    for q in range(-radius, radius + 1):
        for r in range(-radius, radius + 1):
            if (abs(q) + abs(r) + abs(q + r)) // 2 <= radius:
                cells.append((q, r))
    return cells


def _corner(cx: float, cz: float, k: int) -> tuple[float, float]:
    ang = math.radians(60.0 * k + 30.0)
    return cx + HEX_SIZE * math.cos(ang), cz + HEX_SIZE * math.sin(ang)


# edge k of a pointy-top hex (between corners k and k+1) faces neighbor dir:
# corner angles 30,90,...; edge midpoint angle 60k+60 -> direction mapping
_EDGE_TO_DIR = {}
for _k in range(6):
    _mid = math.radians(60.0 * _k + 60.0)
    _best, _bd = None, 1e9
    for _d in _HEX_DIRS:
        _wx, _wz = _axial_to_world(_d[0], _d[1])
        _ang = math.atan2(_wz, _wx)
        _diff = abs((math.cos(_mid) - math.cos(_ang))**2 + (math.sin(_mid) - math.sin(_ang))**2)
        if _diff < _bd:
            _bd, _best = _diff, _d
    _EDGE_TO_DIR[_k] = _best


@dataclass
class HexLayout:
    cells: list[tuple[int, int]]
    open_edges: set  # frozenset({cell_a, cell_b}) pairs carved by the maze
    offset: tuple[float, float]
    radius: int

    def center(self, cell) -> tuple[float, float]:
        x, z = _axial_to_world(cell[0], cell[1])
        return x + self.offset[0], z + self.offset[1]


def _carve_maze(rng: SeededRng, cells: list[tuple[int, int]]):
    cell_set = set(cells)
    open_edges = set()
    start = (0, 0)
    stack = [start]
    visited = {start}
    while stack:
        cur = stack[-1]
        neighbors = []
        for d in _HEX_DIRS:
            nxt = (cur[0] + d[0], cur[1] + d[1])
            if nxt in cell_set and nxt not in visited:
                neighbors.append(nxt)
        if not neighbors:
            stack.pop()
            continue
        nxt = rng.choice(neighbors)
        open_edges.add(frozenset((cur, nxt)))
        visited.add(nxt)
        stack.append(nxt)
    return open_edges


def _build_hex_grid(rng: SeededRng, radius: int) -> tuple[VoxelGrid, HexLayout]:
    cells = _hex_cells(radius)
    open_edges = _carve_maze(rng, cells)
    # max |x| over the hex field is sqrt(3)*S*R (at q=R, r=0), max |z| is 1.5*S*R
    extent = HEX_SIZE * math.sqrt(3.0) * radius + 2 * HEX_SIZE
    # snap the spawn hex's center onto a cell center: voxelized walls can
    # bulge almost a full cell inward, and a half-cell-aligned center keeps
    # the spawn pocket's clearance symmetric and agent-safe
    snapped = math.floor(extent + 1.0) + 0.5
    offset = (snapped, snapped)
    side = int(math.ceil(2 * extent + 2.0))
    grid = VoxelGrid(side, SURFACE + WALL_H + 1, side)
    common.slab(grid, 0, 0, side, side, 0, SURFACE, palette.MAT_FLOOR)

    layout = HexLayout(cells=cells, open_edges=open_edges, offset=offset,
                       radius=radius)
    cell_set = set(cells)
    wall_code = solid_code(palette.MAT_HEX_WALL)
    for cell in cells:
        cx, cz = layout.center(cell)
        for k in range(6):
            d = _EDGE_TO_DIR[k]
            nxt = (cell[0] + d[0], cell[1] + d[1])
            boundary = nxt not in cell_set
            if not boundary:
                if frozenset((cell, nxt)) in open_edges:
                    continue
                if nxt < cell:
                    continue  # interior closed edges drawn once
            x0, z0 = _corner(cx, cz, k)
            x1, z1 = _corner(cx, cz, (k + 1) % 6)
            _draw_wall(grid, x0, z0, x1, z1, wall_code)
    # staircase corners can bulge into doorways and pinch them shut: carve a
    # corridor along each open edge's center-to-center line. The cross
    # pattern keeps the cleared cells 4-connected (a bare line of cells can
    # step diagonally, which an agent cannot squeeze through).
    for edge in open_edges:
        a, b = sorted(edge)
        ax, az = layout.center(a)
        bx, bz = layout.center(b)
        steps = int(math.hypot(bx - ax, bz - az) / 0.25) + 1
        for s in range(steps + 1):
            t = s / steps
            px = ax + (bx - ax) * t
            pz = az + (bz - az) * t
            for dx, dz in ((0.0, 0.0), (0.45, 0.0), (-0.45, 0.0),
                           (0.0, 0.45), (0.0, -0.45)):
                xi = int(px + dx)
                zi = int(pz + dz)
                for yi in range(SURFACE, SURFACE + WALL_H):
                    grid.set(xi, yi, zi, 0)
    return grid, layout


def _draw_wall(grid: VoxelGrid, x0, z0, x1, z1, code) -> None:
    length = math.hypot(x1 - x0, z1 - z0)
    steps = max(2, int(length / 0.25) + 1)
    for s in range(steps + 1):
        t = s / steps
        xi = int(x0 + (x1 - x0) * t)
        zi = int(z0 + (z1 - z0) * t)
        for yi in range(SURFACE, SURFACE + WALL_H):
            grid.set(xi, yi, zi, code)


def _maze_distances(layout: HexLayout, start) -> dict:
    dist = {start: 0}
    frontier = [start]
    while frontier:
        nxt_frontier = []
        for cur in frontier:
            for d in _HEX_DIRS:
                nxt = (cur[0] + d[0], cur[1] + d[1])
                if nxt in dist:
                    continue
                if frozenset((cur, nxt)) in layout.open_edges:
                    dist[nxt] = dist[cur] + 1
                    nxt_frontier.append(nxt)
        frontier = nxt_frontier
    return dist


# --------------------------------------------------------------------------
# HexExplore
# --------------------------------------------------------------------------

@dataclass
class HexExploreData:
    layout: HexLayout
    goal_cell: tuple[int, int]
    found: bool = False


def generate_explore(seed: int, num_agents: int, params: dict,
                     kind=None) -> EpisodeState:
    rng = SeededRng(seed)
    grid, layout = _build_hex_grid(rng, int(params["radius"]))
    dist = _maze_distances(layout, (0, 0))
    diameter = max(dist.values())
    cutoff = params["min_goal_frac"] * diameter
    far = sorted(c for c, d in dist.items() if d >= cutoff)
    goal = rng.choice(far)
    gx, gz = layout.center(goal)
    objects = [common.diamond(0, ObjectKind.PINK_DIAMOND,
                              (int(gx), SURFACE, int(gz)))]
    agents = _spawn_agents(layout, num_agents)
    data = HexExploreData(layout=layout, goal_cell=goal)
    return common.build_state(kind, grid, agents, objects, data,
                              int(params["episode_length"]), rng, seed)


def score_explore(state: EpisodeState, events, rewards: np.ndarray) -> bool:
    data: HexExploreData = state.scenario_data
    for ai, obj_id in events.touched:
        obj = state.objects[obj_id]
        if obj.alive and obj.kind == ObjectKind.PINK_DIAMOND:
            obj.alive = False
            state.refresh_object_flags()
            rewards[ai] += 5.0
            data.found = True
    return data.found


def true_objective_explore(state: EpisodeState) -> float:
    return 1.0 if state.scenario_data.found else 0.0


# --------------------------------------------------------------------------
# HexMemory
# --------------------------------------------------------------------------

@dataclass
class HexMemoryData:
    layout: HexLayout
    exemplar: tuple[int, int]          # (shape_id, color_id)
    matching_ids: frozenset
    remaining: int = 0


def generate_memory(seed: int, num_agents: int, params: dict,
                    kind=None) -> EpisodeState:
    rng = SeededRng(seed)
    grid, layout = _build_hex_grid(rng, int(params["radius"]))
    n_match = int(params["matching"])
    n_other = int(params["nonmatching"])

    shape_id = rng.randrange(len(common.SHAPE_DIMS))
    color_id = rng.randrange(len(palette.COLLECTIBLE_COLORS))

    # pedestal with the display exemplar, set against one of the spawn hex's
    # CLOSED edges: door carve lines run only through open edges, so the
    # pedestal can never seal a corridor there
    sx, sz = layout.center((0, 0))
    pedestal_dir = None
    for k in range(6):
        d = _EDGE_TO_DIR[k]
        if frozenset(((0, 0), d)) not in layout.open_edges:
            pedestal_dir = d
            break
    if pedestal_dir is None:
        pedestal_dir = (1, -1)  # all six edges open: pick any, still playable
    wx, wz = _axial_to_world(pedestal_dir[0], pedestal_dir[1])
    norm = math.hypot(wx, wz)
    px = int(sx + 1.3 * wx / norm)
    pz = int(sz + 1.3 * wz / norm)
    grid.set(px, SURFACE, pz, solid_code(palette.MAT_PEDESTAL))
    objects = [common.centered_object(
        0, ObjectKind.COLLECTIBLE_SHAPE, (px, SURFACE + 1, pz),
        common.SHAPE_DIMS[shape_id], shape_id=shape_id, color_id=color_id,
        display_only=True)]

    dist = _maze_distances(layout, (0, 0))
    spots = sorted(c for c, d in dist.items() if d >= 2)
    chosen = common.scatter_cells(rng, spots, n_match + n_other)
    matching_ids = []
    for i, cell in enumerate(chosen):
        if i < n_match:
            s_id, c_id = shape_id, color_id
        else:
            while True:
                s_id = rng.randrange(len(common.SHAPE_DIMS))
                c_id = rng.randrange(len(palette.COLLECTIBLE_COLORS))
                if (s_id, c_id) != (shape_id, color_id):
                    break
        cx, cz = layout.center(cell)
        obj = common.centered_object(
            len(objects), ObjectKind.COLLECTIBLE_SHAPE,
            (int(cx), SURFACE, int(cz)), common.SHAPE_DIMS[s_id],
            shape_id=s_id, color_id=c_id)
        if i < n_match:
            matching_ids.append(obj.id)
        objects.append(obj)

    agents = _spawn_agents(layout, num_agents, avoid_cell=(px, pz))
    data = HexMemoryData(layout=layout, exemplar=(shape_id, color_id),
                         matching_ids=frozenset(matching_ids),
                         remaining=n_match)
    return common.build_state(kind, grid, agents, objects, data,
                              int(params["episode_length"]), rng, seed)


def score_memory(state: EpisodeState, events, rewards: np.ndarray) -> bool:
    data: HexMemoryData = state.scenario_data
    for ai, obj_id in events.touched:
        obj = state.objects[obj_id]
        if not obj.alive or obj.display_only:
            continue
        obj.alive = False
        state.refresh_object_flags()
        if obj_id in data.matching_ids:
            rewards[ai] += 1.0
            data.remaining -= 1
        else:
            rewards[ai] -= 1.0
    return data.remaining == 0


def true_objective_memory(state: EpisodeState) -> float:
    return 1.0 if state.scenario_data.remaining == 0 else 0.0


_RING_ANGLES = (180.0, 90.0, 270.0, 135.0, 225.0, 45.0, 315.0, 0.0)


def _spawn_agents(layout: HexLayout, num_agents: int, avoid_cell=None):
    """Agents cluster inside the spawn hex. The snapped center guarantees
    1.23 units of wall clearance; ring slots that would clip `avoid_cell`
    (HexMemory's pedestal) are skipped."""
    sx, sz = layout.center((0, 0))
    agents = [common.make_agent(sx, float(SURFACE), sz)]
    slot = 0
    while len(agents) < num_agents and slot < len(_RING_ANGLES):
        ang = math.radians(_RING_ANGLES[slot])
        slot += 1
        ax = sx + 0.85 * math.cos(ang)
        az = sz + 0.85 * math.sin(ang)
        if avoid_cell is not None:
            if (avoid_cell[0] < ax + 0.3 and ax - 0.3 < avoid_cell[0] + 1
                    and avoid_cell[1] < az + 0.3 and az - 0.3 < avoid_cell[1] + 1):
                continue
        agents.append(common.make_agent(ax, float(SURFACE), az))
    while len(agents) < num_agents:  # extreme agent counts stack rings upward
        agents.append(common.make_agent(sx, float(SURFACE) + 2.0, sz))
    return agents
