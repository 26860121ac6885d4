"""Obstacle-course scenarios: a linear run of rooms separated by obstacle
bands, green diamonds along the way, and an exit-pad strip at the end.

Course frame: +X is forward. The walking surface sits at y = SURFACE (floor
slab below it), so a depth-2 pit still has a solid bottom inside the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import palette
from ..grid import (
    EXIT_PAD, LAVA, ObjectKind, VoxelGrid, solid_code,
)
from ..physics import respawn_agent
from ..rng import SeededRng
from ..state import EpisodeState
from . import common

SURFACE = 3            # walking height; floor slab fills iy in [0, SURFACE)
WIDTH = 7              # interior z extent
ROOM_LEN = 7
WALL_TOP = 9

LAVA_PIT, STEP_WALL, STACK_WALL, BRIDGE_PIT = "lava", "step", "stack", "bridge"

DEFAULTS_EASY = {"episode_length": 512, "rooms": 2, "green_diamonds": 3}
DEFAULTS_HARD = {"episode_length": 1024, "rooms": 4, "green_diamonds": 5}


@dataclass
class Obstacle:
    kind: str
    x0: int            # first course column of the band
    width: int


@dataclass
class ObstaclesData:
    obstacles: list[Obstacle]
    room_entry_x: list[float]          # respawn x per room, index 0 = start
    exit_x: int
    spawn_z: list[float]               # per-agent spawn z
    reached: list[bool] = field(default_factory=list)
    greens_left: int = 0


def _band_width(kind: str, lava_w: int) -> int:
    return {LAVA_PIT: lava_w, STEP_WALL: 1, STACK_WALL: 1, BRIDGE_PIT: 2}[kind]


def generate(seed: int, num_agents: int, params: dict, hard: bool,
             kind=None) -> EpisodeState:
    rng = SeededRng(seed)
    rooms = int(params["rooms"])
    n_diamonds = int(params["green_diamonds"])

    plan: list[Obstacle] = []
    for _ in range(rooms - 1):
        if hard:
            pick = rng.choice([LAVA_PIT, STEP_WALL, STACK_WALL, BRIDGE_PIT])
            lava_w = rng.randint(1, 2)
        else:
            pick = rng.choice([LAVA_PIT, STEP_WALL])
            lava_w = 1
        plan.append(Obstacle(pick, 0, _band_width(pick, lava_w)))

    length = 1 + rooms * ROOM_LEN + sum(o.width for o in plan) + 2 + 1
    nx, ny, nz = length, 12, WIDTH + 2
    grid = VoxelGrid(nx, ny, nz)
    common.slab(grid, 0, 0, nx, nz, 0, SURFACE, palette.MAT_FLOOR)
    common.perimeter_walls(grid, SURFACE, WALL_TOP, palette.MAT_WALL)
    grid.fill((0, SURFACE, 0), (1, WALL_TOP, nz), solid_code(palette.MAT_WALL))
    grid.fill((nx - 1, SURFACE, 0), (nx, WALL_TOP, nz), solid_code(palette.MAT_WALL))

    objects = []
    room_entry_x = [2.0]
    x = 1 + ROOM_LEN
    for obstacle in plan:
        obstacle.x0 = x
        w = obstacle.width
        if obstacle.kind == LAVA_PIT:
            # depth-1 pit: trigger layer where the top floor layer was, lava-
            # colored bed below; jumpable across, climbable back out
            for zi in range(1, nz - 1):
                for xi in range(x, x + w):
                    grid.set(xi, SURFACE - 1, zi, LAVA)
                    grid.set(xi, SURFACE - 2, zi, solid_code(palette.MAT_LAVA_ROCK))
        elif obstacle.kind == STEP_WALL:
            grid.fill((x, SURFACE, 1), (x + 1, SURFACE + 1, nz - 1),
                      solid_code(palette.MAT_WALL))
        elif obstacle.kind == STACK_WALL:
            grid.fill((x, SURFACE, 1), (x + 1, SURFACE + 2, nz - 1),
                      solid_code(palette.MAT_WALL))
            for k in range(2):
                cell = (x - 2 - k, SURFACE, 2 + 2 * k)
                objects.append(common.movable_box(len(objects), cell))
        else:  # BRIDGE_PIT: depth-2 pit, too deep to jump out unaided
            for zi in range(1, nz - 1):
                for xi in range(x, x + w):
                    grid.set(xi, SURFACE - 1, zi, 0)
                    grid.set(xi, SURFACE - 2, zi, 0)
            objects.append(common.movable_box(len(objects), (x - 2, SURFACE, nz // 2)))
        x += w
        room_entry_x.append(x + 0.7)
        x += ROOM_LEN

    exit_x = x
    for zi in range(1, nz - 1):
        grid.set(exit_x, SURFACE - 1, zi, solid_code(palette.MAT_EXIT))
        grid.set(exit_x, SURFACE, zi, EXIT_PAD)
        grid.set(exit_x + 1, SURFACE - 1, zi, solid_code(palette.MAT_EXIT))
        grid.set(exit_x + 1, SURFACE, zi, EXIT_PAD)

    # diamonds on room floor cells, away from bands and spawns
    room_cells = []
    for r in range(rooms):
        r_start = 1 + r * ROOM_LEN + sum(o.width for o in plan[:r])
        # keep the last columns clear: stack/bridge boxes spawn there
        for xi in range(r_start + 2, r_start + ROOM_LEN - 3):
            for zi in range(2, nz - 2):
                room_cells.append((xi, zi))
    for i, (cx, cz) in enumerate(common.scatter_cells(rng, room_cells, n_diamonds)):
        objects.append(common.diamond(len(objects), ObjectKind.GREEN_DIAMOND,
                                      (cx, SURFACE, cz)))

    spawns = common.spread_spawns(num_agents, 2.0, (nz - 1) / 2.0, WIDTH - 2)
    agents = [common.make_agent(sx, float(SURFACE), sz) for sx, sz in spawns]
    data = ObstaclesData(
        obstacles=plan,
        room_entry_x=room_entry_x,
        exit_x=exit_x,
        spawn_z=[sz for _, sz in spawns],
        reached=[False] * num_agents,
        greens_left=n_diamonds,
    )
    episode_length = int(params["episode_length"])
    return common.build_state(kind, grid, agents, objects, data, episode_length,
                              rng, seed)


def _respawn_point(state: EpisodeState, ai: int) -> np.ndarray:
    data: ObstaclesData = state.scenario_data
    x = state.agents[ai].pose.position[0]
    entry = data.room_entry_x[0]
    for ex in data.room_entry_x:
        if ex <= x + 0.5:
            entry = ex
    return np.array([entry, float(SURFACE), data.spawn_z[ai]])


def score(state: EpisodeState, events, rewards: np.ndarray) -> bool:
    data: ObstaclesData = state.scenario_data
    for ai, obj_id in events.touched:
        obj = state.objects[obj_id]
        if obj.alive and obj.kind == ObjectKind.GREEN_DIAMOND:
            obj.alive = False
            state.refresh_object_flags()
            rewards[ai] += 0.5
            data.greens_left -= 1
    for ai in events.reached_exit:
        if not data.reached[ai]:
            data.reached[ai] = True
            rewards[ai] += 1.0
    for ai, kind, _ in events.entered:
        if kind == LAVA:
            respawn_agent(state, ai, _respawn_point(state, ai))
    for ai in events.fell_into_void:
        respawn_agent(state, ai, _respawn_point(state, ai))
    if all(data.reached):
        rewards += 5.0
        return True
    return False


def true_objective(state: EpisodeState) -> float:
    return 1.0 if all(state.scenario_data.reached) else 0.0
