"""Sokoban scenario: reverse-play generation guarantees solvability.

Boxes start on their targets (the solved pose); a virtual player then performs
30-80 random reverse pulls, and the resulting layout is the puzzle start. The
agent pushes boxes one cell at a time by walking into them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import palette
from ..grid import BOX_TARGET, VoxelGrid, solid_code
from ..rng import SeededRng
from ..state import EpisodeState
from . import common

ROOM = 8                   # interior cells per side
SURFACE = 2
DEFAULTS = {"episode_length": 512, "boxes": 4, "min_pulls": 30, "max_pulls": 80}

_DIRS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass
class SokobanData:
    targets: frozenset          # (x, z) interior cells
    solved: bool = False


def generate(seed: int, num_agents: int, params: dict, kind=None) -> EpisodeState:
    rng = SeededRng(seed)
    k_boxes = int(params["boxes"])
    nx = nz = ROOM + 2
    grid = VoxelGrid(nx, 8, nz)
    common.slab(grid, 0, 0, nx, nz, 0, SURFACE, palette.MAT_FLOOR)
    common.perimeter_walls(grid, SURFACE, SURFACE + 3, palette.MAT_WALL)

    interior = [(x, z) for x in range(1, nx - 1) for z in range(1, nz - 1)]
    targets, boxes, player = _reverse_play(rng, interior, k_boxes,
                                           int(params["min_pulls"]),
                                           int(params["max_pulls"]))

    for tx, tz in sorted(targets):
        grid.set(tx, SURFACE, tz, BOX_TARGET)
        grid.set(tx, SURFACE - 1, tz, solid_code(palette.MAT_TARGET))

    objects = [common.movable_box(i, (bx, SURFACE, bz))
               for i, (bx, bz) in enumerate(sorted(boxes))]
    agents = [common.make_agent(player[0] + 0.5, float(SURFACE), player[1] + 0.5)]
    if num_agents > 1:
        # extra agents share the room; spread over free cells
        free = [c for c in interior if c not in boxes and c != player]
        for i, cell in enumerate(common.scatter_cells(rng, sorted(free), num_agents - 1)):
            agents.append(common.make_agent(cell[0] + 0.5, float(SURFACE),
                                            cell[1] + 0.5))
    data = SokobanData(targets=frozenset(targets))
    return common.build_state(kind, grid, agents, objects, data,
                              int(params["episode_length"]), rng, seed,
                              push_mode=True)


def _reverse_play(rng: SeededRng, interior, k_boxes, min_pulls, max_pulls):
    """Start solved, pull boxes backwards; returns (targets, boxes, player)."""
    for attempt in range(64):
        targets = set(common.scatter_cells(rng, sorted(interior), k_boxes))
        boxes = set(targets)
        free = [c for c in interior if c not in boxes]
        player = rng.choice(sorted(free))
        n_pulls = rng.randint(min_pulls, max_pulls)
        for _ in range(n_pulls):
            pulls = []
            px, pz = player
            for dx, dz in _DIRS:
                bx, bz = px - dx, pz - dz          # box behind the player
                dest = (px + dx, pz + dz)          # player steps back
                if (bx, bz) in boxes and dest in interior \
                        and dest not in boxes:
                    pulls.append(((bx, bz), dest, (dx, dz)))
            walks = []
            for dx, dz in _DIRS:
                dest = (px + dx, pz + dz)
                if dest in interior and dest not in boxes:
                    walks.append(dest)
            if pulls and (not walks or rng.random() < 0.7):
                (bx, bz), dest, (dx, dz) = rng.choice(pulls)
                boxes.discard((bx, bz))
                boxes.add((px, pz))
                player = dest
            elif walks:
                player = rng.choice(walks)
            else:
                break
        if boxes != targets and player not in boxes:
            interior_set = set(interior)
            assert all(b in interior_set for b in boxes)
            return targets, boxes, player
    raise RuntimeError("reverse-play generation failed to leave the solved pose")


def score(state: EpisodeState, events, rewards: np.ndarray) -> bool:
    data: SokobanData = state.scenario_data
    for ai, _obj, from_cell, to_cell in events.pushed:
        src = (from_cell[0], from_cell[2])
        dst = (to_cell[0], to_cell[2])
        if dst in data.targets and src not in data.targets:
            rewards[ai] += 1.0
        elif src in data.targets and dst not in data.targets:
            rewards[ai] -= 1.0
    if not data.solved and _all_on_targets(state):
        data.solved = True
        rewards += 10.0
        return True
    return False


def _all_on_targets(state: EpisodeState) -> bool:
    data: SokobanData = state.scenario_data
    cells = set()
    for oi in range(len(state.objects)):
        lo = state.obj_lo[oi]
        cells.add((int(lo[0] + 1e-6), int(lo[2] + 1e-6)))
    return cells == set(data.targets)


def true_objective(state: EpisodeState) -> float:
    return 1.0 if state.scenario_data.solved else 0.0
