"""Voxel lattice, axis-aligned boxes, agent/object state, and the action space.

One voxel cell spans 1.0 world unit per axis; Y is the vertical axis. Cell
(i, j, k) covers the half-open world volume [i,i+1) x [j,j+1) x [k,k+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator, NamedTuple

import numpy as np

# Cell codes stored in the dense grid. Values >= SOLID_BASE are solid cells
# whose material id is (code - SOLID_BASE); everything below is a marker or
# trigger kind that never meshes into collision geometry.
EMPTY = 0
LAVA = 1
EXIT_PAD = 2
BOX_TARGET = 3
BUILD_ZONE = 4
VOID_BELOW = 5
SOLID_BASE = 8


class CellKind(IntEnum):
    EMPTY = EMPTY
    LAVA = LAVA
    EXIT_PAD = EXIT_PAD
    BOX_TARGET = BOX_TARGET
    BUILD_ZONE = BUILD_ZONE
    VOID_BELOW = VOID_BELOW
    SOLID = SOLID_BASE


def solid_code(material: int) -> int:
    return SOLID_BASE + material


def is_solid(code: int) -> bool:
    return code >= SOLID_BASE


def material_of(code: int) -> int:
    if code < SOLID_BASE:
        raise ValueError(f"cell code {code} is not solid")
    return code - SOLID_BASE


def kind_of(code: int) -> CellKind:
    return CellKind.SOLID if code >= SOLID_BASE else CellKind(code)


class VoxelCoord(NamedTuple):
    ix: int
    iy: int
    iz: int


def world_to_voxel(p) -> VoxelCoord:
    """Floor each component; voxel (i,j,k) spans [i,i+1)x[j,j+1)x[k,k+1)."""
    return VoxelCoord(math.floor(p[0]), math.floor(p[1]), math.floor(p[2]))


def voxel_to_world_center(c: VoxelCoord) -> np.ndarray:
    return np.array([c[0] + 0.5, c[1] + 0.5, c[2] + 0.5])


class VoxelGrid:
    """Dense lattice of cell codes, immutable once scenario generation ends.

    Storage is x-major, then z, then y: ``cells[ix, iz, iy]``.
    """

    __slots__ = ("nx", "ny", "nz", "cells")

    def __init__(self, nx: int, ny: int, nz: int):
        if nx <= 0 or ny <= 0 or nz <= 0:
            raise ValueError(f"grid dims must be positive, got {(nx, ny, nz)}")
        if max(nx, ny, nz) > 256:
            raise ValueError("grids larger than 256 per axis are unsupported")
        self.nx, self.ny, self.nz = nx, ny, nz
        self.cells = np.zeros((nx, nz, ny), dtype=np.int16)

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    def in_bounds(self, ix: int, iy: int, iz: int) -> bool:
        return 0 <= ix < self.nx and 0 <= iy < self.ny and 0 <= iz < self.nz

    def get(self, ix: int, iy: int, iz: int) -> int:
        """Cell code; out-of-grid coordinates read as EMPTY."""
        if not self.in_bounds(ix, iy, iz):
            return EMPTY
        return int(self.cells[ix, iz, iy])

    def set(self, ix: int, iy: int, iz: int, code: int) -> None:
        self.cells[ix, iz, iy] = code

    def fill(self, lo: tuple[int, int, int], hi: tuple[int, int, int], code: int) -> None:
        """Set every cell with lo <= (ix,iy,iz) < hi (clamped to bounds)."""
        x0, y0, z0 = (max(0, v) for v in lo)
        x1 = min(self.nx, hi[0])
        y1 = min(self.ny, hi[1])
        z1 = min(self.nz, hi[2])
        self.cells[x0:x1, z0:z1, y0:y1] = code

    def solid_count(self) -> int:
        return int(np.count_nonzero(self.cells >= SOLID_BASE))

    def copy(self) -> "VoxelGrid":
        g = VoxelGrid(self.nx, self.ny, self.nz)
        g.cells[:] = self.cells
        return g


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box; min must be strictly below max on every axis."""

    min: tuple[float, float, float]
    max: tuple[float, float, float]

    def __post_init__(self):
        for k in range(3):
            if not self.min[k] < self.max[k]:
                raise ValueError(f"degenerate box on axis {k}: {self.min} .. {self.max}")

    @staticmethod
    def from_arrays(lo, hi) -> "Aabb":
        return Aabb((float(lo[0]), float(lo[1]), float(lo[2])),
                    (float(hi[0]), float(hi[1]), float(hi[2])))


def aabb_overlap(a: Aabb, b: Aabb) -> bool:
    """True iff the boxes overlap with positive measure on all three axes;
    touching faces do not count."""
    for k in range(3):
        if a.min[k] >= b.max[k] or b.min[k] >= a.max[k]:
            return False
    return True


PITCH_LIMIT = math.pi / 4.0
TWO_PI = 2.0 * math.pi


@dataclass
class Pose:
    position: np.ndarray  # world units, shape (3,)
    yaw: float = 0.0      # radians, wrapped to [0, 2*pi)
    pitch: float = 0.0    # radians, clamped to [-pi/4, +pi/4]

    def wrap(self) -> None:
        self.yaw %= TWO_PI
        self.pitch = min(PITCH_LIMIT, max(-PITCH_LIMIT, self.pitch))

    def forward_xz(self) -> tuple[float, float]:
        return (math.cos(self.yaw), math.sin(self.yaw))

    def left_xz(self) -> tuple[float, float]:
        return (math.sin(self.yaw), -math.cos(self.yaw))

    def gaze_dir(self) -> np.ndarray:
        cp = math.cos(self.pitch)
        return np.array([cp * math.cos(self.yaw), math.sin(self.pitch), cp * math.sin(self.yaw)])


# Agent collision proxy: fits 1-wide corridors, cannot pass 1-high gaps.
AGENT_HALF_X = 0.3
AGENT_HEIGHT = 1.8
AGENT_HALF_Z = 0.3
EYE_HEIGHT = 1.6


@dataclass
class AgentState:
    pose: Pose
    vertical_velocity: float = 0.0
    grounded: bool = False
    carrying: int | None = None  # DynamicObject id

    def box_lo(self) -> np.ndarray:
        p = self.pose.position
        return np.array([p[0] - AGENT_HALF_X, p[1], p[2] - AGENT_HALF_Z])

    def box_hi(self) -> np.ndarray:
        p = self.pose.position
        return np.array([p[0] + AGENT_HALF_X, p[1] + AGENT_HEIGHT, p[2] + AGENT_HALF_Z])


class ObjectKind(IntEnum):
    MOVABLE_BOX = 0
    GREEN_DIAMOND = 1
    RED_DIAMOND = 2
    PINK_DIAMOND = 3
    COLLECTIBLE_SHAPE = 4
    REARRANGE_ITEM = 5


# Which kinds block movement / are contact-collected. Carryability is a
# scenario property (Sokoban pushes its boxes instead).
BLOCKING_KINDS = {ObjectKind.MOVABLE_BOX, ObjectKind.REARRANGE_ITEM}
COLLECTIBLE_KINDS = {ObjectKind.GREEN_DIAMOND, ObjectKind.RED_DIAMOND,
                     ObjectKind.PINK_DIAMOND, ObjectKind.COLLECTIBLE_SHAPE}


@dataclass(eq=False)
class DynamicObject:
    id: int
    kind: ObjectKind
    lo: np.ndarray  # world-space AABB, mutated in place as the object moves
    hi: np.ndarray
    carried_by: int | None = None
    shape_id: int = 0
    color_id: int = 0
    item_id: int = 0
    display_only: bool = False  # rendered but never collected/picked (exemplar pedestal)
    alive: bool = True          # collected objects are dead: invisible, inert

    @property
    def free(self) -> bool:
        return self.carried_by is None

    def blocks(self) -> bool:
        return self.alive and self.free and self.kind in BLOCKING_KINDS

    def center(self) -> np.ndarray:
        return (self.lo + self.hi) * 0.5


# --- Action space: six independent categorical heads -----------------------

class Move(IntEnum):
    NOOP = 0
    FORWARD = 1
    BACKWARD = 2


class Strafe(IntEnum):
    NOOP = 0
    LEFT = 1
    RIGHT = 2


class Turn(IntEnum):
    NOOP = 0
    LEFT = 1
    RIGHT = 2


class Gaze(IntEnum):
    NOOP = 0
    UP = 1
    DOWN = 2


class Jump(IntEnum):
    NOOP = 0
    JUMP = 1


class Interact(IntEnum):
    NOOP = 0
    INTERACT = 1


ACTION_ARITIES = (3, 3, 3, 3, 2, 2)
NUM_ACTIONS = 324  # product of the head arities


@dataclass(frozen=True)
class Action:
    move: Move = Move.NOOP
    strafe: Strafe = Strafe.NOOP
    turn: Turn = Turn.NOOP
    gaze: Gaze = Gaze.NOOP
    jump: Jump = Jump.NOOP
    interact: Interact = Interact.NOOP

    def heads(self) -> tuple[int, int, int, int, int, int]:
        return (self.move, self.strafe, self.turn, self.gaze, self.jump, self.interact)


def flatten_action(a: Action) -> int:
    """Mixed-radix encoding, radices (3,3,3,3,2,2), move most significant."""
    m, s, t, g, j, i = a.heads()
    return ((((m * 3 + s) * 3 + t) * 3 + g) * 2 + j) * 2 + i


def unflatten_action(code: int) -> Action:
    if not 0 <= code < NUM_ACTIONS:
        raise ValueError(f"action code {code} outside [0, {NUM_ACTIONS})")
    code, i = divmod(code, 2)
    code, j = divmod(code, 2)
    code, g = divmod(code, 3)
    code, t = divmod(code, 3)
    m, s = divmod(code, 3)
    return Action(Move(m), Strafe(s), Turn(t), Gaze(g), Jump(j), Interact(i))


def unflatten_heads(code: int) -> tuple[int, int, int, int, int, int]:
    """Flat code -> raw head tuple without enum construction (hot path)."""
    code, i = divmod(code, 2)
    code, j = divmod(code, 2)
    code, g = divmod(code, 3)
    code, t = divmod(code, 3)
    m, s = divmod(code, 3)
    return (m, s, t, g, j, i)


def iter_all_actions() -> Iterator[Action]:
    for code in range(NUM_ACTIONS):
        yield unflatten_action(code)
