"""Kinematic character and object simulation: one substep per rendered frame.

Movement is axis-separated swept AABB (x, then z, then y) against merged
static geometry, blocking objects, and other agents. Contact always leaves a
gap of CONTACT_SKIN, so resting states never interpenetrate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ContractViolation
from .grid import (
    AGENT_HALF_X, AGENT_HALF_Z, AGENT_HEIGHT, EXIT_PAD, EYE_HEIGHT,
    AgentState, DynamicObject, ObjectKind, world_to_voxel, is_solid,
)
from .meshing import HASH_BUCKET_SIZE, StaticGeometry
from .state import EpisodeState


@dataclass(frozen=True)
class PhysicsParams:
    move_speed: float = 4.0        # units/s
    strafe_speed: float = 4.0
    turn_rate: float = math.radians(90.0)   # rad/s
    gaze_rate: float = math.radians(45.0)
    gravity: float = -18.0         # units/s^2
    jump_velocity: float = 7.0     # units/s; 7^2/36 ~ 1.36 > 1 voxel
    dt: float = 1.0 / 15.0         # one simulation step per rendered frame
    step_height: float = 0.55
    interact_reach: float = 2.0


DEFAULT_PARAMS = PhysicsParams()

CONTACT_SKIN = 1e-7
GROUND_PROBE = 1e-3
VOID_Y = -4.0
SUPPORT_TOL = 0.05
CARRY_FORWARD = 0.8
CARRY_HEIGHT = 0.9
PLACE_PROBE = 1.5


@dataclass
class StepEvents:
    """What happened during one environment step, in agent-index order."""

    entered: list[tuple[int, int, int]] = field(default_factory=list)      # agent, cell kind, trigger idx
    picked_up: list[tuple[int, int, tuple]] = field(default_factory=list)  # agent, object, from cell
    placed: list[tuple[int, int, tuple, int]] = field(default_factory=list)  # agent, object, cell, height
    pushed: list[tuple[int, int, tuple, tuple]] = field(default_factory=list)
    touched: list[tuple[int, int]] = field(default_factory=list)           # agent, collectible object
    fell_into_void: list[int] = field(default_factory=list)
    reached_exit: list[int] = field(default_factory=list)


def step_environment(state: EpisodeState, actions, geom: StaticGeometry,
                     params: PhysicsParams = DEFAULT_PARAMS) -> StepEvents:
    """Advance every agent one substep, in fixed index order.

    `actions` is one 6-head tuple (or Action) per agent, or an (M, 6) int
    array. Movement, trigger, and touch handling run inside one GIL-free
    kernel; pushes and interact heads are resolved afterwards.
    """
    if len(actions) != len(state.agents):
        raise ContractViolation(
            f"expected {len(state.agents)} actions, got {len(actions)}")
    acts = _as_action_array(actions)
    pack_agents(state)
    geom = state.geom
    bnx, bny, bnz = geom.bucket_dims
    n_events = _kernels.agents_step(
        state.agent_arr, acts,
        params.move_speed, params.strafe_speed, params.turn_rate,
        params.gaze_rate, params.gravity, params.jump_velocity, params.dt,
        params.step_height, CONTACT_SKIN, GROUND_PROBE, VOID_Y,
        math.pi / 4.0, CARRY_FORWARD, CARRY_HEIGHT,
        1 if state.push_mode else 0,
        geom.lo, geom.hi, geom.bucket_start, geom.bucket_items,
        bnx, bny, bnz, HASH_BUCKET_SIZE,
        state.obj_lo, state.obj_hi, state.obj_block, state.obj_collect,
        state.agents_lo, state.agents_hi, state.agent_mask,
        state.trig_lo, state.trig_hi, state.trig_prev,
        state.scratch_events)
    return postprocess_step(state, acts, n_events, params)


def pack_agents(state: EpisodeState) -> None:
    """Mirror AgentState into the packed kernel arrays."""
    arr = state.agent_arr
    for ai, agent in enumerate(state.agents):
        pos = agent.pose.position
        arr[ai, 0] = pos[0]
        arr[ai, 1] = pos[1]
        arr[ai, 2] = pos[2]
        arr[ai, 3] = agent.pose.yaw
        arr[ai, 4] = agent.pose.pitch
        arr[ai, 5] = agent.vertical_velocity
        arr[ai, 6] = 1.0 if agent.grounded else 0.0
        arr[ai, 7] = -1.0 if agent.carrying is None else float(agent.carrying)
        state.agents_lo[ai, 0] = pos[0] - AGENT_HALF_X
        state.agents_lo[ai, 1] = pos[1]
        state.agents_lo[ai, 2] = pos[2] - AGENT_HALF_Z
        state.agents_hi[ai, 0] = pos[0] + AGENT_HALF_X
        state.agents_hi[ai, 1] = pos[1] + AGENT_HEIGHT
        state.agents_hi[ai, 2] = pos[2] + AGENT_HALF_Z


def postprocess_step(state: EpisodeState, acts: np.ndarray, n_events: int,
                     params: PhysicsParams = DEFAULT_PARAMS) -> StepEvents:
    """Unpack kernel results, resolve pushes and interact heads, and build
    the step's event record."""
    events = StepEvents()
    arr = state.agent_arr
    for ai, agent in enumerate(state.agents):
        agent.pose.position[0] = arr[ai, 0]
        agent.pose.position[1] = arr[ai, 1]
        agent.pose.position[2] = arr[ai, 2]
        agent.pose.yaw = arr[ai, 3]
        agent.pose.pitch = arr[ai, 4]
        agent.vertical_velocity = arr[ai, 5]
        agent.grounded = arr[ai, 6] > 0.5

    ev = state.scratch_events
    for k in range(n_events):
        etype = int(ev[k, 0])
        ai = int(ev[k, 1])
        payload = int(ev[k, 2])
        if etype == 0:
            kind = int(state.trig_kind[payload])
            events.entered.append((ai, kind, payload))
            if kind == EXIT_PAD:
                events.reached_exit.append(ai)
        elif etype == 1:
            events.touched.append((ai, state.objects[payload].id))
        elif etype == 2:
            obj_idx, rest = divmod(payload, 8)
            axis = 0 if rest < 2 else 2
            positive = rest % 2 == 1
            _try_push(state, ai, obj_idx, axis, 1.0 if positive else -1.0,
                      events)
        elif etype == 3:
            events.fell_into_void.append(ai)

    geom = state.geom
    for ai in range(len(state.agents)):
        if acts[ai, 5] == 1:
            interact(state, ai, geom, params, events)
    return events


def _as_action_array(actions) -> np.ndarray:
    if isinstance(actions, np.ndarray) and actions.ndim == 2 \
            and actions.shape[1] == 6 and actions.dtype == np.int64:
        return actions
    out = np.empty((len(actions), 6), dtype=np.int64)
    for i, act in enumerate(actions):
        heads = act if isinstance(act, tuple) else act.heads()
        for j in range(6):
            out[i, j] = heads[j]
    return out


def _try_push(state: EpisodeState, ai: int, obj_idx: int, axis: int,
              remaining: float, events: StepEvents) -> None:
    """Sokoban push: slide the binding box exactly one cell if the destination
    cell is free. The agent stays blocked this step."""
    obj = state.objects[obj_idx]
    from_cell = tuple(world_to_voxel(obj.lo + 1e-6))
    step = 1 if remaining > 0 else -1
    shifted = list(from_cell)
    shifted[0 if axis == 0 else 2] += step
    to_cell = tuple(shifted)
    if not _cell_free_for_object(state, to_cell, obj_idx):
        return
    delta = np.zeros(3)
    delta[axis] = float(step)
    obj.lo += delta
    obj.hi += delta
    events.pushed.append((ai, obj.id, tuple(from_cell), to_cell))


def _cell_free_for_object(state: EpisodeState, cell: tuple, skip_obj: int) -> bool:
    ix, iy, iz = cell
    if is_solid(state.grid.get(ix, iy, iz)):
        return False
    clo = np.array([ix, iy, iz], dtype=np.float64) + 1e-6
    chi = np.array([ix + 1, iy + 1, iz + 1], dtype=np.float64) - 1e-6
    for oi, other in enumerate(state.objects):
        if oi == skip_obj or not other.blocks():
            continue
        if np.all(clo < other.hi) and np.all(other.lo < chi):
            return False
    hit = _kernels.boxes_overlap_any(clo, chi, state.agents_lo, state.agents_hi,
                                     state.agent_mask)
    return hit < 0


def _update_carried(state: EpisodeState, ai: int) -> None:
    agent = state.agents[ai]
    if agent.carrying is None:
        return
    obj = state.object_by_id(agent.carrying)
    fx, fz = agent.pose.forward_xz()
    half = (obj.hi - obj.lo) * 0.5
    center = agent.pose.position + np.array([fx * CARRY_FORWARD,
                                             CARRY_HEIGHT + half[1],
                                             fz * CARRY_FORWARD])
    obj.lo[:] = center - half
    obj.hi[:] = center + half


# --------------------------------------------------------------------------
# Interaction: pick up / place
# --------------------------------------------------------------------------

_CARRYABLE = {ObjectKind.MOVABLE_BOX, ObjectKind.REARRANGE_ITEM}


def interact(state: EpisodeState, ai: int, geom: StaticGeometry,
             params: PhysicsParams, events: StepEvents) -> None:
    """Pick up the aimed object, or place the carried one. All failures are
    silent no-ops, matching a live-control interface."""
    agent = state.agents[ai]
    if agent.carrying is None:
        _try_pickup(state, ai, geom, params, events)
    else:
        _try_place(state, ai, geom, params, events)


def _eye_point(agent: AgentState) -> np.ndarray:
    return agent.pose.position + np.array([0.0, EYE_HEIGHT, 0.0])


def _try_pickup(state: EpisodeState, ai: int, geom: StaticGeometry,
                params: PhysicsParams, events: StepEvents) -> None:
    if state.push_mode:
        return
    agent = state.agents[ai]
    origin = _eye_point(agent)
    direction = agent.pose.gaze_dir()
    active = np.zeros(len(state.objects), dtype=np.uint8)
    for oi, obj in enumerate(state.objects):
        if (obj.alive and obj.free and not obj.display_only
                and obj.kind in _CARRYABLE):
            active[oi] = 1
    if not active.any():
        return
    t_obj, oi = _kernels.ray_boxes(origin, direction, params.interact_reach,
                                   state.obj_lo, state.obj_hi, active)
    if oi < 0:
        return
    if len(geom) > 0:
        all_static = np.ones(len(geom), dtype=np.uint8)
        t_static, si = _kernels.ray_boxes(origin, direction, params.interact_reach,
                                          geom.lo, geom.hi, all_static)
        if si >= 0 and t_static < t_obj:
            return
    obj = state.objects[oi]
    if _has_load_on_top(state, oi):
        return
    obj.carried_by = ai
    agent.carrying = obj.id
    state.obj_block[oi] = 0
    from_cell = tuple(world_to_voxel(obj.lo + 1e-6))
    _update_carried(state, ai)
    events.picked_up.append((ai, obj.id, from_cell))


def _has_load_on_top(state: EpisodeState, oi: int) -> bool:
    """Support test: anything resting on the object's top face blocks pickup."""
    top = state.obj_hi[oi, 1]
    lo = state.obj_lo[oi]
    hi = state.obj_hi[oi]
    for oj, other in enumerate(state.objects):
        if oj == oi or not other.alive or not other.free or other.display_only:
            continue
        if abs(state.obj_lo[oj, 1] - top) <= SUPPORT_TOL:
            if (lo[0] < state.obj_hi[oj, 0] and state.obj_lo[oj, 0] < hi[0]
                    and lo[2] < state.obj_hi[oj, 2] and state.obj_lo[oj, 2] < hi[2]):
                return True
    for aj in range(state.num_agents):
        if abs(state.agents_lo[aj, 1] - top) <= SUPPORT_TOL:
            if (lo[0] < state.agents_hi[aj, 0] and state.agents_lo[aj, 0] < hi[0]
                    and lo[2] < state.agents_hi[aj, 2] and state.agents_lo[aj, 2] < hi[2]):
                return True
    return False


def _try_place(state: EpisodeState, ai: int, geom: StaticGeometry,
               params: PhysicsParams, events: StepEvents) -> None:
    agent = state.agents[ai]
    obj = state.object_by_id(agent.carrying)
    probe = _eye_point(agent) + agent.pose.gaze_dir() * PLACE_PROBE
    cell = world_to_voxel(probe)
    ix, iy, iz = cell
    if is_solid(state.grid.get(ix, iy, iz)):
        return
    clo = np.array([ix, iy, iz], dtype=np.float64)
    chi = clo + 1.0
    test_lo = clo + 1e-6
    test_hi = chi - 1e-6
    for oi, other in enumerate(state.objects):
        if other.id == obj.id or not other.blocks():
            continue
        if np.all(test_lo < other.hi) and np.all(other.lo < test_hi):
            return
    if _kernels.boxes_overlap_any(test_lo, test_hi, state.agents_lo,
                                  state.agents_hi, state.agent_mask) >= 0:
        return
    if not _cell_supported(state, cell):
        return
    size = obj.hi - obj.lo
    pad = (1.0 - size) * 0.5
    obj.lo[:] = clo + np.array([pad[0], 0.0, pad[2]])
    obj.hi[:] = obj.lo + size
    obj.carried_by = None
    agent.carrying = None
    state.obj_block[obj.id] = 1 if obj.blocks() else 0
    height = _stack_height(state, cell)
    events.placed.append((ai, obj.id, tuple(cell), height))


def _cell_supported(state: EpisodeState, cell) -> bool:
    ix, iy, iz = cell
    if is_solid(state.grid.get(ix, iy - 1, iz)):
        return True
    floor_y = float(iy)
    for oi, other in enumerate(state.objects):
        if not other.blocks():
            continue
        if abs(state.obj_hi[oi, 1] - floor_y) <= SUPPORT_TOL:
            if (ix < state.obj_hi[oi, 0] and state.obj_lo[oi, 0] < ix + 1
                    and iz < state.obj_hi[oi, 2] and state.obj_lo[oi, 2] < iz + 1):
                return True
    return False


def _stack_height(state: EpisodeState, cell) -> int:
    """1 + number of settled blocking objects in the column directly beneath."""
    ix, iy, iz = cell
    height = 1
    y = iy - 1
    while y >= 0:
        if is_solid(state.grid.get(ix, y, iz)):
            break
        found = False
        for oi, other in enumerate(state.objects):
            if not other.blocks():
                continue
            c = state.obj_lo[oi] + 1e-6
            if int(c[0]) == ix and int(c[1]) == y and int(c[2]) == iz:
                found = True
                break
        if not found:
            break
        height += 1
        y -= 1
    return height


# --------------------------------------------------------------------------
# Raycast (public contract operation)
# --------------------------------------------------------------------------

def raycast(origin, direction, max_dist: float, geom: StaticGeometry,
            objects: list[DynamicObject] | None = None):
    """Nearest slab-method hit among static boxes and object AABBs.

    Returns (kind, id, distance) with kind 'static' or 'object', or None.
    """
    direction = np.asarray(direction, dtype=np.float64)
    norm = float(np.linalg.norm(direction))
    if abs(norm - 1.0) > 1e-6:
        raise ContractViolation(f"raycast direction must be unit length, |d|={norm}")
    origin = np.asarray(origin, dtype=np.float64)
    best = None
    if len(geom) > 0:
        ones = np.ones(len(geom), dtype=np.uint8)
        t, i = _kernels.ray_boxes(origin, direction, max_dist, geom.lo, geom.hi, ones)
        if i >= 0:
            best = ("static", int(i), float(t))
    if objects:
        lo = np.array([o.lo for o in objects], dtype=np.float64)
        hi = np.array([o.hi for o in objects], dtype=np.float64)
        active = np.array([1 if o.alive else 0 for o in objects], dtype=np.uint8)
        limit = best[2] if best else max_dist
        t, i = _kernels.ray_boxes(origin, direction, limit, lo, hi, active)
        if i >= 0 and (best is None or t < best[2]):
            best = ("object", objects[i].id, float(t))
    return best


def respawn_agent(state: EpisodeState, ai: int, position: np.ndarray) -> None:
    """Teleport an agent to a spawn point (void/lava recovery). A carried
    object travels along."""
    agent = state.agents[ai]
    agent.pose.position[:] = position
    agent.vertical_velocity = 0.0
    agent.grounded = False
    state.trig_prev[ai, :] = 0
    state.refresh_agent_row(ai)
    _update_carried(state, ai)
