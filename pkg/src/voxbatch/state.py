"""Per-environment episode state: agents, dynamic objects, and the packed
numpy mirrors the physics kernels operate on.

Object AABBs are views into the packed (K,3) arrays, so mutating an object's
``lo``/``hi`` in place keeps the kernel arrays current. Code must never rebind
those attributes to fresh arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import palette
from .grid import COLLECTIBLE_KINDS, AgentState, DynamicObject, VoxelGrid
from .meshing import StaticGeometry
from .rng import SeededRng


@dataclass
class EpisodeState:
    kind: Any                      # ScenarioKind; Any avoids a circular import
    grid: VoxelGrid
    geom: StaticGeometry
    agents: list[AgentState]
    objects: list[DynamicObject]
    scenario_data: Any
    episode_length: int
    rng: SeededRng
    seed: int
    step_count: int = 0
    finished: bool = False         # set once the episode reports done
    push_mode: bool = False        # Sokoban: boxes are pushed, never carried
    spawn_points: list[np.ndarray] = field(default_factory=list)

    # packed mirrors for the kernels
    obj_lo: np.ndarray = None
    obj_hi: np.ndarray = None
    obj_block: np.ndarray = None   # uint8: blocks agent movement this step
    obj_collect: np.ndarray = None  # uint8: live contact-collectible
    agents_lo: np.ndarray = None
    agents_hi: np.ndarray = None
    agent_mask: np.ndarray = None  # scratch for "all agents but one"
    trig_lo: np.ndarray = None
    trig_hi: np.ndarray = None
    trig_kind: np.ndarray = None
    trig_prev: np.ndarray = None   # (M, T) uint8: inside-volume mask last step
    agent_arr: np.ndarray = None   # (M, 8) packed pose/velocity for the kernel
    scratch_events: np.ndarray = None

    # persistent render rows, built lazily by the renderer
    render_lo: np.ndarray = None
    render_hi: np.ndarray = None
    render_rgb: np.ndarray = None
    render_obj_row: int = 0
    render_agent_row: int = 0

    # render-only decoration boxes (e.g. rearrangement target frames)
    decor_lo: np.ndarray = None
    decor_hi: np.ndarray = None
    decor_rgb: np.ndarray = None

    obj_rgb: np.ndarray = None     # per-object base color for the renderer

    def __post_init__(self):
        k = len(self.objects)
        obj_lo = np.zeros((k, 3), dtype=np.float64)
        obj_hi = np.zeros((k, 3), dtype=np.float64)
        obj_rgb = np.zeros((k, 3), dtype=np.float64)
        for i, obj in enumerate(self.objects):
            obj_lo[i] = obj.lo
            obj_hi[i] = obj.hi
            obj.lo = obj_lo[i]     # rebind to views; in-place writes only
            obj.hi = obj_hi[i]
            obj_rgb[i] = palette.object_color(obj)
        self.obj_lo = obj_lo
        self.obj_hi = obj_hi
        self.obj_rgb = obj_rgb
        self.obj_block = np.zeros(k, dtype=np.uint8)
        self.obj_collect = np.zeros(k, dtype=np.uint8)
        self.refresh_object_flags()

        m = len(self.agents)
        self.agents_lo = np.zeros((m, 3), dtype=np.float64)
        self.agents_hi = np.zeros((m, 3), dtype=np.float64)
        self.agent_mask = np.ones(m, dtype=np.uint8)
        for i in range(m):
            self.refresh_agent_row(i)

        trigs = self.geom.triggers
        self.trig_lo = np.array([t.lo for t in trigs], dtype=np.float64).reshape(len(trigs), 3)
        self.trig_hi = np.array([t.hi for t in trigs], dtype=np.float64).reshape(len(trigs), 3)
        self.trig_kind = np.array([t.kind for t in trigs], dtype=np.int32)
        self.trig_prev = np.zeros((m, len(trigs)), dtype=np.uint8)
        self.agent_arr = np.zeros((m, 8), dtype=np.float64)
        self.scratch_events = np.empty((m * (len(trigs) + k + 4) + 8, 3),
                                       dtype=np.int32)

        if self.decor_lo is None:
            self.decor_lo = np.zeros((0, 3), dtype=np.float64)
            self.decor_hi = np.zeros((0, 3), dtype=np.float64)
            self.decor_rgb = np.zeros((0, 3), dtype=np.float64)

        if not self.spawn_points:
            self.spawn_points = [a.pose.position.copy() for a in self.agents]

    @property
    def num_agents(self) -> int:
        return len(self.agents)

    def attach_storage(self, obj_lo, obj_hi, obj_block, obj_collect,
                       agents_lo, agents_hi, agent_arr, trig_prev,
                       events) -> None:
        """Move this episode's mutable arrays into externally owned slots
        (the vec-env worker slabs), so a whole worker's environments can be
        stepped by one kernel call. Current values are copied across and all
        views (including per-object boxes) are rebound."""
        k = len(self.objects)
        m = len(self.agents)
        t = self.trig_lo.shape[0]
        obj_lo[:k] = self.obj_lo
        obj_hi[:k] = self.obj_hi
        obj_block[:k] = self.obj_block
        obj_block[k:] = 0
        obj_collect[:k] = self.obj_collect
        obj_collect[k:] = 0
        self.obj_lo = obj_lo[:k]
        self.obj_hi = obj_hi[:k]
        self.obj_block = obj_block[:k]
        self.obj_collect = obj_collect[:k]
        for i, obj in enumerate(self.objects):
            obj.lo = self.obj_lo[i]
            obj.hi = self.obj_hi[i]
        agents_lo[:m] = self.agents_lo
        agents_hi[:m] = self.agents_hi
        agent_arr[:m] = self.agent_arr
        self.agents_lo = agents_lo[:m]
        self.agents_hi = agents_hi[:m]
        self.agent_arr = agent_arr[:m]
        trig_prev[:m, :t] = self.trig_prev
        self.trig_prev = trig_prev[:m, :t]
        self.scratch_events = events

    def refresh_agent_row(self, i: int) -> None:
        self.agents_lo[i] = self.agents[i].box_lo()
        self.agents_hi[i] = self.agents[i].box_hi()

    def refresh_object_flags(self) -> None:
        for i, obj in enumerate(self.objects):
            self.obj_block[i] = 1 if obj.blocks() else 0
            self.obj_collect[i] = 1 if (obj.alive and obj.free and not obj.display_only
                                        and obj.kind in COLLECTIBLE_KINDS) else 0

    def object_by_id(self, object_id: int) -> DynamicObject:
        return self.objects[object_id]  # ids are list indices by construction
