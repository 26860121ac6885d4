"""voxbatch: CPU-batched voxel-world simulator for embodied agents.

The public surface is the vectorized pool (`make`, `VecEnv`), the scenario
generators, and the benchmark harness; an HTTP service layer in
`voxbatch.service` exposes the same operations to remote clients.
"""

from .bench import BenchReport, RolloutSummary, run_benchmark, run_rollout
from .errors import ContractViolation
from .grid import (
    Aabb, Action, AgentState, DynamicObject, ObjectKind, Pose, VoxelGrid,
    NUM_ACTIONS, ACTION_ARITIES, aabb_overlap, flatten_action, unflatten_action,
    world_to_voxel,
)
from .meshing import StaticGeometry, collider_query, export_box_list, greedy_merge
from .physics import PhysicsParams, StepEvents, interact, raycast, step_environment
from .render import Camera, OBS_BYTES, OBS_HEIGHT, OBS_WIDTH, overlay_hud, render_view
from .rng import SeededRng
from .scenarios import ScenarioKind, StepOutcome, generate, score_step, timeout_fraction
from .state import EpisodeState
from .vecenv import StepBatch, VecEnv, VecEnvConfig, make, read_replay, write_replay

__version__ = "0.1.0"

__all__ = [
    "Aabb", "Action", "AgentState", "BenchReport", "Camera", "ContractViolation",
    "DynamicObject", "EpisodeState", "ObjectKind", "PhysicsParams", "Pose",
    "RolloutSummary", "ScenarioKind", "SeededRng", "StaticGeometry",
    "StepBatch", "StepEvents", "StepOutcome", "VecEnv", "VecEnvConfig",
    "VoxelGrid", "NUM_ACTIONS", "ACTION_ARITIES", "OBS_BYTES", "OBS_HEIGHT",
    "OBS_WIDTH", "aabb_overlap", "collider_query", "export_box_list",
    "flatten_action", "generate", "greedy_merge", "interact", "make",
    "overlay_hud", "raycast", "read_replay", "render_view", "run_benchmark",
    "run_rollout", "score_step", "step_environment", "timeout_fraction",
    "unflatten_action", "world_to_voxel", "write_replay",
]
