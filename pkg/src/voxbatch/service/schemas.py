"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class MakeSessionRequest(BaseModel):
    kind: str
    num_envs: int = Field(default=1, ge=1)
    agents_per_env: int = Field(default=1, ge=1)
    seed: int = 0
    num_workers: int = Field(default=1, ge=1)
    overrides: dict[str, float] | None = None


class SessionInfo(BaseModel):
    session_id: str
    kind: str
    num_envs: int
    agents_per_env: int
    batch_size: int
    obs_shape: tuple[int, int, int]        # (72, 128, 3)
    action_heads: tuple[int, ...]          # (3, 3, 3, 3, 2, 2)
    num_actions: int


class MakeSessionResponse(BaseModel):
    session: SessionInfo
    observations_b64: str                  # raw RGB8, env-major agent-minor


class StepRequest(BaseModel):
    # flat codes [0,324) of length N*M, or N*M rows of 6 head values
    actions: list[int] | list[list[int]]


class StepResponse(BaseModel):
    observations_b64: str
    rewards: list[float]
    dones: list[bool]
    true_objectives: list[float]


class BenchmarkRequest(BaseModel):
    scenario: str
    workers: int = Field(default=1, ge=1)
    envs_per_worker: int = Field(default=64, ge=1)
    agents: int = Field(default=1, ge=1)
    seconds: float = 10.0
    seed: int = 0
    overrides: dict[str, float] | None = None


class RolloutRequest(BaseModel):
    scenario: str
    seed: int = 0
    steps: int = Field(default=512, ge=0)
    policy: str = "random"
    agents: int = Field(default=1, ge=1)
    overrides: dict[str, float] | None = None


class ReplayRequest(BaseModel):
    """Run an episode natively server-side and return its full trace; the
    reference side of cross-boundary equivalence checks."""

    kind: str
    seed: int = 0
    steps: int = Field(default=512, ge=1)
    agents_per_env: int = Field(default=1, ge=1)
    num_envs: int = Field(default=1, ge=1)
    overrides: dict[str, float] | None = None
    actions: list[list[int]] | None = None   # flat codes (steps, N*M); None = seeded random


class ReplayResponse(BaseModel):
    action_codes: list[list[int]]
    rewards: list[list[float]]
    dones: list[list[bool]]
    true_objectives: list[list[float]]
    frame_sha256: list[list[str]]            # per step, per batch slot
    initial_frame_sha256: list[str]


class MetaResponse(BaseModel):
    version: str
    scenarios: list[str]
    action_heads: tuple[int, ...]
    num_actions: int
    observation: dict[str, int]
