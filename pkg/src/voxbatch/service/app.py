"""FastAPI service wrapping the simulator pool.

Observations cross the wire as base64-encoded raw RGB8 buffers (env-major,
agent-minor), one copy per step. All action validation happens before any
environment advances, so a rejected request never produces a partial step.
"""

from __future__ import annotations

import base64
import hashlib

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__, bench, scenarios, vecenv
from ..errors import ContractViolation
from ..grid import ACTION_ARITIES, NUM_ACTIONS
from ..render import OBS_HEIGHT, OBS_WIDTH
from . import schemas
from .sessions import SessionBusy, SessionNotFound, SessionRegistry


def _parse_kind(name: str) -> scenarios.ScenarioKind:
    try:
        return scenarios.parse_kind(name)
    except ContractViolation as exc:
        raise HTTPException(status_code=422, detail=str(exc))


def _check_overrides(kind: scenarios.ScenarioKind, overrides: dict | None):
    if not overrides:
        return None
    valid = scenarios.default_params(kind)
    clean = {}
    for key, value in overrides.items():
        if key not in valid:
            raise HTTPException(
                status_code=422,
                detail=f"unknown override key {key!r}; valid: {sorted(valid)}")
        clean[key] = int(value) if float(value).is_integer() else float(value)
    return clean


def _validate_actions(raw, batch_size: int) -> np.ndarray:
    if not isinstance(raw, list) or not raw:
        raise HTTPException(status_code=422, detail="actions must be a non-empty list")
    if isinstance(raw[0], list):
        if len(raw) != batch_size:
            raise HTTPException(
                status_code=422,
                detail=f"actions: expected {batch_size} rows, got {len(raw)}")
        arr = np.asarray(raw, dtype=np.int64)
        if arr.shape != (batch_size, 6):
            raise HTTPException(
                status_code=422,
                detail=f"actions: rows must have 6 heads, got shape {arr.shape}")
        for col, arity in enumerate(ACTION_ARITIES):
            if arr[:, col].min() < 0 or arr[:, col].max() >= arity:
                raise HTTPException(
                    status_code=422,
                    detail=f"actions: head {col} outside [0, {arity})")
        return arr
    if len(raw) != batch_size:
        raise HTTPException(
            status_code=422,
            detail=f"actions: expected {batch_size} values, got {len(raw)}")
    arr = np.asarray(raw, dtype=np.int64)
    if arr.min() < 0 or arr.max() >= NUM_ACTIONS:
        raise HTTPException(
            status_code=422,
            detail=f"actions: flat codes must lie in [0, {NUM_ACTIONS})")
    return arr


def _b64(arr: np.ndarray) -> str:
    return base64.b64encode(arr.tobytes()).decode("ascii")


def _frame_digests(obs: np.ndarray) -> list[str]:
    return [hashlib.sha256(obs[i].tobytes()).hexdigest()
            for i in range(obs.shape[0])]


def create_app() -> FastAPI:
    app = FastAPI(title="voxbatch", version=__version__)
    registry = SessionRegistry()

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/meta", response_model=schemas.MetaResponse)
    def meta():
        return schemas.MetaResponse(
            version=__version__,
            scenarios=[k.value for k in scenarios.ScenarioKind],
            action_heads=ACTION_ARITIES,
            num_actions=NUM_ACTIONS,
            observation={"width": OBS_WIDTH, "height": OBS_HEIGHT,
                         "channels": 3, "bytes_per_frame": OBS_WIDTH * OBS_HEIGHT * 3},
        )

    @app.post("/sessions", response_model=schemas.MakeSessionResponse)
    def make_session(req: schemas.MakeSessionRequest):
        kind = _parse_kind(req.kind)
        overrides = _check_overrides(kind, req.overrides)
        config = vecenv.VecEnvConfig(
            kind=kind, num_envs=req.num_envs, agents_per_env=req.agents_per_env,
            base_seed=req.seed, num_workers=req.num_workers, overrides=overrides)
        try:
            env, obs = vecenv.make(config)
        except ContractViolation as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        session = registry.create(env)
        return schemas.MakeSessionResponse(
            session=_session_info(session.session_id, env),
            observations_b64=_b64(obs))

    @app.get("/sessions/{session_id}", response_model=schemas.SessionInfo)
    def session_info(session_id: str):
        session = _get(session_id)
        return _session_info(session_id, session.env)

    @app.post("/sessions/{session_id}/step", response_model=schemas.StepResponse)
    def step_session(session_id: str, req: schemas.StepRequest):
        session = _get(session_id)
        actions = _validate_actions(req.actions, session.env.batch_size)
        if not session.lock.acquire(blocking=False):
            raise HTTPException(
                status_code=409,
                detail="session is mid-step; concurrent calls on one handle "
                       "are a contract violation")
        try:
            batch = session.env.step(actions)
        except ContractViolation as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        finally:
            session.lock.release()
        return schemas.StepResponse(
            observations_b64=_b64(batch.observations),
            rewards=[float(r) for r in batch.rewards],
            dones=[bool(d) for d in batch.dones],
            true_objectives=[float(t) for t in batch.true_objectives])

    @app.delete("/sessions/{session_id}")
    def close_session(session_id: str):
        try:
            registry.close(session_id)
        except SessionNotFound:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        return {"closed": session_id}

    @app.post("/benchmarks")
    def run_benchmark(req: schemas.BenchmarkRequest):
        kind = _parse_kind(req.scenario)
        overrides = _check_overrides(kind, req.overrides)
        try:
            report = bench.run_benchmark(
                kind, req.workers, req.envs_per_worker, req.agents,
                req.seconds, seed=req.seed, overrides=overrides)
        except ContractViolation as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        from dataclasses import asdict
        return asdict(report)

    @app.post("/rollouts")
    def run_rollout(req: schemas.RolloutRequest):
        kind = _parse_kind(req.scenario)
        overrides = _check_overrides(kind, req.overrides)
        log_lines: list[str] = []
        try:
            summary = bench.run_rollout(
                kind, req.seed, req.steps, policy=req.policy,
                agents=req.agents, overrides=overrides, log=log_lines.append)
        except ContractViolation as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        from dataclasses import asdict
        return {"summary": asdict(summary), "log": log_lines}

    @app.post("/replays", response_model=schemas.ReplayResponse)
    def run_replay(req: schemas.ReplayRequest):
        kind = _parse_kind(req.kind)
        overrides = _check_overrides(kind, req.overrides)
        batch_size = req.num_envs * req.agents_per_env
        if req.actions is not None:
            codes = np.asarray(req.actions, dtype=np.int64)
            if codes.ndim != 2 or codes.shape[1] != batch_size:
                raise HTTPException(
                    status_code=422,
                    detail=f"actions must be (steps, {batch_size})")
            if codes.min() < 0 or codes.max() >= NUM_ACTIONS:
                raise HTTPException(
                    status_code=422,
                    detail=f"actions: flat codes must lie in [0, {NUM_ACTIONS})")
            steps = codes.shape[0]
        else:
            policy = bench.random_policy(req.seed, batch_size)
            codes = np.stack([policy(t) for t in range(req.steps)])
            steps = req.steps
        config = vecenv.VecEnvConfig(
            kind=kind, num_envs=req.num_envs, agents_per_env=req.agents_per_env,
            base_seed=req.seed, overrides=overrides)
        env, obs = vecenv.make(config)
        try:
            initial_digest = _frame_digests(obs)
            rewards, dones, objectives, digests = [], [], [], []
            for t in range(steps):
                batch = env.step(codes[t])
                rewards.append([float(r) for r in batch.rewards])
                dones.append([bool(d) for d in batch.dones])
                objectives.append([float(v) for v in batch.true_objectives])
                digests.append(_frame_digests(batch.observations))
        finally:
            env.close()
        return schemas.ReplayResponse(
            action_codes=[[int(c) for c in row] for row in codes],
            rewards=rewards, dones=dones, true_objectives=objectives,
            frame_sha256=digests, initial_frame_sha256=initial_digest)

    def _get(session_id: str):
        try:
            return registry.get(session_id)
        except SessionNotFound:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")

    def _session_info(session_id: str, env: vecenv.VecEnv) -> schemas.SessionInfo:
        return schemas.SessionInfo(
            session_id=session_id, kind=env.config.kind.value,
            num_envs=env.num_envs, agents_per_env=env.agents_per_env,
            batch_size=env.batch_size,
            obs_shape=(OBS_HEIGHT, OBS_WIDTH, 3),
            action_heads=ACTION_ARITIES, num_actions=NUM_ACTIONS)

    app.state.registry = registry
    return app


app = create_app()
