"""Throughput benchmark and scripted-rollout harness.

The benchmark steps a pool with a seeded action policy for a fixed duration
(2 s warm-up excluded) and reports aggregate and per-worker observations per
second. Benchmarking is measurement only: a benchmarked pool and a plain pool
fed the same actions produce identical results.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import render, scenarios, vecenv
from .errors import ContractViolation
from .grid import NUM_ACTIONS
from .scenarios import ScenarioKind

WARMUP_SECONDS = 2.0


def effective_cores() -> int:
    """Physical cores available to this process (affinity-capped)."""
    try:
        import psutil
        physical = psutil.cpu_count(logical=False) or os.cpu_count() or 1
    except ImportError:
        physical = os.cpu_count() or 1
    try:
        affinity = len(os.sched_getaffinity(0))
    except AttributeError:
        affinity = physical
    return max(1, min(physical, affinity))


@dataclass
class WorkerStats:
    worker: int
    envs: int
    observations: int
    obs_per_second: float


@dataclass
class BenchReport:
    scenario: str
    num_workers: int
    envs_per_worker: int
    agents_per_env: int
    duration_seconds: float
    steps: int
    total_observations: int
    obs_per_second: float
    per_worker: list[WorkerStats] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    def table(self) -> str:
        lines = [
            f"scenario          {self.scenario}",
            f"workers           {self.num_workers}",
            f"envs per worker   {self.envs_per_worker}",
            f"agents per env    {self.agents_per_env}",
            f"steps             {self.steps}",
            f"duration          {self.duration_seconds:.3f} s",
            f"observations      {self.total_observations}",
            f"obs/sec           {self.obs_per_second:,.0f}",
        ]
        for w in self.per_worker:
            lines.append(f"  worker {w.worker}: envs={w.envs} "
                         f"obs={w.observations} obs/s={w.obs_per_second:,.0f}")
        return "\n".join(lines)


def random_policy(seed: int, batch: int):
    """Seeded uniform policy over the 324 flat actions."""
    gen = np.random.Generator(np.random.PCG64(seed))

    def sample(_step: int) -> np.ndarray:
        return gen.integers(0, NUM_ACTIONS, size=batch, dtype=np.int64)

    return sample


def run_benchmark(scenario: ScenarioKind, workers: int, envs_per_worker: int,
                  agents: int, seconds: float, action_policy=None,
                  seed: int = 0, overrides: dict | None = None) -> BenchReport:
    if seconds < 10:
        raise ContractViolation(
            f"benchmark duration must be >= 10 s (2 s warm-up excluded), got {seconds}")
    config = vecenv.VecEnvConfig(
        kind=scenario, num_envs=workers * envs_per_worker,
        agents_per_env=agents, base_seed=seed, num_workers=workers,
        overrides=overrides)
    env, _ = vecenv.make(config)
    batch = env.batch_size
    policy = action_policy or random_policy(seed, batch)
    try:
        step_idx = 0
        warm_end = time.perf_counter() + WARMUP_SECONDS
        while time.perf_counter() < warm_end:
            env.step(policy(step_idx))
            step_idx += 1
        steps = 0
        t0 = time.perf_counter()
        deadline = t0 + seconds
        while time.perf_counter() < deadline:
            env.step(policy(step_idx))
            step_idx += 1
            steps += 1
        duration = time.perf_counter() - t0
    finally:
        env.close()
    total = steps * batch
    per_worker = []
    for w, envs in enumerate(env._worker_envs):
        w_obs = len(envs) * agents * steps
        per_worker.append(WorkerStats(
            worker=w, envs=len(envs), observations=w_obs,
            obs_per_second=w_obs / duration if duration > 0 else 0.0))
    return BenchReport(
        scenario=scenario.value, num_workers=workers,
        envs_per_worker=envs_per_worker, agents_per_env=agents,
        duration_seconds=duration, steps=steps, total_observations=total,
        obs_per_second=total / duration if duration > 0 else 0.0,
        per_worker=per_worker)


@dataclass
class RolloutSummary:
    scenario: str
    seed: int
    steps: int
    total_reward: list[float]
    episodes_finished: int
    true_objective: float        # from the last finished episode, 0.0 if none

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def run_rollout(scenario: ScenarioKind, seed: int, steps: int,
                policy: str = "random", dump_dir=None, agents: int = 1,
                overrides: dict | None = None, log=None,
                dump_geometry=None) -> RolloutSummary:
    """Execute one environment; `policy` is 'random' or a replay-file path."""
    if policy != "random":
        path = Path(policy)
        if not path.exists():
            raise ContractViolation(f"policy script not found: {path}")
        _, codes = vecenv.read_replay(path)
        if codes.shape[1] != agents:
            raise ContractViolation(
                f"policy file carries {codes.shape[1]} actions per step, "
                f"rollout needs {agents}")
        action_source = lambda t: codes[t]
        steps = min(steps, codes.shape[0])
    else:
        action_source = random_policy(seed, agents)

    config = vecenv.VecEnvConfig(kind=scenario, num_envs=1,
                                 agents_per_env=agents, base_seed=seed,
                                 overrides=overrides)
    env, obs = vecenv.make(config)
    if dump_geometry:
        from .meshing import export_box_list
        Path(dump_geometry).write_text(export_box_list(env._state(0).geom))
    dump = Path(dump_dir) if dump_dir else None
    if dump:
        dump.mkdir(parents=True, exist_ok=True)
        _dump_frames(dump, obs, agents, 0)
    totals = np.zeros(agents, dtype=np.float64)
    episodes = 0
    objective = 0.0
    try:
        for t in range(steps):
            batch = env.step(np.asarray(action_source(t)))
            totals += batch.rewards
            if log is not None:
                rew = ", ".join(f"{r:+.3f}" for r in batch.rewards)
                log(f"step {t + 1:5d}  reward [{rew}]  done {bool(batch.dones[0])}")
            if batch.dones[0]:
                episodes += 1
                objective = float(batch.true_objectives[0])
            if dump:
                _dump_frames(dump, batch.observations, agents, t + 1)
    finally:
        env.close()
    if log is not None:
        log(f"true objective: {objective}")
    return RolloutSummary(
        scenario=scenario.value, seed=seed, steps=steps,
        total_reward=[float(v) for v in totals],
        episodes_finished=episodes, true_objective=objective)


def _dump_frames(dump: Path, obs: np.ndarray, agents: int, step: int) -> None:
    for a in range(agents):
        name = f"env0_agent{a}_step{step}.ppm"
        render.write_ppm(dump / name, obs[a])
