"""Batched environment pool: the synchronous N x M vectorized step interface.

Construction is the only reset entry point. When an episode ends, the slot is
regenerated in place with its next seed (seed += num_envs) and the returned
observation is the successor episode's first frame; a terminal observation is
never synthesized.

Each worker thread owns a disjoint set of environments (env i -> worker
i mod W) backed by fixed-stride array slabs, so one step costs the worker two
GIL-free kernel calls (physics for all its envs, then all its frames) plus
the Python scoring in between. Results are bit-identical for any worker
count: environments never share data and the per-env code path is the same.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import _kernels, physics, render, scenarios
from .errors import ContractViolation
from .grid import ACTION_ARITIES, Action, NUM_ACTIONS
from .meshing import HASH_BUCKET_SIZE
from .scenarios import ScenarioKind
from .state import EpisodeState


@dataclass(frozen=True)
class VecEnvConfig:
    kind: ScenarioKind
    num_envs: int = 1
    agents_per_env: int = 1
    base_seed: int = 0
    num_workers: int = 1
    overrides: dict | None = None

    def __post_init__(self):
        if self.num_envs < 1:
            raise ContractViolation(f"num_envs must be >= 1, got {self.num_envs}")
        if self.agents_per_env < 1:
            raise ContractViolation(
                f"agents_per_env must be >= 1, got {self.agents_per_env}")
        if self.num_workers < 1:
            raise ContractViolation(
                f"num_workers must be >= 1, got {self.num_workers}")

    def canonical_text(self) -> str:
        lines = [
            f"kind={self.kind.value}",
            f"num_envs={self.num_envs}",
            f"agents_per_env={self.agents_per_env}",
            f"base_seed={self.base_seed}",
            f"num_workers={self.num_workers}",
        ]
        if self.overrides:
            for key in sorted(self.overrides):
                lines.append(f"override.{key}={self.overrides[key]}")
        return "\n".join(lines)


@dataclass
class StepBatch:
    """Env-major, agent-minor; all arrays have exactly N*M entries."""

    observations: np.ndarray      # (N*M, 72, 128, 3) uint8
    rewards: np.ndarray           # (N*M,) float32
    dones: np.ndarray             # (N*M,) bool
    true_objectives: np.ndarray   # (N*M,) float32, valid only where done


def make(config: VecEnvConfig) -> tuple["VecEnv", np.ndarray]:
    """Build the pool and return it with the first observations."""
    env = VecEnv(config)
    return env, env._initial_observations()


class _WorkerSlabs:
    """Fixed-stride storage for one worker's environments."""

    def __init__(self, states: list[EpisodeState], num_agents: int,
                 global_ids: np.ndarray):
        self.states = states
        self.m = num_agents
        self.global_ids = np.asarray(global_ids, dtype=np.int64)
        e = len(states)
        self.env_ids = np.arange(e, dtype=np.int32)
        self._alloc(
            s_cap=max(max(len(s.geom) for s in states), 1),
            b_cap=max(s.geom.bucket_start.shape[0] for s in states),
            i_cap=max(max(s.geom.bucket_items.shape[0] for s in states), 1),
            k_cap=max(max(len(s.objects) for s in states), 1),
            t_cap=max(max(s.trig_lo.shape[0] for s in states), 1),
            r_cap=max(render.render_row_count(s) for s in states),
            ev_cap=max(s.scratch_events.shape[0] for s in states),
        )
        for slot, state in enumerate(states):
            self.attach(slot, state)

    def _alloc(self, s_cap, b_cap, i_cap, k_cap, t_cap, r_cap, ev_cap):
        e = len(self.states)
        m = self.m
        self.s_cap, self.b_cap, self.i_cap = s_cap, b_cap, i_cap
        self.k_cap, self.t_cap, self.r_cap, self.ev_cap = k_cap, t_cap, r_cap, ev_cap
        self.s_lo = np.zeros((e, s_cap, 3))
        self.s_hi = np.zeros((e, s_cap, 3))
        self.bstart = np.zeros((e, b_cap), dtype=np.int32)
        self.bitems = np.zeros((e, i_cap), dtype=np.int32)
        self.bdims = np.zeros((e, 3), dtype=np.int64)
        self.obj_lo = np.zeros((e, k_cap, 3))
        self.obj_hi = np.zeros((e, k_cap, 3))
        self.obj_block = np.zeros((e, k_cap), dtype=np.uint8)
        self.obj_collect = np.zeros((e, k_cap), dtype=np.uint8)
        self.obj_n = np.zeros(e, dtype=np.int64)
        self.agents_lo = np.zeros((e, m, 3))
        self.agents_hi = np.zeros((e, m, 3))
        self.agent_arr = np.zeros((e, m, 8))
        self.agent_mask = np.ones(m, dtype=np.uint8)
        self.trig_lo = np.zeros((e, t_cap, 3))
        self.trig_hi = np.zeros((e, t_cap, 3))
        self.trig_prev = np.zeros((e, m, t_cap), dtype=np.uint8)
        self.trig_n = np.zeros(e, dtype=np.int64)
        self.actions = np.zeros((e, m, 6), dtype=np.int64)
        self.events = np.zeros((e, ev_cap, 3), dtype=np.int32)
        self.events_n = np.zeros(e, dtype=np.int64)
        self.rows_lo = np.zeros((e, r_cap, 3))
        self.rows_hi = np.zeros((e, r_cap, 3))
        self.rows_rgb = np.zeros((e, r_cap, 3))
        self.rows_n = np.zeros(e, dtype=np.int64)
        self.cams = np.zeros((e * m, 5))
        self.env_of = np.repeat(np.arange(e, dtype=np.int32), m)
        self.self_row = np.zeros(e * m, dtype=np.int32)
        self.hud_n = np.zeros(e * m, dtype=np.int32)
        # frame f of local env slot i writes into batch slot gid*m + a
        self.frame_slots = (np.repeat(self.global_ids * m, m)
                            + np.tile(np.arange(m), e)).astype(np.int32)
        self.zbuf = np.empty((render.OBS_HEIGHT, render.OBS_WIDTH))

    def attach(self, slot: int, state: EpisodeState) -> None:
        need = dict(
            s_cap=len(state.geom), b_cap=state.geom.bucket_start.shape[0],
            i_cap=max(state.geom.bucket_items.shape[0], 1),
            k_cap=max(len(state.objects), 1),
            t_cap=max(state.trig_lo.shape[0], 1),
            r_cap=render.render_row_count(state),
            ev_cap=state.scratch_events.shape[0],
        )
        if (need["s_cap"] > self.s_cap or need["b_cap"] > self.b_cap
                or need["i_cap"] > self.i_cap or need["k_cap"] > self.k_cap
                or need["t_cap"] > self.t_cap or need["r_cap"] > self.r_cap
                or need["ev_cap"] > self.ev_cap):
            self._grow(need)
        self.states[slot] = state
        geom = state.geom
        n = len(geom)
        self.s_lo[slot, :n] = geom.lo
        self.s_hi[slot, :n] = geom.hi
        # out-of-prefix rows stay zero; the hash never references them
        nb = geom.bucket_start.shape[0]
        self.bstart[slot, :nb] = geom.bucket_start
        ni = geom.bucket_items.shape[0]
        self.bitems[slot, :ni] = geom.bucket_items
        self.bdims[slot] = geom.bucket_dims
        self.obj_n[slot] = len(state.objects)
        t = state.trig_lo.shape[0]
        self.trig_n[slot] = t
        self.trig_lo[slot, :t] = state.trig_lo
        self.trig_hi[slot, :t] = state.trig_hi
        state.attach_storage(
            self.obj_lo[slot], self.obj_hi[slot], self.obj_block[slot],
            self.obj_collect[slot], self.agents_lo[slot], self.agents_hi[slot],
            self.agent_arr[slot], self.trig_prev[slot], self.events[slot])
        rows = render.render_row_count(state)
        self.rows_n[slot] = rows
        render.build_render_rows(state, self.rows_lo[slot, :rows],
                                 self.rows_hi[slot, :rows],
                                 self.rows_rgb[slot, :rows])
        m = self.m
        for a in range(m):
            self.self_row[slot * m + a] = state.render_agent_row + a

    def _grow(self, need: dict) -> None:
        caps = dict(s_cap=self.s_cap, b_cap=self.b_cap, i_cap=self.i_cap,
                    k_cap=self.k_cap, t_cap=self.t_cap, r_cap=self.r_cap,
                    ev_cap=self.ev_cap)
        for key, value in need.items():
            if value > caps[key]:
                caps[key] = max(value, int(caps[key] * 3 / 2))
        survivors = list(self.states)
        self._alloc(**caps)
        for slot, state in enumerate(survivors):
            if state is not None:
                self.attach(slot, state)


class VecEnv:
    def __init__(self, config: VecEnvConfig):
        if not isinstance(config.kind, ScenarioKind):
            raise ContractViolation(f"invalid scenario kind {config.kind!r}")
        self.config = config
        self.num_envs = config.num_envs
        self.agents_per_env = config.agents_per_env
        self.batch_size = config.num_envs * config.agents_per_env
        self.params = physics.DEFAULT_PARAMS
        self._closed = False
        self._next_seed = [config.base_seed + i + config.num_envs
                           for i in range(config.num_envs)]

        w = config.num_workers
        self._worker_envs: list[list[int]] = [[] for _ in range(w)]
        for i in range(config.num_envs):
            self._worker_envs[i % w].append(i)
        self._slabs: list[_WorkerSlabs | None] = []
        for wi in range(w):
            envs = [scenarios.generate(config.kind, config.base_seed + g,
                                       config.agents_per_env, config.overrides)
                    for g in self._worker_envs[wi]]
            if envs:
                self._slabs.append(_WorkerSlabs(
                    envs, config.agents_per_env,
                    np.asarray(self._worker_envs[wi], dtype=np.int64)))
            else:
                self._slabs.append(None)

        self._threads: list[threading.Thread] = []
        if w > 1:
            self._start = threading.Barrier(w + 1)
            self._finish = threading.Barrier(w + 1)
            self._stop = False
            self._payload = None
            for wi in range(w):
                t = threading.Thread(target=self._worker_loop, args=(wi,),
                                     daemon=True, name=f"voxbatch-env-{wi}")
                t.start()
                self._threads.append(t)

    # -- public interface ---------------------------------------------------

    def step(self, actions) -> StepBatch:
        """Advance every environment one step with N*M actions in batch order."""
        if self._closed:
            raise ContractViolation("step() after close()")
        acts = self._normalize_actions(actions)
        obs = np.empty((self.batch_size, render.OBS_HEIGHT, render.OBS_WIDTH, 3),
                       dtype=np.uint8)
        rewards = np.zeros(self.batch_size, dtype=np.float32)
        dones = np.zeros(self.batch_size, dtype=bool)
        objectives = np.zeros(self.batch_size, dtype=np.float32)
        batch = StepBatch(obs, rewards, dones, objectives)
        if not self._threads:
            self._worker_step(0, acts, batch)
        else:
            self._payload = (acts, batch)
            self._start.wait()
            self._finish.wait()
            self._payload = None
        return batch

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        if self._threads:
            self._stop = True
            self._start.wait()
            for t in self._threads:
                t.join()
        self._threads = []
        self._slabs = []

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    # -- internals ----------------------------------------------------------

    def _worker_loop(self, wi: int) -> None:
        while True:
            self._start.wait()
            if self._stop:
                return
            acts, batch = self._payload
            self._worker_step(wi, acts, batch)
            self._finish.wait()

    def _worker_step(self, wi: int, acts: np.ndarray, batch: StepBatch) -> None:
        slabs = self._slabs[wi]
        if slabs is None:
            return
        env_ids = self._worker_envs[wi]
        m = self.agents_per_env
        p = self.params

        slabs.actions[:] = acts[slabs.global_ids]
        for slot in range(len(env_ids)):
            physics.pack_agents(slabs.states[slot])

        _kernels.envs_step(
            slabs.env_ids, slabs.agent_arr, slabs.actions,
            p.move_speed, p.strafe_speed, p.turn_rate, p.gaze_rate, p.gravity,
            p.jump_velocity, p.dt, p.step_height, physics.CONTACT_SKIN,
            physics.GROUND_PROBE, physics.VOID_Y, math.pi / 4.0,
            physics.CARRY_FORWARD, physics.CARRY_HEIGHT,
            1 if slabs.states[0].push_mode else 0,
            slabs.s_lo, slabs.s_hi, slabs.bstart, slabs.bitems, slabs.bdims,
            HASH_BUCKET_SIZE,
            slabs.obj_lo, slabs.obj_hi, slabs.obj_block, slabs.obj_collect,
            slabs.obj_n, slabs.agents_lo, slabs.agents_hi, slabs.agent_mask,
            slabs.trig_lo, slabs.trig_hi, slabs.trig_n, slabs.trig_prev,
            slabs.events, slabs.events_n)

        for slot, g in enumerate(env_ids):
            state = slabs.states[slot]
            events = physics.postprocess_step(
                state, slabs.actions[slot], int(slabs.events_n[slot]), p)
            outcome = scenarios.score_step(state, events)
            base = g * m
            batch.rewards[base:base + m] = outcome.dense_reward
            if outcome.done:
                batch.dones[base:base + m] = True
                batch.true_objectives[base:base + m] = outcome.true_objective
                seed = self._next_seed[g]
                self._next_seed[g] = seed + self.num_envs
                state = scenarios.generate(self.config.kind, seed,
                                           self.agents_per_env,
                                           self.config.overrides)
                slabs.attach(slot, state)  # may grow and reallocate the slabs

        # frame metadata only after every attach: growth reallocates the
        # cams/hud arrays, which would wipe earlier slots' entries
        for slot, g in enumerate(env_ids):
            self._prepare_frames(slabs, slot, g, slabs.states[slot])

        _kernels.render_frames(
            batch.observations, slabs.frame_slots, slabs.zbuf, slabs.cams,
            slabs.env_of, slabs.self_row, slabs.hud_n,
            slabs.rows_lo, slabs.rows_hi, slabs.rows_rgb, slabs.rows_n,
            render._BG_FLAT, render.EYE_HEIGHT, render.PROJ_SCALE,
            render.NEAR, render.FAR)

    def _prepare_frames(self, slabs: _WorkerSlabs, slot: int, g: int,
                        state: EpisodeState) -> None:
        m = self.agents_per_env
        physics.pack_agents(state)
        render.refresh_render_rows(state)
        frac = scenarios.timeout_fraction(state)
        f0 = slot * m
        # agent_arr columns 0..4 are exactly (x, y, z, yaw, pitch)
        slabs.cams[f0:f0 + m] = state.agent_arr[:, 0:5]
        slabs.hud_n[f0:f0 + m] = int(frac * 100.0 + 0.5)

    def _initial_observations(self) -> np.ndarray:
        obs = np.empty((self.batch_size, render.OBS_HEIGHT, render.OBS_WIDTH, 3),
                       dtype=np.uint8)
        for wi, slabs in enumerate(self._slabs):
            if slabs is None:
                continue
            for slot, g in enumerate(self._worker_envs[wi]):
                self._prepare_frames(slabs, slot, g, slabs.states[slot])
            _kernels.render_frames(
                obs, slabs.frame_slots, slabs.zbuf, slabs.cams,
                slabs.env_of, slabs.self_row, slabs.hud_n,
                slabs.rows_lo, slabs.rows_hi, slabs.rows_rgb, slabs.rows_n,
                render._BG_FLAT, render.EYE_HEIGHT, render.PROJ_SCALE,
                render.NEAR, render.FAR)
        return obs

    def _state(self, i: int) -> EpisodeState:
        """The live EpisodeState of env i (testing/inspection hook)."""
        w = self.config.num_workers
        return self._slabs[i % w].states[self._worker_envs[i % w].index(i)]

    def _normalize_actions(self, actions) -> np.ndarray:
        """Accept flat codes, 6-column head arrays, or Action objects; validate
        everything before any environment advances. Returns (N, M, 6) int64."""
        if isinstance(actions, np.ndarray):
            if actions.ndim == 1:
                if actions.shape[0] != self.batch_size:
                    raise ContractViolation(
                        f"expected {self.batch_size} actions, got {actions.shape[0]}")
                codes = actions.astype(np.int64)
                if codes.min(initial=0) < 0 or codes.max(initial=0) >= NUM_ACTIONS:
                    raise ContractViolation(
                        f"flat action codes must lie in [0, {NUM_ACTIONS})")
                return _decode_flat(codes).reshape(
                    self.num_envs, self.agents_per_env, 6)
            if actions.ndim == 2 and actions.shape[1] == 6:
                if actions.shape[0] != self.batch_size:
                    raise ContractViolation(
                        f"expected {self.batch_size} actions, got {actions.shape[0]}")
                arr = actions.astype(np.int64)
                for col, arity in enumerate(ACTION_ARITIES):
                    if arr[:, col].min(initial=0) < 0 or arr[:, col].max(initial=0) >= arity:
                        raise ContractViolation(
                            f"action head {col} outside [0, {arity})")
                return arr.reshape(self.num_envs, self.agents_per_env, 6)
            raise ContractViolation(
                f"actions array must be (N*M,) or (N*M, 6), got {actions.shape}")
        seq = list(actions)
        if len(seq) != self.batch_size:
            raise ContractViolation(
                f"expected {self.batch_size} actions, got {len(seq)}")
        arr = np.empty((self.batch_size, 6), dtype=np.int64)
        for row, a in enumerate(seq):
            if isinstance(a, Action):
                arr[row] = a.heads()
            elif isinstance(a, (int, np.integer)):
                if not 0 <= int(a) < NUM_ACTIONS:
                    raise ContractViolation(
                        f"flat action code {a} outside [0, {NUM_ACTIONS})")
                arr[row] = _decode_one(int(a))
            elif isinstance(a, tuple) and len(a) == 6:
                for h, arity in zip(a, ACTION_ARITIES):
                    if not 0 <= int(h) < arity:
                        raise ContractViolation(
                            f"head value {h} outside arity {arity}")
                arr[row] = a
            else:
                raise ContractViolation(f"unsupported action value {a!r}")
        return arr.reshape(self.num_envs, self.agents_per_env, 6)


def _decode_one(code: int) -> tuple:
    code, i = divmod(code, 2)
    code, j = divmod(code, 2)
    code, g = divmod(code, 3)
    code, t = divmod(code, 3)
    m, s = divmod(code, 3)
    return (m, s, t, g, j, i)


def _decode_flat(codes: np.ndarray) -> np.ndarray:
    codes, i = np.divmod(codes, 2)
    codes, j = np.divmod(codes, 2)
    codes, g = np.divmod(codes, 3)
    codes, t = np.divmod(codes, 3)
    m, s = np.divmod(codes, 3)
    return np.ascontiguousarray(np.stack([m, s, t, g, j, i], axis=1))


# --------------------------------------------------------------------------
# Record / replay file format (determinism harness)
# --------------------------------------------------------------------------

REPLAY_MAGIC = "voxbatch-replay v1"


def write_replay(path, config: VecEnvConfig, action_codes: np.ndarray) -> None:
    """Header is the canonical config text; the body is per-step flat action
    codes, little-endian uint16, N*M per step."""
    action_codes = np.asarray(action_codes, dtype=np.uint16)
    if action_codes.ndim != 2:
        raise ContractViolation("action_codes must be (steps, N*M)")
    with open(path, "wb") as fh:
        header = REPLAY_MAGIC + "\n" + config.canonical_text() + "\n---\n"
        fh.write(header.encode("ascii"))
        fh.write(action_codes.astype("<u2").tobytes())


def read_replay(path) -> tuple[VecEnvConfig, np.ndarray]:
    with open(path, "rb") as fh:
        blob = fh.read()
    sep = blob.find(b"---\n")
    if not blob.startswith(REPLAY_MAGIC.encode()) or sep < 0:
        raise ContractViolation(f"{path}: not a replay file")
    fields: dict[str, str] = {}
    overrides: dict[str, float | int] = {}
    for line in blob[:sep].decode("ascii").splitlines()[1:]:
        if not line.strip():
            continue
        key, value = line.split("=", 1)
        if key.startswith("override."):
            name = key[len("override."):]
            overrides[name] = float(value) if "." in value else int(value)
        else:
            fields[key] = value
    config = VecEnvConfig(
        kind=scenarios.parse_kind(fields["kind"]),
        num_envs=int(fields["num_envs"]),
        agents_per_env=int(fields["agents_per_env"]),
        base_seed=int(fields["base_seed"]),
        num_workers=int(fields["num_workers"]),
        overrides=overrides or None,
    )
    body = blob[sep + 4:]
    codes = np.frombuffer(body, dtype="<u2")
    width = config.num_envs * config.agents_per_env
    if codes.size % width:
        raise ContractViolation(f"{path}: body length not a multiple of N*M")
    return config, codes.reshape(-1, width).astype(np.int64)
