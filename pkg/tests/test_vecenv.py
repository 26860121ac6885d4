import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from expert import ObstaclesExpert

from voxbatch import physics, render, scenarios
from voxbatch.errors import ContractViolation
from voxbatch.grid import Action, Move
from voxbatch.scenarios import ScenarioKind
from voxbatch.vecenv import (
    VecEnv, VecEnvConfig, make, read_replay, write_replay,
)


def cfg(kind=ScenarioKind.SOKOBAN, n=2, m=1, seed=11, w=1, overrides=None):
    return VecEnvConfig(kind=kind, num_envs=n, agents_per_env=m,
                        base_seed=seed, num_workers=w, overrides=overrides)


def test_make_returns_initial_observations():
    env, obs = make(cfg(n=1, m=1))
    try:
        assert obs.shape == (1, 72, 128, 3)
        assert obs[0].nbytes == 27648
    finally:
        env.close()


def test_batch_order_env_major_agent_minor():
    env, obs = make(cfg(kind=ScenarioKind.OBSTACLES_EASY, n=4, m=2))
    try:
        assert obs.shape == (8, 72, 128, 3)
        batch = env.step(np.zeros(8, dtype=np.int64))
        for field in (batch.observations, batch.rewards, batch.dones,
                      batch.true_objectives):
            assert field.shape[0] == 8
        # same-env agents share a scene; frames differ across envs
        assert not np.array_equal(batch.observations[0], batch.observations[2])
    finally:
        env.close()


def test_make_deterministic():
    env1, obs1 = make(cfg(n=3))
    env1.close()
    env2, obs2 = make(cfg(n=3))
    env2.close()
    assert np.array_equal(obs1, obs2)


def test_noop_step_in_static_scene():
    env, _ = make(cfg(kind=ScenarioKind.SOKOBAN, n=3))
    try:
        batch = env.step(np.zeros(3, dtype=np.int64))
        assert (batch.rewards == 0).all()
        assert not batch.dones.any()
    finally:
        env.close()


def test_action_forms_equivalent():
    results = []
    for form in ("flat", "cols", "objects", "tuples"):
        env, _ = make(cfg(kind=ScenarioKind.COLLECT, n=2))
        code = 162  # forward + some heads
        if form == "flat":
            acts = np.array([code, code])
        elif form == "cols":
            from voxbatch.vecenv import _decode_one
            acts = np.array([_decode_one(code), _decode_one(code)])
        elif form == "objects":
            from voxbatch.grid import unflatten_action
            acts = [unflatten_action(code)] * 2
        else:
            from voxbatch.grid import unflatten_heads
            acts = [unflatten_heads(code)] * 2
        batch = env.step(acts)
        results.append(batch.observations.copy())
        env.close()
    for other in results[1:]:
        assert np.array_equal(results[0], other)


def test_step_validation_rejects_bad_input():
    env, _ = make(cfg(n=2))
    try:
        with pytest.raises(ContractViolation):
            env.step(np.zeros(3, dtype=np.int64))          # wrong length
        with pytest.raises(ContractViolation):
            env.step(np.array([0, 324]))                    # out of range
        with pytest.raises(ContractViolation):
            env.step(np.array([[0, 0, 0, 0, 0], [0, 0, 0, 0, 0]]))  # bad shape
        with pytest.raises(ContractViolation):
            env.step(np.array([[0, 0, 0, 0, 0, 3], [0, 0, 0, 0, 0, 0]]))
        with pytest.raises(ContractViolation):
            env.step(["nope", "nope"])
    finally:
        env.close()


def test_close_idempotent_and_step_after_close():
    env, _ = make(cfg(n=2, w=2))
    env.close()
    env.close()
    with pytest.raises(ContractViolation):
        env.step(np.zeros(2, dtype=np.int64))


def test_invalid_config_rejected():
    with pytest.raises(ContractViolation):
        VecEnvConfig(kind=ScenarioKind.SOKOBAN, num_envs=0)
    with pytest.raises(ContractViolation):
        VecEnvConfig(kind=ScenarioKind.SOKOBAN, agents_per_env=0)
    with pytest.raises(ContractViolation):
        VecEnv(VecEnvConfig(kind="garbage"))


def run_sequence(worker_count, steps=40, kind=ScenarioKind.COLLECT,
                 n=4, m=1, seed=29):
    env, obs0 = make(cfg(kind=kind, n=n, m=m, seed=seed, w=worker_count))
    rng = np.random.Generator(np.random.PCG64(7))
    frames = [obs0]
    rewards = []
    dones = []
    try:
        for _ in range(steps):
            batch = env.step(rng.integers(0, 324, size=n * m))
            frames.append(batch.observations)
            rewards.append(batch.rewards)
            dones.append(batch.dones)
    finally:
        env.close()
    return np.stack(frames), np.stack(rewards), np.stack(dones)


def test_schedule_independence_workers_1_2_4():
    f1, r1, d1 = run_sequence(1)
    f2, r2, d2 = run_sequence(2)
    f4, r4, d4 = run_sequence(4)
    assert np.array_equal(f1, f2) and np.array_equal(f1, f4)
    assert np.array_equal(r1, r2) and np.array_equal(r1, r4)
    assert np.array_equal(d1, d2) and np.array_equal(d1, d4)


def test_more_workers_than_envs():
    env, _ = make(cfg(n=2, w=5))
    try:
        batch = env.step(np.zeros(2, dtype=np.int64))
        assert batch.observations.shape[0] == 2
    finally:
        env.close()


def test_timeout_auto_reset_reports_objective_slot():
    env, _ = make(cfg(kind=ScenarioKind.COLLECT, n=2, m=1, seed=3,
                      overrides={"episode_length": 4}))
    try:
        for t in range(3):
            batch = env.step(np.zeros(2, dtype=np.int64))
            assert not batch.dones.any()
        batch = env.step(np.zeros(2, dtype=np.int64))
        assert batch.dones.all()
        assert (batch.true_objectives == 0.0).all()
        # the pool keeps running on the regenerated episodes
        batch = env.step(np.zeros(2, dtype=np.int64))
        assert not batch.dones.any()
    finally:
        env.close()


def scripted_success_actions(seed, max_steps=512):
    """Expert action stream that finishes an ObstaclesEasy episode."""
    state = scenarios.generate(ScenarioKind.OBSTACLES_EASY, seed, 1)
    expert = ObstaclesExpert(state)
    actions = []
    for _ in range(max_steps):
        act = expert.act(state)
        actions.append(act)
        events = physics.step_environment(state, [act], state.geom)
        outcome = scenarios.score_step(state, events)
        if outcome.done:
            assert outcome.true_objective == 1.0
            return actions
    raise AssertionError("expert failed to finish the course")


def test_auto_reset_returns_successor_first_frame():
    """On the done step the returned observation is the next episode's first
    frame, never a terminal render of the old scene."""
    seed = 17
    actions = scripted_success_actions(seed)
    env, _ = make(cfg(kind=ScenarioKind.OBSTACLES_EASY, n=1, m=1, seed=seed))
    try:
        batch = None
        for act in actions:
            batch = env.step([act])
        assert batch.dones[0]
        assert batch.true_objectives[0] == 1.0

        # oracle A: the successor episode (seed + N) freshly rendered
        successor = scenarios.generate(ScenarioKind.OBSTACLES_EASY, seed + 1, 1)
        expected = render.render_agent_view(successor, 0)
        render.overlay_hud(expected, 1.0)
        assert np.array_equal(batch.observations[0], expected)

        # oracle B: an env stepped WITHOUT auto-reset renders the old scene
        old = scenarios.generate(ScenarioKind.OBSTACLES_EASY, seed, 1)
        for act in actions:
            physics.step_environment(old, [act], old.geom)
        terminal = render.render_agent_view(old, 0)
        assert not np.array_equal(batch.observations[0], terminal)
    finally:
        env.close()


def test_auto_reset_reseeds_disjointly():
    env, _ = make(cfg(kind=ScenarioKind.COLLECT, n=3, seed=100,
                      overrides={"episode_length": 2}))
    try:
        env.step(np.zeros(3, dtype=np.int64))
        batch = env.step(np.zeros(3, dtype=np.int64))
        assert batch.dones.all()
        # slot i regenerated with seed 100 + i + N
        for i in range(3):
            successor = scenarios.generate(ScenarioKind.COLLECT, 103 + i, 1,
                                           overrides={"episode_length": 2})
            expected = render.overlay_hud(
                render.render_agent_view(successor, 0), 1.0)
            assert np.array_equal(batch.observations[i], expected)
    finally:
        env.close()


# --------------------------------------------------------------------------
# Record / replay
# --------------------------------------------------------------------------

def test_replay_file_round_trip(tmp_path):
    config = cfg(kind=ScenarioKind.HEX_MEMORY, n=2, m=2, seed=5, w=2,
                 overrides={"episode_length": 64})
    codes = np.random.Generator(np.random.PCG64(3)).integers(
        0, 324, size=(20, 4))
    path = tmp_path / "episode.replay"
    write_replay(path, config, codes)
    config2, codes2 = read_replay(path)
    assert config2 == config
    assert np.array_equal(codes, codes2)
    header = path.read_bytes().split(b"---\n")[0]
    assert header.startswith(b"voxbatch-replay v1\n")
    assert b"kind=HexMemory" in header


def test_replay_reproduces_run_bit_identically(tmp_path):
    config = cfg(kind=ScenarioKind.COLLECT, n=2, m=1, seed=41)
    rng = np.random.Generator(np.random.PCG64(9))
    codes = rng.integers(0, 324, size=(60, 2))

    def run(c):
        env, obs0 = make(c)
        seq = [obs0]
        rew = []
        try:
            for t in range(codes.shape[0]):
                batch = env.step(codes[t])
                seq.append(batch.observations)
                rew.append(batch.rewards)
        finally:
            env.close()
        return np.stack(seq), np.stack(rew)

    path = tmp_path / "determinism.replay"
    write_replay(path, config, codes)
    config2, codes2 = read_replay(path)
    f1, r1 = run(config)
    f2, r2 = run(config2)
    assert np.array_equal(f1, f2)
    assert np.array_equal(r1, r2)


def test_replay_rejects_corrupt_file(tmp_path):
    path = tmp_path / "bad.replay"
    path.write_bytes(b"not a replay")
    with pytest.raises(ContractViolation):
        read_replay(path)
