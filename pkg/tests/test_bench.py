import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from expert import run_sokoban_controller
from sokoban_oracle import solve_push_bfs, state_from_episode

from voxbatch import bench, render, scenarios, vecenv
from voxbatch.errors import ContractViolation
from voxbatch.scenarios import ScenarioKind


def test_benchmark_rejects_short_duration():
    with pytest.raises(ContractViolation):
        bench.run_benchmark(ScenarioKind.SOKOBAN, 1, 1, 1, seconds=5)


def test_effective_cores_positive():
    assert bench.effective_cores() >= 1


def test_rollout_zero_steps():
    summary = bench.run_rollout(ScenarioKind.SOKOBAN, seed=1, steps=0)
    assert summary.total_reward == [0.0]
    assert summary.episodes_finished == 0
    assert summary.true_objective == 0.0


def test_rollout_random_hex_explore_reward_alphabet():
    summary = bench.run_rollout(ScenarioKind.HEX_EXPLORE, seed=5, steps=1024)
    # dense rewards in HexExplore are only 0 or +5
    assert summary.total_reward[0] in (0.0, 5.0)
    log_lines = []
    bench.run_rollout(ScenarioKind.HEX_EXPLORE, seed=5, steps=16,
                      log=log_lines.append)
    assert len(log_lines) == 17  # one per step plus the objective line
    assert log_lines[-1].startswith("true objective")


def test_rollout_scripted_sokoban_solution(tmp_path):
    seed = 6
    state = scenarios.generate(ScenarioKind.SOKOBAN, seed, 1)
    pushes = solve_push_bfs(*state_from_episode(state))
    assert pushes is not None
    replay_state = scenarios.generate(ScenarioKind.SOKOBAN, seed, 1)
    actions = []
    success, _ = run_sokoban_controller(replay_state, pushes, record=actions)
    assert success
    from voxbatch.grid import Action, Move, Strafe, Turn, Gaze, Jump, Interact, flatten_action
    codes = np.array([[flatten_action(Action(Move(a[0]), Strafe(a[1]),
                                             Turn(a[2]), Gaze(a[3]),
                                             Jump(a[4]), Interact(a[5])))]
                      for a in actions])
    script = tmp_path / "solution.replay"
    vecenv.write_replay(
        script, vecenv.VecEnvConfig(kind=ScenarioKind.SOKOBAN, num_envs=1,
                                    agents_per_env=1, base_seed=seed), codes)
    summary = bench.run_rollout(ScenarioKind.SOKOBAN, seed=seed,
                                steps=len(actions), policy=str(script))
    assert summary.true_objective == 1.0
    assert summary.episodes_finished == 1


def test_rollout_missing_policy_file():
    with pytest.raises(ContractViolation):
        bench.run_rollout(ScenarioKind.SOKOBAN, seed=0, steps=4,
                          policy="/nonexistent/file.replay")


def test_rollout_frame_dump(tmp_path):
    dump = tmp_path / "frames"
    bench.run_rollout(ScenarioKind.COLLECT, seed=2, steps=3,
                      dump_dir=str(dump))
    names = sorted(p.name for p in dump.iterdir())
    assert names == [f"env0_agent0_step{t}.ppm" for t in range(4)]
    frame = render.read_ppm(dump / "env0_agent0_step0.ppm")
    assert frame.shape == (72, 128, 3)
    # dumped initial frame matches a fresh native render with full HUD
    state = scenarios.generate(ScenarioKind.COLLECT, seed=2, num_agents=1)
    expected = render.overlay_hud(render.render_agent_view(state, 0), 1.0)
    assert np.array_equal(frame, expected)


def test_rollout_geometry_dump(tmp_path):
    out = tmp_path / "geom.txt"
    bench.run_rollout(ScenarioKind.SOKOBAN, seed=2, steps=0,
                      dump_geometry=str(out))
    lines = out.read_text().splitlines()
    state = scenarios.generate(ScenarioKind.SOKOBAN, seed=2, num_agents=1)
    assert len(lines) == len(state.geom)
    assert all(line.startswith("box ") for line in lines)


def test_benchmark_report_accounting_and_json():
    report = bench.run_benchmark(ScenarioKind.SOKOBAN, workers=1,
                                 envs_per_worker=1, agents=1, seconds=10)
    assert report.total_observations == report.steps * 1
    assert report.obs_per_second > 0
    assert report.obs_per_second == pytest.approx(
        report.total_observations / report.duration_seconds)
    assert len(report.per_worker) == 1
    assert report.per_worker[0].observations == report.total_observations
    payload = json.loads(report.to_json())
    assert payload["scenario"] == "Sokoban"
    assert "obs_per_second" in payload
    assert "Sokoban" in report.table()


def test_benchmark_does_not_perturb_simulation():
    """A benchmarked pool and a plain pool fed the same actions produce the
    same reward stream."""
    recorded = []
    base_policy = bench.random_policy(0, 4)

    def recording_policy(step):
        acts = base_policy(step)
        recorded.append(acts.copy())
        return acts

    rewards_bench = []
    orig_step = vecenv.VecEnv.step

    def spy_step(self, actions):
        batch = orig_step(self, actions)
        rewards_bench.append(batch.rewards.copy())
        return batch

    vecenv.VecEnv.step = spy_step
    try:
        bench.run_benchmark(ScenarioKind.COLLECT, workers=1, envs_per_worker=4,
                            agents=1, seconds=10, action_policy=recording_policy,
                            seed=0)
    finally:
        vecenv.VecEnv.step = orig_step

    env, _ = vecenv.make(vecenv.VecEnvConfig(
        kind=ScenarioKind.COLLECT, num_envs=4, agents_per_env=1, base_seed=0))
    try:
        for i, acts in enumerate(recorded):
            batch = env.step(acts)
            assert np.array_equal(batch.rewards, rewards_bench[i]), f"step {i}"
    finally:
        env.close()
