"""Procedural generation and reward logic for the eight benchmark scenarios."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import ContractViolation
from ..state import EpisodeState
from . import collect, hexmaze, obstacles, rearrange, sokoban, tower


class ScenarioKind(str, Enum):
    OBSTACLES_EASY = "ObstaclesEasy"
    OBSTACLES_HARD = "ObstaclesHard"
    COLLECT = "Collect"
    SOKOBAN = "Sokoban"
    HEX_EXPLORE = "HexExplore"
    HEX_MEMORY = "HexMemory"
    REARRANGEMENT = "Rearrangement"
    TOWER_BUILDING = "TowerBuilding"


@dataclass(frozen=True)
class StepOutcome:
    dense_reward: np.ndarray     # per agent
    done: bool
    true_objective: float        # meaningful only when done


def _gen_obstacles_easy(seed, n, p, kind):
    return obstacles.generate(seed, n, p, hard=False, kind=kind)


def _gen_obstacles_hard(seed, n, p, kind):
    return obstacles.generate(seed, n, p, hard=True, kind=kind)


_REGISTRY = {
    ScenarioKind.OBSTACLES_EASY: (
        obstacles.DEFAULTS_EASY, _gen_obstacles_easy,
        obstacles.score, obstacles.true_objective),
    ScenarioKind.OBSTACLES_HARD: (
        obstacles.DEFAULTS_HARD, _gen_obstacles_hard,
        obstacles.score, obstacles.true_objective),
    ScenarioKind.COLLECT: (
        collect.DEFAULTS, collect.generate, collect.score,
        collect.true_objective),
    ScenarioKind.SOKOBAN: (
        sokoban.DEFAULTS, sokoban.generate, sokoban.score,
        sokoban.true_objective),
    ScenarioKind.HEX_EXPLORE: (
        hexmaze.EXPLORE_DEFAULTS, hexmaze.generate_explore,
        hexmaze.score_explore, hexmaze.true_objective_explore),
    ScenarioKind.HEX_MEMORY: (
        hexmaze.MEMORY_DEFAULTS, hexmaze.generate_memory,
        hexmaze.score_memory, hexmaze.true_objective_memory),
    ScenarioKind.REARRANGEMENT: (
        rearrange.DEFAULTS, rearrange.generate, rearrange.score,
        rearrange.true_objective),
    ScenarioKind.TOWER_BUILDING: (
        tower.DEFAULTS, tower.generate, tower.score, tower.true_objective),
}

# snake_case keys used by the override config file
CONFIG_KEYS = {
    "obstacles_easy": ScenarioKind.OBSTACLES_EASY,
    "obstacles_hard": ScenarioKind.OBSTACLES_HARD,
    "collect": ScenarioKind.COLLECT,
    "sokoban": ScenarioKind.SOKOBAN,
    "hex_explore": ScenarioKind.HEX_EXPLORE,
    "hex_memory": ScenarioKind.HEX_MEMORY,
    "rearrangement": ScenarioKind.REARRANGEMENT,
    "tower_building": ScenarioKind.TOWER_BUILDING,
}


def parse_kind(name: str) -> ScenarioKind:
    for kind in ScenarioKind:
        if kind.value.lower() == name.lower():
            return kind
    snake = name.lower()
    if snake in CONFIG_KEYS:
        return CONFIG_KEYS[snake]
    raise ContractViolation(
        f"unknown scenario kind {name!r}; expected one of "
        f"{[k.value for k in ScenarioKind]}")


def default_params(kind: ScenarioKind) -> dict:
    return dict(_REGISTRY[kind][0])


def generate(kind: ScenarioKind, seed: int, num_agents: int = 1,
             overrides: dict | None = None) -> EpisodeState:
    """Deterministic function of (kind, seed, num_agents, overrides)."""
    if not isinstance(kind, ScenarioKind):
        kind = parse_kind(str(kind))
    if num_agents < 1:
        raise ContractViolation(f"num_agents must be >= 1, got {num_agents}")
    defaults, gen, _, _ = _REGISTRY[kind]
    params = dict(defaults)
    if overrides:
        for key, value in overrides.items():
            if key not in params:
                raise ContractViolation(
                    f"unknown override {key!r} for {kind.value}; "
                    f"valid keys: {sorted(params)}")
            params[key] = value
    return gen(seed, num_agents, params, kind)


def score_step(state: EpisodeState, events) -> StepOutcome:
    """Score one step's events against the reward table; advances the step
    counter and reports the true objective when the episode ends."""
    if state.finished:
        raise ContractViolation("episode already finished; no steps may follow done")
    _, _, score, true_objective = _REGISTRY[state.kind]
    state.step_count += 1
    rewards = np.zeros(state.num_agents, dtype=np.float64)
    success = score(state, events, rewards)
    done = success or state.step_count >= state.episode_length
    objective = true_objective(state) if done else 0.0
    if done:
        state.finished = True
    return StepOutcome(dense_reward=rewards, done=done, true_objective=objective)


def timeout_fraction(state: EpisodeState) -> float:
    """Remaining-time fraction displayed on the HUD."""
    return (state.episode_length - state.step_count) / state.episode_length


def parse_config_text(text: str) -> dict[ScenarioKind, dict]:
    """Parse `scenario.key = value` override lines ('#' starts a comment)."""
    overrides: dict[ScenarioKind, dict] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line or "." not in line.split("=", 1)[0]:
            raise ContractViolation(
                f"config line {ln}: expected 'scenario.key = value', got {raw!r}")
        lhs, rhs = (part.strip() for part in line.split("=", 1))
        scen, key = (part.strip() for part in lhs.split(".", 1))
        if scen not in CONFIG_KEYS:
            raise ContractViolation(
                f"config line {ln}: unknown scenario {scen!r}")
        kind = CONFIG_KEYS[scen]
        valid = default_params(kind)
        if key not in valid:
            raise ContractViolation(
                f"config line {ln}: unknown key {key!r} for {scen}; "
                f"valid keys: {sorted(valid)}")
        value = float(rhs) if "." in rhs else int(rhs)
        overrides.setdefault(kind, {})[key] = value
    return overrides


def load_config_file(path) -> dict[ScenarioKind, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())
