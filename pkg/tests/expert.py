"""Hand-authored expert policies used as solvability oracles: a closed-loop
obstacle-course runner (one macro per obstacle family) and a Sokoban push
controller that compiles oracle solutions into action streams.

Movement advances 4/15 units per step, so every position window targeted here
is at least 0.3 wide (a lattice point always falls inside) — tighter windows
oscillate forever.
"""

import math

import numpy as np

from voxbatch import physics, scenarios
from voxbatch.grid import EYE_HEIGHT, world_to_voxel
from voxbatch.physics import PLACE_PROBE
from voxbatch.scenarios.obstacles import SURFACE

NOOP = (0, 0, 0, 0, 0, 0)
PITCH_MAX = math.pi / 4
TOL = 0.19  # window half-width > half the 4/15 movement quantum


def _gaze_toward(current, target):
    if current < target - 0.03:
        return 1  # up
    if current > target + 0.03:
        return 2  # down
    return 0


def _strafe_toward(z, target, tol=TOL):
    # facing +x: strafe LEFT decreases z, RIGHT increases z
    if z < target - tol:
        return 2
    if z > target + tol:
        return 1
    return 0


class ObstaclesExpert:
    """Drives one agent to the exit; never turns, so yaw stays exactly 0."""

    def __init__(self, state, agent_index=0):
        self.idx = agent_index
        data = state.scenario_data
        self.plan = list(data.obstacles)
        self.exit_x = data.exit_x
        self.mid_z = (state.grid.nz - 1) / 2.0
        self.carry_macro = None

    def act(self, state):
        agent = state.agents[self.idx]
        x = agent.pose.position[0]

        if self.carry_macro is not None:
            action = self.carry_macro.act(state, agent)
            if action is not None:
                return action
            self.carry_macro = None

        for obstacle in self.plan:
            if x < obstacle.x0 + obstacle.width - 0.2:
                if obstacle.kind in ("lava", "step"):
                    return self._run_and_jump(agent, obstacle)
                if x > obstacle.x0 - 5.0:
                    if obstacle.kind == "stack":
                        self.carry_macro = StackMacro(obstacle)
                    else:
                        self.carry_macro = BridgeMacro(obstacle)
                    return self.carry_macro.act(state, agent)
                break
        return self._advance(agent)

    def _advance(self, agent):
        pos = agent.pose.position
        gaze = _gaze_toward(agent.pose.pitch, 0.0)
        return (1, _strafe_toward(pos[2], self.mid_z), 0, gaze, 0, 0)

    def _run_and_jump(self, agent, obstacle):
        pos = agent.pose.position
        jump = 0
        if agent.grounded and pos[0] > obstacle.x0 - 1.05:
            jump = 1
        return (1, _strafe_toward(pos[2], self.mid_z), 0,
                _gaze_toward(agent.pose.pitch, 0.0), jump, 0)


class _CarryMacroBase:
    """Pick a known box, then a per-macro placement and climb sequence."""

    def __init__(self):
        self.phase = "fetch"

    def _goto(self, agent, tx, tz, tol=TOL):
        pos = agent.pose.position
        move = 0
        if pos[0] < tx - tol:
            move = 1
        elif pos[0] > tx + tol:
            move = 2
        strafe = _strafe_toward(pos[2], tz, tol)
        return move, strafe

    def _aim_and_grab(self, state, agent, box_cell):
        """Stand one cell behind the box, gaze onto its top face, interact."""
        bx, bz = box_cell[0] + 0.5, box_cell[2] + 0.5
        move, strafe = self._goto(agent, bx - 1.0, bz)
        if move or strafe:
            return (move, strafe, 0, _gaze_toward(agent.pose.pitch, 0.0), 0, 0)
        eye_y = agent.pose.position[1] + EYE_HEIGHT
        want = math.atan2((box_cell[1] + 0.9) - eye_y,
                          bx - agent.pose.position[0])
        want = max(-PITCH_MAX, min(PITCH_MAX, want))
        gaze = _gaze_toward(agent.pose.pitch, want)
        if gaze:
            return (0, 0, 0, gaze, 0, 0)
        return (0, 0, 0, 0, 0, 1)

    def _place_at(self, agent, cell):
        """Position so the full-down placement probe lands in `cell` while the
        agent body stays clear of it, then interact."""
        if agent.pose.pitch > -PITCH_MAX + 1e-9:
            return (0, 0, 0, 2, 0, 0)
        # probe advances ~1.06 horizontally at full-down gaze; body clearance
        # needs center x <= cell.x - 0.31; aim for the middle of that window
        tx = cell[0] - 0.68
        tz = cell[2] + 0.5
        move, strafe = self._goto(agent, tx, tz, tol=0.16)
        if move or strafe:
            return (move, strafe, 0, 0, 0, 0)
        eye = agent.pose.position + np.array([0.0, EYE_HEIGHT, 0.0])
        probe = tuple(world_to_voxel(eye + agent.pose.gaze_dir() * PLACE_PROBE))
        if probe == tuple(cell):
            return (0, 0, 0, 0, 0, 1)
        # probe just outside the cell: creep along x toward it
        return (1 if probe[0] < cell[0] else 2, 0, 0, 0, 0, 0)


class StackMacro(_CarryMacroBase):
    """Two-high wall: place the provided box one cell before the wall, climb
    it, jump over."""

    def __init__(self, obstacle):
        super().__init__()
        self.wall_x = obstacle.x0
        # fetch and place in the same z lane so the second provided box
        # (parked one lane over) never blocks the approach
        self.box_cell = (obstacle.x0 - 2, SURFACE, 2)
        self.place_cell = (obstacle.x0 - 1, SURFACE, 2)

    def act(self, state, agent):
        pos = agent.pose.position
        if self.phase == "fetch":
            if agent.carrying is not None:
                self.phase = "place"
            else:
                return self._aim_and_grab(state, agent, self.box_cell)
        if self.phase == "place":
            if agent.carrying is None:
                self.phase = "retreat"
            else:
                return self._place_at(agent, self.place_cell)
        if self.phase == "retreat":
            move, strafe = self._goto(agent, self.place_cell[0] - 0.75,
                                      self.place_cell[2] + 0.5, tol=0.16)
            if move or strafe:
                return (move, strafe, 0, _gaze_toward(agent.pose.pitch, 0.0), 0, 0)
            self.phase = "climb"
        if self.phase == "climb":
            if pos[1] > SURFACE + 0.9:      # standing on the box
                self.phase = "vault"
            elif agent.grounded:
                return (1, 0, 0, 0, 1, 0)   # hop onto the box
            else:
                return (1, 0, 0, 0, 0, 0)
        if self.phase == "vault":
            if pos[0] > self.wall_x + 1.0 and agent.grounded:
                return None                  # macro complete
            jump = 1 if agent.grounded else 0
            return (1, 0, 0, 0, jump, 0)
        return (1, 0, 0, 0, 0, 0)


class BridgeMacro(_CarryMacroBase):
    """Depth-2 pit: carry the box in, place it on the pit floor one cell
    ahead, climb it, jump out."""

    def __init__(self, obstacle):
        super().__init__()
        self.pit_x0 = obstacle.x0
        self.pit_floor = SURFACE - 2
        self.box_cell = None
        self.place_cell = None

    def act(self, state, agent):
        if self.box_cell is None:
            mid = state.grid.nz // 2
            self.box_cell = (self.pit_x0 - 2, SURFACE, mid)
            self.place_cell = (self.pit_x0 + 1, self.pit_floor, mid)
        pos = agent.pose.position
        if self.phase == "fetch":
            if agent.carrying is not None:
                self.phase = "descend"
            else:
                return self._aim_and_grab(state, agent, self.box_cell)
        if self.phase == "descend":
            if pos[1] < SURFACE - 1.5:       # landed on the pit floor
                self.phase = "place"
            else:
                return (1, _strafe_toward(pos[2], self.place_cell[2] + 0.5), 0,
                        _gaze_toward(agent.pose.pitch, 0.0), 0, 0)
        if self.phase == "place":
            if agent.carrying is None:
                self.phase = "mount"
            else:
                return self._place_at(agent, self.place_cell)
        if self.phase == "mount":
            if pos[1] > self.pit_floor + 0.9:
                self.phase = "vault"
            else:
                move, strafe = self._goto(agent, self.place_cell[0] - 0.5,
                                          self.place_cell[2] + 0.5, tol=0.16)
                if move or strafe:
                    return (move, strafe, 0,
                            _gaze_toward(agent.pose.pitch, 0.0), 0, 0)
                return (1, 0, 0, 0, 1, 0)
        if self.phase == "vault":
            if pos[0] > self.pit_x0 + 2.4 and pos[1] > SURFACE - 0.2:
                return None
            jump = 1 if agent.grounded else 0
            return (1, 0, 0, 0, jump, 0)
        return (1, 0, 0, 0, 0, 0)


def run_obstacles_expert(state, max_steps=None):
    """Step the episode under the expert until done; returns (success, steps)."""
    expert = ObstaclesExpert(state)
    max_steps = max_steps or state.episode_length
    extra = [NOOP] * (state.num_agents - 1)
    for t in range(max_steps):
        action = expert.act(state)
        events = physics.step_environment(state, [action] + extra, state.geom)
        outcome = scenarios.score_step(state, events)
        if outcome.done:
            return outcome.true_objective >= 1.0, t + 1
    return False, max_steps


# --------------------------------------------------------------------------
# Sokoban: compile oracle pushes into an action stream
# --------------------------------------------------------------------------

def _face_direction(d):
    return {(1, 0): 0.0, (-1, 0): math.pi, (0, 1): math.pi / 2,
            (0, -1): 3 * math.pi / 2}[d]


class SokobanController:
    """Routes to each push's stand cell with a cell-level BFS around the live
    boxes, turns to the exact push heading, and shoves."""

    def __init__(self, pushes):
        self.pushes = list(pushes)
        self.current = 0

    def done(self):
        return self.current >= len(self.pushes)

    @staticmethod
    def _boxes(state):
        cells = set()
        for oi in range(len(state.objects)):
            lo = state.obj_lo[oi]
            cells.add((int(lo[0] + 1e-6), int(lo[2] + 1e-6)))
        return cells

    @staticmethod
    def _route(state, start, goal, boxes):
        """First cell to step to on a shortest free path start -> goal."""
        if start == goal:
            return None
        grid = state.grid
        frontier = [start]
        parent = {start: None}
        while frontier:
            nxt_frontier = []
            for cur in frontier:
                for d in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    nxt = (cur[0] + d[0], cur[1] + d[1])
                    if nxt in parent or nxt in boxes:
                        continue
                    if not (1 <= nxt[0] < grid.nx - 1 and 1 <= nxt[1] < grid.nz - 1):
                        continue
                    parent[nxt] = cur
                    if nxt == goal:
                        cell = nxt
                        while parent[cell] != start:
                            cell = parent[cell]
                        return cell
                    nxt_frontier.append(nxt)
            frontier = nxt_frontier
        return None

    @staticmethod
    def _move_world(agent, wx, wz):
        """Translate a world-axis direction into move/strafe heads for the
        agent's (axis-aligned) heading."""
        fx, fz = agent.pose.forward_xz()
        lx, lz = agent.pose.left_xz()
        ahead = wx * fx + wz * fz
        side = wx * lx + wz * lz
        if abs(ahead) >= abs(side):
            return (1 if ahead > 0 else 2), 0
        return 0, (1 if side > 0 else 2)

    def _step_action(self, agent, here, next_cell):
        """One navigation action: center the transverse axis inside the
        current corridor, then advance along the travel axis. Never moves
        diagonally, so adjacent boxes are never shoved."""
        pos = agent.pose.position
        if next_cell[0] != here[0]:
            travel, transverse = 0, 1
        else:
            travel, transverse = 1, 0
        world = (pos[0], pos[2])
        off = world[transverse] - (here[transverse] + 0.5)
        if abs(off) > TOL:
            direction = [0.0, 0.0]
            direction[transverse] = -1.0 if off > 0 else 1.0
            move, strafe = self._move_world(agent, direction[0], direction[1])
        else:
            direction = [0.0, 0.0]
            direction[travel] = 1.0 if next_cell[travel] > here[travel] else -1.0
            move, strafe = self._move_world(agent, direction[0], direction[1])
        return (move, strafe, 0, 0, 0, 0)

    def act(self, state):
        if self.done():
            return NOOP
        box_cell, d = self.pushes[self.current]
        agent = state.agents[0]
        pos = agent.pose.position
        boxes = self._boxes(state)
        if box_cell not in boxes:
            self.current += 1  # push already happened
            return NOOP
        stand_cell = (box_cell[0] - d[0], box_cell[1] - d[1])
        here = (int(pos[0]), int(pos[2]))
        if here != stand_cell:
            step_cell = self._route(state, here, stand_cell, boxes)
            if step_cell is None:
                step_cell = stand_cell  # already adjacent
            return self._step_action(agent, here, step_cell)
        # align only the axis transverse to the push (forward progress along
        # the push axis must never be undone), face the box, shove
        if d[0] != 0:
            off = pos[2] - (stand_cell[1] + 0.5)
            world = (0.0, -1.0 if off > 0 else 1.0)
        else:
            off = pos[0] - (stand_cell[0] + 0.5)
            world = (-1.0 if off > 0 else 1.0, 0.0)
        if abs(off) > TOL:
            move, strafe = self._move_world(agent, world[0], world[1])
            return (move, strafe, 0, 0, 0, 0)
        target_yaw = _face_direction(d)
        yaw_err = (agent.pose.yaw - target_yaw) % (2 * math.pi)
        if yaw_err > math.pi:
            yaw_err -= 2 * math.pi
        if abs(yaw_err) > 0.01:
            return (0, 0, 1 if yaw_err < 0 else 2, 0, 0, 0)
        return (1, 0, 0, 0, 0, 0)  # shove forward into the box

    def on_events(self, events):
        if self.done():
            return
        box_cell, _ = self.pushes[self.current]
        for _, _, src, _dst in events.pushed:
            if (src[0], src[2]) == box_cell:
                self.current += 1
                return


def run_sokoban_controller(state, pushes, max_steps=None, record=None):
    controller = SokobanController(
        [((c[0], c[1]), d) for c, d in pushes])
    max_steps = max_steps or state.episode_length
    for t in range(max_steps):
        action = controller.act(state)
        if record is not None:
            record.append(action)
        events = physics.step_environment(state, [action], state.geom)
        controller.on_events(events)
        outcome = scenarios.score_step(state, events)
        if outcome.done:
            return outcome.true_objective >= 1.0, t + 1
    return False, max_steps
