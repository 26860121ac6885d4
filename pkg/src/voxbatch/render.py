"""Deterministic software rasterizer producing the egocentric observation.

Frames are 128x72 RGB8, row-major top to bottom. Rendering is a pure function
of the scene snapshot and camera, bit-exact across runs and thread schedules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, palette
from .errors import ContractViolation
from .grid import EYE_HEIGHT, AgentState, DynamicObject
from .meshing import StaticGeometry
from .state import EpisodeState

OBS_WIDTH = 128
OBS_HEIGHT = 72
OBS_BYTES = OBS_WIDTH * OBS_HEIGHT * 3  # 27,648

HFOV = math.radians(100.0)
NEAR = 0.1
FAR = 100.0
PROJ_SCALE = (OBS_WIDTH / 2.0) / math.tan(HFOV / 2.0)

_BG_ROWS = palette.background_rows(OBS_HEIGHT)
_BG_IMAGE = np.ascontiguousarray(
    np.broadcast_to(_BG_ROWS[:, None, :], (OBS_HEIGHT, OBS_WIDTH, 3)))
_BG_FLAT = np.ascontiguousarray(_BG_IMAGE.reshape(-1))
_INV_FAR = 1.0 / FAR

# dead/self rows collapse to a far-away point the frustum culls immediately
_SENTINEL = np.array([0.0, -1e6, 0.0])


@dataclass(frozen=True)
class Camera:
    position: np.ndarray  # eye point
    yaw: float
    pitch: float

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        cy, sy = math.cos(self.yaw), math.sin(self.yaw)
        cp, sp = math.cos(self.pitch), math.sin(self.pitch)
        fwd = np.array([cp * cy, sp, cp * sy])
        right = np.array([-sy, 0.0, cy])
        up = np.array([-cy * sp, cp, -sy * sp])
        return right, up, fwd

    @staticmethod
    def for_agent(agent: AgentState) -> "Camera":
        eye = agent.pose.position + np.array([0.0, EYE_HEIGHT, 0.0])
        return Camera(position=eye, yaw=agent.pose.yaw, pitch=agent.pose.pitch)


def new_observation() -> np.ndarray:
    return np.zeros((OBS_HEIGHT, OBS_WIDTH, 3), dtype=np.uint8)


def _static_rgb(geom: StaticGeometry) -> np.ndarray:
    rgb = getattr(geom, "_render_rgb", None)
    if rgb is None:
        rgb = palette.MATERIAL_RGB[geom.material]
        geom._render_rgb = rgb
    return rgb


def render_view(geom: StaticGeometry,
                objects: list[DynamicObject],
                other_agents: list[tuple[int, AgentState]],
                cam: Camera,
                out: np.ndarray | None = None,
                zbuf: np.ndarray | None = None,
                decor: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """Rasterize static boxes, object boxes, and other-agent boxes.

    `other_agents` carries (agent_index, state) so each agent keeps its
    palette color regardless of viewer identity.
    """
    if out is None:
        out = new_observation()
    if zbuf is None:
        zbuf = np.empty((OBS_HEIGHT, OBS_WIDTH), dtype=np.float64)
    out[:] = _BG_IMAGE
    zbuf[:] = _INV_FAR
    right, up, fwd = cam.basis()
    eye = np.ascontiguousarray(cam.position, dtype=np.float64)

    if len(geom) > 0:
        _kernels.raster_boxes(out, zbuf, geom.lo, geom.hi, _static_rgb(geom),
                              len(geom), eye, right, up, fwd,
                              PROJ_SCALE, NEAR, FAR)

    n_dyn = sum(1 for o in objects if o.alive) + len(other_agents)
    n_decor = 0 if decor is None else decor[0].shape[0]
    if n_dyn + n_decor > 0:
        lo = np.empty((n_dyn + n_decor, 3))
        hi = np.empty((n_dyn + n_decor, 3))
        rgb = np.empty((n_dyn + n_decor, 3))
        row = 0
        for obj in objects:
            if not obj.alive:
                continue
            lo[row] = obj.lo
            hi[row] = obj.hi
            rgb[row] = palette.object_color(obj)
            row += 1
        for idx, agent in other_agents:
            lo[row] = agent.box_lo()
            hi[row] = agent.box_hi()
            rgb[row] = palette.agent_color(idx)
            row += 1
        if decor is not None and n_decor:
            lo[row:row + n_decor] = decor[0]
            hi[row:row + n_decor] = decor[1]
            rgb[row:row + n_decor] = decor[2]
            row += n_decor
        _kernels.raster_boxes(out, zbuf, lo, hi, rgb, row,
                              eye, right, up, fwd, PROJ_SCALE, NEAR, FAR)
    return out


def render_row_count(state: EpisodeState) -> int:
    return (len(state.geom) + state.decor_lo.shape[0] + len(state.objects)
            + len(state.agents))


def build_render_rows(state: EpisodeState, lo: np.ndarray, hi: np.ndarray,
                      rgb: np.ndarray) -> None:
    """Fill a persistent row table: [static | decor | objects | agents].
    Static and decor rows plus every color never change afterwards; only the
    object and agent rows are rewritten per frame."""
    geom = state.geom
    n_static = len(geom)
    n_decor = state.decor_lo.shape[0]
    n_obj = len(state.objects)
    lo[:n_static] = geom.lo
    hi[:n_static] = geom.hi
    rgb[:n_static] = _static_rgb(geom)
    row = n_static
    lo[row:row + n_decor] = state.decor_lo
    hi[row:row + n_decor] = state.decor_hi
    rgb[row:row + n_decor] = state.decor_rgb
    row += n_decor
    state.render_obj_row = row
    rgb[row:row + n_obj] = state.obj_rgb
    row += n_obj
    state.render_agent_row = row
    for i in range(len(state.agents)):
        rgb[row + i] = palette.agent_color(i)
    state.render_lo = lo
    state.render_hi = hi
    state.render_rgb = rgb


def refresh_render_rows(state: EpisodeState) -> None:
    """Rewrite the object and agent rows from the packed physics arrays."""
    lo = state.render_lo
    hi = state.render_hi
    o0 = state.render_obj_row
    n_obj = len(state.objects)
    lo[o0:o0 + n_obj] = state.obj_lo
    hi[o0:o0 + n_obj] = state.obj_hi
    for oi, obj in enumerate(state.objects):
        if not obj.alive:
            lo[o0 + oi] = _SENTINEL
            hi[o0 + oi] = _SENTINEL
    a0 = state.render_agent_row
    n_agents = len(state.agents)
    lo[a0:a0 + n_agents] = state.agents_lo
    hi[a0:a0 + n_agents] = state.agents_hi


def render_agent_view(state: EpisodeState, agent_index: int,
                      out: np.ndarray | None = None,
                      zbuf: np.ndarray | None = None) -> np.ndarray:
    """Egocentric frame for one agent of an episode (self excluded)."""
    if state.render_lo is None:
        n = render_row_count(state)
        build_render_rows(state, np.empty((n, 3)), np.empty((n, 3)),
                          np.empty((n, 3)))
    if out is None:
        out = new_observation()
    if zbuf is None:
        zbuf = np.empty((OBS_HEIGHT, OBS_WIDTH), dtype=np.float64)
    out[:] = _BG_IMAGE
    zbuf[:] = _INV_FAR
    cam = Camera.for_agent(state.agents[agent_index])
    right, up, fwd = cam.basis()
    eye = np.ascontiguousarray(cam.position, dtype=np.float64)
    refresh_render_rows(state)
    _kernels.raster_boxes(out, zbuf, state.render_lo, state.render_hi,
                          state.render_rgb, state.render_lo.shape[0],
                          eye, right, up, fwd, PROJ_SCALE, NEAR, FAR,
                          state.render_agent_row + agent_index)
    return out


def overlay_hud(obs: np.ndarray, remaining_fraction: float) -> np.ndarray:
    """Opaque white time bar on rows 2..4; zero-length bars draw nothing."""
    if not 0.0 <= remaining_fraction <= 1.0:
        raise ContractViolation(
            f"remaining_fraction must be in [0, 1], got {remaining_fraction}")
    n = int(remaining_fraction * 100.0 + 0.5)
    if n > 0:
        obs[2:5, 2:3 + n] = 255
    return obs


def pixel_ray(cam: Camera, px: int, py: int) -> np.ndarray:
    """World-space unit direction through a pixel center (projection inverse)."""
    right, up, fwd = cam.basis()
    x = (px + 0.5 - OBS_WIDTH / 2.0) / PROJ_SCALE
    y = (OBS_HEIGHT / 2.0 - (py + 0.5)) / PROJ_SCALE
    d = fwd + x * right + y * up
    return d / np.linalg.norm(d)


def write_ppm(path, obs: np.ndarray) -> None:
    """Binary PPM (P6, 128 72, 255)."""
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (obs.shape[1], obs.shape[0]))
        fh.write(obs.tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P6":
            raise ValueError(f"not a binary PPM: {magic!r}")
        dims = fh.readline().split()
        maxval = fh.readline().strip()
        w, h = int(dims[0]), int(dims[1])
        if maxval != b"255":
            raise ValueError("only 8-bit PPM supported")
        data = fh.read(w * h * 3)
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w, 3)
