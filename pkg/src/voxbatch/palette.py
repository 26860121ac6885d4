"""Fixed color tables. Every constant here is part of the rendering contract:
golden-image tests depend on these exact values."""

from __future__ import annotations

import numpy as np

from .grid import DynamicObject, ObjectKind

# Static material palette (base RGB before face shading).
MAT_STONE = 0
MAT_FLOOR = 1
MAT_WALL = 2
MAT_LAVA_ROCK = 3
MAT_EXIT = 4
MAT_TARGET = 5
MAT_ZONE = 6
MAT_PLATFORM = 7
MAT_HEX_WALL = 8
MAT_PEDESTAL = 9
MAT_ACCENT = 10

MATERIAL_RGB = np.array([
    [128, 128, 132],   # stone
    [170, 168, 160],   # floor
    [154, 110, 86],    # wall
    [224, 66, 28],     # lava rock
    [66, 200, 90],     # exit pad
    [70, 120, 220],    # box target
    [228, 200, 60],    # build zone
    [140, 150, 158],   # raised platform
    [96, 104, 150],    # hex maze wall
    [190, 186, 178],   # pedestal
    [210, 120, 180],   # accent
], dtype=np.float64)

# Vertical background gradient, sky at row 0 down to the horizon tone.
SKY_TOP = np.array([104, 156, 240], dtype=np.float64)
SKY_HORIZON = np.array([206, 224, 248], dtype=np.float64)

COLLECTIBLE_COLORS = np.array([
    [240, 200, 60],
    [90, 200, 220],
    [230, 120, 200],
    [120, 230, 120],
    [250, 150, 80],
    [150, 150, 250],
], dtype=np.float64)

AGENT_COLORS = np.array([
    [250, 90, 70],
    [70, 110, 250],
    [250, 210, 60],
    [80, 230, 170],
    [230, 120, 250],
    [140, 250, 90],
    [250, 160, 120],
    [120, 200, 250],
], dtype=np.float64)

_OBJECT_BASE = {
    ObjectKind.MOVABLE_BOX: (196, 150, 92),
    ObjectKind.GREEN_DIAMOND: (52, 220, 80),
    ObjectKind.RED_DIAMOND: (228, 48, 48),
    ObjectKind.PINK_DIAMOND: (250, 110, 210),
}


def background_rows(height: int) -> np.ndarray:
    """Per-row background colors (uint8), linear sky-to-horizon ramp."""
    t = np.linspace(0.0, 1.0, height)[:, None]
    rows = SKY_TOP[None, :] * (1.0 - t) + SKY_HORIZON[None, :] * t
    return np.floor(rows + 0.5).astype(np.uint8)


def object_color(obj: DynamicObject) -> tuple[float, float, float]:
    if obj.kind == ObjectKind.COLLECTIBLE_SHAPE:
        c = COLLECTIBLE_COLORS[obj.color_id % len(COLLECTIBLE_COLORS)]
        return (float(c[0]), float(c[1]), float(c[2]))
    if obj.kind == ObjectKind.REARRANGE_ITEM:
        c = COLLECTIBLE_COLORS[obj.item_id % len(COLLECTIBLE_COLORS)]
        return (float(c[0]), float(c[1]), float(c[2]))
    return _OBJECT_BASE[obj.kind]


def agent_color(index: int) -> tuple[float, float, float]:
    c = AGENT_COLORS[index % len(AGENT_COLORS)]
    return (float(c[0]), float(c[1]), float(c[2]))
