"""Merge adjacent solid voxels into disjoint boxes for collision and rendering.

Trigger cells (lava, exit pads, box targets, build zones) are deliberately
not meshed: each one becomes an identity-preserving TriggerVolume instead,
since gameplay needs to know which cell fired.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .grid import Aabb, SOLID_BASE, VoxelGrid, aabb_overlap

HASH_BUCKET_SIZE = 4.0

TRIGGER_KINDS = (1, 2, 3, 4)  # LAVA, EXIT_PAD, BOX_TARGET, BUILD_ZONE


@dataclass(frozen=True)
class TriggerVolume:
    kind: int                      # cell code (LAVA / EXIT_PAD / ...)
    cell: tuple[int, int, int]
    lo: np.ndarray
    hi: np.ndarray


@dataclass
class StaticGeometry:
    """Disjoint solid boxes exactly covering the grid's solid cells."""

    lo: np.ndarray                 # (n, 3) float64 world-space box minima
    hi: np.ndarray                 # (n, 3)
    material: np.ndarray           # (n,) int32
    source_dims: tuple[int, int, int]
    triggers: list[TriggerVolume] = field(default_factory=list)
    # uniform spatial hash (CSR layout over a dense bucket grid)
    bucket_start: np.ndarray = field(default=None, repr=False)
    bucket_items: np.ndarray = field(default=None, repr=False)
    bucket_dims: tuple[int, int, int] = (0, 0, 0)

    def __len__(self) -> int:
        return self.lo.shape[0]

    def boxes(self) -> list[tuple[Aabb, int]]:
        return [(Aabb.from_arrays(self.lo[i], self.hi[i]), int(self.material[i]))
                for i in range(len(self))]


def greedy_merge(grid: VoxelGrid) -> StaticGeometry:
    """Deterministic exact cover of solid cells by disjoint boxes."""
    cells = _kernels.greedy_merge_cells(grid.cells)
    n = cells.shape[0]
    lo = np.empty((n, 3), dtype=np.float64)
    hi = np.empty((n, 3), dtype=np.float64)
    lo[:, 0] = cells[:, 0]
    lo[:, 1] = cells[:, 1]
    lo[:, 2] = cells[:, 2]
    hi[:, 0] = cells[:, 3]
    hi[:, 1] = cells[:, 4]
    hi[:, 2] = cells[:, 5]
    material = cells[:, 6].astype(np.int32)
    geom = StaticGeometry(lo=lo, hi=hi, material=material, source_dims=grid.dims)
    geom.triggers = _collect_triggers(grid)
    _build_hash(geom)
    return geom


def _collect_triggers(grid: VoxelGrid) -> list[TriggerVolume]:
    out = []
    codes = grid.cells
    for kind in TRIGGER_KINDS:
        xs, zs, ys = np.nonzero(codes == kind)
        for ix, iy, iz in zip(xs.tolist(), ys.tolist(), zs.tolist()):
            out.append(TriggerVolume(
                kind=kind,
                cell=(ix, iy, iz),
                lo=np.array([ix, iy, iz], dtype=np.float64),
                hi=np.array([ix + 1, iy + 1, iz + 1], dtype=np.float64),
            ))
    return out


def _build_hash(geom: StaticGeometry) -> None:
    nx, ny, nz = geom.source_dims
    bnx = max(1, int(np.ceil(nx / HASH_BUCKET_SIZE)))
    bny = max(1, int(np.ceil(ny / HASH_BUCKET_SIZE)))
    bnz = max(1, int(np.ceil(nz / HASH_BUCKET_SIZE)))
    n_buckets = bnx * bny * bnz
    entries: list[tuple[int, int]] = []
    for i in range(len(geom)):
        bx0 = int(geom.lo[i, 0] // HASH_BUCKET_SIZE)
        by0 = int(geom.lo[i, 1] // HASH_BUCKET_SIZE)
        bz0 = int(geom.lo[i, 2] // HASH_BUCKET_SIZE)
        bx1 = int((geom.hi[i, 0] - 1e-9) // HASH_BUCKET_SIZE)
        by1 = int((geom.hi[i, 1] - 1e-9) // HASH_BUCKET_SIZE)
        bz1 = int((geom.hi[i, 2] - 1e-9) // HASH_BUCKET_SIZE)
        for bx in range(bx0, bx1 + 1):
            for bz in range(bz0, bz1 + 1):
                for by in range(by0, by1 + 1):
                    entries.append(((bx * bnz + bz) * bny + by, i))
    counts = np.zeros(n_buckets + 1, dtype=np.int32)
    for b, _ in entries:
        counts[b + 1] += 1
    start = np.cumsum(counts).astype(np.int32)
    items = np.empty(len(entries), dtype=np.int32)
    cursor = start[:-1].copy()
    for b, i in entries:
        items[cursor[b]] = i
        cursor[b] += 1
    geom.bucket_start = start
    geom.bucket_items = items
    geom.bucket_dims = (bnx, bny, bnz)


def collider_query(geom: StaticGeometry, probe: Aabb) -> list[Aabb]:
    """Every static box overlapping the probe (equals the naive all-pairs scan)."""
    idx = collider_query_indices(geom, np.asarray(probe.min, dtype=np.float64),
                                 np.asarray(probe.max, dtype=np.float64))
    return [Aabb.from_arrays(geom.lo[i], geom.hi[i]) for i in idx]


def collider_query_indices(geom: StaticGeometry, qlo: np.ndarray, qhi: np.ndarray) -> list[int]:
    if len(geom) == 0:
        return []
    # a box appears once per bucket it spans, so the total CSR entry count
    # bounds any query's candidate list
    buf = np.empty(max(16, geom.bucket_items.shape[0]), dtype=np.int32)
    bnx, bny, bnz = geom.bucket_dims
    n = _kernels.hash_candidates(qlo, qhi, geom.bucket_start, geom.bucket_items,
                                 bnx, bny, bnz, HASH_BUCKET_SIZE, buf)
    seen: set[int] = set()
    out: list[int] = []
    for i in buf[:n].tolist():
        if i in seen:
            continue
        seen.add(i)
        if np.all(qlo < geom.hi[i]) and np.all(geom.lo[i] < qhi):
            out.append(i)
    out.sort()
    return out


def geometry_from_boxes(boxes: list[tuple[np.ndarray, np.ndarray, int]],
                        dims: tuple[int, int, int]) -> StaticGeometry:
    """Collision geometry from explicit (lo, hi, material) boxes, bypassing
    the grid. For custom colliders and tests; such geometry has no exact-cover
    relation to any voxel grid."""
    n = len(boxes)
    lo = np.zeros((n, 3))
    hi = np.zeros((n, 3))
    material = np.zeros(n, dtype=np.int32)
    for i, (b_lo, b_hi, mat) in enumerate(boxes):
        lo[i] = b_lo
        hi[i] = b_hi
        material[i] = mat
    geom = StaticGeometry(lo=lo, hi=hi, material=material, source_dims=dims)
    _build_hash(geom)
    return geom


def export_box_list(geom: StaticGeometry) -> str:
    """Plain-text debug dump: one `box minx miny minz maxx maxy maxz material`
    line per merged box."""
    lines = []
    for i in range(len(geom)):
        lines.append("box {:g} {:g} {:g} {:g} {:g} {:g} {}".format(
            geom.lo[i, 0], geom.lo[i, 1], geom.lo[i, 2],
            geom.hi[i, 0], geom.hi[i, 1], geom.hi[i, 2],
            int(geom.material[i])))
    return "\n".join(lines) + ("\n" if lines else "")


def verify_exact_cover(grid: VoxelGrid, geom: StaticGeometry) -> bool:
    """Debug helper: every solid cell covered exactly once, others not at all."""
    nx, ny, nz = grid.dims
    cover = np.zeros((nx, nz, ny), dtype=np.int32)
    for i in range(len(geom)):
        x0, y0, z0 = (int(v) for v in geom.lo[i])
        x1, y1, z1 = (int(v) for v in geom.hi[i])
        cover[x0:x1, z0:z1, y0:y1] += 1
    solid = grid.cells >= SOLID_BASE
    return bool(np.all(cover[solid] == 1) and np.all(cover[~solid] == 0))
