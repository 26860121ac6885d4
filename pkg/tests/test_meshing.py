import numpy as np
import pytest

from voxbatch.grid import Aabb, SOLID_BASE, VoxelGrid, aabb_overlap, solid_code
from voxbatch.meshing import (
    collider_query, export_box_list, greedy_merge, geometry_from_boxes,
)


def random_grid(rng, p=0.4, n=8, materials=2):
    g = VoxelGrid(n, n, n)
    solid = rng.random((n, n, n)) < p
    mats = rng.integers(0, materials, size=(n, n, n))
    for x in range(n):
        for y in range(n):
            for z in range(n):
                if solid[x, y, z]:
                    g.set(x, y, z, solid_code(int(mats[x, y, z])))
    return g


def brute_force_cover_ok(grid, geom):
    """Per-cell oracle: solid cells covered exactly once, others never."""
    nx, ny, nz = grid.dims
    count = np.zeros((nx, ny, nz), dtype=int)
    for box, _mat in geom.boxes():
        x0, y0, z0 = (int(v) for v in box.min)
        x1, y1, z1 = (int(v) for v in box.max)
        count[x0:x1, y0:y1, z0:z1] += 1
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                want = 1 if grid.get(x, y, z) >= SOLID_BASE else 0
                if count[x, y, z] != want:
                    return False
    return True


def test_single_cell_single_box():
    g = VoxelGrid(4, 4, 4)
    g.set(1, 2, 3, solid_code(0))
    geom = greedy_merge(g)
    assert len(geom) == 1
    box, mat = geom.boxes()[0]
    assert box.min == (1.0, 2.0, 3.0)
    assert box.max == (2.0, 3.0, 4.0)
    assert mat == 0


def test_adjacent_run_merges():
    g = VoxelGrid(4, 4, 4)
    g.set(0, 0, 0, solid_code(1))
    g.set(1, 0, 0, solid_code(1))
    geom = greedy_merge(g)
    assert len(geom) == 1
    box, _ = geom.boxes()[0]
    assert box.min == (0.0, 0.0, 0.0)
    assert box.max == (2.0, 1.0, 1.0)


def test_l_shape_two_boxes_under_scan_order():
    # cells {(0,0,0), (1,0,0), (0,0,1)}: the x-run claims the first two, the
    # z extension fails at (1,0,1), so the remaining cell becomes box 2
    g = VoxelGrid(3, 3, 3)
    for cell in [(0, 0, 0), (1, 0, 0), (0, 0, 1)]:
        g.set(*cell, solid_code(0))
    geom = greedy_merge(g)
    boxes = [b for b, _ in geom.boxes()]
    assert len(boxes) == 2
    assert boxes[0].min == (0.0, 0.0, 0.0) and boxes[0].max == (2.0, 1.0, 1.0)
    assert boxes[1].min == (0.0, 0.0, 1.0) and boxes[1].max == (1.0, 1.0, 2.0)


def test_cross_material_runs_do_not_merge():
    g = VoxelGrid(4, 1, 1)
    g.set(0, 0, 0, solid_code(0))
    g.set(1, 0, 0, solid_code(1))
    geom = greedy_merge(g)
    assert len(geom) == 2


def test_full_cube_one_box():
    g = VoxelGrid(8, 8, 8)
    g.fill((0, 0, 0), (8, 8, 8), solid_code(3))
    geom = greedy_merge(g)
    assert len(geom) == 1
    box, mat = geom.boxes()[0]
    assert box.min == (0.0, 0.0, 0.0) and box.max == (8.0, 8.0, 8.0)
    assert mat == 3


def test_random_grids_exact_cover_and_disjoint(rng):
    for trial in range(100):
        g = random_grid(rng)
        geom = greedy_merge(g)
        assert brute_force_cover_ok(g, geom)
        assert len(geom) <= g.solid_count()
        lo, hi = geom.lo, geom.hi
        for i in range(len(geom)):
            separated = np.any(hi[i] <= lo, axis=1) | np.any(hi <= lo[i], axis=1)
            separated[i] = True
            assert separated.all()


def test_merge_deterministic(rng):
    g = random_grid(rng)
    a = greedy_merge(g)
    b = greedy_merge(g)
    assert np.array_equal(a.lo, b.lo)
    assert np.array_equal(a.hi, b.hi)
    assert np.array_equal(a.material, b.material)


def test_solid_count_invariant_across_meshing(rng):
    g = random_grid(rng)
    before = g.solid_count()
    geom = greedy_merge(g)
    assert g.solid_count() == before
    covered = sum((b.max[0] - b.min[0]) * (b.max[1] - b.min[1])
                  * (b.max[2] - b.min[2]) for b, _ in geom.boxes())
    assert covered == before


def test_collider_query_probe_outside_grid():
    g = VoxelGrid(4, 4, 4)
    g.fill((0, 0, 0), (4, 4, 4), solid_code(0))
    geom = greedy_merge(g)
    assert collider_query(geom, Aabb((10, 10, 10), (11, 11, 11))) == []


def test_collider_query_exact_box():
    g = VoxelGrid(4, 4, 4)
    g.set(1, 1, 1, solid_code(0))
    geom = greedy_merge(g)
    hits = collider_query(geom, Aabb((1.0, 1.0, 1.0), (2.0, 2.0, 2.0)))
    assert len(hits) == 1
    assert hits[0].min == (1.0, 1.0, 1.0)


def test_collider_query_matches_linear_scan(rng):
    g = random_grid(rng, n=8)
    geom = greedy_merge(g)
    boxes = geom.boxes()
    for _ in range(10000):
        lo = rng.uniform(-2, 9, 3)
        probe = Aabb.from_arrays(lo, lo + rng.uniform(0.1, 3, 3))
        got = {(h.min, h.max) for h in collider_query(geom, probe)}
        want = {(b.min, b.max) for b, _ in boxes if aabb_overlap(b, probe)}
        assert got == want


def test_merged_collision_semantics_match_per_voxel(rng):
    g = random_grid(rng, n=8)
    geom = greedy_merge(g)
    for _ in range(1000):
        lo = rng.uniform(-1, 8, 3)
        probe = Aabb.from_arrays(lo, lo + rng.uniform(0.1, 2, 3))
        blocked_merged = len(collider_query(geom, probe)) > 0
        blocked_voxel = False
        for x in range(int(np.floor(probe.min[0])), int(np.ceil(probe.max[0]))):
            for y in range(int(np.floor(probe.min[1])), int(np.ceil(probe.max[1]))):
                for z in range(int(np.floor(probe.min[2])), int(np.ceil(probe.max[2]))):
                    if g.get(x, y, z) >= SOLID_BASE and aabb_overlap(
                            probe, Aabb((x, y, z), (x + 1, y + 1, z + 1))):
                        blocked_voxel = True
        assert blocked_merged == blocked_voxel


def test_export_box_list_format():
    g = VoxelGrid(3, 3, 3)
    g.set(0, 0, 0, solid_code(2))
    geom = greedy_merge(g)
    text = export_box_list(geom)
    assert text == "box 0 0 0 1 1 1 2\n"


def test_geometry_from_boxes_collides():
    geom = geometry_from_boxes([(np.array([0.0, 0, 0]), np.array([4.0, 0.4, 4]), 0)],
                               dims=(4, 4, 4))
    assert len(collider_query(geom, Aabb((1, 0.2, 1), (2, 1, 2)))) == 1
