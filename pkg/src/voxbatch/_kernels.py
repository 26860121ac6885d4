"""Numba-compiled inner loops: meshing scan, collision sweeps, raycasts,
and the triangle rasterizer. All kernels release the GIL so vec-env worker
threads scale on CPU; none of them uses threading internally, keeping every
per-frame result bit-reproducible.
"""

from __future__ import annotations

import numpy as np
from numba import njit

SOLID_BASE = 8  # mirrors grid.SOLID_BASE; kernels must not import package modules

_EPS = 1e-9


# --------------------------------------------------------------------------
# Greedy merge: scan cells in (y, z, x) order, grow a run along x, widen it
# along z, then raise it along y. cells is indexed [ix, iz, iy].
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def greedy_merge_cells(cells):
    nx, nz, ny = cells.shape
    visited = np.zeros((nx, nz, ny), dtype=np.uint8)
    max_boxes = 0
    for i in range(nx):
        for k in range(nz):
            for j in range(ny):
                if cells[i, k, j] >= SOLID_BASE:
                    max_boxes += 1
    out = np.empty((max_boxes, 7), dtype=np.int32)  # x0,y0,z0,x1,y1,z1,material
    count = 0
    for y in range(ny):
        for z in range(nz):
            for x in range(nx):
                code = cells[x, z, y]
                if code < SOLID_BASE or visited[x, z, y]:
                    continue
                # run along x
                w = 1
                while x + w < nx and cells[x + w, z, y] == code and not visited[x + w, z, y]:
                    w += 1
                # widen along z
                d = 1
                while z + d < nz:
                    ok = True
                    for dx in range(w):
                        if cells[x + dx, z + d, y] != code or visited[x + dx, z + d, y]:
                            ok = False
                            break
                    if not ok:
                        break
                    d += 1
                # raise along y
                h = 1
                while y + h < ny:
                    ok = True
                    for dz in range(d):
                        for dx in range(w):
                            if cells[x + dx, z + dz, y + h] != code or visited[x + dx, z + dz, y + h]:
                                ok = False
                                break
                        if not ok:
                            break
                    if not ok:
                        break
                    h += 1
                for dy in range(h):
                    for dz in range(d):
                        for dx in range(w):
                            visited[x + dx, z + dz, y + dy] = 1
                out[count, 0] = x
                out[count, 1] = y
                out[count, 2] = z
                out[count, 3] = x + w
                out[count, 4] = y + h
                out[count, 5] = z + d
                out[count, 6] = code - SOLID_BASE
                count += 1
    return out[:count]


# --------------------------------------------------------------------------
# Uniform spatial hash over static boxes (bucket edge = 4.0 world units).
# Buckets are a dense grid addressed (bx*bnz + bz)*bny + by with CSR payload.
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def hash_candidates(qlo, qhi, bucket_start, bucket_items, bnx, bny, bnz, bucket_size, out):
    """Collect candidate box indices for a query AABB (may contain duplicates)."""
    bx0 = int(np.floor(qlo[0] / bucket_size))
    by0 = int(np.floor(qlo[1] / bucket_size))
    bz0 = int(np.floor(qlo[2] / bucket_size))
    bx1 = int(np.floor((qhi[0] - _EPS) / bucket_size))
    by1 = int(np.floor((qhi[1] - _EPS) / bucket_size))
    bz1 = int(np.floor((qhi[2] - _EPS) / bucket_size))
    if bx1 < 0 or by1 < 0 or bz1 < 0 or bx0 >= bnx or by0 >= bny or bz0 >= bnz:
        return 0
    bx0 = max(bx0, 0)
    by0 = max(by0, 0)
    bz0 = max(bz0, 0)
    bx1 = min(bx1, bnx - 1)
    by1 = min(by1, bny - 1)
    bz1 = min(bz1, bnz - 1)
    n = 0
    for bx in range(bx0, bx1 + 1):
        for bz in range(bz0, bz1 + 1):
            for by in range(by0, by1 + 1):
                b = (bx * bnz + bz) * bny + by
                for s in range(bucket_start[b], bucket_start[b + 1]):
                    if n < out.shape[0]:
                        out[n] = bucket_items[s]
                    n += 1
    return n


@njit(cache=True, nogil=True)
def sweep_axis_hashed(lo, hi, axis, delta, skin,
                      s_lo, s_hi, bucket_start, bucket_items, bnx, bny, bnz, bucket_size):
    """Allowed displacement along one axis against hashed static boxes.

    Returns (allowed, hit) where allowed has the sign of delta and |allowed|
    <= |delta|; contact leaves a gap of `skin`.
    """
    if delta == 0.0:
        return 0.0, False
    qlo0 = lo[0]
    qlo1 = lo[1]
    qlo2 = lo[2]
    qhi0 = hi[0]
    qhi1 = hi[1]
    qhi2 = hi[2]
    if axis == 0:
        if delta > 0.0:
            qhi0 += delta
        else:
            qlo0 += delta
    elif axis == 1:
        if delta > 0.0:
            qhi1 += delta
        else:
            qlo1 += delta
    else:
        if delta > 0.0:
            qhi2 += delta
        else:
            qlo2 += delta

    bx0 = int(np.floor(qlo0 / bucket_size))
    by0 = int(np.floor(qlo1 / bucket_size))
    bz0 = int(np.floor(qlo2 / bucket_size))
    bx1 = int(np.floor((qhi0 - _EPS) / bucket_size))
    by1 = int(np.floor((qhi1 - _EPS) / bucket_size))
    bz1 = int(np.floor((qhi2 - _EPS) / bucket_size))
    if bx1 < 0 or by1 < 0 or bz1 < 0 or bx0 >= bnx or by0 >= bny or bz0 >= bnz:
        return delta, False
    bx0 = max(bx0, 0)
    by0 = max(by0, 0)
    bz0 = max(bz0, 0)
    bx1 = min(bx1, bnx - 1)
    by1 = min(by1, bny - 1)
    bz1 = min(bz1, bnz - 1)

    allowed = delta
    hit = False
    for bx in range(bx0, bx1 + 1):
        for bz in range(bz0, bz1 + 1):
            for by in range(by0, by1 + 1):
                b = (bx * bnz + bz) * bny + by
                for s in range(bucket_start[b], bucket_start[b + 1]):
                    idx = bucket_items[s]
                    a, h = _axis_gap(lo, hi, axis, allowed, skin, s_lo[idx], s_hi[idx])
                    if h:
                        allowed = a
                        hit = True
    return allowed, hit




@njit(cache=True, nogil=True, inline="always")
def _axis_gap(lo, hi, axis, allowed, skin, b_lo, b_hi):
    """Clip `allowed` against one obstacle box; requires strict overlap on
    the two non-sweep axes (touching faces slide past freely)."""
    for k in range(3):
        if k == axis:
            continue
        if lo[k] >= b_hi[k] - _EPS or b_lo[k] >= hi[k] - _EPS:
            return allowed, False
    if allowed > 0.0:
        gap = b_lo[axis] - hi[axis]
        if gap >= allowed:
            return allowed, False
        if gap < -_EPS:
            if b_hi[axis] > lo[axis] + _EPS:
                return 0.0, True  # already interpenetrating; do not deepen
            return allowed, False  # obstacle fully behind
        a = gap - skin
        if a < 0.0:
            a = 0.0
        return a, True
    else:
        gap = b_hi[axis] - lo[axis]  # negative when obstacle is below/behind
        if gap <= allowed:
            return allowed, False
        if gap > _EPS:
            if b_lo[axis] < hi[axis] - _EPS:
                return 0.0, True
            return allowed, False
        a = gap + skin
        if a > 0.0:
            a = 0.0
        return a, True


@njit(cache=True, nogil=True)
def boxes_overlap_any(lo, hi, o_lo, o_hi, active):
    """Index of the first active box strictly overlapping [lo,hi], else -1."""
    for i in range(o_lo.shape[0]):
        if not active[i]:
            continue
        ok = True
        for k in range(3):
            if lo[k] >= o_hi[i, k] - 0.0 or o_lo[i, k] >= hi[k] - 0.0:
                ok = False
                break
        if ok:
            return i
    return -1


@njit(cache=True, nogil=True)
def max_penetration(lo, hi, o_lo, o_hi, active):
    """Largest mutual penetration depth between [lo,hi] and any active box."""
    worst = 0.0
    for i in range(o_lo.shape[0]):
        if not active[i]:
            continue
        depth = 1e30
        for k in range(3):
            d = min(hi[k], o_hi[i, k]) - max(lo[k], o_lo[i, k])
            if d < depth:
                depth = d
        if depth > worst:
            worst = depth
    return worst


# --------------------------------------------------------------------------
# Whole-agent step kernel: movement, step-up, carried tracking, touches,
# trigger transitions, void detection for every agent of one environment in
# index order, in a single GIL-free call. Event rows are (etype, agent,
# payload): 0 trigger-entered, 1 touched, 2 push-attempt, 3 void-fall.
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True, inline="always")
def _sweep_sets(lo, hi, axis, delta, skin,
                s_lo, s_hi, bucket_start, bucket_items, bnx, bny, bnz, bsize,
                o_lo, o_hi, o_active, a_lo, a_hi, a_active, self_idx):
    if delta == 0.0:
        return 0.0, False, -1
    allowed, hit_s = sweep_axis_hashed(lo, hi, axis, delta, skin,
                                       s_lo, s_hi, bucket_start, bucket_items,
                                       bnx, bny, bnz, bsize)
    blocked = hit_s
    binding = -1
    for i in range(o_lo.shape[0]):
        if not o_active[i]:
            continue
        a, h = _axis_gap(lo, hi, axis, allowed, skin, o_lo[i], o_hi[i])
        if h:
            allowed = a
            binding = i
            blocked = True
    for i in range(a_lo.shape[0]):
        if i == self_idx or not a_active[i]:
            continue
        a, h = _axis_gap(lo, hi, axis, allowed, skin, a_lo[i], a_hi[i])
        if h:
            allowed = a
            binding = -1
            blocked = True
    return allowed, blocked, binding


@njit(cache=True, nogil=True)
def agents_step(agent_arr, actions,
                move_speed, strafe_speed, turn_rate, gaze_rate, gravity,
                jump_velocity, dt, step_height, skin, ground_probe, void_y,
                pitch_limit, carry_forward, carry_height, push_mode,
                s_lo, s_hi, bucket_start, bucket_items, bnx, bny, bnz, bsize,
                obj_lo, obj_hi, obj_block, obj_collect,
                agents_lo, agents_hi, agent_mask,
                trig_lo, trig_hi, trig_prev,
                events):
    """agent_arr rows: x, y, z, yaw, pitch, vv, grounded, carrying_index."""
    n_events = 0
    two_pi = 2.0 * np.pi
    n_agents = agent_arr.shape[0]
    for ai in range(n_agents):
        move = actions[ai, 0]
        strafe = actions[ai, 1]
        turn = actions[ai, 2]
        gaze = actions[ai, 3]
        jump = actions[ai, 4]

        yaw = agent_arr[ai, 3]
        pitch = agent_arr[ai, 4]
        if turn == 1:
            yaw += turn_rate * dt
        elif turn == 2:
            yaw -= turn_rate * dt
        yaw = yaw % two_pi
        if gaze == 1:
            pitch += gaze_rate * dt
        elif gaze == 2:
            pitch -= gaze_rate * dt
        if pitch > pitch_limit:
            pitch = pitch_limit
        elif pitch < -pitch_limit:
            pitch = -pitch_limit
        agent_arr[ai, 3] = yaw
        agent_arr[ai, 4] = pitch

        fx = np.cos(yaw)
        fz = np.sin(yaw)
        ms = 0.0
        if move == 1:
            ms = move_speed
        elif move == 2:
            ms = -move_speed
        ss = 0.0
        if strafe == 1:
            ss = strafe_speed
        elif strafe == 2:
            ss = -strafe_speed
        vx = ms * fx + ss * fz
        vz = ms * fz - ss * fx

        grounded = agent_arr[ai, 6] > 0.5
        vv = agent_arr[ai, 5]
        if grounded and jump == 1:
            vv = jump_velocity
            grounded = False
        elif not grounded:
            vv += gravity * dt

        lo = agents_lo[ai]
        hi = agents_hi[ai]

        for axis_pick in range(2):
            axis = 0 if axis_pick == 0 else 2
            desired = (vx if axis == 0 else vz) * dt
            if desired == 0.0:
                continue
            allowed, blocked, binding = _sweep_sets(
                lo, hi, axis, desired, skin,
                s_lo, s_hi, bucket_start, bucket_items, bnx, bny, bnz, bsize,
                obj_lo, obj_hi, obj_block, agents_lo, agents_hi, agent_mask, ai)
            agent_arr[ai, axis] += allowed
            lo[axis] += allowed
            hi[axis] += allowed
            if blocked and abs(allowed) < abs(desired) - 1e-9:
                remaining = desired - allowed
                if push_mode == 1 and binding >= 0:
                    code = binding * 8 + (0 if axis == 0 else 2)
                    if remaining > 0:
                        code += 1
                    events[n_events, 0] = 2
                    events[n_events, 1] = ai
                    events[n_events, 2] = code
                    n_events += 1
                elif grounded:
                    # step-up: lift, retry the remainder, settle
                    up, _, _ = _sweep_sets(
                        lo, hi, 1, step_height, skin,
                        s_lo, s_hi, bucket_start, bucket_items, bnx, bny, bnz,
                        bsize, obj_lo, obj_hi, obj_block,
                        agents_lo, agents_hi, agent_mask, ai)
                    if up >= 1e-6:
                        lo[1] += up
                        hi[1] += up
                        gained, _, _ = _sweep_sets(
                            lo, hi, axis, remaining, skin,
                            s_lo, s_hi, bucket_start, bucket_items,
                            bnx, bny, bnz, bsize, obj_lo, obj_hi, obj_block,
                            agents_lo, agents_hi, agent_mask, ai)
                        if abs(gained) <= 1e-9:
                            lo[1] -= up
                            hi[1] -= up
                        else:
                            lo[axis] += gained
                            hi[axis] += gained
                            down, hit_down, _ = _sweep_sets(
                                lo, hi, 1, -up, skin,
                                s_lo, s_hi, bucket_start, bucket_items,
                                bnx, bny, bnz, bsize, obj_lo, obj_hi, obj_block,
                                agents_lo, agents_hi, agent_mask, ai)
                            lo[1] += down
                            hi[1] += down
                            agent_arr[ai, axis] += gained
                            agent_arr[ai, 1] += up + down
                            if hit_down:
                                grounded = True
                                vv = 0.0

        dy = vv * dt
        if grounded and dy == 0.0:
            dy = -ground_probe
        if dy != 0.0:
            allowed, blocked, _ = _sweep_sets(
                lo, hi, 1, dy, skin,
                s_lo, s_hi, bucket_start, bucket_items, bnx, bny, bnz, bsize,
                obj_lo, obj_hi, obj_block, agents_lo, agents_hi, agent_mask, ai)
            agent_arr[ai, 1] += allowed
            lo[1] += allowed
            hi[1] += allowed
            if dy < 0.0:
                if blocked:
                    grounded = True
                    vv = 0.0
                else:
                    grounded = False
            elif blocked:
                vv = 0.0
        agent_arr[ai, 5] = vv
        agent_arr[ai, 6] = 1.0 if grounded else 0.0

        carrying = int(agent_arr[ai, 7])
        if carrying >= 0:
            half_x = (obj_hi[carrying, 0] - obj_lo[carrying, 0]) * 0.5
            half_y = (obj_hi[carrying, 1] - obj_lo[carrying, 1]) * 0.5
            half_z = (obj_hi[carrying, 2] - obj_lo[carrying, 2]) * 0.5
            cx = agent_arr[ai, 0] + fx * carry_forward
            cy = agent_arr[ai, 1] + carry_height + half_y
            cz = agent_arr[ai, 2] + fz * carry_forward
            obj_lo[carrying, 0] = cx - half_x
            obj_lo[carrying, 1] = cy - half_y
            obj_lo[carrying, 2] = cz - half_z
            obj_hi[carrying, 0] = cx + half_x
            obj_hi[carrying, 1] = cy + half_y
            obj_hi[carrying, 2] = cz + half_z

        for oi in range(obj_lo.shape[0]):
            if not obj_collect[oi]:
                continue
            inside = True
            for k in range(3):
                if lo[k] >= obj_hi[oi, k] or obj_lo[oi, k] >= hi[k]:
                    inside = False
                    break
            if inside:
                events[n_events, 0] = 1
                events[n_events, 1] = ai
                events[n_events, 2] = oi
                n_events += 1

        for ti in range(trig_lo.shape[0]):
            inside = True
            for k in range(3):
                if lo[k] >= trig_hi[ti, k] or trig_lo[ti, k] >= hi[k]:
                    inside = False
                    break
            if inside:
                if trig_prev[ai, ti] == 0:
                    events[n_events, 0] = 0
                    events[n_events, 1] = ai
                    events[n_events, 2] = ti
                    n_events += 1
                trig_prev[ai, ti] = 1
            else:
                trig_prev[ai, ti] = 0

        if agent_arr[ai, 1] < void_y:
            events[n_events, 0] = 3
            events[n_events, 1] = ai
            events[n_events, 2] = 0
            n_events += 1
    return n_events


@njit(cache=True, nogil=True)
def envs_step(env_ids, agent_arr, actions,
              move_speed, strafe_speed, turn_rate, gaze_rate, gravity,
              jump_velocity, dt, step_height, skin, ground_probe, void_y,
              pitch_limit, carry_forward, carry_height, push_mode,
              s_lo, s_hi, bucket_start, bucket_items, bdims, bsize,
              obj_lo, obj_hi, obj_block, obj_collect, obj_n,
              agents_lo, agents_hi, agent_mask,
              trig_lo, trig_hi, trig_n, trig_prev,
              events, events_n):
    """One worker's environments, stepped back to back without the GIL.

    All env-indexed arrays are fixed-stride slabs; per-env prefixes hold the
    live data (obj_n / trig_n give the prefix lengths).
    """
    for idx in range(env_ids.shape[0]):
        e = env_ids[idx]
        k = obj_n[e]
        t = trig_n[e]
        n = agents_step(
            agent_arr[e], actions[e],
            move_speed, strafe_speed, turn_rate, gaze_rate, gravity,
            jump_velocity, dt, step_height, skin, ground_probe, void_y,
            pitch_limit, carry_forward, carry_height, push_mode,
            s_lo[e], s_hi[e], bucket_start[e], bucket_items[e],
            bdims[e, 0], bdims[e, 1], bdims[e, 2], bsize,
            obj_lo[e, :k], obj_hi[e, :k], obj_block[e, :k], obj_collect[e, :k],
            agents_lo[e], agents_hi[e], agent_mask,
            trig_lo[e, :t], trig_hi[e, :t], trig_prev[e, :, :t],
            events[e])
        events_n[e] = n


# --------------------------------------------------------------------------
# Raycast (slab method)
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def ray_boxes(origin, direction, max_dist, lo, hi, active):
    """Nearest slab-method intersection; returns (t, index) with index -1 on miss."""
    best_t = max_dist
    best = -1
    for i in range(lo.shape[0]):
        if not active[i]:
            continue
        tmin = 0.0
        tmax = best_t
        ok = True
        for k in range(3):
            d = direction[k]
            if abs(d) < 1e-12:
                if origin[k] < lo[i, k] or origin[k] > hi[i, k]:
                    ok = False
                    break
            else:
                inv = 1.0 / d
                t0 = (lo[i, k] - origin[k]) * inv
                t1 = (hi[i, k] - origin[k]) * inv
                if t0 > t1:
                    t0, t1 = t1, t0
                if t0 > tmin:
                    tmin = t0
                if t1 < tmax:
                    tmax = t1
                if tmin > tmax:
                    ok = False
                    break
        if ok and tmin < best_t:
            best_t = tmin
            best = i
    return best_t, best


# --------------------------------------------------------------------------
# Rasterizer: z-buffered, flat-shaded cuboids, perspective pinhole camera.
# --------------------------------------------------------------------------

# Corner index bits: 0 -> x, 1 -> y, 2 -> z (bit set selects hi).
_FACE_CORNERS = np.array([
    [1, 5, 7, 3],  # +X
    [0, 2, 6, 4],  # -X
    [2, 3, 7, 6],  # +Y
    [0, 4, 5, 1],  # -Y
    [4, 6, 7, 5],  # +Z
    [0, 1, 3, 2],  # -Z
], dtype=np.int64)

_FACE_AXIS = np.array([0, 0, 1, 1, 2, 2], dtype=np.int64)
_FACE_SIGN = np.array([1, -1, 1, -1, 1, -1], dtype=np.int64)
# top 1.0, bottom 0.5, x-faces 0.8, z-faces 0.65
_FACE_SHADE = np.array([0.8, 0.8, 1.0, 0.5, 0.65, 0.65], dtype=np.float64)


@njit(cache=True, nogil=True)
def raster_boxes(img, zbuf,
                 lo, hi, rgb, n_boxes,
                 eye, right, up, fwd,
                 proj_scale, near, far, skip_idx=-1):
    """Rasterize axis-aligned boxes into img (H,W,3 uint8).

    proj_scale is (W/2)/tan(hfov/2); square pixels. zbuf stores 1/z and must
    be preset to 1/far. skip_idx suppresses one row (the viewer's own box).
    """
    h_px = img.shape[0]
    w_px = img.shape[1]
    cx_screen = w_px * 0.5
    cy_screen = h_px * 0.5
    tan_h = cx_screen / proj_scale        # tan(hfov/2)
    tan_v = cy_screen / proj_scale

    corners = np.empty((8, 3), dtype=np.float64)
    poly = np.empty((8, 3), dtype=np.float64)
    clipped = np.empty((8, 3), dtype=np.float64)
    sx = np.empty(8, dtype=np.float64)
    sy = np.empty(8, dtype=np.float64)
    sw = np.empty(8, dtype=np.float64)

    for b in range(n_boxes):
        if b == skip_idx:
            continue
        # bounding-sphere pre-cull against near and the four side planes
        ccx = (lo[b, 0] + hi[b, 0]) * 0.5 - eye[0]
        ccy = (lo[b, 1] + hi[b, 1]) * 0.5 - eye[1]
        ccz = (lo[b, 2] + hi[b, 2]) * 0.5 - eye[2]
        ex = (hi[b, 0] - lo[b, 0]) * 0.5
        ey = (hi[b, 1] - lo[b, 1]) * 0.5
        ez = (hi[b, 2] - lo[b, 2]) * 0.5
        radius = np.sqrt(ex * ex + ey * ey + ez * ez)
        cz = ccx * fwd[0] + ccy * fwd[1] + ccz * fwd[2]
        if cz + radius < near or cz - radius > far:
            continue
        cxs = ccx * right[0] + ccy * right[1] + ccz * right[2]
        cys = ccx * up[0] + ccy * up[1] + ccz * up[2]
        # side planes: |x| <= z*tan_h + margin (margin grows with radius)
        margin = radius * np.sqrt(1.0 + tan_h * tan_h)
        if cxs > cz * tan_h + margin or cxs < -(cz * tan_h + margin):
            continue
        margin_v = radius * np.sqrt(1.0 + tan_v * tan_v)
        if cys > cz * tan_v + margin_v or cys < -(cz * tan_v + margin_v):
            continue

        for ci in range(8):
            wx = (hi[b, 0] if ci & 1 else lo[b, 0]) - eye[0]
            wy = (hi[b, 1] if ci & 2 else lo[b, 1]) - eye[1]
            wz = (hi[b, 2] if ci & 4 else lo[b, 2]) - eye[2]
            corners[ci, 0] = wx * right[0] + wy * right[1] + wz * right[2]
            corners[ci, 1] = wx * up[0] + wy * up[1] + wz * up[2]
            corners[ci, 2] = wx * fwd[0] + wy * fwd[1] + wz * fwd[2]

        for f in range(6):
            axis = _FACE_AXIS[f]
            if _FACE_SIGN[f] > 0:
                if eye[axis] <= hi[b, axis]:
                    continue
            else:
                if eye[axis] >= lo[b, axis]:
                    continue
            shade = _FACE_SHADE[f]
            cr = rgb[b, 0] * shade + 0.5
            cg = rgb[b, 1] * shade + 0.5
            cb = rgb[b, 2] * shade + 0.5
            col_r = np.uint8(255 if cr > 255 else cr)
            col_g = np.uint8(255 if cg > 255 else cg)
            col_b = np.uint8(255 if cb > 255 else cb)

            for vi in range(4):
                ci = _FACE_CORNERS[f, vi]
                poly[vi, 0] = corners[ci, 0]
                poly[vi, 1] = corners[ci, 1]
                poly[vi, 2] = corners[ci, 2]
            n_in = 4

            # clip against z = near (Sutherland-Hodgman)
            n_out = 0
            for vi in range(n_in):
                vj = (vi + 1) % n_in
                z0 = poly[vi, 2]
                z1 = poly[vj, 2]
                in0 = z0 >= near
                in1 = z1 >= near
                if in0:
                    clipped[n_out, 0] = poly[vi, 0]
                    clipped[n_out, 1] = poly[vi, 1]
                    clipped[n_out, 2] = z0
                    n_out += 1
                if in0 != in1:
                    t = (near - z0) / (z1 - z0)
                    clipped[n_out, 0] = poly[vi, 0] + t * (poly[vj, 0] - poly[vi, 0])
                    clipped[n_out, 1] = poly[vi, 1] + t * (poly[vj, 1] - poly[vi, 1])
                    clipped[n_out, 2] = near
                    n_out += 1
            if n_out < 3:
                continue

            for vi in range(n_out):
                inv_z = 1.0 / clipped[vi, 2]
                sx[vi] = cx_screen + clipped[vi, 0] * inv_z * proj_scale
                sy[vi] = cy_screen - clipped[vi, 1] * inv_z * proj_scale
                sw[vi] = inv_z

            for vi in range(1, n_out - 1):
                _raster_triangle(img, zbuf,
                                 sx[0], sy[0], sw[0],
                                 sx[vi], sy[vi], sw[vi],
                                 sx[vi + 1], sy[vi + 1], sw[vi + 1],
                                 col_r, col_g, col_b)


@njit(cache=True, nogil=True, inline="always")
def _raster_triangle(img, zbuf, x0, y0, w0, x1, y1, w1, x2, y2, w2, cr, cg, cb):
    area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
    if area < 0.0:
        x1, x2 = x2, x1
        y1, y2 = y2, y1
        w1, w2 = w2, w1
        area = -area
    if area < 1e-12:
        return
    h_px = img.shape[0]
    w_px = img.shape[1]
    min_x = min(x0, min(x1, x2))
    max_x = max(x0, max(x1, x2))
    min_y = min(y0, min(y1, y2))
    max_y = max(y0, max(y1, y2))
    px0 = int(np.floor(min_x - 0.5)) + 1
    px1 = int(np.ceil(max_x - 0.5)) - 1
    py0 = int(np.floor(min_y - 0.5)) + 1
    py1 = int(np.ceil(max_y - 0.5)) - 1
    if px0 < 0:
        px0 = 0
    if py0 < 0:
        py0 = 0
    if px1 >= w_px:
        px1 = w_px - 1
    if py1 >= h_px:
        py1 = h_px - 1
    if px1 < px0 or py1 < py0:
        return
    inv_area = 1.0 / area
    # edge functions stepped incrementally: de/dpx = -(dy), de/dpy = dx
    a0 = -(y2 - y1)
    b0 = x2 - x1
    a1 = -(y0 - y2)
    b1 = x0 - x2
    a2 = -(y1 - y0)
    b2 = x1 - x0
    xc0 = px0 + 0.5
    yc0 = py0 + 0.5
    e0_row = b0 * (yc0 - y1) + a0 * (xc0 - x1)
    e1_row = b1 * (yc0 - y2) + a1 * (xc0 - x2)
    e2_row = b2 * (yc0 - y0) + a2 * (xc0 - x0)
    dwdx = (a0 * w0 + a1 * w1 + a2 * w2) * inv_area
    for py in range(py0, py1 + 1):
        # clip the row to the inside span of each edge (e >= 0)
        lo_px = px0
        hi_px = px1
        e0 = e0_row
        e1 = e1_row
        e2 = e2_row
        if a0 > 0.0:
            need = int(np.ceil(-e0 / a0))
            if px0 + need > lo_px:
                lo_px = px0 + need
        elif a0 < 0.0:
            span = int(np.floor(e0 / -a0))
            if px0 + span < hi_px:
                hi_px = px0 + span
        elif e0 < 0.0:
            e0_row += b0
            e1_row += b1
            e2_row += b2
            continue
        if a1 > 0.0:
            need = int(np.ceil(-e1 / a1))
            if px0 + need > lo_px:
                lo_px = px0 + need
        elif a1 < 0.0:
            span = int(np.floor(e1 / -a1))
            if px0 + span < hi_px:
                hi_px = px0 + span
        elif e1 < 0.0:
            e0_row += b0
            e1_row += b1
            e2_row += b2
            continue
        if a2 > 0.0:
            need = int(np.ceil(-e2 / a2))
            if px0 + need > lo_px:
                lo_px = px0 + need
        elif a2 < 0.0:
            span = int(np.floor(e2 / -a2))
            if px0 + span < hi_px:
                hi_px = px0 + span
        elif e2 < 0.0:
            e0_row += b0
            e1_row += b1
            e2_row += b2
            continue
        if lo_px <= hi_px:
            off = lo_px - px0
            w_row = ((e0 + a0 * off) * w0 + (e1 + a1 * off) * w1
                     + (e2 + a2 * off) * w2) * inv_area
            for px in range(lo_px, hi_px + 1):
                if w_row > zbuf[py, px]:
                    zbuf[py, px] = w_row
                    img[py, px, 0] = cr
                    img[py, px, 1] = cg
                    img[py, px, 2] = cb
                w_row += dwdx
        e0_row += b0
        e1_row += b1
        e2_row += b2


# --------------------------------------------------------------------------
# Batched frame rendering: every agent view of a worker's environments in one
# GIL-free call. cam rows are (x, y, z, yaw, pitch); the HUD time bar is
# drawn here with the same geometry as render.overlay_hud.
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def render_frames(imgs, frame_slots, zbuf, cams, env_of, self_row, hud_n,
                  rows_lo, rows_hi, rows_rgb, rows_n,
                  bg_flat, eye_height, proj_scale, near, far):
    n_frames = frame_slots.shape[0]
    h_px = imgs.shape[1]
    w_px = imgs.shape[2]
    inv_far = 1.0 / far
    n_bytes = h_px * w_px * 3
    zbuf_flat = zbuf.reshape(h_px * w_px)
    for f in range(n_frames):
        img = imgs[frame_slots[f]]
        img_flat = img.reshape(n_bytes)
        for i in range(n_bytes):
            img_flat[i] = bg_flat[i]
        for i in range(h_px * w_px):
            zbuf_flat[i] = inv_far
        e = env_of[f]
        yaw = cams[f, 3]
        pitch = cams[f, 4]
        cy = np.cos(yaw)
        sy = np.sin(yaw)
        cp = np.cos(pitch)
        sp = np.sin(pitch)
        eye = np.empty(3, dtype=np.float64)
        eye[0] = cams[f, 0]
        eye[1] = cams[f, 1] + eye_height
        eye[2] = cams[f, 2]
        fwd = np.empty(3, dtype=np.float64)
        fwd[0] = cp * cy
        fwd[1] = sp
        fwd[2] = cp * sy
        right = np.empty(3, dtype=np.float64)
        right[0] = -sy
        right[1] = 0.0
        right[2] = cy
        up = np.empty(3, dtype=np.float64)
        up[0] = -cy * sp
        up[1] = cp
        up[2] = -sy * sp
        raster_boxes(img, zbuf, rows_lo[e], rows_hi[e], rows_rgb[e], rows_n[e],
                     eye, right, up, fwd, proj_scale, near, far, self_row[f])
        n = hud_n[f]
        if n > 0:
            for py in range(2, 5):
                for px in range(2, 3 + n):
                    img[py, px, 0] = 255
                    img[py, px, 1] = 255
                    img[py, px, 2] = 255
