"""Independent push-solver used as the Sokoban solvability oracle: best-first
search over push moves (breadth-first within equal heuristic cost). Operates
purely on 2D cells as bitmasks; knows nothing about the 3D engine."""

import heapq
from collections import deque

DIRS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def _index_maps(interior):
    cells = sorted(interior)
    idx = {c: i for i, c in enumerate(cells)}
    neighbors = []
    for c in cells:
        row = []
        for d in DIRS:
            nxt = (c[0] + d[0], c[1] + d[1])
            row.append(idx.get(nxt, -1))
        neighbors.append(tuple(row))
    return cells, idx, neighbors


def _flood(start_bit, boxes_mask, neighbors):
    """Reachable free-cell mask from start; returns (mask, lowest set bit)."""
    seen = start_bit
    frontier = [start_bit.bit_length() - 1]
    while frontier:
        i = frontier.pop()
        for j in neighbors[i]:
            if j < 0:
                continue
            bit = 1 << j
            if seen & bit or boxes_mask & bit:
                continue
            seen |= bit
            frontier.append(j)
    return seen, seen & (-seen)


def solve_push_bfs(interior, targets, boxes, player, max_nodes=3_000_000):
    """Returns a list of (box_cell, direction) pushes, or None if unsolvable
    within the node budget."""
    cells, idx, neighbors = _index_maps(interior)
    target_mask = 0
    for c in targets:
        target_mask |= 1 << idx[c]
    boxes_mask = 0
    for c in boxes:
        boxes_mask |= 1 << idx[c]
    if boxes_mask == target_mask:
        return []

    # corner deadlock table: non-target cells pinned on two orthogonal axes
    dead = [False] * len(cells)
    for i, nbrs in enumerate(neighbors):
        if target_mask & (1 << i):
            continue
        x_blocked = nbrs[0] < 0 or nbrs[1] < 0
        z_blocked = nbrs[2] < 0 or nbrs[3] < 0
        dead[i] = x_blocked and z_blocked

    # per-cell distance to the nearest target (wall-aware BFS from targets)
    dist = [255] * len(cells)
    frontier = deque()
    for c in targets:
        dist[idx[c]] = 0
        frontier.append(idx[c])
    while frontier:
        i = frontier.popleft()
        for j in neighbors[i]:
            if j >= 0 and dist[j] > dist[i] + 1:
                dist[j] = dist[i] + 1
                frontier.append(j)

    def heuristic(mask):
        h = 0
        while mask:
            bit = mask & (-mask)
            mask ^= bit
            h += dist[bit.bit_length() - 1]
        return h

    region, canon = _flood(1 << idx[player], boxes_mask, neighbors)
    start = (canon, boxes_mask)
    parents = {start: None}
    counter = 0
    heap = [(heuristic(boxes_mask), 0, start, region)]
    nodes = 0
    while heap and nodes < max_nodes:
        _, _, (canon, boxes_now), region = heapq.heappop(heap)
        nodes += 1
        remaining = boxes_now
        while remaining:
            box_bit = remaining & (-remaining)
            remaining ^= box_bit
            bi = box_bit.bit_length() - 1
            for d in range(4):
                dest = neighbors[bi][d]
                stand = neighbors[bi][d ^ 1]  # DIRS pairs are +/- on one axis
                if dest < 0 or stand < 0:
                    continue
                if not region & (1 << stand):
                    continue
                dest_bit = 1 << dest
                if boxes_now & dest_bit or dead[dest]:
                    continue
                new_boxes = (boxes_now ^ box_bit) | dest_bit
                new_region, new_canon = _flood(box_bit, new_boxes, neighbors)
                key = (new_canon, new_boxes)
                if key in parents:
                    continue
                parents[key] = ((canon, boxes_now), (cells[bi], DIRS[d]))
                if new_boxes == target_mask:
                    pushes = []
                    cur = key
                    while parents[cur] is not None:
                        prev, move = parents[cur]
                        pushes.append(move)
                        cur = prev
                    pushes.reverse()
                    return pushes
                counter += 1
                heapq.heappush(heap, (heuristic(new_boxes), counter, key,
                                      new_region))
    return None


def state_from_episode(state):
    """Extract (interior, targets, boxes, player) from a live Sokoban episode."""
    grid = state.grid
    interior = {(x, z) for x in range(1, grid.nx - 1)
                for z in range(1, grid.nz - 1)}
    targets = set(state.scenario_data.targets)
    boxes = set()
    for oi in range(len(state.objects)):
        lo = state.obj_lo[oi]
        boxes.add((int(lo[0] + 1e-6), int(lo[2] + 1e-6)))
    p = state.agents[0].pose.position
    player = (int(p[0]), int(p[2]))
    return interior, targets, boxes, player
