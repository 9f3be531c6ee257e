"""Pure-Python grid kernels.

Reference implementation of the hot loops; ``_ckernels.pyx`` mirrors it
line for line. All coordinates here are in grid units: ``u`` runs along
columns, ``v`` along rows, and cell ``(i, j)`` covers ``[j, j+1] x [i, i+1]``.
"""
import math
from collections import deque

WALL = 1
FREE = 0

SNAP = 1e-9
SIDE_EPS = 1e-12


def _snap(a):
    r = round(a)
    if abs(a - r) < SNAP:
        return float(r)
    return a


def _crossing_range(a0, a1):
    """First integer crossed, step and count when moving from a0 to a1."""
    if a1 > a0:
        k, end, step = math.floor(a0) + 1, math.ceil(a1) - 1, 1
    elif a1 < a0:
        k, end, step = math.ceil(a0) - 1, math.floor(a1) + 1, -1
    else:
        return 0, 0, 0
    n = (end - k) * step + 1
    return k, step, max(n, 0)


def _get(grid, i, j, default):
    if 0 <= i < len(grid) and 0 <= j < len(grid[0]):
        return grid[i][j]
    return default


def _walk(grid, u0, v0, u1, v1, mode):
    """Exact traversal of the segment over ``grid``.

    mode 0 returns 1.0 if the segment is blocked by a WALL cell, else 0.0.
    mode 1 returns the length (grid units) spent over cells equal to 0.
    """
    u0, v0, u1, v1 = _snap(u0), _snap(v0), _snap(u1), _snap(v1)
    du, dv = u1 - u0, v1 - v0
    length = math.hypot(du, dv)
    if length == 0.0:
        return 0.0
    H, W = len(grid), len(grid[0])
    kx, sx, nx = _crossing_range(u0, u1)
    ky, sy, ny = _crossing_range(v0, v1)
    on_col = du == 0.0 and u0 == math.floor(u0)
    on_row = dv == 0.0 and v0 == math.floor(v0)
    ix = iy = 0
    t_prev = 0.0
    acc = 0.0
    while True:
        tx = (kx + ix * sx - u0) / du if ix < nx else 2.0
        ty = (ky + iy * sy - v0) / dv if iy < ny else 2.0
        last = False
        if tx >= 2.0 and ty >= 2.0:
            t_next, last = 1.0, True
        elif abs(tx - ty) * length < SNAP:
            t_next = tx
            ix += 1
            iy += 1
        elif tx < ty:
            t_next = tx
            ix += 1
        else:
            t_next = ty
            iy += 1

        if t_next > t_prev:
            tm = 0.5 * (t_prev + t_next)
            um, vm = u0 + tm * du, v0 + tm * dv
            if on_col or on_row:
                if on_col:
                    a = (min(int(math.floor(vm)), H - 1), int(u0) - 1)
                    b = (a[0], int(u0))
                else:
                    a = (int(v0) - 1, min(int(math.floor(um)), W - 1))
                    b = (int(v0), a[1])
                flanks = [c for c in (a, b) if 0 <= c[0] < H and 0 <= c[1] < W]
                if mode == 0:
                    if len(flanks) == 2 and all(grid[i][j] == WALL for i, j in flanks):
                        return 1.0
                elif flanks:
                    n0 = sum(1 for i, j in flanks if grid[i][j] == 0)
                    acc += (t_next - t_prev) * length * n0 / len(flanks)
            else:
                i = min(max(int(math.floor(vm)), 0), H - 1)
                j = min(max(int(math.floor(um)), 0), W - 1)
                if mode == 0:
                    if grid[i][j] == WALL:
                        return 1.0
                elif grid[i][j] == 0:
                    acc += (t_next - t_prev) * length
        if last:
            break
        if mode == 0:
            uc, vc = u0 + t_next * du, v0 + t_next * dv
            ru, rv = round(uc), round(vc)
            if abs(uc - ru) < SNAP and abs(vc - rv) < SNAP:
                bl = _get(grid, rv - 1, ru - 1, FREE) == WALL
                br = _get(grid, rv - 1, ru, FREE) == WALL
                tl = _get(grid, rv, ru - 1, FREE) == WALL
                tr = _get(grid, rv, ru, FREE) == WALL
                if (bl and tr) or (tl and br):
                    return 1.0
        t_prev = t_next
    return acc


def segment_clear(cells, u0, v0, u1, v1):
    return _walk(cells, u0, v0, u1, v1, 0) == 0.0


def unobserved_length(mask, u0, v0, u1, v1):
    return _walk(mask, u0, v0, u1, v1, 1)


# -- image method -----------------------------------------------------------

def _side(face, u, v):
    axis, coord, _, _, s = face
    return ((u if axis == 0 else v) - coord) * s


def _mirror(face, u, v):
    axis, coord = face[0], face[1]
    if axis == 0:
        return 2.0 * coord - u, v
    return u, 2.0 * coord - v


def _hit(face, su, sv, eu, ev):
    """Intersection of segment s->e with the face, or None."""
    axis, coord, lo, hi, _ = face
    if axis == 0:
        den = eu - su
        if den == 0.0:
            return None
        t = (coord - su) / den
        if not 0.0 < t < 1.0:
            return None
        w = sv + t * (ev - sv)
        if w < lo - SNAP or w > hi + SNAP:
            return None
        return coord, w
    den = ev - sv
    if den == 0.0:
        return None
    t = (coord - sv) / den
    if not 0.0 < t < 1.0:
        return None
    w = su + t * (eu - su)
    if w < lo - SNAP or w > hi + SNAP:
        return None
    return w, coord


def _try_sequence(cells, faces, seq, tu, tv, ru, rv):
    images = [(tu, tv)]
    for f in seq:
        images.append(_mirror(faces[f], *images[-1]))
    k = len(seq)
    pts = [None] * k
    target = (ru, rv)
    for j in range(k - 1, -1, -1):
        face = faces[seq[j]]
        if _side(face, *target) <= SIDE_EPS:
            return None
        p = _hit(face, images[j + 1][0], images[j + 1][1], target[0], target[1])
        if p is None:
            return None
        pts[j] = p
        target = p
    route = [(tu, tv)] + pts + [(ru, rv)]
    for j in range(k):
        face = faces[seq[j]]
        if _side(face, *route[j]) <= SIDE_EPS or _side(face, *route[j + 2]) <= SIDE_EPS:
            return None
    for a, b in zip(route, route[1:]):
        if abs(a[0] - b[0]) < SIDE_EPS and abs(a[1] - b[1]) < SIDE_EPS:
            return None
    for a, b in zip(route, route[1:]):
        if _walk(cells, a[0], a[1], b[0], b[1], 0) != 0.0:
            return None
    return route


def image_paths(cells, faces, tu, tv, ru, rv, max_order):
    """Enumerate direct and specular paths up to ``max_order`` bounces.

    ``faces`` rows are ``(axis, coord, lo, hi, side)``. Returns a list of
    ``(order, route)`` where route is a list of (u, v) vertices.
    """
    if hasattr(cells, "tolist"):
        cells = cells.tolist()
    faces = [tuple(f) for f in (faces.tolist() if hasattr(faces, "tolist") else faces)]
    out = []
    if _walk(cells, tu, tv, ru, rv, 0) == 0.0:
        out.append((0, [(tu, tv), (ru, rv)]))
    n = len(faces)
    # breadth-first by order keeps output ordering identical to the C kernel
    for order in range(1, max_order + 1):
        _enumerate(n, order, lambda seq: _emit(cells, faces, seq, tu, tv, ru, rv, out))
    return out


def _emit(cells, faces, seq, tu, tv, ru, rv, out):
    route = _try_sequence(cells, faces, seq, tu, tv, ru, rv)
    if route is not None:
        out.append((len(seq), route))


def _enumerate(n, order, fn):
    seq = [0] * order

    def rec(depth):
        if depth == order:
            fn(list(seq))
            return
        for f in range(n):
            if depth and seq[depth - 1] == f:
                continue
            seq[depth] = f
            rec(depth + 1)

    rec(0)


# -- exploration ------------------------------------------------------------

def observe(cells, mask, r, c, radius):
    """Mark cells visible from the centre of (r, c) within ``radius`` cells.

    ``mask`` is a writable uint8 array updated in place. Wall cells are
    marked when 8-adjacent to an observed non-wall cell.
    """
    H, W = cells.shape
    grid = cells.tolist()
    rad = int(math.ceil(radius))
    r2 = radius * radius
    i0, i1 = max(r - rad, 0), min(r + rad, H - 1)
    j0, j1 = max(c - rad, 0), min(c + rad, W - 1)
    cu, cv = c + 0.5, r + 0.5
    for i in range(i0, i1 + 1):
        for j in range(j0, j1 + 1):
            if (i - r) ** 2 + (j - c) ** 2 > r2 or grid[i][j] == WALL:
                continue
            if mask[i, j]:
                continue
            if _walk(grid, cu, cv, j + 0.5, i + 0.5, 0) == 0.0:
                mask[i, j] = 1
    for i in range(max(i0 - 1, 0), min(i1 + 1, H - 1) + 1):
        for j in range(max(j0 - 1, 0), min(j1 + 1, W - 1) + 1):
            if grid[i][j] != WALL or mask[i, j]:
                continue
            done = False
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    a, b = i + di, j + dj
                    if 0 <= a < H and 0 <= b < W and mask[a, b] and grid[a][b] != WALL:
                        mask[i, j] = 1
                        done = True
                        break
                if done:
                    break


_NEIGH = ((-1, 0), (0, -1), (0, 1), (1, 0))


def frontier_step(cells, mask, r, c):
    """Next cell on a shortest known-free path to the nearest frontier.

    Returns (-1, -1) when no frontier is reachable.
    """
    H, W = cells.shape
    grid = cells.tolist()
    seen = mask.tolist()

    def passable(i, j):
        return seen[i][j] and grid[i][j] != WALL

    def is_frontier(i, j):
        for di, dj in _NEIGH:
            a, b = i + di, j + dj
            if 0 <= a < H and 0 <= b < W and not seen[a][b]:
                return True
        return False

    dist = [[-1] * W for _ in range(H)]
    dist[r][c] = 0
    q = deque([(r, c)])
    best = None
    best_d = -1
    while q:
        i, j = q.popleft()
        d = dist[i][j]
        if best is not None and d > best_d:
            break
        if d > 0 and is_frontier(i, j):
            if best is None or i * W + j < best[0] * W + best[1]:
                best, best_d = (i, j), d
            continue
        for di, dj in _NEIGH:
            a, b = i + di, j + dj
            if 0 <= a < H and 0 <= b < W and dist[a][b] < 0 and passable(a, b):
                dist[a][b] = d + 1
                q.append((a, b))
    if best is None:
        return -1, -1
    i, j = best
    while dist[i][j] > 1:
        d = dist[i][j]
        for di, dj in _NEIGH:
            a, b = i + di, j + dj
            if 0 <= a < H and 0 <= b < W and dist[a][b] == d - 1:
                i, j = a, b
                break
    return i, j
