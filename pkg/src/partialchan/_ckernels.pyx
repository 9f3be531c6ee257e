# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid kernels; semantics identical to ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, ceil, sqrt, fabs, round as cround
from libc.stdlib cimport malloc, free

cnp.import_array()

DEF MAX_ORDER = 3
cdef unsigned char WALL = 1
cdef double SNAP = 1e-9
cdef double SIDE_EPS = 1e-12


cdef inline double _snap(double a) nogil:
    cdef double r = cround(a)
    if fabs(a - r) < SNAP:
        return r
    return a


cdef inline void _crossing_range(double a0, double a1, long *k, long *step, long *n) nogil:
    cdef long end
    if a1 > a0:
        k[0] = <long>floor(a0) + 1
        end = <long>ceil(a1) - 1
        step[0] = 1
    elif a1 < a0:
        k[0] = <long>ceil(a0) - 1
        end = <long>floor(a1) + 1
        step[0] = -1
    else:
        k[0] = 0
        step[0] = 0
        n[0] = 0
        return
    n[0] = (end - k[0]) * step[0] + 1
    if n[0] < 0:
        n[0] = 0


cdef inline bint _is_wall(const unsigned char[:, ::1] g, long i, long j) nogil:
    if i < 0 or j < 0 or i >= g.shape[0] or j >= g.shape[1]:
        return False
    return g[i, j] == WALL


cdef double _walk(const unsigned char[:, ::1] g, double u0, double v0,
                  double u1, double v1, int mode) nogil:
    cdef long H = g.shape[0], W = g.shape[1]
    cdef double du, dv, length, tx, ty, t_next, t_prev, tm, um, vm, acc, uc, vc
    cdef long kx, sx, nx, ky, sy, ny, ix, iy, i, j, ai, aj, bi, bj, ru, rv
    cdef bint on_col, on_row, last, a_ok, b_ok
    cdef int nflank, n0
    u0 = _snap(u0); v0 = _snap(v0); u1 = _snap(u1); v1 = _snap(v1)
    du = u1 - u0
    dv = v1 - v0
    length = sqrt(du * du + dv * dv)
    if length == 0.0:
        return 0.0
    _crossing_range(u0, u1, &kx, &sx, &nx)
    _crossing_range(v0, v1, &ky, &sy, &ny)
    on_col = du == 0.0 and u0 == floor(u0)
    on_row = dv == 0.0 and v0 == floor(v0)
    ix = 0
    iy = 0
    t_prev = 0.0
    acc = 0.0
    while True:
        tx = (kx + ix * sx - u0) / du if ix < nx else 2.0
        ty = (ky + iy * sy - v0) / dv if iy < ny else 2.0
        last = False
        if tx >= 2.0 and ty >= 2.0:
            t_next = 1.0
            last = True
        elif fabs(tx - ty) * length < SNAP:
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
            um = u0 + tm * du
            vm = v0 + tm * dv
            if on_col or on_row:
                if on_col:
                    ai = <long>floor(vm)
                    if ai > H - 1:
                        ai = H - 1
                    aj = <long>u0 - 1
                    bi = ai
                    bj = <long>u0
                else:
                    aj = <long>floor(um)
                    if aj > W - 1:
                        aj = W - 1
                    ai = <long>v0 - 1
                    bi = <long>v0
                    bj = aj
                a_ok = 0 <= ai < H and 0 <= aj < W
                b_ok = 0 <= bi < H and 0 <= bj < W
                if mode == 0:
                    if a_ok and b_ok and g[ai, aj] == WALL and g[bi, bj] == WALL:
                        return 1.0
                else:
                    nflank = 0
                    n0 = 0
                    if a_ok:
                        nflank += 1
                        if g[ai, aj] == 0:
                            n0 += 1
                    if b_ok:
                        nflank += 1
                        if g[bi, bj] == 0:
                            n0 += 1
                    if nflank > 0:
                        acc += (t_next - t_prev) * length * n0 / nflank
            else:
                i = <long>floor(vm)
                j = <long>floor(um)
                if i < 0:
                    i = 0
                elif i > H - 1:
                    i = H - 1
                if j < 0:
                    j = 0
                elif j > W - 1:
                    j = W - 1
                if mode == 0:
                    if g[i, j] == WALL:
                        return 1.0
                elif g[i, j] == 0:
                    acc += (t_next - t_prev) * length
        if last:
            break
        if mode == 0:
            uc = u0 + t_next * du
            vc = v0 + t_next * dv
            ru = <long>cround(uc)
            rv = <long>cround(vc)
            if fabs(uc - ru) < SNAP and fabs(vc - rv) < SNAP:
                if (_is_wall(g, rv - 1, ru - 1) and _is_wall(g, rv, ru)) or \
                        (_is_wall(g, rv, ru - 1) and _is_wall(g, rv - 1, ru)):
                    return 1.0
        t_prev = t_next
    return acc


def segment_clear(const unsigned char[:, ::1] cells, double u0, double v0,
                  double u1, double v1):
    return _walk(cells, u0, v0, u1, v1, 0) == 0.0


def unobserved_length(const unsigned char[:, ::1] mask, double u0, double v0,
                      double u1, double v1):
    return _walk(mask, u0, v0, u1, v1, 1)


# -- image method -----------------------------------------------------------

cdef inline double _side(const double[:, ::1] faces, long f, double u, double v) nogil:
    if faces[f, 0] == 0.0:
        return (u - faces[f, 1]) * faces[f, 4]
    return (v - faces[f, 1]) * faces[f, 4]


cdef inline bint _hit(const double[:, ::1] faces, long f, double su, double sv,
                      double eu, double ev, double *pu, double *pv) nogil:
    cdef double coord = faces[f, 1], lo = faces[f, 2], hi = faces[f, 3]
    cdef double den, t, w
    if faces[f, 0] == 0.0:
        den = eu - su
        if den == 0.0:
            return False
        t = (coord - su) / den
        if not (0.0 < t < 1.0):
            return False
        w = sv + t * (ev - sv)
        if w < lo - SNAP or w > hi + SNAP:
            return False
        pu[0] = coord
        pv[0] = w
        return True
    den = ev - sv
    if den == 0.0:
        return False
    t = (coord - sv) / den
    if not (0.0 < t < 1.0):
        return False
    w = su + t * (eu - su)
    if w < lo - SNAP or w > hi + SNAP:
        return False
    pu[0] = w
    pv[0] = coord
    return True


cdef bint _try_sequence(const unsigned char[:, ::1] cells, const double[:, ::1] faces,
                        long *seq, int k, double tu, double tv, double ru, double rv,
                        double *route_u, double *route_v) nogil:
    cdef double img_u[MAX_ORDER + 1]
    cdef double img_v[MAX_ORDER + 1]
    cdef double gu, gv, pu, pv
    cdef int j
    cdef long f
    img_u[0] = tu
    img_v[0] = tv
    for j in range(k):
        f = seq[j]
        if faces[f, 0] == 0.0:
            img_u[j + 1] = 2.0 * faces[f, 1] - img_u[j]
            img_v[j + 1] = img_v[j]
        else:
            img_u[j + 1] = img_u[j]
            img_v[j + 1] = 2.0 * faces[f, 1] - img_v[j]
    gu = ru
    gv = rv
    for j in range(k - 1, -1, -1):
        f = seq[j]
        if _side(faces, f, gu, gv) <= SIDE_EPS:
            return False
        if not _hit(faces, f, img_u[j + 1], img_v[j + 1], gu, gv, &pu, &pv):
            return False
        route_u[j + 1] = pu
        route_v[j + 1] = pv
        gu = pu
        gv = pv
    route_u[0] = tu
    route_v[0] = tv
    route_u[k + 1] = ru
    route_v[k + 1] = rv
    for j in range(k):
        f = seq[j]
        if _side(faces, f, route_u[j], route_v[j]) <= SIDE_EPS or \
                _side(faces, f, route_u[j + 2], route_v[j + 2]) <= SIDE_EPS:
            return False
    for j in range(k + 1):
        if fabs(route_u[j] - route_u[j + 1]) < SIDE_EPS and \
                fabs(route_v[j] - route_v[j + 1]) < SIDE_EPS:
            return False
    for j in range(k + 1):
        if _walk(cells, route_u[j], route_v[j], route_u[j + 1], route_v[j + 1], 0) != 0.0:
            return False
    return True


def image_paths(const unsigned char[:, ::1] cells, const double[:, ::1] faces,
                double tu, double tv, double ru, double rv, int max_order):
    """Enumerate direct and specular paths up to ``max_order`` bounces."""
    cdef long n = faces.shape[0]
    cdef long seq[MAX_ORDER]
    cdef double route_u[MAX_ORDER + 2]
    cdef double route_v[MAX_ORDER + 2]
    cdef int order, depth, j
    cdef bint ok
    if max_order > MAX_ORDER:
        raise ValueError("max_order above %d" % MAX_ORDER)
    out = []
    if _walk(cells, tu, tv, ru, rv, 0) == 0.0:
        out.append((0, [(tu, tv), (ru, rv)]))
    if n == 0:
        return out
    for order in range(1, max_order + 1):
        # odometer over face sequences with no immediate repeats
        for j in range(order):
            seq[j] = 0
        while True:
            ok = True
            for j in range(1, order):
                if seq[j] == seq[j - 1]:
                    ok = False
                    break
            if ok and _try_sequence(cells, faces, seq, order, tu, tv, ru, rv,
                                    route_u, route_v):
                out.append((order, [(route_u[j], route_v[j]) for j in range(order + 2)]))
            depth = order - 1
            while depth >= 0:
                seq[depth] += 1
                if seq[depth] < n:
                    break
                seq[depth] = 0
                depth -= 1
            if depth < 0:
                break
    return out


# -- exploration ------------------------------------------------------------

def observe(const unsigned char[:, ::1] cells, unsigned char[:, ::1] mask,
            long r, long c, double radius):
    """Mark visible cells within ``radius`` of the centre of (r, c)."""
    cdef long H = cells.shape[0], W = cells.shape[1]
    cdef long rad = <long>ceil(radius)
    cdef double r2 = radius * radius
    cdef long i0 = max(r - rad, 0), i1 = min(r + rad, H - 1)
    cdef long j0 = max(c - rad, 0), j1 = min(c + rad, W - 1)
    cdef double cu = c + 0.5, cv = r + 0.5
    cdef long i, j, a, b, di, dj
    cdef bint done
    with nogil:
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                if (i - r) * (i - r) + (j - c) * (j - c) > r2 or cells[i, j] == WALL:
                    continue
                if mask[i, j]:
                    continue
                if _walk(cells, cu, cv, j + 0.5, i + 0.5, 0) == 0.0:
                    mask[i, j] = 1
        for i in range(max(i0 - 1, 0), min(i1 + 1, H - 1) + 1):
            for j in range(max(j0 - 1, 0), min(j1 + 1, W - 1) + 1):
                if cells[i, j] != WALL or mask[i, j]:
                    continue
                done = False
                for di in range(-1, 2):
                    for dj in range(-1, 2):
                        a = i + di
                        b = j + dj
                        if 0 <= a < H and 0 <= b < W and mask[a, b] and cells[a, b] != WALL:
                            mask[i, j] = 1
                            done = True
                            break
                    if done:
                        break


def frontier_step(const unsigned char[:, ::1] cells, const unsigned char[:, ::1] mask,
                  long r, long c):
    """Next cell toward the nearest frontier, or (-1, -1) if none remains."""
    cdef long H = cells.shape[0], W = cells.shape[1]
    cdef long N = H * W
    cdef cnp.ndarray[cnp.int64_t, ndim=1] dist_arr = np.full(N, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] queue_arr = np.empty(N, dtype=np.int64)
    cdef cnp.int64_t[::1] dist = dist_arr
    cdef cnp.int64_t[::1] queue = queue_arr
    cdef long head = 0, tail = 0, best = -1, best_d = -1
    cdef long idx, i, j, a, b, d, k, nidx
    cdef long di[4]
    cdef long dj[4]
    cdef bint frontier
    di[0] = -1; dj[0] = 0
    di[1] = 0; dj[1] = -1
    di[2] = 0; dj[2] = 1
    di[3] = 1; dj[3] = 0
    with nogil:
        dist[r * W + c] = 0
        queue[tail] = r * W + c
        tail += 1
        while head < tail:
            idx = queue[head]
            head += 1
            i = idx // W
            j = idx % W
            d = dist[idx]
            if best >= 0 and d > best_d:
                break
            if d > 0:
                frontier = False
                for k in range(4):
                    a = i + di[k]
                    b = j + dj[k]
                    if 0 <= a < H and 0 <= b < W and not mask[a, b]:
                        frontier = True
                        break
                if frontier:
                    if best < 0 or idx < best:
                        best = idx
                        best_d = d
                    continue
            for k in range(4):
                a = i + di[k]
                b = j + dj[k]
                if 0 <= a < H and 0 <= b < W:
                    nidx = a * W + b
                    if dist[nidx] < 0 and mask[a, b] and cells[a, b] != WALL:
                        dist[nidx] = d + 1
                        queue[tail] = nidx
                        tail += 1
        if best >= 0:
            idx = best
            while dist[idx] > 1:
                d = dist[idx]
                i = idx // W
                j = idx % W
                for k in range(4):
                    a = i + di[k]
                    b = j + dj[k]
                    if 0 <= a < H and 0 <= b < W and dist[a * W + b] == d - 1:
                        idx = a * W + b
                        break
            best = idx
    if best < 0:
        return -1, -1
    return best // W, best % W
