# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same contracts and results as ``_kernels_py``."""

from libc.stdlib cimport malloc, free, qsort
from libc.math cimport fabs

cdef double EPS = 1e-9
cdef double INF = float("inf")


cdef int _cmp(const void* a, const void* b) noexcept nogil:
    cdef double x = (<double*>a)[0]
    cdef double y = (<double*>b)[0]
    if x < y:
        return -1
    if x > y:
        return 1
    return 0


cdef int _uniq(double* arr, int n) noexcept nogil:
    cdef int i, k = 0
    qsort(arr, n, sizeof(double), _cmp)
    for i in range(n):
        if k == 0 or arr[i] != arr[k - 1]:
            arr[k] = arr[i]
            k += 1
    return k


cdef inline bint _blocks(int pb, int db, int pa, int da) noexcept nogil:
    return (pb < da and da < db) or (pb < pa and pa < db)


def blocks(int pb, int db, int pa, int da):
    return _blocks(pb, db, pa, da)


cdef bint _fits(double x, double y, double w, double l, int p, int d,
                double* pu, double* pv, double* pw, double* pl, int* pp, int* pd,
                int n, double W, double L) noexcept nogil:
    cdef int i
    cdef double u, v
    if x < -EPS or y < -EPS or x + w > W + EPS or y + l > L + EPS:
        return False
    for i in range(n):
        if not (p < pd[i] and pp[i] < d):
            continue
        u = pu[i]
        if not (x < u + pw[i] - EPS and u < x + w - EPS):
            continue
        v = pv[i]
        if y < v + pl[i] - EPS and v < y + l - EPS:
            return False
        if v + pl[i] <= y + EPS:
            if _blocks(pp[i], pd[i], p, d):
                return False
        elif _blocks(p, d, pp[i], pd[i]):
            return False
    return True


def fits(double x, double y, double w, double l, int p, int d, pu, pv, pw, pl, pp, pd,
         double W, double L):
    cdef int n = len(pu)
    cdef double* a = <double*>malloc(4 * (n + 1) * sizeof(double))
    cdef int* b = <int*>malloc(2 * (n + 1) * sizeof(int))
    cdef int i
    try:
        for i in range(n):
            a[i] = pu[i]; a[n + i] = pv[i]; a[2 * n + i] = pw[i]; a[3 * n + i] = pl[i]
            b[i] = pp[i]; b[n + i] = pd[i]
        return _fits(x, y, w, l, p, d, a, a + n, a + 2 * n, a + 3 * n, b, b + n, n, W, L)
    finally:
        free(a)
        free(b)


cdef int _profile(double* xs, double* hs, int m, double x, double top, double w,
                  double* nxs, double* nhs) noexcept nogil:
    # writes the raised skyline into nxs/nhs, returns its segment count
    cdef double x1 = x + w
    cdef double cuts[4]
    cdef int i, k, nc, cnt = 0
    cdef double a, b, h, lo, hi, mid, hh
    nxs[0] = xs[0]
    for i in range(m):
        a = xs[i]; b = xs[i + 1]; h = hs[i]
        nc = 0
        cuts[nc] = a; nc += 1
        if a + EPS < x and x < b - EPS:
            cuts[nc] = x; nc += 1
        if a + EPS < x1 and x1 < b - EPS:
            cuts[nc] = x1; nc += 1
        cuts[nc] = b; nc += 1
        for k in range(nc - 1):
            lo = cuts[k]; hi = cuts[k + 1]
            mid = 0.5 * (lo + hi)
            if x < mid and mid < x1 and top > h:
                hh = top
            else:
                hh = h
            if cnt > 0 and fabs(nhs[cnt - 1] - hh) <= EPS:
                nxs[cnt] = hi
            else:
                nhs[cnt] = hh
                cnt += 1
                nxs[cnt] = hi
    return cnt


cdef double _score(double* xs, double* hs, int m, double covered,
                   double w1, double w2, double w3) noexcept nogil:
    cdef double sky = 0.0, irr = 0.0, waste
    cdef int i
    for i in range(m):
        sky += hs[i] * (xs[i + 1] - xs[i])
        if i:
            irr += fabs(hs[i] - hs[i - 1])
    waste = sky - covered
    if waste < 0.0:
        waste = 0.0
    return -w1 * waste - w2 * irr + w3 * covered


def skyline_add(xs, hs, double x, double top, double w):
    cdef int m = len(hs)
    cdef double* a = <double*>malloc((m + 1) * sizeof(double))
    cdef double* b = <double*>malloc((m + 1) * sizeof(double))
    cdef double* na = <double*>malloc((m + 4) * sizeof(double))
    cdef double* nb = <double*>malloc((m + 4) * sizeof(double))
    cdef int i, cnt
    try:
        for i in range(m + 1):
            a[i] = xs[i]
        for i in range(m):
            b[i] = hs[i]
        cnt = _profile(a, b, m, x, top, w, na, nb)
        return [na[i] for i in range(cnt + 1)], [nb[i] for i in range(cnt)]
    finally:
        free(a); free(b); free(na); free(nb)


def score_of(xs, hs, double covered, double w1, double w2, double w3):
    cdef int m = len(hs)
    cdef double* a = <double*>malloc((m + 1) * sizeof(double))
    cdef double* b = <double*>malloc((m + 1) * sizeof(double))
    cdef int i
    try:
        for i in range(m + 1):
            a[i] = xs[i]
        for i in range(m):
            b[i] = hs[i]
        return _score(a, b, m, covered, w1, w2, w3)
    finally:
        free(a); free(b)


def expand(double W, double L, pu, pv, pw, pl, pp, pd, xs, hs, double covered,
           double w, double l, int p, int d, double w1, double w2, double w3):
    cdef int n = len(pu)
    cdef int m = len(hs)
    cdef double* fa = <double*>malloc((4 * n + 4) * sizeof(double))
    cdef int* ia = <int*>malloc((2 * n + 2) * sizeof(int))
    cdef double* cx = <double*>malloc((n + 1) * sizeof(double))
    cdef double* cy = <double*>malloc((n + 1) * sizeof(double))
    cdef double* sx = <double*>malloc((m + 1) * sizeof(double))
    cdef double* sh = <double*>malloc((m + 1) * sizeof(double))
    cdef double* nx = <double*>malloc((m + 4) * sizeof(double))
    cdef double* nh = <double*>malloc((m + 4) * sizeof(double))
    cdef double *u, *v, *ww, *ll
    cdef int *pp_, *pd_
    cdef int i, j, k, ncx, ncy, cnt
    cdef double x, y
    out = []
    try:
        u = fa; v = fa + n; ww = fa + 2 * n; ll = fa + 3 * n
        pp_ = ia; pd_ = ia + n
        for i in range(n):
            u[i] = pu[i]; v[i] = pv[i]; ww[i] = pw[i]; ll[i] = pl[i]
            pp_[i] = pp[i]; pd_[i] = pd[i]
        for i in range(m + 1):
            sx[i] = xs[i]
        for i in range(m):
            sh[i] = hs[i]
        cx[0] = 0.0
        for i in range(n):
            cx[i + 1] = u[i] + ww[i]
        ncx = _uniq(cx, n + 1)
        for j in range(ncx):
            x = cx[j]
            if x + w > W + EPS:
                continue
            cy[0] = 0.0
            ncy = 1
            for i in range(n):
                if p < pd_[i] and pp_[i] < d and x < u[i] + ww[i] - EPS and u[i] < x + w - EPS:
                    cy[ncy] = v[i] + ll[i]
                    ncy += 1
            ncy = _uniq(cy, ncy)
            for k in range(ncy):
                y = cy[k]
                if y + l > L + EPS:
                    continue
                if not _fits(x, y, w, l, p, d, u, v, ww, ll, pp_, pd_, n, W, L):
                    continue
                cnt = _profile(sx, sh, m, x, y + l, w, nx, nh)
                out.append((x, y, _score(nx, nh, cnt, covered + w * l, w1, w2, w3)))
        return out
    finally:
        free(fa); free(ia); free(cx); free(cy); free(sx); free(sh); free(nx); free(nh)


def held_karp(conn, start, end):
    cdef int n = len(start)
    if n == 0:
        return 0.0, []
    if n > 20:
        raise ValueError("held_karp supports at most 20 nodes")
    cdef long full = 1 << n
    cdef double* best = <double*>malloc(full * n * sizeof(double))
    cdef int* parent = <int*>malloc(full * n * sizeof(int))
    cdef double* C = <double*>malloc(n * n * sizeof(double))
    cdef long mask, m2
    cdef int a, last, nxt, prev
    cdef double c, val, cost
    if best == NULL or parent == NULL or C == NULL:
        free(best); free(parent); free(C)
        raise MemoryError()
    try:
        for a in range(n):
            for nxt in range(n):
                C[a * n + nxt] = conn[a][nxt]
        for mask in range(full * n):
            best[mask] = INF
            parent[mask] = -1
        for a in range(n):
            best[(1 << a) * n + a] = start[a]
        with nogil:
            for mask in range(1, full):
                for last in range(n):
                    c = best[mask * n + last]
                    if c == INF or not ((mask >> last) & 1):
                        continue
                    for nxt in range(n):
                        if (mask >> nxt) & 1:
                            continue
                        m2 = mask | (1 << nxt)
                        val = c + C[last * n + nxt]
                        if val < best[m2 * n + nxt]:
                            best[m2 * n + nxt] = val
                            parent[m2 * n + nxt] = last
        mask = full - 1
        cost = INF
        last = -1
        for a in range(n):
            val = best[mask * n + a] + end[a]
            if val < cost:
                cost = val
                last = a
        order = []
        while last != -1:
            order.append(last)
            prev = parent[mask * n + last]
            mask ^= 1 << last
            last = prev
        order.reverse()
        return cost, order
    finally:
        free(best); free(parent); free(C)
