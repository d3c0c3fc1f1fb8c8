"""Pure-Python hot kernels. ``_ckernels.pyx`` mirrors these line for line."""

EPS = 1e-9
INF = float("inf")


def blocks(pb, db, pa, da):
    """True if an item aboard over [pb, db) is on the truck while the item
    aboard over [pa, da) is loaded or unloaded."""
    return (pb < da < db) or (pb < pa < db)


def fits(x, y, w, l, p, d, pu, pv, pw, pl, pp, pd, W, L):
    if x < -EPS or y < -EPS or x + w > W + EPS or y + l > L + EPS:
        return False
    for i in range(len(pu)):
        if not (p < pd[i] and pp[i] < d):
            continue
        u = pu[i]
        if not (x < u + pw[i] - EPS and u < x + w - EPS):
            continue
        v = pv[i]
        if y < v + pl[i] - EPS and v < y + l - EPS:
            return False
        if v + pl[i] <= y + EPS:
            if blocks(pp[i], pd[i], p, d):
                return False
        elif blocks(p, d, pp[i], pd[i]):
            return False
    return True


def _profile(xs, hs, x, top, w):
    """Raise the rear skyline to ``top`` on [x, x+w); returns new breakpoints/heights."""
    x1 = x + w
    nxs = [xs[0]]
    nhs = []
    for i in range(len(hs)):
        a, b, h = xs[i], xs[i + 1], hs[i]
        cuts = [a]
        if a + EPS < x < b - EPS:
            cuts.append(x)
        if a + EPS < x1 < b - EPS:
            cuts.append(x1)
        cuts.append(b)
        for k in range(len(cuts) - 1):
            lo, hi = cuts[k], cuts[k + 1]
            mid = 0.5 * (lo + hi)
            hh = top if (x < mid < x1 and top > h) else h
            if nhs and abs(nhs[-1] - hh) <= EPS:
                nxs[-1] = hi
            else:
                nhs.append(hh)
                nxs.append(hi)
    return nxs, nhs


def skyline_add(xs, hs, x, top, w):
    return _profile(xs, hs, x, top, w)


def score_of(xs, hs, covered, w1, w2, w3):
    sky = 0.0
    irr = 0.0
    for i in range(len(hs)):
        sky += hs[i] * (xs[i + 1] - xs[i])
        if i:
            irr += abs(hs[i] - hs[i - 1])
    waste = sky - covered
    if waste < 0.0:
        waste = 0.0
    return -w1 * waste - w2 * irr + w3 * covered


def expand(W, L, pu, pv, pw, pl, pp, pd, xs, hs, covered, w, l, p, d, w1, w2, w3):
    """Feasible positions of a w x l column aboard over [p, d) given the
    placed columns; returns (x, y, score) triples in enumeration order."""
    cx = {0.0}
    for i in range(len(pu)):
        cx.add(pu[i] + pw[i])
    out = []
    for x in sorted(cx):
        if x + w > W + EPS:
            continue
        cy = {0.0}
        for i in range(len(pu)):
            if p < pd[i] and pp[i] < d and x < pu[i] + pw[i] - EPS and pu[i] < x + w - EPS:
                cy.add(pv[i] + pl[i])
        for y in sorted(cy):
            if y + l > L + EPS:
                continue
            if not fits(x, y, w, l, p, d, pu, pv, pw, pl, pp, pd, W, L):
                continue
            nxs, nhs = _profile(xs, hs, x, y + l, w)
            out.append((x, y, score_of(nxs, nhs, covered + w * l, w1, w2, w3)))
    return out


def held_karp(conn, start, end):
    """Exact shortest Hamiltonian path over ``n`` nodes anchored at a depot.

    ``conn[a][b]`` is the cost of visiting b right after a, ``start[a]`` the
    cost from the depot to a and ``end[a]`` from a back to the depot.
    Returns (cost, order).
    """
    n = len(start)
    if n == 0:
        return 0.0, []
    full = 1 << n
    best = [[INF] * n for _ in range(full)]
    parent = [[-1] * n for _ in range(full)]
    for a in range(n):
        best[1 << a][a] = start[a]
    for mask in range(1, full):
        row = best[mask]
        for last in range(n):
            c = row[last]
            if c == INF or not (mask >> last) & 1:
                continue
            crow = conn[last]
            for nxt in range(n):
                if (mask >> nxt) & 1:
                    continue
                m2 = mask | (1 << nxt)
                v = c + crow[nxt]
                if v < best[m2][nxt]:
                    best[m2][nxt] = v
                    parent[m2][nxt] = last
    mask = full - 1
    cost, last = INF, -1
    for a in range(n):
        v = best[mask][a] + end[a]
        if v < cost:
            cost, last = v, a
    order = []
    while last != -1:
        order.append(last)
        prev = parent[mask][last]
        mask ^= 1 << last
        last = prev
    order.reverse()
    return cost, order
