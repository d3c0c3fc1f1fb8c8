"""Stacking bins into columns, 2D placement on the loading surface and the
rear-unloading (sequence) rule.

Coordinates: ``u`` runs across the truck width, ``v`` along its length with
``v = 0`` at the rear door. Each column carries the stop indices at which it
is picked up (``p``) and delivered (``d``); it is aboard over ``[p, d)``.
Two columns only compete for floor space when their aboard intervals
overlap. Column ``b`` blocks column ``a`` when ``b`` lies between ``a`` and
the door (same width band) and is aboard at the moment ``a`` is loaded or
unloaded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from . import kernels
from .model import EPS, Column, ModelError, PalletSpec, Placement, PlacedItem, Route, Shipment, Truck


class LoadingError(ModelError):
    pass


@dataclass(frozen=True)
class PackParams:
    threshold: float = 0.85
    beam_width: int | None = 5  # None or <= 0: unlimited (exhaustive search)
    weights: tuple = (1.0, 0.5, 1.0)
    exact_up_to: int = 6  # loads with at most this many columns are searched exhaustively

    @property
    def full_width(self) -> bool:
        return self.beam_width is None or self.beam_width <= 0

    def width_for(self, n: int) -> int:
        """Beam width used for ``n`` columns; 0 means exhaustive."""
        return 0 if self.full_width or n <= self.exact_up_to else self.beam_width


@dataclass(frozen=True)
class PackOutcome:
    feasible: bool
    placement: Placement | None = None
    reject_reason: str | None = None  # prejudge | no-arrangement | sequence


def rects_overlap(u1, v1, w1, l1, u2, v2, w2, l2) -> bool:
    """Interiors intersect (touching edges do not count)."""
    return u1 < u2 + w2 - EPS and u2 < u1 + w1 - EPS and v1 < v2 + l2 - EPS and v2 < v1 + l1 - EPS


# ---------------------------------------------------------------- columns

def _pallet_grid(binspec, pallet: PalletSpec) -> list:
    nu = int(math.floor(pallet.width / binspec.width + EPS))
    nv = int(math.floor(pallet.length / binspec.length + EPS))
    return [(i * binspec.width, k * binspec.length) for k in range(nv) for i in range(nu)]


def build_columns(shipment: Shipment, pallet: PalletSpec) -> list:
    """Stack a shipment's bins into columns (or onto stacked pallets)."""
    b = shipment.bin
    n = shipment.bin_count
    if not shipment.needs_pallet:
        full, rest = divmod(n, b.stack_limit)
        layers = [b.stack_limit] * full + ([rest] if rest else [])
        return [Column(shipment.id, i, b.width, b.length, lay) for i, lay in enumerate(layers)]
    spots = _pallet_grid(b, pallet)
    if not spots:
        raise LoadingError(f"shipment {shipment.id}: bin {b.width}x{b.length} does not fit on a "
                           f"{pallet.width}x{pallet.length} pallet")
    # fill pallets one at a time, bin columns full except the last one
    loads = []
    left = n
    while left > 0:
        load = []
        for (u, v) in spots:
            if left <= 0:
                break
            lay = min(b.stack_limit, left)
            load.append((u, v, lay))
            left -= lay
        loads.append(tuple(load))
    cols = []
    for i in range(0, len(loads), pallet.stack_limit):
        stack = tuple(loads[i:i + pallet.stack_limit])
        cols.append(Column(shipment.id, len(cols), pallet.width, pallet.length, len(stack),
                           on_pallet=True, pallet_loads=stack))
    return cols


def pallet_arrangement_ok(pallet_loads, binspec, pallet: PalletSpec) -> bool:
    """Bin columns on each pallet lie inside it, do not overlap and respect
    the bin stack limit."""
    for load in pallet_loads:
        if not load:
            return False
        for k, (u, v, lay) in enumerate(load):
            if not 1 <= lay <= binspec.stack_limit:
                return False
            if u < -EPS or v < -EPS or u + binspec.width > pallet.width + EPS \
                    or v + binspec.length > pallet.length + EPS:
                return False
            for (u2, v2, _) in load[:k]:
                if rects_overlap(u, v, binspec.width, binspec.length,
                                 u2, v2, binspec.width, binspec.length):
                    return False
    return True


def prejudge(columns, truck: Truck, threshold: float) -> bool:
    """Area filter: total column footprint at most ``threshold`` of the surface."""
    return sum(c.area for c in columns) <= threshold * truck.area + EPS


# ---------------------------------------------------------------- sequence rule

def check_sequence(placement: Placement, route: Route) -> bool:
    """True iff no column is loaded or unloaded past another one that is
    aboard at that moment and sits between it and the rear door."""
    pi, di = route.pickup_index, route.delivery_index
    items = placement.items
    for a in items:
        ja = a.column.shipment
        pa, da = pi[ja], di[ja]
        for b in items:
            if b is a:
                continue
            jb = b.column.shipment
            if not (a.u < b.u + b.column.width - EPS and b.u < a.u + a.column.width - EPS):
                continue
            if b.v + b.column.length > a.v + EPS:
                continue  # b is not between a and the door
            if kernels.blocks(pi[jb], di[jb], pa, da):
                return False
    return True


# ---------------------------------------------------------------- packing search

def _dense(values):
    ranks = {x: i for i, x in enumerate(sorted(set(values)))}
    return [ranks[x] for x in values]


def pack(columns, truck: Truck, visit_order, params: PackParams = PackParams(),
         explain: bool = True) -> PackOutcome:
    """Place ``columns`` on ``truck``'s surface.

    ``visit_order[i]`` is the (pickup stop, delivery stop) pair of
    ``columns[i]``. Returns a placement satisfying the overlap and sequence
    rules, or the reason none was found.
    """
    columns = list(columns)
    if not columns:
        return PackOutcome(True, Placement(truck.id, ()))
    ps = [int(p) for p, _ in visit_order]
    ds = [int(d) for _, d in visit_order]
    ranks = _dense(ps + ds)
    n = len(columns)
    sig = [(c.width, c.length, ranks[i], ranks[n + i]) for i, c in enumerate(columns)]
    order = sorted(range(n), key=lambda i: (sig[i], columns[i].shipment, columns[i].index))
    key = tuple(sig[i] for i in order)
    width = params.width_for(n)
    pos = _pack_cached(truck.surface_width, truck.surface_length, key, width, tuple(params.weights))
    if pos is None:
        reason = "no-arrangement"
        if explain and len({(p, d) for p, d in zip(ps, ds)}) > 1:
            # same geometry with everything aboard together and no blocking
            relaxed = tuple((w, l, 0, 1) for (w, l, _, _) in key)
            if _pack_cached(truck.surface_width, truck.surface_length, relaxed, width,
                            tuple(params.weights)) is not None:
                reason = "sequence"
        return PackOutcome(False, None, reason)
    items = [None] * n
    for slot, i in enumerate(order):
        x, y = pos[slot]
        items[i] = PlacedItem(columns[i], x, y)
    return PackOutcome(True, Placement(truck.id, tuple(items)))


@lru_cache(maxsize=200_000)
def _pack_cached(W, L, key, beam_width, weights):
    if beam_width > 0:
        return _beam(W, L, key, beam_width, weights)
    return _exhaustive(W, L, key, weights)


class _State:
    __slots__ = ("pu", "pv", "pw", "pl", "pp", "pd", "xs", "hs", "covered", "used", "where", "sig")

    def __init__(self, n):
        self.pu, self.pv, self.pw, self.pl, self.pp, self.pd = [], [], [], [], [], []
        self.xs, self.hs = None, None
        self.covered = 0.0
        self.used = [False] * n
        self.where = [None] * n
        self.sig = ()

    def child(self, i, col, x, y):
        s = _State.__new__(_State)
        w, l, p, d = col
        s.pu, s.pv, s.pw, s.pl = self.pu + [x], self.pv + [y], self.pw + [w], self.pl + [l]
        s.pp, s.pd = self.pp + [p], self.pd + [d]
        s.xs, s.hs = kernels.skyline_add(self.xs, self.hs, x, y + l, w)
        s.covered = self.covered + w * l
        s.used = self.used[:]
        s.used[i] = True
        s.where = self.where[:]
        s.where[i] = (x, y)
        s.sig = tuple(sorted(self.sig + ((col, x, y),)))
        return s


def _root(W, n):
    s = _State(n)
    s.xs, s.hs = [0.0, float(W)], [0.0]
    return s


def _candidates(W, L, key, s, weights):
    """(score, column slot, x, y) for every feasible child of ``s``; identical
    columns are expanded once, via their lowest unplaced slot."""
    w1, w2, w3 = weights
    out = []
    seen = set()
    for i, col in enumerate(key):
        if s.used[i] or col in seen:
            continue
        seen.add(col)
        w, l, p, d = col
        for x, y, score in kernels.expand(W, L, s.pu, s.pv, s.pw, s.pl, s.pp, s.pd, s.xs, s.hs,
                                          s.covered, w, l, p, d, w1, w2, w3):
            out.append((score, i, x, y))
    return out


def _beam(W, L, key, width, weights):
    n = len(key)
    beam = [_root(W, n)]
    for _ in range(n):
        pool = []
        seen = set()
        for rank, s in enumerate(beam):
            for score, i, x, y in _candidates(W, L, key, s, weights):
                sig = tuple(sorted(s.sig + ((key[i], x, y),)))
                if sig in seen:
                    continue
                seen.add(sig)
                pool.append((-score, rank, i, x, y))
        if not pool:
            return None
        pool.sort()
        beam = [beam[rank].child(i, key[i], x, y) for _, rank, i, x, y in pool[:width]]
    return tuple(beam[0].where)


def _exhaustive(W, L, key, weights):
    n = len(key)
    dead = set()

    def dfs(s, depth):
        if depth == n:
            return s
        if s.sig in dead:
            return None
        cands = _candidates(W, L, key, s, weights)
        cands.sort(key=lambda c: (-c[0], c[1], c[2], c[3]))
        for _, i, x, y in cands:
            found = dfs(s.child(i, key[i], x, y), depth + 1)
            if found is not None:
                return found
        dead.add(s.sig)
        return None

    res = dfs(_root(W, n), 0)
    return None if res is None else tuple(res.where)


def clear_cache():
    _pack_cached.cache_clear()
