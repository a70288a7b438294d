"""Pure numpy fallback kernels, used when numba is unavailable or when
TRANSIT_PRUNE_BACKEND=numpy. Semantically identical to numba_impl: same
labels, same parents, same counters, edge for edge."""
from __future__ import annotations

import numpy as np

from ..model import INFINITY

BACKEND_NAME = "numpy"

_I64_MAX = np.iinfo(np.int64).max


def scan_routes(rs_ptr, rs_stops, rt_ptr, rt_trips, trip_ev_ptr, trip_arr, trip_dep,
                sr_ptr, sr_route, sr_pos, marked, tau_prev_any,
                tau_any, tau_ride,
                apk, apa, apb, apc, rpk, rpa, rpb, rpc,
                target, ride_marked, any_marked, n_stops):
    n_routes = len(rs_ptr) - 1
    hot = np.flatnonzero(marked[:n_stops])
    if hot.size == 0:
        return
    route_pos = np.full(n_routes, _I64_MAX, dtype=np.int64)
    idx = np.concatenate([np.arange(sr_ptr[p], sr_ptr[p + 1]) for p in hot])
    if idx.size:
        np.minimum.at(route_pos, sr_route[idx], sr_pos[idx])

    target = int(target)
    for r in np.flatnonzero(route_pos < _I64_MAX):
        start = int(route_pos[r])
        t0 = int(rt_ptr[r])
        ntr = int(rt_ptr[r + 1]) - t0
        if ntr == 0:
            continue
        s0 = int(rs_ptr[r])
        L = int(rs_ptr[r + 1]) - s0
        cur = -1
        bpos = -1
        for i in range(start, L):
            p = int(rs_stops[s0 + i])
            if cur >= 0:
                gid = int(rt_trips[t0 + cur])
                arr = int(trip_arr[trip_ev_ptr[gid] + i])
                if arr < tau_any[target]:
                    if arr < tau_ride[p]:
                        tau_ride[p] = arr
                        rpk[p] = 2
                        rpa[p] = gid
                        rpb[p] = bpos
                        rpc[p] = i
                        ride_marked[p] = True
                    if arr < tau_any[p]:
                        tau_any[p] = arr
                        apk[p] = 2
                        apa[p] = gid
                        apb[p] = bpos
                        apc[p] = i
                        any_marked[p] = True
            ready = int(tau_prev_any[p])
            if ready < INFINITY:
                lo, hi = 0, ntr
                while lo < hi:
                    mid = (lo + hi) // 2
                    gid = int(rt_trips[t0 + mid])
                    if trip_dep[trip_ev_ptr[gid] + i] >= ready:
                        hi = mid
                    else:
                        lo = mid + 1
                if lo < ntr and (cur < 0 or lo < cur):
                    cur = lo
                    bpos = i


def relax_transfers(tg_indptr, tg_to, tg_dur, ride_marked, tau_ride, tau_any,
                    apk, apa, apb, target, early, counters, walk_marked, n_stops):
    target = int(target)
    for s in np.flatnonzero(ride_marked[:n_stops]):
        s = int(s)
        lo, hi = int(tg_indptr[s]), int(tg_indptr[s + 1])
        m = hi - lo
        if m == 0:
            continue
        ts = int(tau_ride[s])
        bound = int(tau_any[target])
        d = tg_dur[lo:hi]
        v = tg_to[lo:hi]
        cand = ts + d

        # the adjacency list holds the target at most once; an improvement
        # there tightens the pruning bound for every later edge of this stop
        cut = int(np.searchsorted(d, bound - ts, side="left")) if early else m
        scope = cut if early else m
        bound_vec = None
        tpos = np.flatnonzero(v[:cut] == target)
        if tpos.size and cand[tpos[0]] < bound:
            tp = int(tpos[0])
            if early:
                scope = tp + 1
            else:
                bound_vec = np.full(m, bound, dtype=np.int64)
                bound_vec[tp + 1:] = cand[tp]
        if early:
            counters[2] += m - scope
        counters[0] += scope

        cs = cand[:scope]
        vs = v[:scope]
        limit = bound if bound_vec is None else bound_vec[:scope]
        ok = (cs < tau_any[vs]) & (cs < limit)
        idx = np.flatnonzero(ok)
        if idx.size:
            wv = vs[idx]
            tau_any[wv] = cs[idx]
            apk[wv] = 3
            apa[wv] = s
            apb[wv] = d[:scope][idx]
            counters[1] += idx.size
            wm = wv[wv < n_stops]
            walk_marked[wm] = True
