"""JIT-compiled search kernels. Mirrors numpy_impl exactly; any change here
must be replicated there (tests assert bit-identical behaviour).

Labels are kept on two tracks per vertex: ``tau_any`` (best arrival by any
means, feeds boarding, fronts and the target bound) and ``tau_ride`` (best
arrival whose last leg is a trip). Walks are only relaxed from the ride
track, so a walk never chains onto another walk; tau_any <= tau_ride holds
everywhere.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from ..model import INFINITY

BACKEND_NAME = "numba"

_INF = INFINITY


@njit(cache=True)
def scan_routes(rs_ptr, rs_stops, rt_ptr, rt_trips, trip_ev_ptr, trip_arr, trip_dep,
                sr_ptr, sr_route, sr_pos, marked, tau_prev_any,
                tau_any, tau_ride,
                apk, apa, apb, apc, rpk, rpa, rpb, rpc,
                target, ride_marked, any_marked, n_stops):
    """One round of route scanning.

    Boards with previous-round any-track labels; writes improvements to both
    tracks under local and target pruning. ride_marked collects stops whose
    ride track improved (the transfer phase work list), any_marked those
    whose any track improved (next round's scan list).
    """
    n_routes = rs_ptr.shape[0] - 1
    route_pos = np.full(n_routes, -1, dtype=np.int64)
    for p in range(n_stops):
        if marked[p]:
            for idx in range(sr_ptr[p], sr_ptr[p + 1]):
                r = sr_route[idx]
                pos = sr_pos[idx]
                if route_pos[r] < 0 or pos < route_pos[r]:
                    route_pos[r] = pos
    for r in range(n_routes):
        start = route_pos[r]
        if start < 0:
            continue
        t0 = rt_ptr[r]
        ntr = rt_ptr[r + 1] - t0
        if ntr == 0:
            continue
        s0 = rs_ptr[r]
        L = rs_ptr[r + 1] - s0
        cur = np.int64(-1)
        bpos = np.int64(-1)
        for i in range(start, L):
            p = rs_stops[s0 + i]
            if cur >= 0:
                gid = rt_trips[t0 + cur]
                arr = trip_arr[trip_ev_ptr[gid] + i]
                bound = tau_any[target]
                if arr < bound:
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
            ready = tau_prev_any[p]
            if ready < _INF:
                lo = np.int64(0)
                hi = ntr
                while lo < hi:
                    mid = (lo + hi) // 2
                    gid = rt_trips[t0 + mid]
                    if trip_dep[trip_ev_ptr[gid] + i] >= ready:
                        hi = mid
                    else:
                        lo = mid + 1
                if lo < ntr and (cur < 0 or lo < cur):
                    cur = lo
                    bpos = i


@njit(cache=True)
def relax_transfers(tg_indptr, tg_to, tg_dur, ride_marked, tau_ride, tau_any,
                    apk, apa, apb, target, early, counters, walk_marked, n_stops):
    """Relax outgoing transfers of every ride-improved stop, ascending id.

    Walk candidates start from the ride-track label and write to the any
    track. With ``early`` set, adjacency lists (presorted by duration) are
    cut at the first candidate that cannot beat the best known target
    arrival; the rest of the list counts as pruned. counters = [examined,
    relaxed, pruned].
    """
    for s in range(n_stops):
        if not ride_marked[s]:
            continue
        ts = tau_ride[s]
        lo = tg_indptr[s]
        hi = tg_indptr[s + 1]
        bound = tau_any[target]
        i = lo
        while i < hi:
            cand = ts + tg_dur[i]
            if early and cand >= bound:
                counters[2] += hi - i
                break
            counters[0] += 1
            v = tg_to[i]
            if cand < tau_any[v] and cand < bound:
                tau_any[v] = cand
                apk[v] = 3
                apa[v] = s
                apb[v] = tg_dur[i]
                counters[1] += 1
                if v < n_stops:
                    walk_marked[v] = True
                if v == target:
                    bound = cand
            i += 1
