"""Hot loops for the simulation engines, compiled with numba.

Everything here works on plain numpy arrays so the same code runs (slowly)
with NUMBA_DISABLE_JIT=1. States are int8 over {0,1,2}; the neighbor table is
an (n, 2d) int32 array; random numbers come from a numpy Generator passed in
by the caller (counter-based Philox streams, see engine.py).

Applied-change records use the transition codes of model.TRANSITIONS:
    0: 0->1   1: 0->2   2: 1->0   3: 1->2   4: 2->0   5: 2->1
with `aux` = the parent/infecting neighbor site for birth and infection
events, -1 otherwise.

Harris stream event kinds (see engine.EventKind):
    0: birth arrow, healthy parent only     (rate (lam_hi - lam_lo)/2d)
    1: birth arrow, any occupied parent     (offspring inherits the type)
    2: infection arrow
    3: death mark
    4: recovery mark
    5: birth arrow, infected parent only    (mutualist mirror decomposition)
"""

from __future__ import annotations

import numpy as np
from numba import njit

# applied-transition codes (must match model.TRANSITIONS order)
T01, T02, T10, T12, T20, T21 = 0, 1, 2, 3, 4, 5

# harris stream kinds (must match engine.EventKind values)
K_BIRTH_HEALTHY = 0
K_BIRTH_ANY = 1
K_INFECT = 2
K_DEATH = 3
K_RECOVER = 4
K_BIRTH_INFECTED = 5

NO_SITE = np.int32(-1)
REBUILD_EVERY = 4_000_000


# -- Fenwick tree over per-site total rates ----------------------------------


@njit(cache=True, inline="always")
def _fw_update(tree, i, delta):
    # tree is 1-based, length n+1
    i += 1
    while i < tree.size:
        tree[i] += delta
        i += i & (-i)


@njit(cache=True, inline="always")
def _fw_total(tree, n):
    # prefix sum of all n leaves
    s = 0.0
    i = n
    while i > 0:
        s += tree[i]
        i -= i & (-i)
    return s


@njit(cache=True)
def _fw_build(tree, rates):
    tree[:] = 0.0
    for x in range(rates.size):
        _fw_update(tree, x, rates[x])


@njit(cache=True)
def _fw_find(tree, n, topbit, u):
    """Smallest 0-based site index with cumulative rate > u."""
    pos = 0
    rem = u
    bit = topbit
    while bit > 0:
        nxt = pos + bit
        if nxt <= n and tree[nxt] <= rem:
            rem -= tree[nxt]
            pos = nxt
        bit >>= 1
    if pos >= n:  # float drift pushed u past the total
        pos = n - 1
    return pos


@njit(cache=True, inline="always")
def _site_rate(s, n1, n2, lam10, lam20, lam21, inf_mode, delta, inv2d):
    if s == 0:
        return (lam10 * n1 + lam20 * n2) * inv2d
    if s == 1:
        if inf_mode:
            return 1.0  # closure guarantees no infected neighbor
        return 1.0 + lam21 * n2 * inv2d
    return 1.0 + delta


@njit(cache=True)
def _neighbor_counts(states, nbr):
    n = states.size
    c1 = np.zeros(n, dtype=np.int32)
    c2 = np.zeros(n, dtype=np.int32)
    for x in range(n):
        for k in range(nbr.shape[1]):
            s = states[nbr[x, k]]
            if s == 1:
                c1[x] += 1
            elif s == 2:
                c2[x] += 1
    return c1, c2


@njit(cache=True, inline="always")
def _flip(states, nbr, c1, c2, rates, tree, x, new_state, lam10, lam20, lam21, inf_mode, delta, inv2d):
    """Set states[x] = new_state, maintaining neighbor counts and rates."""
    old = states[x]
    states[x] = new_state
    for k in range(nbr.shape[1]):
        y = nbr[x, k]
        if old == 1:
            c1[y] -= 1
        elif old == 2:
            c2[y] -= 1
        if new_state == 1:
            c1[y] += 1
        elif new_state == 2:
            c2[y] += 1
        ry = _site_rate(states[y], c1[y], c2[y], lam10, lam20, lam21, inf_mode, delta, inv2d)
        _fw_update(tree, y, ry - rates[y])
        rates[y] = ry
    rx = _site_rate(new_state, c1[x], c2[x], lam10, lam20, lam21, inf_mode, delta, inv2d)
    _fw_update(tree, x, rx - rates[x])
    rates[x] = rx


@njit(cache=True, inline="always")
def _pick_neighbor_in_state(states, nbr, x, target, k_th):
    """k_th (0-based) neighbor of x whose state == target."""
    seen = 0
    for k in range(nbr.shape[1]):
        y = nbr[x, k]
        if states[y] == target:
            if seen == k_th:
                return y
            seen += 1
    return NO_SITE  # unreachable if counts are consistent


@njit(cache=True)
def _record(ev_t, ev_code, ev_site, ev_aux, n_ev, t, code, site, aux):
    """Append one applied-change record, growing the arrays when full."""
    if n_ev >= ev_t.size:
        cap = 2 * ev_t.size
        nt = np.empty(cap, dtype=np.float64)
        nc = np.empty(cap, dtype=np.int8)
        ns = np.empty(cap, dtype=np.int32)
        na = np.empty(cap, dtype=np.int32)
        nt[:n_ev] = ev_t[:n_ev]
        nc[:n_ev] = ev_code[:n_ev]
        ns[:n_ev] = ev_site[:n_ev]
        na[:n_ev] = ev_aux[:n_ev]
        ev_t, ev_code, ev_site, ev_aux = nt, nc, ns, na
    ev_t[n_ev] = t
    ev_code[n_ev] = code
    ev_site[n_ev] = site
    ev_aux[n_ev] = aux
    return ev_t, ev_code, ev_site, ev_aux, n_ev + 1


@njit(cache=True)
def _invade_from(states, nbr, c1, c2, rates, tree, x0, t, ev_t, ev_code, ev_site, ev_aux, n_ev, record,
                 lam10, lam20, lam21, delta, inv2d):
    """Instantaneous invasion around a trigger site (d=1 ring).

    Converts every maximal run of 1s that is now adjacent to a 2, walking each
    chain outward from its contact point; the chain on the left of the trigger
    resolves before the one on its right. Returns the updated record arrays,
    record count, and the number of converted sites.
    """
    n = states.size
    converted = 0
    # New contacts only arise at the trigger site: either x0 just became 2
    # (a 1-run may touch it on either side) or x0 just became 1 (a 2 may sit
    # on either side). The chain always walks away from the infecting 2.
    for direction in range(2):
        step = -1 if direction == 0 else 1
        y = (x0 + step) % n
        if states[x0] == 2 and states[y] == 1:
            src, site, walk = x0, y, step
        elif states[x0] == 1 and states[y] == 2:
            src, site, walk = y, x0, -step
        else:
            continue
        while states[site] == 1:
            _flip(states, nbr, c1, c2, rates, tree, site, 2, lam10, lam20, lam21, True, delta, inv2d)
            converted += 1
            if record:
                ev_t, ev_code, ev_site, ev_aux, n_ev = _record(
                    ev_t, ev_code, ev_site, ev_aux, n_ev, t, T12, site, src
                )
            src = site
            site = (site + walk) % n
    return ev_t, ev_code, ev_site, ev_aux, n_ev, converted


@njit(cache=True)
def gillespie_kernel(states, nbr, lam10, lam20, lam21, inf_mode, delta,
                     t_end, snap_times, record, rng):
    """Direct stochastic simulation with per-site rates in a Fenwick tree.

    Returns (snaps, ev_t, ev_code, ev_site, ev_aux, n_ev, t_final,
             t_no_infected, t_no_host, t_empty, cut_touched, max_rate_err).
    The t_no_* outputs are the first times the corresponding count hit zero
    (inf if never); cut_touched reports occupation of site 0 or n-1 at any
    point (the torus cut used by the one-dimensional analyses).
    """
    n = states.size
    twod = nbr.shape[1]
    inv2d = 1.0 / twod
    c1, c2 = _neighbor_counts(states, nbr)
    rates = np.empty(n, dtype=np.float64)
    for x in range(n):
        rates[x] = _site_rate(states[x], c1[x], c2[x], lam10, lam20, lam21, inf_mode, delta, inv2d)
    tree = np.zeros(n + 1, dtype=np.float64)
    _fw_build(tree, rates)
    topbit = 1
    while topbit * 2 <= n:
        topbit *= 2

    count1 = 0
    count2 = 0
    for x in range(n):
        if states[x] == 1:
            count1 += 1
        elif states[x] == 2:
            count2 += 1

    cap = 1024 if record else 1
    ev_t = np.empty(cap, dtype=np.float64)
    ev_code = np.empty(cap, dtype=np.int8)
    ev_site = np.empty(cap, dtype=np.int32)
    ev_aux = np.empty(cap, dtype=np.int32)
    n_ev = 0

    n_snaps = snap_times.size
    snaps = np.empty((n_snaps, n), dtype=np.int8)
    snap_idx = 0

    inf_sentinel = np.inf
    t_no_infected = inf_sentinel if count2 > 0 else 0.0
    t_no_host = inf_sentinel if count1 > 0 else 0.0
    t_empty = inf_sentinel if count1 + count2 > 0 else 0.0
    cut_touched = states[0] != 0 or states[n - 1] != 0

    t = 0.0
    events_since_rebuild = 0
    max_rate_err = 0.0
    while True:
        total = _fw_total(tree, n)
        if total <= 1e-12:
            break  # absorbing all-empty state
        dt = rng.exponential(1.0 / total)
        t_next = t + dt
        while snap_idx < n_snaps and snap_times[snap_idx] < t_next:
            if snap_times[snap_idx] > t_end:
                break
            snaps[snap_idx] = states
            snap_idx += 1
        if t_next > t_end:
            t = t_end
            break
        t = t_next

        u = rng.random() * total
        x = _fw_find(tree, n, topbit, u)
        if rates[x] <= 0.0:
            # float drift landed on a dead site; walk to a live one
            step = 1
            while rates[x] <= 0.0:
                x = (x + step) % n
        s = states[x]
        u2 = rng.random()
        if s == 0:
            b1 = lam10 * c1[x] * inv2d
            b2 = lam20 * c2[x] * inv2d
            if u2 * (b1 + b2) < b1:
                parent = _pick_neighbor_in_state(states, nbr, x, 1, rng.integers(0, c1[x]))
                _flip(states, nbr, c1, c2, rates, tree, x, 1, lam10, lam20, lam21, inf_mode, delta, inv2d)
                count1 += 1
                if record:
                    ev_t, ev_code, ev_site, ev_aux, n_ev = _record(
                        ev_t, ev_code, ev_site, ev_aux, n_ev, t, T01, x, parent)
            else:
                parent = _pick_neighbor_in_state(states, nbr, x, 2, rng.integers(0, c2[x]))
                _flip(states, nbr, c1, c2, rates, tree, x, 2, lam10, lam20, lam21, inf_mode, delta, inv2d)
                count2 += 1
                if record:
                    ev_t, ev_code, ev_site, ev_aux, n_ev = _record(
                        ev_t, ev_code, ev_site, ev_aux, n_ev, t, T02, x, parent)
        elif s == 1:
            infect = 0.0 if inf_mode else lam21 * c2[x] * inv2d
            if u2 * (1.0 + infect) < 1.0:
                _flip(states, nbr, c1, c2, rates, tree, x, 0, lam10, lam20, lam21, inf_mode, delta, inv2d)
                count1 -= 1
                if record:
                    ev_t, ev_code, ev_site, ev_aux, n_ev = _record(
                        ev_t, ev_code, ev_site, ev_aux, n_ev, t, T10, x, NO_SITE)
            else:
                parent = _pick_neighbor_in_state(states, nbr, x, 2, rng.integers(0, c2[x]))
                _flip(states, nbr, c1, c2, rates, tree, x, 2, lam10, lam20, lam21, inf_mode, delta, inv2d)
                count1 -= 1
                count2 += 1
                if record:
                    ev_t, ev_code, ev_site, ev_aux, n_ev = _record(
                        ev_t, ev_code, ev_site, ev_aux, n_ev, t, T12, x, parent)
        else:
            if u2 * (1.0 + delta) < 1.0:
                _flip(states, nbr, c1, c2, rates, tree, x, 0, lam10, lam20, lam21, inf_mode, delta, inv2d)
                count2 -= 1
                if record:
                    ev_t, ev_code, ev_site, ev_aux, n_ev = _record(
                        ev_t, ev_code, ev_site, ev_aux, n_ev, t, T20, x, NO_SITE)
            else:
                _flip(states, nbr, c1, c2, rates, tree, x, 1, lam10, lam20, lam21, inf_mode, delta, inv2d)
                count2 -= 1
                count1 += 1
                if record:
                    ev_t, ev_code, ev_site, ev_aux, n_ev = _record(
                        ev_t, ev_code, ev_site, ev_aux, n_ev, t, T21, x, NO_SITE)

        if inf_mode:
            ev_t, ev_code, ev_site, ev_aux, n_ev, converted = _invade_from(
                states, nbr, c1, c2, rates, tree, x, t,
                ev_t, ev_code, ev_site, ev_aux, n_ev, record,
                lam10, lam20, lam21, delta, inv2d)
            count1 -= converted
            count2 += converted

        if states[0] != 0 or states[n - 1] != 0:
            cut_touched = True
        if count2 == 0 and t_no_infected == inf_sentinel:
            t_no_infected = t
        if count1 == 0 and t_no_host == inf_sentinel:
            t_no_host = t
        if count1 + count2 == 0 and t_empty == inf_sentinel:
            t_empty = t

        events_since_rebuild += 1
        if events_since_rebuild >= REBUILD_EVERY:
            _fw_build(tree, rates)
            events_since_rebuild = 0

    # remaining snapshots get the final (possibly absorbed) state
    while snap_idx < n_snaps:
        snaps[snap_idx] = states
        snap_idx += 1

    # debug check: stored rates against a from-scratch recompute
    cc1, cc2 = _neighbor_counts(states, nbr)
    for x in range(n):
        r = _site_rate(states[x], cc1[x], cc2[x], lam10, lam20, lam21, inf_mode, delta, inv2d)
        err = abs(r - rates[x])
        if err > max_rate_err:
            max_rate_err = err

    return (snaps, ev_t, ev_code, ev_site, ev_aux, n_ev, t,
            t_no_infected, t_no_host, t_empty, cut_touched, max_rate_err)


# -- Harris stream replay -----------------------------------------------------

RULE_STACKED = 0
RULE_UPPER = 1  # contact process reading every birth arrow
RULE_LOWER = 2  # contact process reading only the shared birth channel


@njit(cache=True, inline="always")
def _apply_stream_event(states, kind, src, dst, rule):
    """Apply one stream event to one process; returns (site, code) or (-1, -1)
    when the event is a no-op for this process."""
    if rule == RULE_STACKED:
        if kind == K_BIRTH_HEALTHY:
            if states[src] == 1 and states[dst] == 0:
                states[dst] = 1
                return dst, T01
        elif kind == K_BIRTH_ANY:
            s = states[src]
            if s != 0 and states[dst] == 0:
                states[dst] = s
                return dst, (T01 if s == 1 else T02)
        elif kind == K_BIRTH_INFECTED:
            if states[src] == 2 and states[dst] == 0:
                states[dst] = 2
                return dst, T02
        elif kind == K_INFECT:
            if states[src] == 2 and states[dst] == 1:
                states[dst] = 2
                return dst, T12
        elif kind == K_DEATH:
            s = states[src]
            if s != 0:
                states[src] = 0
                return src, (T10 if s == 1 else T20)
        elif kind == K_RECOVER:
            if states[src] == 2:
                states[src] = 1
                return src, T21
    else:
        # single-type contact process; occupancy stored as state 1
        if kind == K_DEATH:
            if states[src] != 0:
                states[src] = 0
                return src, T10
        elif kind == K_BIRTH_ANY or (
            rule == RULE_UPPER and (kind == K_BIRTH_HEALTHY or kind == K_BIRTH_INFECTED)
        ):
            if states[src] != 0 and states[dst] == 0:
                states[dst] = 1
                return dst, T01
    return -1, -1


@njit(cache=True)
def apply_chunk_kernel(stack, rules, nbr, times, kinds, srcs, dsts,
                       snap_times, snap_idx, snaps, chunk_end,
                       record_row, ev_t, ev_code, ev_site, ev_aux, n_ev,
                       pairs_lo, pairs_hi):
    """Replay one time-sorted stream chunk into several processes at once.

    stack: (k, n) int8 state rows, one per process; rules: (k,) row rules.
    snaps: (n_snap_times, k, n) filled for snapshot times inside this chunk.
    record_row: row whose applied changes are appended to the ev_* arrays
    (-1 records nothing). pairs_lo/pairs_hi: after every event, verify
    occupied(stack[pairs_lo[j]]) <= occupied(stack[pairs_hi[j]]) at the
    affected site; returns the count of violations and the first offender.

    Returns (snap_idx, ev arrays..., n_ev, violations, first_bad_time,
    first_bad_site, applied_mask).
    """
    k_rows = stack.shape[0]
    n_snaps = snap_times.size
    violations = 0
    first_bad_time = np.inf
    first_bad_site = np.int32(-1)
    applied = np.zeros(times.size, dtype=np.uint8)

    for i in range(times.size):
        t = times[i]
        while snap_idx < n_snaps and snap_times[snap_idx] < t:
            snaps[snap_idx] = stack
            snap_idx += 1
        touched = np.int32(-1)
        for r in range(k_rows):
            site, code = _apply_stream_event(stack[r], kinds[i], srcs[i], dsts[i], rules[r])
            if site >= 0:
                touched = site
                applied[i] = 1
                if r == record_row:
                    ev_t, ev_code, ev_site, ev_aux, n_ev = _record(
                        ev_t, ev_code, ev_site, ev_aux, n_ev, t, code, site,
                        srcs[i] if code in (T01, T02, T12) else NO_SITE)
        if touched >= 0 and pairs_lo.size > 0:
            for j in range(pairs_lo.size):
                lo = stack[pairs_lo[j], touched] != 0
                hi = stack[pairs_hi[j], touched] != 0
                if lo and not hi:
                    violations += 1
                    if t < first_bad_time:
                        first_bad_time = t
                        first_bad_site = touched
    while snap_idx < n_snaps and snap_times[snap_idx] <= chunk_end:
        snaps[snap_idx] = stack
        snap_idx += 1
    return (snap_idx, ev_t, ev_code, ev_site, ev_aux, n_ev,
            violations, first_bad_time, first_bad_site, applied)


# -- replays over applied-change records --------------------------------------


@njit(cache=True)
def replay_states_kernel(states, ev_code, ev_site, n_ev):
    """Apply recorded transitions in place (codes per TRANSITIONS)."""
    to_state = np.array([1, 2, 0, 2, 0, 1], dtype=np.int8)
    for i in range(n_ev):
        states[ev_site[i]] = to_state[ev_code[i]]


@njit(cache=True)
def edge_replay_kernel(states, ev_t, ev_code, ev_site, n_ev, infinite_infection):
    """Track r (rightmost infected), l (leftmost host) through a 1d run.

    Returns per-event series (t, r, l) using sentinels r=-1 "no infected",
    l=n "no host" (linear order on the cut torus; callers guarantee the cut
    stays clear), plus tau (inf if censored). tau fires at the first event
    where the pre-event gap l-r equals 2 and either the gap drops to 1
    (finite infection rates) or r advances (infinite infection rates).
    """
    n = states.size
    to_state = np.array([1, 2, 0, 2, 0, 1], dtype=np.int8)

    r = -1
    l = n
    for x in range(n):
        if states[x] == 2 and x > r:
            r = x
        if states[x] == 1 and x < l:
            l = x

    out_t = np.empty(n_ev, dtype=np.float64)
    out_r = np.empty(n_ev, dtype=np.int64)
    out_l = np.empty(n_ev, dtype=np.int64)
    tau = np.inf

    for i in range(n_ev):
        x = ev_site[i]
        prev_r = r
        prev_l = l
        states[x] = to_state[ev_code[i]]
        s = states[x]
        # update rightmost infected
        if s == 2 and x > r:
            r = x
        elif s != 2 and x == r:
            r = -1
            for y in range(x, -1, -1):
                if states[y] == 2:
                    r = y
                    break
        # update leftmost host
        if s == 1 and x < l:
            l = x
        elif s != 1 and x == l:
            l = n
            for y in range(x, n):
                if states[y] == 1:
                    l = y
                    break
        out_t[i] = ev_t[i]
        out_r[i] = r
        out_l[i] = l
        if tau == np.inf and prev_r >= 0 and prev_l < n and prev_l - prev_r == 2:
            if infinite_infection:
                if r > prev_r:
                    tau = ev_t[i]
            else:
                if prev_l - prev_r == 2 and r >= 0 and l < n and l - r == 1:
                    tau = ev_t[i]
    return out_t, out_r, out_l, tau


@njit(cache=True)
def occupied_edge_kernel(states, ev_t, ev_code, ev_site, n_ev):
    """Rightmost/leftmost occupied site through a 1d run (any nonzero state).

    Returns (r0, l0, times[:m], rr[:m], ll[:m]) where rows are emitted only
    when an edge actually moves. Sentinels r=-1, l=n mean "nothing occupied";
    linear order on the cut torus as in edge_replay_kernel.
    """
    n = states.size
    to_state = np.array([1, 2, 0, 2, 0, 1], dtype=np.int8)
    r = -1
    l = n
    for x in range(n):
        if states[x] != 0:
            if x > r:
                r = x
            if x < l:
                l = x
    r0 = r
    l0 = l
    out_t = np.empty(n_ev, dtype=np.float64)
    out_r = np.empty(n_ev, dtype=np.int64)
    out_l = np.empty(n_ev, dtype=np.int64)
    m = 0
    for i in range(n_ev):
        x = ev_site[i]
        states[x] = to_state[ev_code[i]]
        if states[x] != 0:
            moved = False
            if x > r:
                r = x
                moved = True
            if x < l:
                l = x
                moved = True
            if not moved:
                continue
        else:
            if x != r and x != l:
                continue
            if x == r:
                r = -1
                for y in range(x, -1, -1):
                    if states[y] != 0:
                        r = y
                        break
            if x == l:
                l = n
                for y in range(x, n):
                    if states[y] != 0:
                        l = y
                        break
        out_t[m] = ev_t[i]
        out_r[m] = r
        out_l[m] = l
        m += 1
    return r0, l0, out_t[:m], out_r[:m], out_l[:m]


@njit(cache=True)
def segregation_scan_kernel(states, ev_t, ev_code, ev_site, n_ev):
    """Count events after which the configuration is not segregated.

    Segregated: all infected strictly left of all hosts, or the mirror image
    (evaluated in linear order; the caller keeps activity away from the cut).
    Checks are skipped mid-chain: only the last record of every identical
    timestamp is inspected. Returns (violations, first_bad_time).
    """
    n = states.size
    to_state = np.array([1, 2, 0, 2, 0, 1], dtype=np.int8)
    violations = 0
    first_bad = np.inf
    for i in range(n_ev):
        states[ev_site[i]] = to_state[ev_code[i]]
        if i + 1 < n_ev and ev_t[i + 1] == ev_t[i]:
            continue
        min1, max1, min2, max2 = n, -1, n, -1
        for x in range(n):
            s = states[x]
            if s == 1:
                if x < min1:
                    min1 = x
                if x > max1:
                    max1 = x
            elif s == 2:
                if x < min2:
                    min2 = x
                if x > max2:
                    max2 = x
        ok = (max2 < min1) or (max1 < min2)  # vacuous when a type is absent
        if not ok:
            violations += 1
            if ev_t[i] < first_bad:
                first_bad = ev_t[i]
    return violations, first_bad


@njit(cache=True)
def box_series_kernel(states, box_id, n_boxes, ev_t, ev_code, ev_site, n_ev):
    """Per-box infected-count series from applied-change records.

    Returns (counts0, times, boxes, counts): counts0 is the t=0 tally per box;
    each series row gives the new count of `boxes[i]` after the event at
    `times[i]`. Only events that change a tracked box's tally are emitted.
    """
    counts = np.zeros(n_boxes, dtype=np.int64)
    for x in range(states.size):
        b = box_id[x]
        if b >= 0 and states[x] == 2:
            counts[b] += 1
    counts0 = counts.copy()
    out_t = np.empty(n_ev, dtype=np.float64)
    out_b = np.empty(n_ev, dtype=np.int32)
    out_c = np.empty(n_ev, dtype=np.int64)
    m = 0
    for i in range(n_ev):
        b = box_id[ev_site[i]]
        if b < 0:
            continue
        code = ev_code[i]
        if code == T02 or code == T12:
            counts[b] += 1
        elif code == T20 or code == T21:
            counts[b] -= 1
        else:
            continue
        out_t[m] = ev_t[i]
        out_b[m] = b
        out_c[m] = counts[b]
        m += 1
    return counts0, out_t[:m], out_b[:m], out_c[:m]
