"""One-dimensional run analyses: interface edges, segregation, lineages,
and estimation helpers.

Everything here works on the linear order 0..n-1 of the ring, treating the
wrap edge between site n-1 and site 0 as a cut. The interface quantities
(rightmost infected site, leftmost host site, their gap, the collision time
tau) only mean what they should while activity stays away from the cut, so
the report types carry a `cut_touched` flag and callers size their lattices
accordingly.

Lineage tracking follows two set-valued processes seeded at a space-time
point: the strict birth lineage (descendants), which grows only by births
onto empty sites from current members, and the host cluster, which in
addition absorbs an adjacent host when a birth arrow lands on it even though
the site is already occupied. Those no-op arrows are thinned away by the
event-driven engine, but conditionally on the realized run they are
independent Poisson clocks (rate lambda10/2 per directed edge in d=1), so
the cluster tracker synthesizes them from a seeded generator; the joint law
of (run, cluster) is unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from stackedcp._kernels import (
    T01,
    T02,
    T10,
    T12,
    T20,
    T21,
    edge_replay_kernel,
    occupied_edge_kernel,
    segregation_scan_kernel,
)
from stackedcp.engine import Trajectory, apply_harris, build_harris, run_gillespie
from stackedcp.model import Configuration, Params, neighbor_table

_TO_STATE = np.array([1, 2, 0, 2, 0, 1], dtype=np.int8)

# fixed stream id for the synthesized no-op birth arrows used by cluster
# tracking; keeps link draws independent of every engine channel
_LINK_TAG = 0x1B7


def is_segregated(cfg: Configuration) -> bool:
    """True when every infected site lies strictly left of every host site
    on the linear order, or the mirror image holds. Vacuously true when
    either type is absent."""
    if cfg.dim != 1:
        raise ValueError("segregation is a one-dimensional notion")
    ones = np.flatnonzero(cfg.states == 1)
    twos = np.flatnonzero(cfg.states == 2)
    if ones.size == 0 or twos.size == 0:
        return True
    return bool(twos.max() < ones.min() or ones.max() < twos.min())


def host_infected_contact(cfg: Configuration) -> bool:
    """True when some host site has an infected neighbor (any dimension)."""
    nbr = neighbor_table(cfg.dim, cfg.side)
    s = cfg.states
    return bool(np.any((s[:, None] == 1) & (s[nbr] == 2)))


def _cut_touched(traj: Trajectory) -> bool:
    n = traj.params.n_sites
    init = traj.initial.states
    if init[0] != 0 or init[n - 1] != 0:
        return True
    if traj.recorded and traj.sites.size:
        return bool(np.any((traj.sites == 0) | (traj.sites == n - 1)))
    return False


# -- interface edges and tau ---------------------------------------------------


@dataclass
class EdgeSeries:
    """Step series of the infected/host interface in a segregated 1d run.

    r = rightmost infected site, l = leftmost host site, d = l - r; -inf/+inf
    stand in for "no infected"/"no host". When the start is segregated only
    in the mirrored orientation the whole series is reported in reflected
    coordinates (x -> n-1-x) so that infected-left-of-hosts always holds;
    `reflected` records that. tau is the collision time (inf when censored
    at the end of the window).
    """

    times: np.ndarray
    r: np.ndarray
    l: np.ndarray
    tau: float
    t_end: float
    reflected: bool
    cut_touched: bool

    @property
    def d(self) -> np.ndarray:
        return self.l - self.r

    @property
    def censored(self) -> bool:
        return not np.isfinite(self.tau)

    def summary(self) -> dict:
        return {
            "tau": None if self.censored else float(self.tau),
            "censored": self.censored,
            "t_end": float(self.t_end),
            "reflected": self.reflected,
            "cut_touched": self.cut_touched,
        }

    def to_csv(self, path) -> None:
        d = self.d
        with open(path, "w") as fh:
            fh.write("t,r,l,d\n")
            for i in range(self.times.size):
                fh.write(f"{self.times[i]:.10g},{self.r[i]:.10g},"
                         f"{self.l[i]:.10g},{d[i]:.10g}\n")


def track_edges(traj: Trajectory) -> EdgeSeries:
    """Interface-edge series r_t, l_t, d_t with the collision time tau.

    Needs a recorded 1d run from a segregated start. tau is the first event
    time at which the pre-event gap d = 2 closes to 1 (finite infection
    rate) or at which the infected edge advances while the gap is 2
    (infinite infection rate); inf when the window ends first.
    """
    p = traj.params
    if p.dim != 1:
        raise ValueError("track_edges needs a one-dimensional run")
    if not traj.recorded:
        raise ValueError("track_edges needs a recorded run")
    if not is_segregated(traj.initial):
        raise ValueError("track_edges needs a segregated start")
    n = p.n_sites
    init = traj.initial.states
    cut = _cut_touched(traj)

    ones = np.flatnonzero(init == 1)
    twos = np.flatnonzero(init == 2)
    reflected = bool(
        ones.size and twos.size and ones.max() < twos.min()
    )
    if reflected:
        states0 = init[::-1].copy()
        sites = (n - 1 - traj.sites).astype(traj.sites.dtype)
    else:
        states0 = init.copy()
        sites = traj.sites

    r0 = -1
    l0 = n
    s2 = np.flatnonzero(states0 == 2)
    s1 = np.flatnonzero(states0 == 1)
    if s2.size:
        r0 = int(s2.max())
    if s1.size:
        l0 = int(s1.min())

    out_t, out_r, out_l, tau = edge_replay_kernel(
        states0.copy(), traj.times, traj.codes, sites, traj.times.size,
        p.infinite_infection,
    )
    times = np.concatenate([[0.0], out_t])
    rr = np.concatenate([[r0], out_r]).astype(np.float64)
    ll = np.concatenate([[l0], out_l]).astype(np.float64)
    rr[rr < 0] = -np.inf
    ll[ll >= n] = np.inf
    return EdgeSeries(times=times, r=rr, l=ll, tau=float(tau),
                      t_end=traj.t_end, reflected=reflected, cut_touched=cut)


@dataclass
class SegregationReport:
    initial_segregated: bool
    violations: int
    first_bad_time: float | None
    cut_touched: bool

    @property
    def ok(self) -> bool:
        """No violation at the start or after any event."""
        return self.initial_segregated and self.violations == 0

    @property
    def valid(self) -> bool:
        """Whether the linear-order reading was trustworthy throughout."""
        return not self.cut_touched


def check_segregation(traj: Trajectory) -> SegregationReport:
    """Scan a recorded 1d run for segregation after every event.

    Chains of same-timestamp records (instantaneous invasion) are checked
    only at their final state. The report's `valid` is False when activity
    touched the cut between sites n-1 and 0, in which case the linear-order
    scan is not meaningful and the run should be discarded.
    """
    if traj.params.dim != 1:
        raise ValueError("check_segregation needs a one-dimensional run")
    if not traj.recorded:
        raise ValueError("check_segregation needs a recorded run")
    viol, first_bad = segregation_scan_kernel(
        traj.initial.states.copy(), traj.times, traj.codes, traj.sites,
        traj.times.size,
    )
    return SegregationReport(
        initial_segregated=is_segregated(traj.initial),
        violations=int(viol),
        first_bad_time=None if np.isinf(first_bad) else float(first_bad),
        cut_touched=_cut_touched(traj),
    )


# -- lineages ------------------------------------------------------------------


@dataclass
class LineageSeries:
    """Membership history of a descendant set or host cluster.

    `times[k]` is when the set became `members[k]` (the first entry is the
    origin time). Emptiness is absorbing: once the set dies it stays dead.
    lineage_type is the origin's state (0 means the origin was empty and
    the series is trivially empty).
    """

    origin_site: int
    origin_time: float
    mode: str
    lineage_type: int
    times: np.ndarray
    members: tuple
    t_end: float

    def members_at(self, t: float) -> frozenset:
        if t < self.origin_time or t > self.t_end:
            raise ValueError(f"t={t} outside [{self.origin_time}, {self.t_end}]")
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.members[idx]

    @property
    def extinction_time(self) -> float | None:
        for t, m in zip(self.times, self.members):
            if not m:
                return float(t)
        return None

    @property
    def alive(self) -> bool:
        return bool(self.members[-1])

    def span_at(self, t: float) -> tuple[int, int] | None:
        m = self.members_at(t)
        if not m:
            return None
        return min(m), max(m)


def track_lineage(traj: Trajectory, origin: tuple[int, float],
                  mode: str = "descendants") -> LineageSeries:
    """Follow the descendant set or host cluster of a space-time origin.

    Descendants: members leave when they flip out of the origin's type;
    a new member appears whenever a birth onto an empty site is parented by
    a current member (for infinite infection rate, instantaneous invasion
    conversions parented by a member extend a type-2 lineage, resolved in
    record order). An origin in state 0 yields the empty series.

    Cluster (hosts only): additionally, a birth arrow from a member onto an
    adjacent site that is already a host absorbs that host. Such arrows
    leave no record, so they are drawn here as fresh Poisson clocks at rate
    lambda10/2 per directed member edge, seeded deterministically; this has
    the same joint law as reading them off a full graphical construction.
    """
    p = traj.params
    if p.dim != 1:
        raise ValueError("lineage tracking is one-dimensional")
    if mode not in ("descendants", "cluster"):
        raise ValueError(f"unknown mode {mode!r}")
    if not traj.recorded:
        raise ValueError("track_lineage needs a recorded run")
    site = int(origin[0])
    s = float(origin[1])
    n = p.n_sites
    if not 0 <= site < n:
        raise ValueError(f"origin site {site} outside 0..{n - 1}")
    if not 0.0 <= s <= traj.t_end:
        raise ValueError(f"origin time {s} outside [0, {traj.t_end}]")

    typ = int(traj.state_at(s).states[site])
    if typ == 0:
        return LineageSeries(site, s, mode, 0, np.array([s]),
                             (frozenset(),), traj.t_end)
    if mode == "cluster" and typ != 1:
        raise ValueError("clusters are defined for host (type-1) origins")

    times, codes, sites, pars = traj.times, traj.codes, traj.sites, traj.parents
    i0 = int(np.searchsorted(times, s, side="right"))
    members = {site}
    out_t = [s]
    out_m = [frozenset(members)]

    if mode == "descendants":
        if typ == 1:
            rem = (T10, T12)
            add = (T01,)
        else:
            rem = (T20, T21)
            add = (T02, T12) if p.infinite_infection else (T02,)
        for i in range(i0, times.size):
            c = int(codes[i])
            x = int(sites[i])
            changed = False
            if c in rem:
                if x in members:
                    members.discard(x)
                    changed = True
            elif c in add and int(pars[i]) in members and x not in members:
                members.add(x)
                changed = True
            if changed:
                out_t.append(float(times[i]))
                out_m.append(frozenset(members))
                if not members:
                    break
    else:
        rate = p.lambda10 / 2.0  # per directed edge in d=1
        replica = int(traj.extras.get("replica", 0))
        rng = np.random.default_rng(
            np.random.SeedSequence((p.seed, replica, _LINK_TAG, site)))
        states = traj.state_at(s).states.copy()
        t_cur = s
        i = i0
        while members:
            t_next = float(times[i]) if i < times.size else traj.t_end
            while rate > 0.0:
                cand = [y for m in members for y in ((m - 1) % n, (m + 1) % n)
                        if states[y] == 1 and y not in members]
                if not cand:
                    break
                dt = rng.exponential(1.0 / (rate * len(cand)))
                if t_cur + dt >= t_next:
                    break  # redraw after the next event (memoryless)
                t_cur += dt
                members.add(cand[int(rng.integers(0, len(cand)))])
                out_t.append(t_cur)
                out_m.append(frozenset(members))
            if i >= times.size:
                break
            t_cur = t_next
            c = int(codes[i])
            x = int(sites[i])
            changed = False
            if c in (T10, T12):
                if x in members:
                    members.discard(x)
                    changed = True
            elif c == T01 and int(pars[i]) in members and x not in members:
                members.add(x)
                changed = True
            states[x] = _TO_STATE[c]
            if changed:
                out_t.append(t_cur)
                out_m.append(frozenset(members))
            i += 1

    return LineageSeries(site, s, mode, typ, np.asarray(out_t, dtype=np.float64),
                         tuple(out_m), traj.t_end)


@dataclass
class ShieldingReport:
    ok: bool
    first_bad_time: float | None
    n_checked: int
    cut_touched: bool = False


def verify_lineage_shielding(traj: Trajectory, series: LineageSeries) -> ShieldingReport:
    """Check sites of the opposite type never sit inside the lineage span.

    For a type-1 lineage the claim is that no infected site lies in
    [min members, max members] at any time while the set is alive; roles
    swap for type 2. Configurations are inspected at the end of every
    same-timestamp record group and at every membership change. The span is
    an interval of the linear order, so checking stops (with `cut_touched`
    set) as soon as the lineage reaches site 0 or n-1 and could wrap.
    """
    if series.lineage_type == 0:
        return ShieldingReport(True, None, 0)
    opp = 2 if series.lineage_type == 1 else 1
    s = series.origin_time
    end = series.extinction_time
    if end is None:
        end = series.t_end

    times, codes, sites = traj.times, traj.codes, traj.sites
    states = traj.initial.states.copy()
    i = 0
    while i < times.size and times[i] <= s:
        states[sites[i]] = _TO_STATE[codes[i]]
        i += 1

    group_ends = []
    j = i
    while j < times.size and times[j] <= end:
        if j + 1 >= times.size or times[j + 1] != times[j]:
            group_ends.append(times[j])
        j += 1
    checkpoints = np.unique(np.concatenate([
        np.asarray(group_ends, dtype=np.float64),
        series.times[series.times >= s],
    ]))

    n = traj.params.n_sites
    n_checked = 0
    for t in checkpoints:
        while i < times.size and times[i] <= t:
            states[sites[i]] = _TO_STATE[codes[i]]
            i += 1
        m = series.members_at(min(t, series.t_end))
        if not m:
            break
        lo, hi = min(m), max(m)
        if lo == 0 or hi == n - 1:
            return ShieldingReport(True, None, n_checked, cut_touched=True)
        n_checked += 1
        if np.any(states[lo:hi + 1] == opp):
            return ShieldingReport(False, float(t), n_checked)
    return ShieldingReport(True, None, n_checked)


# -- estimation ----------------------------------------------------------------


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes outside 0..trials")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, float(center - half))
    hi = 1.0 if successes == trials else min(1.0, float(center + half))
    return lo, hi


@dataclass
class ScanPoint:
    lam: float
    survived: int
    replicas: int
    ci_lo: float
    ci_hi: float

    @property
    def p_hat(self) -> float:
        return self.survived / self.replicas


@dataclass
class LambdaCEstimate:
    """Bisection bracket for the single-type critical birth rate.

    A finite-size proxy: survival means at least one occupied site at the
    horizon, starting from every second site occupied. The same replica
    seeds are reused at every probed rate (common random numbers), which
    sharpens the monotonicity of the scan without biasing any single point.
    """

    lo: float
    hi: float
    estimate: float
    scan: list[ScanPoint]
    replicas: int
    horizon: float
    dim: int
    side: int

    def summary(self) -> dict:
        return {
            "lambda_c_bracket": [self.lo, self.hi],
            "estimate": self.estimate,
            "replicas": self.replicas,
            "horizon": self.horizon,
            "scan": [
                {"lambda": pt.lam, "p_hat": pt.p_hat,
                 "ci": [pt.ci_lo, pt.ci_hi]}
                for pt in sorted(self.scan, key=lambda q: q.lam)
            ],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")


def estimate_lambda_c(dim: int, side: int, horizon: float, replicas: int,
                      bracket: tuple[float, float], *, tol: float = 0.05,
                      z: float = 1.96, seed: int = 0) -> LambdaCEstimate:
    """Bisect the birth rate of the plain (host-only) contact process
    against survival at a fixed horizon.

    The bracket must straddle the criterion: estimated survival probability
    below 1/2 at the low end and above 1/2 at the high end, else ValueError.
    Bisection moves the endpoint whose side the midpoint estimate falls on
    (ties count as survival) until the bracket is narrower than `tol`.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (0.0 <= lo < hi):
        raise ValueError(f"bad bracket ({lo}, {hi})")
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")

    n = side**dim
    states0 = np.zeros(n, dtype=np.int8)
    states0[::2] = 1
    cfg0 = Configuration(states0, dim, side)

    def probe(lam: float) -> ScanPoint:
        p = Params(lambda10=lam, lambda20=0.0, lambda21=0.0, delta=0.0,
                   dim=dim, side=side, seed=seed)
        k = 0
        for r in range(replicas):
            tr = run_gillespie(p, cfg0, horizon, record=False, replica=r)
            if tr.final.counts[1] > 0:
                k += 1
        ci_lo, ci_hi = wilson_interval(k, replicas, z)
        return ScanPoint(lam, k, replicas, ci_lo, ci_hi)

    scan = [probe(lo), probe(hi)]
    if not scan[0].p_hat < 0.5:
        raise ValueError(
            f"survival probability {scan[0].p_hat:.3f} at lambda={lo} is not "
            "below 1/2; widen the bracket downward")
    if not scan[1].p_hat > 0.5:
        raise ValueError(
            f"survival probability {scan[1].p_hat:.3f} at lambda={hi} is not "
            "above 1/2; widen the bracket upward")

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        pt = probe(mid)
        scan.append(pt)
        if pt.p_hat >= 0.5:
            hi = mid
        else:
            lo = mid
    return LambdaCEstimate(lo=lo, hi=hi, estimate=0.5 * (lo + hi), scan=scan,
                           replicas=replicas, horizon=float(horizon),
                           dim=dim, side=side)


@dataclass
class EdgeSpeedEstimate:
    alpha: float
    intercept: float
    r2: float
    window: tuple[float, float]
    n_points: int

    def summary(self) -> dict:
        return {"alpha": self.alpha, "r2": self.r2,
                "window": list(self.window), "n_points": self.n_points}


def edge_speed(traj: Trajectory, window: tuple[float, float]) -> EdgeSpeedEstimate:
    """Least-squares speed of the rightmost occupied site over a window.

    Expects a recorded host-only 1d run (no infected sites can ever appear).
    The fit uses the value entering the window, every edge move inside it,
    and the value carried to the window end; extinction at or before the
    window end aborts with ValueError since there is no edge to follow.
    """
    p = traj.params
    if p.dim != 1:
        raise ValueError("edge_speed needs a one-dimensional run")
    if not traj.recorded:
        raise ValueError("edge_speed needs a recorded run")
    if traj.initial.counts[2] > 0 or p.lambda20 > 0:
        raise ValueError("edge_speed expects a host-only (single-type) run")
    t0, t1 = float(window[0]), float(window[1])
    if not (0.0 <= t0 < t1 <= traj.t_end):
        raise ValueError(f"bad fit window ({t0}, {t1}) for t_end={traj.t_end}")

    r0, _, tt, rr, _ = occupied_edge_kernel(
        traj.initial.states.copy(), traj.times, traj.codes, traj.sites,
        traj.times.size)
    dead = np.flatnonzero(rr == -1)
    if r0 == -1 or (dead.size and tt[dead[0]] <= t1):
        raise ValueError("process died at or before the fit window end; "
                         "no edge-speed estimate")

    j0 = int(np.searchsorted(tt, t0, side="right"))
    j1 = int(np.searchsorted(tt, t1, side="right"))
    r_enter = float(rr[j0 - 1]) if j0 > 0 else float(r0)
    r_exit = float(rr[j1 - 1]) if j1 > j0 else r_enter
    t_pts = np.concatenate([[t0], tt[j0:j1], [t1]])
    r_pts = np.concatenate([[r_enter], rr[j0:j1], [r_exit]])

    slope, intercept = np.polyfit(t_pts, r_pts, 1)
    pred = slope * t_pts + intercept
    ss_res = float(np.sum((r_pts - pred) ** 2))
    ss_tot = float(np.sum((r_pts - r_pts.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return EdgeSpeedEstimate(alpha=float(slope), intercept=float(intercept),
                             r2=r2, window=(t0, t1), n_points=t_pts.size)


@dataclass(frozen=True)
class OccupancySeries:
    """Step series of the extreme occupied sites (any nonzero state).

    Unlike :class:`EdgeSeries` this ignores types, so it applies to
    host-only runs; r/l are nan once the lattice empties.
    """

    times: np.ndarray
    r: np.ndarray
    l: np.ndarray
    t_end: float

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,r,l\n")
            for i in range(self.times.size):
                fh.write(f"{self.times[i]:.10g},{self.r[i]:.10g},"
                         f"{self.l[i]:.10g}\n")


def occupied_edges(traj: Trajectory) -> OccupancySeries:
    """Rightmost/leftmost occupied sites over time, starting with a t=0 row.

    Rows appear only when an extreme moves; type flips (1<->2) are
    occupancy-neutral and emit nothing.
    """
    p = traj.params
    if p.dim != 1:
        raise ValueError("occupied_edges needs a one-dimensional run")
    if not traj.recorded:
        raise ValueError("occupied_edges needs a recorded run")
    r0, l0, tt, rr, ll = occupied_edge_kernel(
        traj.initial.states.copy(), traj.times, traj.codes, traj.sites,
        traj.times.size)
    times = np.concatenate([[0.0], tt])
    r = np.concatenate([[r0], rr]).astype(np.float64)
    l = np.concatenate([[l0], ll]).astype(np.float64)
    dead = r < 0
    r[dead] = np.nan
    l[dead] = np.nan
    return OccupancySeries(times=times, r=r, l=l, t_end=float(traj.t_end))


# -- densities -----------------------------------------------------------------

# per-code tally changes, rows ordered as TRANSITIONS
_DELTA = np.array([
    [-1, 1, 0],   # 0 -> 1
    [-1, 0, 1],   # 0 -> 2
    [1, -1, 0],   # 1 -> 0
    [0, -1, 1],   # 1 -> 2
    [1, 0, -1],   # 2 -> 0
    [0, 1, -1],   # 2 -> 1
], dtype=np.int64)


@dataclass
class DensitySeries:
    times: np.ndarray
    u0: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    n_sites: int

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,u0,u1,u2\n")
            for i in range(self.times.size):
                fh.write(f"{self.times[i]:.10g},{self.u0[i]:.10g},"
                         f"{self.u1[i]:.10g},{self.u2[i]:.10g}\n")


def density_series(traj: Trajectory, dt: float) -> DensitySeries:
    """Per-state densities sampled on the grid 0, dt, 2dt, ... up to t_end."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not traj.recorded:
        raise ValueError("density_series needs a recorded run")
    n = traj.params.n_sites
    m = int(np.floor(traj.t_end / dt + 1e-9))
    grid = np.arange(m + 1, dtype=np.float64) * dt
    c0 = traj.initial.counts.astype(np.float64)
    if traj.times.size:
        cums = c0[None, :] + np.cumsum(_DELTA[traj.codes], axis=0)
        idx = np.searchsorted(traj.times, grid, side="right") - 1
        vals = np.where(idx[:, None] >= 0, cums[np.maximum(idx, 0)], c0[None, :])
    else:
        vals = np.broadcast_to(c0, (grid.size, 3)).copy()
    u = vals / n
    return DensitySeries(times=grid, u0=u[:, 0], u1=u[:, 1], u2=u[:, 2],
                         n_sites=n)


# -- paired contact-process check ----------------------------------------------


@dataclass
class PairCheckReport:
    """Outcome of replaying one event stream under three rule sets.

    Until the interfaces collide, the hosts of the full process match a
    plain contact process at the host birth rate grown from the initial
    hosts, and the infected sites match one at the infected birth rate
    grown from the initial infected sites — sitewise and deterministically.
    """

    ok: bool
    mismatches: int
    compared: list[float] = field(default_factory=list)
    skipped: list[float] = field(default_factory=list)
    tau: float = np.inf
    first_bad: tuple[float, int] | None = None

    @property
    def censored(self) -> bool:
        return not np.isfinite(self.tau)

    def summary(self) -> dict:
        return {
            "ok": self.ok,
            "mismatches": self.mismatches,
            "tau": None if self.censored else float(self.tau),
            "censored": self.censored,
            "compared": [float(t) for t in self.compared],
            "skipped": [float(t) for t in self.skipped],
        }


def edge_pair_check(p: Params, cfg0: Configuration, t_end: float,
                    compare_times: Sequence[float], *, replica: int = 0,
                    chunk_len: float = 1.0) -> PairCheckReport:
    """Drive the full process and its two single-type companions off one
    stream and compare them sitewise at the requested times.

    Needs d=1, no recovery, a finite infection rate, lambda10 >= lambda20,
    and a segregated start. Comparison times after the collision time tau
    are skipped (the identity is only claimed up to tau); times <= tau must
    agree exactly, so any mismatch is a bug, not noise.
    """
    if p.dim != 1:
        raise ValueError("edge_pair_check needs d=1")
    if p.delta != 0.0:
        raise ValueError("edge_pair_check needs zero recovery rate")
    if p.infinite_infection:
        raise ValueError("edge_pair_check needs a finite infection rate")
    if p.lambda10 < p.lambda20:
        raise ValueError("edge_pair_check needs lambda10 >= lambda20")
    if not is_segregated(cfg0):
        raise ValueError("edge_pair_check needs a segregated start")
    snap = np.asarray(sorted(float(t) for t in compare_times), dtype=np.float64)
    if snap.size == 0:
        raise ValueError("no comparison times given")
    if snap[0] < 0 or snap[-1] > t_end:
        raise ValueError("comparison times outside [0, t_end]")

    stream = build_harris(p, t_end, replica=replica, chunk_len=chunk_len)
    full = apply_harris(stream, cfg0, rules="stacked", snap_times=snap)
    tau = track_edges(full).tau

    hosts0 = Configuration((cfg0.states == 1).astype(np.int8), 1, p.side)
    infected0 = Configuration((cfg0.states == 2).astype(np.int8), 1, p.side)
    upper = apply_harris(stream, hosts0, rules="upper", snap_times=snap,
                         record=False)
    lower = apply_harris(stream, infected0, rules="lower", snap_times=snap,
                         record=False)

    mismatches = 0
    compared: list[float] = []
    skipped: list[float] = []
    first_bad = None
    for k, t in enumerate(snap):
        if t > tau:
            skipped.append(float(t))
            continue
        a = full.snapshots[k]
        host_bad = (a == 1) != (upper.snapshots[k] == 1)
        inf_bad = (a == 2) != (lower.snapshots[k] == 1)
        bad = int(np.count_nonzero(host_bad | inf_bad))
        mismatches += bad
        compared.append(float(t))
        if bad and first_bad is None:
            first_bad = (float(t), int(np.flatnonzero(host_bad | inf_bad)[0]))
    return PairCheckReport(ok=mismatches == 0, mismatches=mismatches,
                           compared=compared, skipped=skipped, tau=float(tau),
                           first_bad=first_bad)
