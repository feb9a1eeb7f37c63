"""Stochastic engines: exact Gillespie dynamics and Harris graphical builds.

Two interchangeable simulation back ends produce `Trajectory` objects with
identical record schemas:

* :func:`run_gillespie` — competing-exponentials chain over per-site rates,
  kept in a Fenwick tree so each step costs O(log n).
* :func:`build_harris` / :func:`apply_harris` — a shared Poisson event stream
  (arrows and marks on the space-time slab) replayed against a configuration.
  One stream can drive several processes at once, which is what
  :func:`coupled_run` does for the monotone sandwich between the stacked
  process and its single-type upper/lower contact processes.

Randomness is fully reproducible: every stream of random numbers is keyed by
``(seed, replica, channel, chunk)`` through `numpy.random.SeedSequence`
spawn keys, so results never depend on scheduling or on how far another
replica ran.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import _kernels as _k
from .model import Configuration, Params, _has_host_infected_contact, neighbor_table

__all__ = [
    "EventKind",
    "EventStream",
    "Trajectory",
    "CoupledResult",
    "channel_rates",
    "run_gillespie",
    "build_harris",
    "apply_harris",
    "coupled_run",
]


class EventKind(enum.IntEnum):
    """Channels of the graphical representation.

    Arrow kinds point along a directed edge (src -> dst); mark kinds act on a
    single site. The integer values double as tie-break ranks and as RNG
    spawn keys, so they are part of the reproducibility contract.
    """

    BIRTH_HEALTHY = 0   # arrow: src in state 1 puts a 1 at empty dst
    BIRTH_ANY = 1       # arrow: occupied src copies its own state to empty dst
    INFECT = 2          # arrow: src in state 2 converts a host at dst
    DEATH = 3           # mark: dst cleared to empty
    RECOVER = 4         # mark: infected dst becomes a host
    BIRTH_INFECTED = 5  # arrow: src in state 2 puts a 2 at empty dst

    @property
    def is_arrow(self) -> bool:
        return self not in (EventKind.DEATH, EventKind.RECOVER)


_RULE_CODES = {"stacked": _k.RULE_STACKED, "upper": _k.RULE_UPPER, "lower": _k.RULE_LOWER}


def channel_rates(p: Params) -> dict[EventKind, float]:
    """Per-item Poisson intensities of the graphical channels.

    Arrow channels are quoted per directed edge, mark channels per site. The
    two birth rates are split so that a single-type contact process reading
    only ``BIRTH_ANY`` arrows runs at rate ``min(lambda10, lambda20)`` while
    one reading every birth arrow runs at ``max(lambda10, lambda20)``; the
    stacked process reads the type restrictions and recovers its exact law
    either way.
    """
    if p.infinite_infection:
        raise ValueError("graphical streams need a finite infection rate")
    inv2d = 1.0 / (2 * p.dim)
    lo = min(p.lambda10, p.lambda20)
    rates = {
        EventKind.BIRTH_HEALTHY: (p.lambda10 - lo) * inv2d,
        EventKind.BIRTH_ANY: lo * inv2d,
        EventKind.INFECT: p.lambda21 * inv2d,
        EventKind.DEATH: 1.0,
        EventKind.RECOVER: p.delta,
        EventKind.BIRTH_INFECTED: (p.lambda20 - lo) * inv2d,
    }
    return rates


@dataclass(frozen=True)
class EventStream:
    """Lazily generated Poisson stream of graphical events.

    Events are materialised chunk by chunk over the windows
    ``[j*chunk_len, (j+1)*chunk_len)``. Each (channel, chunk) pair owns an
    independent substream keyed by spawn key ``(replica, channel, chunk)``,
    so the events in a window never depend on the horizon: extending
    ``t_end`` appends to the stream without disturbing its past.

    Within a chunk, events are sorted by ``(time, item, channel)`` where
    ``item`` is the directed-edge index ``site * 2d + k`` for arrows and the
    site index for marks. Ties are measure zero but the order is pinned
    anyway so replays are bit-stable.
    """

    params: Params
    t_end: float
    replica: int = 0
    chunk_len: float = 1.0

    def __post_init__(self) -> None:
        if not (self.t_end > 0) or not math.isfinite(self.t_end):
            raise ValueError(f"t_end must be positive and finite, got {self.t_end}")
        if not (self.chunk_len > 0):
            raise ValueError("chunk_len must be positive")
        if self.params.infinite_infection:
            raise ValueError("graphical streams need a finite infection rate")

    @property
    def n_chunks(self) -> int:
        return int(math.ceil(self.t_end / self.chunk_len))

    def _chunk_events(self, j: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        p = self.params
        n = p.n_sites
        two_d = 2 * p.dim
        nbr = neighbor_table(p.dim, p.side)
        start = j * self.chunk_len
        rates = channel_rates(p)

        parts_t, parts_item, parts_chan = [], [], []
        for kind in EventKind:
            rate = rates[kind]
            if rate <= 0.0:
                continue
            n_items = n * two_d if kind.is_arrow else n
            rng = np.random.Generator(
                np.random.Philox(
                    np.random.SeedSequence(
                        p.seed, spawn_key=(self.replica, int(kind), j)
                    )
                )
            )
            counts = rng.poisson(rate * self.chunk_len, size=n_items)
            total = int(counts.sum())
            if total == 0:
                continue
            parts_t.append(start + rng.random(total) * self.chunk_len)
            parts_item.append(np.repeat(np.arange(n_items, dtype=np.int64), counts))
            parts_chan.append(np.full(total, int(kind), dtype=np.int8))

        if not parts_t:
            empty = np.empty(0)
            return (empty, empty.astype(np.int8), empty.astype(np.int32), empty.astype(np.int32))

        times = np.concatenate(parts_t)
        items = np.concatenate(parts_item)
        chans = np.concatenate(parts_chan)
        order = np.lexsort((chans, items, times))
        times, items, chans = times[order], items[order], chans[order]

        kinds = chans
        is_arrow = (chans != int(EventKind.DEATH)) & (chans != int(EventKind.RECOVER))
        srcs = np.where(is_arrow, items // two_d, items).astype(np.int32)
        dsts = np.where(
            is_arrow, nbr[srcs % n, items % two_d], np.int32(-1)
        ).astype(np.int32)
        keep = times < self.t_end
        if not keep.all():
            times, kinds, srcs, dsts = times[keep], kinds[keep], srcs[keep], dsts[keep]
        return times, kinds, srcs, dsts

    def chunks(self) -> Iterator[tuple[float, float, np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
        """Yield ``(window_start, window_end, times, kinds, srcs, dsts)``."""
        for j in range(self.n_chunks):
            start = j * self.chunk_len
            end = min(start + self.chunk_len, self.t_end)
            yield (start, end) + self._chunk_events(j)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Materialise the whole stream, globally time-sorted."""
        ts, ks, ss, ds = [], [], [], []
        for _, _, t, k, s, d in self.chunks():
            ts.append(t); ks.append(k); ss.append(s); ds.append(d)
        return (np.concatenate(ts), np.concatenate(ks),
                np.concatenate(ss), np.concatenate(ds))


@dataclass
class Trajectory:
    """One realisation of the process plus everything needed to audit it.

    ``times/codes/sites/parents`` list every applied transition in order
    (codes index `model.TRANSITIONS`; ``parents`` holds the birth parent or
    infector site, -1 for deaths/recoveries). Replaying them from ``initial``
    reproduces each snapshot exactly — :meth:`verify_replay` checks that.
    """

    params: Params
    initial: Configuration
    t_end: float
    snap_times: np.ndarray
    snapshots: np.ndarray  # (len(snap_times), n_sites) int8
    final: Configuration
    engine: str
    times: np.ndarray | None = None
    codes: np.ndarray | None = None
    sites: np.ndarray | None = None
    parents: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    @property
    def recorded(self) -> bool:
        return self.times is not None

    @property
    def n_events(self) -> int:
        return 0 if self.times is None else int(self.times.size)

    def state_at(self, t: float) -> Configuration:
        """Configuration after every recorded transition with time <= t."""
        if not self.recorded:
            raise ValueError("trajectory was run with record=False")
        if t < 0 or t > self.t_end:
            raise ValueError(f"t={t} outside [0, {self.t_end}]")
        states = self.initial.states.copy()
        k = int(np.searchsorted(self.times, t, side="right"))
        _k.replay_states_kernel(states, self.codes, self.sites, k)
        out = self.initial.copy()
        out.states[:] = states
        out.invalidate_counts()
        return out

    def verify_replay(self) -> None:
        """Raise AssertionError unless the change list reproduces every snapshot."""
        for j, s in enumerate(self.snap_times):
            got = self.state_at(float(s)).states
            if not np.array_equal(got, self.snapshots[j]):
                bad = int(np.flatnonzero(got != self.snapshots[j])[0])
                raise AssertionError(
                    f"replay mismatch at snapshot t={s}: site {bad} "
                    f"replayed {got[bad]} vs stored {self.snapshots[j][bad]}"
                )
        if not np.array_equal(self.state_at(self.t_end).states, self.final.states):
            raise AssertionError("replay mismatch at final state")

    def density_at(self, j: int) -> tuple[float, float, float]:
        """(empty, host, infected) fractions of snapshot ``j``."""
        snap = self.snapshots[j]
        n = snap.size
        c1 = int((snap == 1).sum())
        c2 = int((snap == 2).sum())
        return ((n - c1 - c2) / n, c1 / n, c2 / n)


@dataclass
class CoupledResult:
    """Sandwich run: one stream driving lower/stacked/upper simultaneously."""

    stacked: Trajectory
    upper: Trajectory
    lower: Trajectory
    violations: int
    first_violation_time: float
    first_violation_site: int

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _default_rng(p: Params, replica: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(p.seed, spawn_key=(replica,)))
    )


def _check_run_args(p: Params, cfg0: Configuration, t_end: float,
                    snap_times: Sequence[float] | None) -> np.ndarray:
    if cfg0.dim != p.dim or cfg0.side != p.side:
        raise ValueError(
            f"configuration geometry ({cfg0.dim}, {cfg0.side}) does not match "
            f"params ({p.dim}, {p.side})"
        )
    if not (t_end > 0) or not math.isfinite(t_end):
        raise ValueError(f"t_end must be positive and finite, got {t_end}")
    if snap_times is None:
        snap = np.array([t_end], dtype=np.float64)
    else:
        snap = np.asarray(snap_times, dtype=np.float64)
        if snap.ndim != 1 or snap.size == 0:
            raise ValueError("snap_times must be a non-empty 1d sequence")
        if np.any(np.diff(snap) < 0):
            raise ValueError("snap_times must be sorted ascending")
        if snap[0] < 0 or snap[-1] > t_end:
            raise ValueError("snap_times must lie within [0, t_end]")
    return snap


def _as_cfg(template: Configuration, states: np.ndarray) -> Configuration:
    out = template.copy()
    out.states[:] = states
    out.invalidate_counts()
    return out


def run_gillespie(
    p: Params,
    cfg0: Configuration,
    t_end: float,
    *,
    snap_times: Sequence[float] | None = None,
    record: bool = True,
    replica: int = 0,
    rng: np.random.Generator | None = None,
) -> Trajectory:
    """Exact event-by-event simulation up to time ``t_end``.

    Site rates live in a Fenwick tree: each step samples the next waiting
    time from the total rate, picks the site by prefix search, picks the
    transition within the site, and updates the O(2d) affected entries.
    With an infinite infection rate (1d only) every event is followed by the
    instantaneous conversion of any host run touching an infected site, and
    those conversions are recorded as transitions sharing the event's time.
    """
    snap = _check_run_args(p, cfg0, t_end, snap_times)
    if p.infinite_infection and _has_host_infected_contact(cfg0):
        raise ValueError(
            "start configuration has a host adjacent to an infected site; "
            "apply invasion_closure first when lambda21 is INFINITE"
        )
    if rng is None:
        rng = _default_rng(p, replica)

    nbr = np.ascontiguousarray(neighbor_table(p.dim, p.side))
    states = cfg0.states.copy()
    lam21 = 0.0 if p.infinite_infection else p.lambda21
    (snaps, ev_t, ev_code, ev_site, ev_aux, n_ev, t_fin, t_no_inf, t_no_host,
     t_empty, cut_touched, rate_err) = _k.gillespie_kernel(
        states, nbr, p.lambda10, p.lambda20, lam21, p.infinite_infection,
        p.delta, float(t_end), snap, record, rng)
    if rate_err > 1e-8:
        raise RuntimeError(
            f"internal error: site-rate bookkeeping drifted by {rate_err:.3e}"
        )

    traj = Trajectory(
        params=p, initial=cfg0.copy(), t_end=float(t_end), snap_times=snap,
        snapshots=snaps, final=_as_cfg(cfg0, states), engine="gillespie",
        extras={
            "replica": replica,
            "t_last_event": t_fin,
            "t_no_infected": t_no_inf,
            "t_no_host": t_no_host,
            "t_empty": t_empty,
            "cut_touched": bool(cut_touched),
        },
    )
    if record:
        traj.times = ev_t[:n_ev].copy()
        traj.codes = ev_code[:n_ev].copy()
        traj.sites = ev_site[:n_ev].copy()
        traj.parents = ev_aux[:n_ev].copy()
    return traj


def build_harris(
    p: Params, t_end: float, *, replica: int = 0, chunk_len: float = 1.0
) -> EventStream:
    """Generate the graphical event stream for ``p`` on ``[0, t_end)``."""
    return EventStream(params=p, t_end=float(t_end), replica=replica,
                       chunk_len=chunk_len)


def _apply_stream(
    stream: EventStream,
    stack0: np.ndarray,
    rules: np.ndarray,
    snap: np.ndarray,
    record_row: int,
    pairs: tuple[tuple[int, int], ...],
):
    p = stream.params
    nbr = np.ascontiguousarray(neighbor_table(p.dim, p.side))
    k_rows = stack0.shape[0]
    stack = stack0.copy()
    snaps = np.zeros((snap.size, k_rows, stack.shape[1]), dtype=np.int8)
    pairs_lo = np.array([a for a, _ in pairs], dtype=np.int64)
    pairs_hi = np.array([b for _, b in pairs], dtype=np.int64)

    cap = 1024
    ev_t = np.empty(cap, dtype=np.float64)
    ev_code = np.empty(cap, dtype=np.int8)
    ev_site = np.empty(cap, dtype=np.int32)
    ev_aux = np.empty(cap, dtype=np.int32)
    n_ev = 0
    snap_idx = 0
    violations = 0
    first_bad_t = np.inf
    first_bad_x = -1

    for _, end, times, kinds, srcs, dsts in stream.chunks():
        (snap_idx, ev_t, ev_code, ev_site, ev_aux, n_ev,
         v, bt, bx, _applied) = _k.apply_chunk_kernel(
            stack, rules, nbr, times, kinds, srcs, dsts,
            snap, snap_idx, snaps, end,
            record_row, ev_t, ev_code, ev_site, ev_aux, n_ev,
            pairs_lo, pairs_hi)
        if v > 0:
            violations += v
            if bt < first_bad_t:
                first_bad_t, first_bad_x = bt, int(bx)
    while snap_idx < snap.size:  # horizon exactly on a chunk boundary
        snaps[snap_idx] = stack
        snap_idx += 1
    return (stack, snaps, ev_t[:n_ev], ev_code[:n_ev], ev_site[:n_ev],
            ev_aux[:n_ev], violations, first_bad_t, first_bad_x)


def apply_harris(
    stream: EventStream,
    cfg0: Configuration,
    *,
    rules: str = "stacked",
    snap_times: Sequence[float] | None = None,
    record: bool = True,
) -> Trajectory:
    """Replay a graphical stream against a start configuration.

    ``rules`` selects how events are read:

    * ``"stacked"`` — the full two-type dynamics.
    * ``"upper"`` — single-type contact process consuming every birth arrow
      (rate ``max(lambda10, lambda20)``); the start is the occupancy
      indicator of ``cfg0``.
    * ``"lower"`` — single-type contact process consuming only the shared
      birth channel (rate ``min(lambda10, lambda20)``), same start.
    """
    p = stream.params
    if rules not in _RULE_CODES:
        raise ValueError(f"unknown rules {rules!r}; expected stacked/upper/lower")
    snap = _check_run_args(p, cfg0, stream.t_end, snap_times)

    if rules == "stacked":
        row0 = cfg0.states.copy()
    else:
        row0 = (cfg0.states != 0).astype(np.int8)
    stack0 = row0[None, :]
    rules_arr = np.array([_RULE_CODES[rules]], dtype=np.int64)

    (stack, snaps, ev_t, ev_code, ev_site, ev_aux,
     _v, _bt, _bx) = _apply_stream(stream, stack0, rules_arr, snap,
                                   0 if record else -1, ())

    init = _as_cfg(cfg0, stack0[0])
    traj = Trajectory(
        params=p, initial=init, t_end=stream.t_end, snap_times=snap,
        snapshots=snaps[:, 0, :].copy(), final=_as_cfg(cfg0, stack[0]),
        engine="harris",
        extras={"replica": stream.replica, "rules": rules},
    )
    if record:
        traj.times, traj.codes, traj.sites, traj.parents = ev_t, ev_code, ev_site, ev_aux
    return traj


def coupled_run(
    p: Params,
    cfg0: Configuration,
    t_end: float,
    *,
    snap_times: Sequence[float] | None = None,
    record: bool = False,
    replica: int = 0,
    chunk_len: float = 1.0,
) -> CoupledResult:
    """Drive stacked, upper and lower processes from one shared stream.

    Requires ``lambda10 > lambda20`` strictly, the regime in which occupancy
    of the stacked process is monotonically wedged between the rate-lambda20
    and rate-lambda10 contact processes started from the same occupied set.
    Containment is checked at the affected site after every event.
    """
    if not (p.lambda10 > p.lambda20):
        raise ValueError(
            "coupled_run needs lambda10 > lambda20 (strict); got "
            f"lambda10={p.lambda10}, lambda20={p.lambda20}"
        )
    stream = build_harris(p, t_end, replica=replica, chunk_len=chunk_len)
    snap = _check_run_args(p, cfg0, t_end, snap_times)

    occ = (cfg0.states != 0).astype(np.int8)
    stack0 = np.stack([cfg0.states.copy(), occ, occ.copy()])
    rules_arr = np.array(
        [_k.RULE_STACKED, _k.RULE_UPPER, _k.RULE_LOWER], dtype=np.int64)
    # containment: occupied(lower) <= occupied(stacked) <= occupied(upper)
    pairs = ((2, 0), (0, 1))

    (stack, snaps, ev_t, ev_code, ev_site, ev_aux,
     violations, bad_t, bad_x) = _apply_stream(
        stream, stack0, rules_arr, snap, 0 if record else -1, pairs)

    def mk(row: int, engine_rules: str) -> Trajectory:
        init = _as_cfg(cfg0, stack0[row])
        tr = Trajectory(
            params=p, initial=init, t_end=float(t_end), snap_times=snap,
            snapshots=snaps[:, row, :].copy(), final=_as_cfg(cfg0, stack[row]),
            engine="harris",
            extras={"replica": replica, "rules": engine_rules},
        )
        return tr

    stacked = mk(0, "stacked")
    if record:
        stacked.times, stacked.codes = ev_t, ev_code
        stacked.sites, stacked.parents = ev_site, ev_aux
    return CoupledResult(
        stacked=stacked, upper=mk(1, "upper"), lower=mk(2, "lower"),
        violations=int(violations), first_violation_time=float(bad_t),
        first_violation_site=int(bad_x),
    )
