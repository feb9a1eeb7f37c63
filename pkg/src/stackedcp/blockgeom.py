"""2D block geometry: boxes, symbiont sets, void components, box-level events.

The plane is partitioned into boxes ``B_z = 2Nz + {-N, ..., N-1}^2``.  For a
configuration xi we look at the symbiont sets ``S_z = {x in B_z : xi(x) = 2}``,
the largest symbiont-free component ``C1`` of the box next to the origin, the
component ``C0`` of the two-box region containing it, and the symbiont boundary
``B0set`` of ``C0``.  The deterministic geometry bounds

    card(C1) >= (2N)^2 - K1^2 >= 3N^2   (when K1 <= N)
    card(B0set) >= sqrt(K0)

are checked by :func:`check_lemma_geometry`.  Box-level occupancy events H-,
H+ (count below/above a threshold throughout a time window) and H* (count at
least sqrt(N) at an integer time) feed the coarse-grained good-site field used
to eyeball the block construction.

Connectivity here is 4-neighbor and planar: the two-box region is treated as a
patch of Z^2 with *no* torus wraparound, which requires the torus to be large
enough for the patch to embed without self-overlap (side >= 6N for the two-box
region, side >= 4N for a single box).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from stackedcp._kernels import box_series_kernel
from stackedcp.engine import Trajectory
from stackedcp.model import INFECTED, Configuration

__all__ = [
    "BoxIndex",
    "ComponentReport",
    "GeometryCheck",
    "EventIndicators",
    "CoarseGrainField",
    "UNIT_VECTORS",
    "symbiont_set",
    "component_report",
    "check_lemma_geometry",
    "event_indicators",
    "coarse_grain",
]

#: the four lattice unit vectors; component_report accepts any of them as the
#: direction of the second box.
UNIT_VECTORS = ((1, 0), (-1, 0), (0, 1), (0, -1))

# 4-neighbor connectivity stencil for scipy.ndimage labeling/dilation
_FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class BoxIndex:
    """A box ``B_z = 2Nz + {-N, ..., N-1}^2`` of the 2D partition."""

    z: tuple[int, int]
    n: int

    def __post_init__(self):
        if len(self.z) != 2:
            raise ValueError("z must be an integer pair")
        object.__setattr__(self, "z", (int(self.z[0]), int(self.z[1])))
        if self.n < 1:
            raise ValueError(f"box half-width must be >= 1, got {self.n}")

    @property
    def lo(self) -> tuple[int, int]:
        """Smallest (x, y) corner of the box."""
        return (2 * self.n * self.z[0] - self.n, 2 * self.n * self.z[1] - self.n)

    @property
    def n_sites(self) -> int:
        return (2 * self.n) ** 2

    def lattice_sites(self) -> np.ndarray:
        """All (2N)^2 box sites as an (n_sites, 2) array of lattice coords."""
        w = 2 * self.n
        xs = self.lo[0] + np.arange(w)
        ys = self.lo[1] + np.arange(w)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])

    def torus_sites(self, side: int) -> np.ndarray:
        """Flat torus site indices of the box (row-major, x*side + y)."""
        if side < 4 * self.n:
            raise ValueError(
                f"torus side {side} too small for box half-width {self.n} "
                f"(need side >= {4 * self.n})"
            )
        pts = self.lattice_sites()
        return (pts[:, 0] % side) * side + (pts[:, 1] % side)


def _require_2d(cfg_dim: int) -> None:
    if cfg_dim != 2:
        raise ValueError(f"block geometry is defined for dim=2, got dim={cfg_dim}")


def symbiont_set(cfg: Configuration, z: BoxIndex) -> frozenset:
    """Sites of box ``B_z`` occupied by symbionts, as lattice (x, y) pairs."""
    _require_2d(cfg.dim)
    pts = z.lattice_sites()
    idx = z.torus_sites(cfg.side)  # validates side >= 4N
    mask = cfg.states[idx] == INFECTED
    return frozenset((int(x), int(y)) for x, y in pts[mask])


def _coords_of(mask: np.ndarray, lo: tuple[int, int]) -> np.ndarray:
    """Lattice coordinates of True cells of a region mask, row-major sorted."""
    pts = np.argwhere(mask)
    pts[:, 0] += lo[0]
    pts[:, 1] += lo[1]
    return pts


@dataclass(frozen=True)
class ComponentReport:
    """Symbiont sets and void components of the region ``B_0 u B_dir``.

    Coordinate arrays are (k, 2) lattice coordinates in row-major order; the
    region is planar (no torus wrap), so coordinates may be negative.
    """

    n: int
    direction: tuple[int, int]
    s0: np.ndarray  # symbionts in B_0
    s1: np.ndarray  # symbionts in B_dir
    c1: np.ndarray  # largest symbiont-free component of B_dir
    c0: np.ndarray  # component of the region void containing c1
    b0set: np.ndarray  # symbionts of the region adjacent to c0

    @property
    def k0(self) -> int:
        return len(self.s0)

    @property
    def k1(self) -> int:
        return len(self.s1)

    @property
    def card_c1(self) -> int:
        return len(self.c1)

    @property
    def card_c0(self) -> int:
        return len(self.c0)

    @property
    def card_b0(self) -> int:
        return len(self.b0set)

    def validate(self) -> None:
        """Assert the structural invariants of the construction."""
        off, stride = 4 * self.n, 8 * self.n + 2

        def enc(pts: np.ndarray) -> np.ndarray:
            return (pts[:, 0] + off) * stride + (pts[:, 1] + off)

        c0 = enc(self.c0)
        assert np.isin(enc(self.c1), c0).all(), "C1 must be contained in C0"
        b0 = enc(self.b0set)
        assert not np.isin(b0, c0).any(), "boundary symbionts cannot lie in the void"
        near = np.zeros(len(b0), dtype=bool)
        for shift in (stride, -stride, 1, -1):
            near |= np.isin(b0 + shift, c0)
        assert near.all(), "every boundary symbiont needs a C0 neighbor"

    def summary(self) -> str:
        return (f"K0={self.k0} K1={self.k1} card(C1)={self.card_c1} "
                f"card(C0)={self.card_c0} card(B0)={self.card_b0}")


def component_report(
    cfg: Configuration, n: int, direction: tuple[int, int] = (1, 0)
) -> ComponentReport:
    """Void components and symbiont boundary of the region ``B_0 u B_dir``.

    ``direction`` picks which neighboring box pairs with ``B_0``; the
    default (1, 0) is the canonical choice and the others follow by symmetry.
    Components use 4-neighbor adjacency inside the planar region; ties for the
    largest component are broken by the lexicographically smallest member.
    """
    _require_2d(cfg.dim)
    if direction not in UNIT_VECTORS:
        raise ValueError(f"direction must be one of {UNIT_VECTORS}")
    if n < 1:
        raise ValueError(f"box half-width must be >= 1, got {n}")
    side = cfg.side
    if side < 6 * n:
        raise ValueError(
            f"torus side {side} too small to embed both boxes (need >= {6 * n})"
        )

    dx, dy = direction
    lo = (min(-n, 2 * n * dx - n), min(-n, 2 * n * dy - n))
    shape = (2 * n + 2 * n * abs(dx), 2 * n + 2 * n * abs(dy))
    xs = (lo[0] + np.arange(shape[0])) % side
    ys = (lo[1] + np.arange(shape[1])) % side
    region = cfg.states.reshape(side, side)[np.ix_(xs, ys)]
    smask = region == INFECTED

    # box membership within the region (local index windows)
    def _box_slices(z: tuple[int, int]) -> tuple[slice, slice]:
        bx = 2 * n * z[0] - n - lo[0]
        by = 2 * n * z[1] - n - lo[1]
        return slice(bx, bx + 2 * n), slice(by, by + 2 * n)

    sl0 = _box_slices((0, 0))
    sl1 = _box_slices(direction)
    in0 = np.zeros(shape, dtype=bool)
    in0[sl0] = True
    in1 = np.zeros(shape, dtype=bool)
    in1[sl1] = True

    s0 = _coords_of(smask & in0, lo)
    s1 = _coords_of(smask & in1, lo)

    # C1: largest void component of the direction box alone
    sub_void = ~smask[sl1]
    labels1, n_comp = ndimage.label(sub_void, structure=_FOUR)
    empty = np.empty((0, 2), dtype=np.int64)
    if n_comp == 0:
        return ComponentReport(n, direction, s0, s1, empty, empty, empty)
    sizes = np.bincount(labels1.ravel())[1:]
    best = int(sizes.max())
    cand = np.flatnonzero(sizes == best) + 1
    if len(cand) == 1:
        pick = int(cand[0])
    else:
        flat = labels1.ravel()
        pick = min((int(c) for c in cand),
                   key=lambda c: int(np.argmax(flat == c)))
    c1mask_sub = labels1 == pick
    box1_lo = (2 * n * dx - n, 2 * n * dy - n)
    c1 = _coords_of(c1mask_sub, box1_lo)

    # C0: void component of the whole region containing C1
    labels_r, _ = ndimage.label(~smask, structure=_FOUR)
    seed = np.argwhere(c1mask_sub)[0]
    lab = labels_r[sl1[0].start + seed[0], sl1[1].start + seed[1]]
    c0mask = labels_r == lab
    c0 = _coords_of(c0mask, lo)

    # B0set: symbionts of the region adjacent to C0
    dil = ndimage.binary_dilation(c0mask, structure=_FOUR)
    b0set = _coords_of(dil & smask, lo)

    return ComponentReport(n, direction, s0, s1, c1, c0, b0set)


@dataclass(frozen=True)
class GeometryCheck:
    """Outcome of the deterministic geometry bounds on one configuration."""

    passed: bool
    vacuous: bool
    report: ComponentReport
    failures: tuple[str, ...]
    note: str | None = None
    cfg: Configuration | None = None

    def summary(self) -> str:
        tag = "vacuous-pass" if self.vacuous else ("pass" if self.passed else "FAIL")
        msg = f"{tag}: {self.report.summary()}"
        if self.failures:
            msg += " | " + "; ".join(self.failures)
        return msg


def check_lemma_geometry(
    cfg: Configuration, n: int, direction: tuple[int, int] = (1, 0)
) -> GeometryCheck:
    """Check the two geometry bounds; vacuous pass when K1 > N.

    On failure the returned record keeps the offending configuration for
    triage.  Structural invariants of the report are asserted as a side
    effect.
    """
    rep = component_report(cfg, n, direction)
    rep.validate()
    if rep.k1 > n:
        return GeometryCheck(
            passed=True, vacuous=True, report=rep, failures=(),
            note=f"K1={rep.k1} exceeds N={n}: hypothesis not met, nothing to check",
        )
    failures = []
    lower = (2 * n) ** 2 - rep.k1 ** 2
    if rep.card_c1 < lower:
        failures.append(f"card(C1)={rep.card_c1} < (2N)^2 - K1^2 = {lower}")
    if rep.card_c1 < 3 * n * n:
        failures.append(f"card(C1)={rep.card_c1} < 3N^2 = {3 * n * n}")
    if rep.card_b0 ** 2 < rep.k0:
        failures.append(
            f"card(B0)={rep.card_b0} < sqrt(K0) = {math.sqrt(rep.k0):.3f}"
        )
    if failures:
        return GeometryCheck(passed=False, vacuous=False, report=rep,
                             failures=tuple(failures), cfg=cfg)
    return GeometryCheck(passed=True, vacuous=False, report=rep, failures=())


# ---------------------------------------------------------------------------
# box-level occupancy events


def _box_step_series(
    traj: Trajectory, box_id: np.ndarray, n_boxes: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    if not traj.recorded:
        raise ValueError("box events need a trajectory recorded with record=True")
    return box_series_kernel(
        traj.initial.states, box_id, n_boxes,
        traj.times, traj.codes, traj.sites, traj.n_events,
    )


@dataclass(frozen=True)
class EventIndicators:
    """H-/H+ over a time window plus H* at the integer times inside it."""

    z: tuple[int, int]
    n: int
    k: int
    window: tuple[float, float]
    hminus: bool
    hplus: bool
    hstar: dict[int, bool]
    min_count: int
    max_count: int


def event_indicators(
    traj: Trajectory,
    z: tuple[int, int],
    n: int,
    k: int,
    window: tuple[float, float] = (0.0, 1.0),
) -> EventIndicators:
    """Box-count event indicators for box ``B_z`` over an open time window.

    ``hminus`` (``hplus``) is true when the symbiont count of the box stays
    <= k (>= k) at every instant of the open window; the count entering the
    window participates, an event at exactly the window end does not.
    ``hstar[m]`` records count(m) >= sqrt(N) for each integer m inside the
    closed window.
    """
    _require_2d(traj.params.dim)
    t0, t1 = float(window[0]), float(window[1])
    if not (0.0 <= t0 < t1):
        raise ValueError(f"window must satisfy 0 <= t0 < t1, got {window}")
    if t1 > traj.t_end:
        raise ValueError(f"window {window} extends past t_end={traj.t_end}")

    box = BoxIndex(z, n)
    box_id = np.full(traj.params.n_sites, -1, dtype=np.int64)
    box_id[box.torus_sites(traj.params.side)] = 0
    counts0, times, _, counts = _box_step_series(traj, box_id, 1)

    def value_at(t: float) -> int:
        j = int(np.searchsorted(times, t, side="right")) - 1
        return int(counts[j]) if j >= 0 else int(counts0[0])

    i0 = int(np.searchsorted(times, t0, side="right"))
    i1 = int(np.searchsorted(times, t1, side="left"))
    vals = np.concatenate([[value_at(t0)], counts[i0:i1]]).astype(np.int64)

    hstar = {}
    for m in range(math.ceil(t0), math.floor(t1) + 1):
        v = value_at(float(m))
        hstar[m] = v * v >= n  # v >= sqrt(N) in integer arithmetic

    return EventIndicators(
        z=(int(z[0]), int(z[1])), n=n, k=k, window=(t0, t1),
        hminus=bool(np.all(vals <= k)), hplus=bool(np.all(vals >= k)),
        hstar=hstar, min_count=int(vals.min()), max_count=int(vals.max()),
    )


@dataclass(frozen=True)
class CoarseGrainField:
    """Good-site field on the parity lattice {(z, n) : z1+z2+n even}."""

    n: int  # box half-width
    m: int  # boxes per torus axis
    z1: np.ndarray
    z2: np.ndarray
    level: np.ndarray
    good: np.ndarray

    @property
    def levels(self) -> np.ndarray:
        return np.unique(self.level)

    def level_density(self) -> dict[int, float]:
        """Fraction of parity-valid sites that are good, per level."""
        out = {}
        for lev in self.levels:
            sel = self.level == lev
            out[int(lev)] = float(np.mean(self.good[sel]))
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["z1", "z2", "n", "good"])
            for a, b, c, g in zip(self.z1, self.z2, self.level, self.good):
                w.writerow([int(a), int(b), int(c), int(g)])


def coarse_grain(traj: Trajectory, n: int) -> CoarseGrainField:
    """Tile the torus with boxes and mark good sites on the parity lattice.

    A site (z, m) with z1+z2+m even is good when box ``B_z`` holds at least
    sqrt(N) symbionts at integer time m.  Levels run over the integers in
    [0, t_end].
    """
    _require_2d(traj.params.dim)
    side = traj.params.side
    if side % (2 * n) != 0:
        raise ValueError(
            f"torus side {side} is not divisible by the box width {2 * n}"
        )
    m_axis = side // (2 * n)

    # box coordinate of each torus site: B_z covers x in [2Nz - N, 2Nz + N)
    coord = np.arange(side)
    zc = ((coord + n) // (2 * n)) % m_axis
    box_id = (zc[:, None] * m_axis + zc[None, :]).ravel().astype(np.int64)
    counts0, times, boxes, counts = _box_step_series(traj, box_id, m_axis * m_axis)

    n_levels = math.floor(traj.t_end) + 1
    cur = counts0.copy()
    j = 0
    z1_out, z2_out, lev_out, good_out = [], [], [], []
    for lev in range(n_levels):
        while j < times.size and times[j] <= lev:
            cur[boxes[j]] = counts[j]
            j += 1
        snap = cur.reshape(m_axis, m_axis)
        for a in range(m_axis):
            for b in range(m_axis):
                if (a + b + lev) % 2 != 0:
                    continue
                z1_out.append(a)
                z2_out.append(b)
                lev_out.append(lev)
                good_out.append(int(snap[a, b]) ** 2 >= n)
    return CoarseGrainField(
        n=n, m=m_axis,
        z1=np.array(z1_out, dtype=np.int64),
        z2=np.array(z2_out, dtype=np.int64),
        level=np.array(lev_out, dtype=np.int64),
        good=np.array(good_out, dtype=bool),
    )
