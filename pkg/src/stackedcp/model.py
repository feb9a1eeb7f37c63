"""Domain types and rate formulas shared by every engine.

The model lives on a d-dimensional torus of side L (row-major site indexing).
Each site is in state 0 (empty), 1 (healthy host) or 2 (infected host). The
six local transitions and their rates, with f_i(x) the fraction of the 2d
nearest neighbors of x in state i:

    0 -> 1   lambda10 * f_1(x)      (host birth from a healthy neighbor)
    0 -> 2   lambda20 * f_2(x)      (host birth from an infected neighbor,
                                     offspring inherits the symbiont)
    1 -> 0   1                      (host death)
    1 -> 2   lambda21 * f_2(x)      (horizontal infection)
    2 -> 0   1                      (infected host death)
    2 -> 1   delta                  (recovery: symbiont lost, host survives)

lambda21 may be the distinguished value INFINITE (instantaneous invasion),
supported in d=1 only; see invasion_closure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np

INFINITE = math.inf

EMPTY, HOST, INFECTED = 0, 1, 2

# canonical ordering of the six transitions used by transition_rates()
TRANSITIONS = ((0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1))


class Regime(Enum):
    """Ecological role of the symbiont, by its effect on host fecundity."""

    PATHOGEN = "pathogen"
    NEUTRAL = "neutral"
    MUTUALIST = "mutualist"


@dataclass(frozen=True)
class Params:
    """Model rates plus the lattice geometry and the reproducibility seed.

    All finite rates must be nonnegative. lambda21 == INFINITE is allowed only
    for dim == 1 (invasion semantics are one-dimensional; there is no agreed
    meaning in higher dimensions, so it is rejected rather than guessed).
    """

    lambda10: float
    lambda20: float
    lambda21: float = 0.0
    delta: float = 0.0
    dim: int = 1
    side: int = 3
    seed: int = 0

    def __post_init__(self):
        for name in ("lambda10", "lambda20", "delta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")
        if self.lambda21 != INFINITE and not (
            math.isfinite(self.lambda21) and self.lambda21 >= 0
        ):
            raise ValueError(
                f"lambda21 must be >= 0 or INFINITE, got {self.lambda21!r}"
            )
        if self.lambda21 == INFINITE and self.dim != 1:
            raise ValueError("lambda21=INFINITE is only supported in dim=1")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.side < 3:
            raise ValueError(f"side must be >= 3, got {self.side}")
        if not isinstance(self.seed, int):
            raise ValueError("seed must be an integer")

    @property
    def n_sites(self) -> int:
        return self.side**self.dim

    @property
    def infinite_infection(self) -> bool:
        return self.lambda21 == INFINITE

    def with_(self, **kw) -> "Params":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "lambda10": self.lambda10,
            "lambda20": self.lambda20,
            "lambda21": "inf" if self.infinite_infection else self.lambda21,
            "delta": self.delta,
            "dim": self.dim,
            "side": self.side,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Params":
        d = dict(d)
        lam21 = d.get("lambda21", 0.0)
        if isinstance(lam21, str):
            if lam21.lower() not in ("inf", "infinite", "infinity"):
                raise ValueError(f"bad lambda21 value {lam21!r}")
            d["lambda21"] = INFINITE
        return cls(**d)


def classify_regime(p: Params) -> Regime:
    """Pathogen if the symbiont lowers host fecundity, mutualist if it raises it."""
    if p.lambda20 < p.lambda10:
        return Regime.PATHOGEN
    if p.lambda20 > p.lambda10:
        return Regime.MUTUALIST
    return Regime.NEUTRAL


@lru_cache(maxsize=32)
def neighbor_table(dim: int, side: int) -> np.ndarray:
    """(n_sites, 2*dim) int32 table of torus nearest neighbors, row-major sites.

    Column order: (-axis0, +axis0, -axis1, +axis1, ...). Cached per geometry;
    treat the returned array as read-only.
    """
    n = side**dim
    idx = np.arange(n)
    coords = np.empty((n, dim), dtype=np.int64)
    rem = idx.copy()
    for ax in range(dim - 1, -1, -1):
        coords[:, ax] = rem % side
        rem //= side
    strides = side ** np.arange(dim - 1, -1, -1)
    tbl = np.empty((n, 2 * dim), dtype=np.int32)
    for ax in range(dim):
        for k, step in enumerate((-1, +1)):
            c = coords.copy()
            c[:, ax] = (c[:, ax] + step) % side
            tbl[:, 2 * ax + k] = c @ strides
    tbl.setflags(write=False)
    return tbl


class Configuration:
    """Finite-torus state: a dense int8 array over {0,1,2} plus cached counts.

    Sites are indexed row-major (site = sum coord[ax] * side**(dim-1-ax)).
    """

    __slots__ = ("states", "dim", "side", "_counts")

    def __init__(self, states, dim: int, side: int):
        states = np.ascontiguousarray(states, dtype=np.int8).ravel()
        if side < 3:
            raise ValueError(f"side must be >= 3, got {side}")
        if states.size != side**dim:
            raise ValueError(
                f"states has {states.size} sites, expected side**dim = {side**dim}"
            )
        if states.size and (states.min() < 0 or states.max() > 2):
            raise ValueError("states must take values in {0, 1, 2}")
        self.states = states
        self.dim = dim
        self.side = side
        self._counts = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def filled(cls, dim: int, side: int, state: int) -> "Configuration":
        if state not in (EMPTY, HOST, INFECTED):
            raise ValueError(f"bad state {state}")
        return cls(np.full(side**dim, state, dtype=np.int8), dim, side)

    @classmethod
    def random(cls, dim, side, probs, rng) -> "Configuration":
        """iid sites with P(state=i) = probs[i]; probs must sum to 1."""
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (3,) or abs(probs.sum() - 1.0) > 1e-12 or probs.min() < 0:
            raise ValueError("probs must be 3 nonnegative values summing to 1")
        states = rng.choice(3, size=side**dim, p=probs).astype(np.int8)
        return cls(states, dim, side)

    @classmethod
    def from_line(cls, text: str) -> "Configuration":
        """One-line d=1 format, e.g. "0012210"."""
        states = np.frombuffer(text.strip().encode("ascii"), dtype=np.uint8) - ord("0")
        return cls(states.astype(np.int8), 1, len(text.strip()))

    # -- derived -----------------------------------------------------------

    @property
    def n_sites(self) -> int:
        return self.states.size

    @property
    def counts(self) -> np.ndarray:
        """Per-state tallies (length 3), cached until the states array changes.

        Mutating .states in place invalidates the cache only via
        invalidate_counts(); the engines maintain their own tallies and write
        back through copies, so plain users never hit the stale case.
        """
        if self._counts is None:
            self._counts = np.bincount(self.states, minlength=3).astype(np.int64)
        return self._counts

    def invalidate_counts(self):
        self._counts = None

    def validate(self, p: Params | None = None):
        """Recompute-and-compare the cached tallies; check the invasion invariant."""
        fresh = np.bincount(self.states, minlength=3).astype(np.int64)
        if self._counts is not None and not np.array_equal(fresh, self._counts):
            raise AssertionError(
                f"count cache desync: cached {self._counts}, actual {fresh}"
            )
        self._counts = fresh
        if int(fresh.sum()) != self.n_sites:
            raise AssertionError("tallies do not sum to the number of sites")
        if p is not None and p.infinite_infection:
            if _has_host_infected_contact(self):
                raise AssertionError(
                    "invasion invariant violated: a healthy host is adjacent "
                    "to an infected one under lambda21=INFINITE"
                )

    def neighbors(self, x: int) -> np.ndarray:
        return neighbor_table(self.dim, self.side)[x]

    def copy(self) -> "Configuration":
        return Configuration(self.states.copy(), self.dim, self.side)

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and self.dim == other.dim
            and self.side == other.side
            and np.array_equal(self.states, other.states)
        )

    def __repr__(self):
        if self.dim == 1 and self.side <= 64:
            return f"Configuration(1d '{self.to_line()}')"
        c = self.counts
        return (
            f"Configuration(dim={self.dim}, side={self.side}, "
            f"counts=({c[0]}, {c[1]}, {c[2]}))"
        )

    # -- serialization -----------------------------------------------------

    def to_line(self) -> str:
        if self.dim != 1:
            raise ValueError("one-line format is defined for dim=1 only")
        return "".join("012"[s] for s in self.states)

    def to_json(self, params: Params | None = None) -> str:
        """Byte-exact JSON form: header plus an ASCII digit string of states."""
        doc = {
            "schema": 1,
            "dim": self.dim,
            "side": self.side,
            "encoding": "digits",
            "states": "".join("012"[s] for s in self.states),
        }
        if params is not None:
            doc["params"] = params.to_dict()
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> tuple["Configuration", Params | None]:
        doc = json.loads(text)
        if doc.get("schema") != 1:
            raise ValueError(f"unknown configuration schema {doc.get('schema')!r}")
        if doc.get("encoding") != "digits":
            raise ValueError(f"unknown state encoding {doc.get('encoding')!r}")
        states = np.frombuffer(doc["states"].encode("ascii"), dtype=np.uint8) - ord("0")
        cfg = cls(states.astype(np.int8), int(doc["dim"]), int(doc["side"]))
        params = Params.from_dict(doc["params"]) if "params" in doc else None
        return cfg, params


# -- rate formulas ----------------------------------------------------------


def neighbor_fraction(x: int, i: int, cfg: Configuration) -> float:
    """Fraction of the 2d nearest neighbors of site x in state i."""
    if not 0 <= x < cfg.n_sites:
        raise ValueError(f"site {x} out of range for {cfg.n_sites} sites")
    if i not in (EMPTY, HOST, INFECTED):
        raise ValueError(f"bad state {i}")
    nbrs = cfg.neighbors(x)
    return float(np.count_nonzero(cfg.states[nbrs] == i)) / (2 * cfg.dim)


def transition_rates(x: int, cfg: Configuration, p: Params) -> np.ndarray:
    """Rates of the six transitions (order per TRANSITIONS) for site x.

    Transitions that do not apply to the current state of x get rate 0. An
    infected host dies at rate 1 and recovers at rate delta regardless of its
    neighborhood. lambda21 must be finite here: the INFINITE case is handled
    by invasion closure, not by a rate.
    """
    if p.infinite_infection:
        raise ValueError(
            "transition_rates requires finite lambda21; "
            "use invasion_closure for the INFINITE case"
        )
    s = int(cfg.states[x])
    out = np.zeros(6, dtype=float)
    if s == EMPTY:
        out[0] = p.lambda10 * neighbor_fraction(x, HOST, cfg)
        out[1] = p.lambda20 * neighbor_fraction(x, INFECTED, cfg)
    elif s == HOST:
        out[2] = 1.0
        out[3] = p.lambda21 * neighbor_fraction(x, INFECTED, cfg)
    else:
        out[4] = 1.0
        out[5] = p.delta
    return out


# -- instantaneous invasion (lambda21 = INFINITE, d = 1) ---------------------


def _has_host_infected_contact(cfg: Configuration) -> bool:
    s = cfg.states
    right = np.roll(s, -1)
    return bool(np.any((s == HOST) & (right == INFECTED))) or bool(
        np.any((s == INFECTED) & (right == HOST))
    )


def invasion_closure(cfg: Configuration, p: Params | None = None) -> Configuration:
    """Convert every maximal run of healthy hosts adjacent to an infected host
    into infected hosts (instantaneous invasion).

    Only meaningful for dim=1. Idempotent; never touches empty sites and never
    removes infected ones. If params are supplied they must carry
    lambda21=INFINITE (calling this under finite infection rates is a contract
    error: finite-rate infection goes through transition_rates instead).
    """
    if cfg.dim != 1:
        raise ValueError("invasion closure is defined for dim=1 only")
    if p is not None and not p.infinite_infection:
        raise ValueError("invasion_closure called with finite lambda21")
    s = cfg.states.copy()
    n = s.size
    if not (s == INFECTED).any():
        return Configuration(s, 1, cfg.side)
    # sweep runs of 1s; a run converts iff either flanking site is a 2.
    # The ring is scanned via one linear pass with wraparound run handling.
    hosts = s == HOST
    if not hosts.any():
        return Configuration(s, 1, cfg.side)
    converted = np.zeros(n, dtype=bool)
    visited = np.zeros(n, dtype=bool)
    for start in np.flatnonzero(hosts):
        if visited[start]:
            continue
        # walk left and right to the ends of this maximal run of 1s
        lo = start
        while hosts[(lo - 1) % n] and (lo - 1) % n != start:
            lo = (lo - 1) % n
        hi = start
        while hosts[(hi + 1) % n] and (hi + 1) % n != start:
            hi = (hi + 1) % n
        run = [lo]
        while run[-1] != hi:
            run.append((run[-1] + 1) % n)
        for site in run:
            visited[site] = True
        if s[(lo - 1) % n] == INFECTED or s[(hi + 1) % n] == INFECTED:
            for site in run:
                converted[site] = True
    s[converted] = INFECTED
    return Configuration(s, 1, cfg.side)
