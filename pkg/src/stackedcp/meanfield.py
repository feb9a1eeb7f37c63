"""Mean-field phase analysis: ODE flow, equilibria, and regime classification.

The well-mixed densities (u1, u2) of hosts and infected hosts obey

    u1' = lambda10*u0*u1 - u1 + delta*u2 - lambda21*u1*u2
    u2' = lambda20*u0*u2 - u2 - delta*u2 + lambda21*u1*u2,   u0 = 1 - u1 - u2

on the triangle Lambda = {u1, u2 >= 0, u1 + u2 <= 1}. This module evaluates
the two invasion conditions, finds all equilibria from the nullcline algebra,
applies the global-stability clause table literally (reporting Unclassified
on clause boundaries and uncovered corners rather than guessing), certifies
the Dulac sign, and sweeps basins of attraction numerically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .model import Params

__all__ = [
    "Outcome",
    "MFState",
    "Conditions",
    "Equilibrium",
    "MFClassification",
    "MFTrajectory",
    "BasinReport",
    "rhs",
    "jacobian",
    "integrate",
    "conditions",
    "equilibria",
    "classify",
    "dulac_divergence",
    "basin_scan",
]

_RESIDUAL_TOL = 1e-10
_CLAMP = 1e-12


class Outcome(enum.Enum):
    EXTINCTION = "extinction"
    COEXISTENCE = "coexistence"
    HOSTS_WIN = "hosts_win"
    SYMBIONTS_WIN = "symbionts_win"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class MFState:
    """Point in the density triangle; u0 = 1 - u1 - u2 is implied."""

    u1: float
    u2: float

    @property
    def u0(self) -> float:
        return 1.0 - self.u1 - self.u2

    def in_lambda(self, tol: float = 0.0) -> bool:
        return (self.u1 >= -tol and self.u2 >= -tol
                and self.u1 + self.u2 <= 1.0 + tol)


def _as_uv(s) -> tuple[float, float]:
    if isinstance(s, MFState):
        return s.u1, s.u2
    u1, u2 = s
    return float(u1), float(u2)


def _check_finite_rates(p: Params) -> None:
    if p.infinite_infection:
        raise ValueError("mean-field analysis needs a finite lambda21")


def rhs(s, p: Params) -> tuple[float, float]:
    """Right-hand side of the density ODEs at s = (u1, u2)."""
    _check_finite_rates(p)
    u1, u2 = _as_uv(s)
    u0 = 1.0 - u1 - u2
    du1 = p.lambda10 * u0 * u1 - u1 + p.delta * u2 - p.lambda21 * u1 * u2
    du2 = p.lambda20 * u0 * u2 - u2 - p.delta * u2 + p.lambda21 * u1 * u2
    return du1, du2


def jacobian(s, p: Params) -> np.ndarray:
    _check_finite_rates(p)
    u1, u2 = _as_uv(s)
    l10, l20, l21, d = p.lambda10, p.lambda20, p.lambda21, p.delta
    return np.array([
        [l10 * (1 - 2 * u1 - u2) - 1 - l21 * u2, -l10 * u1 + d - l21 * u1],
        [(-l20 + l21) * u2, l20 * (1 - u1 - 2 * u2) - 1 - d + l21 * u1],
    ])


@dataclass
class MFTrajectory:
    t: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    reached_target: bool = False

    @property
    def final(self) -> MFState:
        return MFState(float(self.u1[-1]), float(self.u2[-1]))


def integrate(
    s0,
    p: Params,
    t_end: float,
    *,
    tol: tuple[float, float] = (1e-10, 1e-9),
    stop_near: tuple[float, float] | None = None,
    stop_eps: float = 1e-8,
) -> MFTrajectory:
    """Adaptive RK45 flow of the density ODEs, kept inside the triangle.

    Solver output within 1e-12 below a boundary is clamped onto it; anything
    further out trips an assertion (the flow provably never leaves the
    triangle, so a violation means integrator failure). ``stop_near`` installs a terminal
    event that ends the run once the state comes within ``stop_eps``
    (Euclidean) of the given point.
    """
    u1, u2 = _as_uv(s0)
    if not MFState(u1, u2).in_lambda():
        raise ValueError(f"start ({u1}, {u2}) outside the density triangle")
    if not (t_end > 0):
        raise ValueError("t_end must be positive")
    atol, rtol = tol

    def f(_t, u):
        return rhs((u[0], u[1]), p)

    events = None
    if stop_near is not None:
        tx, ty = float(stop_near[0]), float(stop_near[1])

        def near(_t, u):
            return math.hypot(u[0] - tx, u[1] - ty) - stop_eps

        near.terminal = True
        events = near

    sol = solve_ivp(f, (0.0, float(t_end)), [u1, u2], method="RK45",
                    atol=atol, rtol=rtol, events=events, dense_output=False)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")

    y = sol.y.copy()
    # the solver may legitimately undershoot an absorbing boundary by O(atol);
    # only excursions beyond that indicate a real invariance failure
    window = max(10 * atol, _CLAMP)
    assert y.min() > -window and (y.sum(axis=0).max() < 1 + window), \
        "flow left the invariant triangle beyond clamping tolerance"
    np.clip(y, 0.0, None, out=y)
    over = y.sum(axis=0) > 1.0
    if over.any():  # rescale the offending columns back onto the simplex edge
        y[:, over] /= y[:, over].sum(axis=0)
    return MFTrajectory(
        t=sol.t.copy(), u1=y[0], u2=y[1],
        reached_target=bool(sol.status == 1),
    )


# ----------------------------------------------------------------- conditions


def _lhs_2in1(p: Params) -> float | None:
    """lambda20/lambda10 + lambda21*(1 - 1/lambda10), or None if lambda10 = 0."""
    if p.lambda10 == 0.0:
        return None
    factor = 1.0 - 1.0 / p.lambda10
    if p.infinite_infection:
        if factor == 0.0:
            return p.lambda20 / p.lambda10
        return math.inf if factor > 0 else -math.inf
    return p.lambda20 / p.lambda10 + p.lambda21 * factor


def _lhs_1in2(p: Params) -> float | None:
    """lambda10/lambda20 - lambda21*(1 - 1/lambda20), or None if lambda20 = 0."""
    if p.lambda20 == 0.0:
        return None
    factor = 1.0 - 1.0 / p.lambda20
    if p.infinite_infection:
        if factor == 0.0:
            return p.lambda10 / p.lambda20
        return -math.inf if factor > 0 else math.inf
    return p.lambda10 / p.lambda20 - p.lambda21 * factor


@dataclass(frozen=True)
class Conditions:
    """The two invasion inequalities with their left-hand sides.

    ``symbiont_invades``: lambda20/lambda10 + lambda21(1 - 1/lambda10) > 1+delta,
    meaningful when lambda10 > 1 (symbionts invade the host-only equilibrium).
    ``host_invades``: lambda10/lambda20 - lambda21(1 - 1/lambda20) > 1,
    meaningful when delta = 0 and lambda20 > 1. A None means the expression
    divides by zero and the condition is inapplicable.
    """

    lhs_2in1: float | None
    lhs_1in2: float | None
    threshold_2in1: float
    threshold_1in2: float = 1.0

    @property
    def symbiont_invades(self) -> bool | None:
        if self.lhs_2in1 is None:
            return None
        return self.lhs_2in1 > self.threshold_2in1

    @property
    def host_invades(self) -> bool | None:
        if self.lhs_1in2 is None:
            return None
        return self.lhs_1in2 > self.threshold_1in2


def conditions(p: Params) -> Conditions:
    return Conditions(
        lhs_2in1=_lhs_2in1(p), lhs_1in2=_lhs_1in2(p),
        threshold_2in1=1.0 + p.delta,
    )


# ----------------------------------------------------------------- equilibria


class Equilibrium(NamedTuple):
    kind: str  # "p0" | "p1" | "p2" | "interior"
    u1: float
    u2: float

    @property
    def point(self) -> tuple[float, float]:
        return (self.u1, self.u2)


def _newton_polish(u: np.ndarray, p: Params, steps: int = 6) -> np.ndarray:
    for _ in range(steps):
        f = np.array(rhs(u, p))
        if np.abs(f).max() < 1e-15:
            break
        j = jacobian(u, p)
        try:
            du = np.linalg.solve(j, -f)
        except np.linalg.LinAlgError:
            break
        u = u + du
    return u


def _interior_candidates(p: Params) -> list[np.ndarray]:
    """Intersect the positive-u2 nullcline with the u1-nullcline.

    The u2 > 0 nullcline is the line u2 = m2*u1 + b2 when lambda20 > 0, the
    vertical line u1 = (1+delta)/lambda21 when lambda20 = 0 < lambda21, and
    empty when lambda20 = lambda21 = 0. The u1-nullcline away from u1 = 0 is
    a line for delta = 0 and the quadratic
    -l10*u1^2 - (l10+l21)*u1*u2 + (l10-1)*u1 + delta*u2 = 0 for delta > 0;
    the quadratic form covers both, so substitution always reduces the
    problem to one univariate quadratic.
    """
    l10, l20, l21, d = p.lambda10, p.lambda20, p.lambda21, p.delta
    out: list[np.ndarray] = []

    def on_quadratic_u2(u1: float) -> float | None:
        # solve the u1-nullcline for u2 given u1 (linear in u2)
        denom = d - (l10 + l21) * u1
        num = l10 * u1 * u1 - (l10 - 1.0) * u1
        if denom == 0.0:
            return None
        return num / denom

    if l20 > 0.0:
        m2 = l21 / l20 - 1.0
        b2 = 1.0 - (1.0 + d) / l20
        # substitute u2 = m2*u1 + b2 into the u1-nullcline quadratic
        a = -l10 - (l10 + l21) * m2
        b = (l10 - 1.0) - (l10 + l21) * b2 + d * m2
        c = d * b2
        if a == 0.0:
            if b != 0.0:
                roots = [-c / b]
            else:
                roots = []
        else:
            disc = b * b - 4 * a * c
            if disc < 0.0:
                roots = []
            else:
                sq = math.sqrt(disc)
                roots = [(-b - sq) / (2 * a), (-b + sq) / (2 * a)]
        for u1 in roots:
            out.append(np.array([u1, m2 * u1 + b2]))
    elif l21 > 0.0:
        u1 = (1.0 + d) / l21
        u2 = on_quadratic_u2(u1)
        if u2 is not None:
            out.append(np.array([u1, u2]))
    # lambda20 = lambda21 = 0: u2' = -(1+delta)u2 < 0 for u2 > 0 -> no interior
    return out


def equilibria(p: Params) -> list[Equilibrium]:
    """All equilibria in the closed triangle, each with |rhs| < 1e-10.

    p0 is always present; p1 = (1 - 1/lambda10, 0) exists iff lambda10 > 1;
    p2 = (0, 1 - 1/lambda20) exists iff delta = 0 and lambda20 > 1; interior
    points come from the nullcline intersection, kept only when strictly
    inside the triangle.
    """
    _check_finite_rates(p)
    found = [Equilibrium("p0", 0.0, 0.0)]
    if p.lambda10 > 1.0:
        found.append(Equilibrium("p1", 1.0 - 1.0 / p.lambda10, 0.0))
    if p.delta == 0.0 and p.lambda20 > 1.0:
        found.append(Equilibrium("p2", 0.0, 1.0 - 1.0 / p.lambda20))

    interior: list[np.ndarray] = []
    for cand in _interior_candidates(p):
        u = _newton_polish(cand, p)
        u1, u2 = float(u[0]), float(u[1])
        if not (u1 > 0.0 and u2 > 0.0 and u1 + u2 < 1.0):
            continue
        if max(abs(v) for v in rhs((u1, u2), p)) >= _RESIDUAL_TOL:
            continue
        if any(abs(u1 - v[0]) < 1e-9 and abs(u2 - v[1]) < 1e-9 for v in interior):
            continue
        interior.append(np.array([u1, u2]))
    found.extend(Equilibrium("interior", float(v[0]), float(v[1])) for v in interior)

    for eq in found:
        resid = max(abs(v) for v in rhs(eq.point, p))
        if resid >= _RESIDUAL_TOL:
            raise RuntimeError(
                f"equilibrium {eq.kind} at {eq.point} has residual {resid:.2e}"
            )
    return found


# ------------------------------------------------------------- classification


@dataclass(frozen=True)
class MFClassification:
    outcome: Outcome
    clause: str | None  # "1" | "2a" | "2b" | "2c" | "3" | "4"
    point: tuple[float, float] | None
    conditions: Conditions

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "clause": self.clause,
            "point": None if self.point is None else list(self.point),
            "lhs_2in1": self.conditions.lhs_2in1,
            "lhs_1in2": self.conditions.lhs_1in2,
        }


def _interior_point(p: Params) -> tuple[float, float] | None:
    if p.infinite_infection:
        return None  # clause logic still applies, but the point is not computable
    inner = [e for e in equilibria(p) if e.kind == "interior"]
    if len(inner) != 1:
        raise RuntimeError(
            f"expected a unique interior equilibrium, found {len(inner)} "
            f"for {p.to_dict()}"
        )
    return inner[0].point


def classify(p: Params) -> MFClassification:
    """Literal clause table for the global-stability classification.

    Exact equality in a consulted strict inequality is a clause boundary the
    table does not address; whenever a verdict would hinge on one (this can
    only happen through the negated conditions in the last two clauses), the
    result is Unclassified. Parameter corners where a consulted condition
    divides by zero are likewise Unclassified rather than extrapolated.
    """
    cond = conditions(p)
    l10, l20, d = p.lambda10, p.lambda20, p.delta

    # clause 1: extinction on all of the triangle
    if max(l10, l20) <= 1.0:
        return MFClassification(Outcome.EXTINCTION, "1", (0.0, 0.0), cond)

    def fired_coexistence(clause: str) -> MFClassification:
        return MFClassification(Outcome.COEXISTENCE, clause, _interior_point(p), cond)

    if d > 0.0:
        if l10 <= 1.0 and l20 > 1.0 + d:
            return fired_coexistence("2a")
        if l10 > 1.0 and cond.symbiont_invades is True:
            return fired_coexistence("2b")
        return MFClassification(Outcome.UNCLASSIFIED, None, None, cond)

    # delta = 0 below
    if l10 > 1.0 and cond.symbiont_invades is True and (
        l20 <= 1.0 or cond.host_invades is True
    ):
        return fired_coexistence("2c")
    if l10 > 1.0 and cond.symbiont_invades is False and cond.host_invades is True:
        if cond.lhs_2in1 == cond.threshold_2in1:  # exactly on the boundary
            return MFClassification(Outcome.UNCLASSIFIED, None, None, cond)
        return MFClassification(
            Outcome.HOSTS_WIN, "3", (1.0 - 1.0 / l10, 0.0), cond)
    if l20 > 1.0 and cond.host_invades is False and cond.symbiont_invades is True:
        if cond.lhs_1in2 == cond.threshold_1in2:
            return MFClassification(Outcome.UNCLASSIFIED, None, None, cond)
        return MFClassification(
            Outcome.SYMBIONTS_WIN, "4", (0.0, 1.0 - 1.0 / l20), cond)
    return MFClassification(Outcome.UNCLASSIFIED, None, None, cond)


def dulac_divergence(s, p: Params) -> float:
    """div(B F) with B = 1/(u1 u2): -l10/u2 - delta/u1^2 - l20/u1."""
    u1, u2 = _as_uv(s)
    if not (u1 > 0.0 and u2 > 0.0):
        raise ValueError(f"({u1}, {u2}) touches a coordinate axis")
    return -p.lambda10 / u2 - p.delta / (u1 * u1) - p.lambda20 / u1


# ------------------------------------------------------------------ basin scan


@dataclass
class BasinReport:
    target: tuple[float, float]
    outcome: Outcome
    n_run: int
    n_skipped: int
    max_distance: float
    distances: np.ndarray
    starts: np.ndarray

    @property
    def converged(self) -> bool:
        return bool(self.max_distance < 1e-6)

    def summary(self) -> dict:
        return {
            "target": list(self.target),
            "outcome": self.outcome.value,
            "n_run": self.n_run,
            "n_skipped": self.n_skipped,
            "max_distance": float(self.max_distance),
        }


def basin_scan(p: Params, grid_n: int, t_end: float = 1e4) -> BasinReport:
    """Integrate from a grid over the triangle and measure convergence.

    The grid is the regular (grid_n x grid_n) lattice on [0,1]^2 restricted
    to the triangle; points outside the stability region (u2 = 0 when
    delta > 0; u1 = 0 or u2 = 0 when delta = 0 — clause 1 excepted, where the
    whole triangle is in play) are skipped and counted separately. Reports
    the maximum terminal distance to the classified equilibrium.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    cls = classify(p)
    if cls.outcome is Outcome.UNCLASSIFIED:
        raise ValueError("basin_scan needs a classified parameter set")
    if cls.point is None:
        raise ValueError("no computable target equilibrium for this parameter set")
    target = np.array(cls.point)

    axis = np.linspace(0.0, 1.0, grid_n)
    starts, skipped = [], 0
    whole_triangle = cls.clause == "1"
    for u1 in axis:
        for u2 in axis:
            if u1 + u2 > 1.0 + 1e-15:
                continue
            in_plus = (u2 > 0.0) if p.delta > 0.0 else (u1 > 0.0 and u2 > 0.0)
            if whole_triangle or in_plus:
                starts.append((u1, u2))
            else:
                skipped += 1

    dists = np.empty(len(starts))
    for i, s0 in enumerate(starts):
        tr = integrate(s0, p, t_end, stop_near=tuple(target), stop_eps=1e-8)
        dists[i] = math.hypot(tr.u1[-1] - target[0], tr.u2[-1] - target[1])
    return BasinReport(
        target=(float(target[0]), float(target[1])), outcome=cls.outcome,
        n_run=len(starts), n_skipped=skipped,
        max_distance=float(dists.max()) if dists.size else 0.0,
        distances=dists, starts=np.array(starts),
    )
