"""Oracle tests, including a dual-route check against a dense matrix
exponential and closed-form laws for degenerate parameter sets."""

import math

import numpy as np
import pytest
import scipy.linalg

from stackedcp.model import Configuration, Params, transition_rates
from stackedcp.oracle import (
    MAX_SITES,
    enumerate_states,
    generator_matrix,
    oracle_vs_simulation,
    state_index,
    transient_distribution,
)

P3 = Params(lambda10=2.0, lambda20=1.0, lambda21=1.5, delta=0.5, dim=1, side=3, seed=0)


def test_enumeration_roundtrip():
    states = enumerate_states(1, 3)
    assert states.shape == (27, 3)
    for i in (0, 1, 13, 26):
        assert state_index(states[i]) == i
    assert len({state_index(s) for s in states}) == 27


def test_generator_rows_match_pointwise_rates():
    # The vectorised generator build and model.transition_rates are written
    # independently; they must produce identical off-diagonal entries.
    q = generator_matrix(P3).toarray()
    states = enumerate_states(1, 3)
    rng = np.random.default_rng(0)
    pow3 = 3 ** np.arange(3)
    for i in rng.choice(27, size=27, replace=False):
        cfg = Configuration(states[i].copy(), 1, 3)
        for x in range(3):
            rates = transition_rates(x, cfg, P3)
            for code, (frm, to) in enumerate(
                ((0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1))
            ):
                if states[i, x] != frm:
                    continue
                j = i + (to - frm) * pow3[x]
                assert q[i, j] == pytest.approx(rates[code], abs=1e-14)


def test_generator_is_conservative():
    q = generator_matrix(P3)
    rowsums = np.asarray(q.sum(axis=1)).ravel()
    assert np.abs(rowsums).max() < 1e-12
    off = q.toarray().copy()
    np.fill_diagonal(off, 0.0)
    assert off.min() >= 0.0


def test_pure_death_closed_form():
    p = Params(lambda10=0.0, lambda20=0.0, lambda21=0.0, delta=0.0,
               dim=1, side=3, seed=0)
    cfg = Configuration.filled(1, 3, 1)
    t = 0.8
    dist = transient_distribution(p, cfg, t)
    s = math.exp(-t)
    # sites die independently at rate one: product law over three sites
    assert dist[state_index(np.array([1, 1, 1]))] == pytest.approx(s**3, abs=1e-12)
    assert dist[state_index(np.array([0, 0, 0]))] == pytest.approx((1 - s) ** 3, abs=1e-12)
    assert dist[state_index(np.array([1, 0, 0]))] == pytest.approx(s * (1 - s) ** 2, abs=1e-12)
    assert dist.sum() == pytest.approx(1.0, abs=1e-12)


def test_uniformization_matches_dense_expm():
    q = generator_matrix(P3).toarray()
    cfg = Configuration.from_line("120")
    for t in (0.15, 1.0, 3.0):
        via_expm = np.zeros(27)
        via_expm[state_index(cfg.states)] = 1.0
        via_expm = via_expm @ scipy.linalg.expm(q * t)
        ours = transient_distribution(P3, cfg, t)
        assert np.abs(ours - via_expm).sum() < 1e-9


def test_semigroup_property():
    cfg = Configuration.from_line("210")
    one_jump = transient_distribution(P3, cfg, 1.3)
    two_jumps = transient_distribution(P3, transient_distribution(P3, cfg, 0.8), 0.5)
    assert np.abs(one_jump - two_jumps).sum() < 1e-9


def test_t_zero_is_identity():
    cfg = Configuration.from_line("102")
    dist = transient_distribution(P3, cfg, 0.0)
    assert dist[state_index(cfg.states)] == 1.0
    assert dist.sum() == 1.0


def test_oracle_vs_gillespie_small():
    cfg = Configuration.from_line("120")
    report = oracle_vs_simulation(P3, cfg, 0.7, 4000, engine="gillespie")
    assert report.tv < 0.05
    assert report.max_abs_z < 4.5
    assert report.counts.sum() == 4000


def test_oracle_vs_harris_small():
    cfg = Configuration.from_line("120")
    report = oracle_vs_simulation(P3, cfg, 0.7, 1500, engine="harris")
    assert report.tv < 0.08
    assert report.max_abs_z < 4.5


def test_oracle_refuses_big_or_infinite():
    with pytest.raises(ValueError):
        generator_matrix(Params(1.0, 1.0, dim=1, side=MAX_SITES + 1))
    with pytest.raises(ValueError):
        generator_matrix(Params(1.0, 1.0, lambda21=float("inf"), dim=1, side=3))
    with pytest.raises(ValueError):
        oracle_vs_simulation(P3, Configuration.from_line("120"), 0.5, 0)
    with pytest.raises(ValueError):
        transient_distribution(P3, np.ones(27), 0.5)  # not a distribution


def test_distribution_start_vector():
    cfg_a = Configuration.from_line("120")
    cfg_b = Configuration.from_line("001")
    mix = np.zeros(27)
    mix[state_index(cfg_a.states)] = 0.25
    mix[state_index(cfg_b.states)] = 0.75
    got = transient_distribution(P3, mix, 0.6)
    want = 0.25 * transient_distribution(P3, cfg_a, 0.6) + 0.75 * transient_distribution(
        P3, cfg_b, 0.6
    )
    assert np.abs(got - want).sum() < 1e-12
