import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stackedcp import (
    INFINITE,
    Configuration,
    Params,
    Regime,
    classify_regime,
    invasion_closure,
    neighbor_fraction,
    transition_rates,
)
from stackedcp.model import EMPTY, HOST, INFECTED, TRANSITIONS, neighbor_table


def small_params(**kw):
    base = dict(lambda10=2.0, lambda20=1.0, lambda21=1.5, delta=0.5, dim=1, side=6, seed=7)
    base.update(kw)
    return Params(**base)


# -- Params validation -------------------------------------------------------


def test_params_rejects_negative_rates():
    for name in ("lambda10", "lambda20", "lambda21", "delta"):
        with pytest.raises(ValueError):
            small_params(**{name: -0.1})


def test_params_rejects_infinite_infection_above_one_dimension():
    with pytest.raises(ValueError):
        small_params(lambda21=INFINITE, dim=2, side=4)
    # but fine in d=1
    assert small_params(lambda21=INFINITE).infinite_infection


def test_params_rejects_tiny_side():
    with pytest.raises(ValueError):
        small_params(side=2)


def test_params_dict_roundtrip_handles_infinite():
    p = small_params(lambda21=INFINITE)
    assert Params.from_dict(p.to_dict()) == p
    q = small_params()
    assert Params.from_dict(q.to_dict()) == q


# -- regimes ------------------------------------------------------------------


def test_regime_classification():
    assert classify_regime(small_params(lambda10=2, lambda20=0.5)) is Regime.PATHOGEN
    assert classify_regime(small_params(lambda10=1, lambda20=1)) is Regime.NEUTRAL
    assert classify_regime(small_params(lambda10=1, lambda20=3)) is Regime.MUTUALIST


# -- neighbor fractions -------------------------------------------------------


def test_fraction_all_neighbors_infected_1d():
    cfg = Configuration.from_line("212")
    assert neighbor_fraction(1, INFECTED, cfg) == 1.0


def test_fraction_one_of_four_2d():
    states = np.zeros(16, dtype=np.int8)
    cfg = Configuration(states, 2, 4)
    # site 5 has neighbors 1, 9, 4, 6; put a host on exactly one
    cfg.states[1] = HOST
    cfg.invalidate_counts()
    assert neighbor_fraction(5, HOST, cfg) == 0.25
    assert neighbor_fraction(5, INFECTED, cfg) == 0.0


def test_fraction_rejects_bad_arguments():
    cfg = Configuration.from_line("000")
    with pytest.raises(ValueError):
        neighbor_fraction(3, 0, cfg)
    with pytest.raises(ValueError):
        neighbor_fraction(0, 5, cfg)


@given(
    dim=st.integers(1, 3),
    side=st.integers(3, 5),
    seed=st.integers(0, 2**32 - 1),
)
@settings(max_examples=40, deadline=None)
def test_fractions_sum_to_one(dim, side, seed):
    rng = np.random.default_rng(seed)
    cfg = Configuration.random(dim, side, (0.3, 0.4, 0.3), rng)
    x = int(rng.integers(cfg.n_sites))
    fracs = [neighbor_fraction(x, i, cfg) for i in (EMPTY, HOST, INFECTED)]
    # the underlying tallies partition the 2d neighbors exactly
    counts = [round(f * 2 * dim) for f in fracs]
    assert sum(counts) == 2 * dim
    assert all(f == c / (2 * dim) for f, c in zip(fracs, counts))
    if (2 * dim) & (2 * dim - 1) == 0:
        # 2d a power of two: the float sum is exact too
        assert sum(fracs) == 1.0


def test_neighbor_table_is_symmetric():
    tbl = neighbor_table(2, 5)
    for x in range(25):
        for y in tbl[x]:
            assert x in tbl[y]


# -- transition rates ---------------------------------------------------------


def test_rates_empty_site_all_host_neighbors():
    cfg = Configuration.from_line("101")
    p = small_params(lambda10=3.0, side=3)
    r = transition_rates(1, cfg, p)
    assert r[TRANSITIONS.index((0, 1))] == pytest.approx(3.0)
    assert r[TRANSITIONS.index((0, 2))] == 0.0


def test_rates_infected_site_ignores_neighbors():
    for line in ("020", "121", "222"):
        cfg = Configuration.from_line(line)
        r = transition_rates(1, cfg, small_params(delta=0.7, side=3))
        assert r[TRANSITIONS.index((2, 0))] == 1.0
        assert r[TRANSITIONS.index((2, 1))] == 0.7
        assert r[[0, 1, 2, 3]].sum() == 0.0


def test_rates_isolated_vacancy_all_zero():
    cfg = Configuration.from_line("000")
    assert transition_rates(1, cfg, small_params(side=3)).sum() == 0.0


def test_rates_linear_in_lambda21():
    cfg = Configuration.from_line("0112")
    base = small_params(side=4, lambda21=0.0)
    i = TRANSITIONS.index((1, 2))
    r0 = transition_rates(2, cfg, base)[i]
    r1 = transition_rates(2, cfg, base.with_(lambda21=2.0))[i]
    r2 = transition_rates(2, cfg, base.with_(lambda21=4.0))[i]
    assert r0 == 0.0
    assert r2 == pytest.approx(2 * r1)


@given(
    lam=st.floats(0, 50),
    bump=st.floats(0, 10),
    which=st.sampled_from(["lambda10", "lambda20", "lambda21", "delta"]),
    seed=st.integers(0, 2**32 - 1),
)
@settings(max_examples=60, deadline=None)
def test_rates_monotone_in_each_parameter(lam, bump, which, seed):
    rng = np.random.default_rng(seed)
    cfg = Configuration.random(1, 8, (0.3, 0.4, 0.3), rng)
    x = int(rng.integers(8))
    p_low = small_params(side=8, **{which: lam})
    p_high = small_params(side=8, **{which: lam + bump})
    r_low = transition_rates(x, cfg, p_low)
    r_high = transition_rates(x, cfg, p_high)
    assert np.all(r_high >= r_low - 1e-15)


def test_rates_reject_infinite_lambda21():
    cfg = Configuration.from_line("012")
    with pytest.raises(ValueError):
        transition_rates(0, cfg, small_params(side=3, lambda21=INFINITE))


# -- invasion closure ---------------------------------------------------------


def test_invasion_converts_flanked_run():
    out = invasion_closure(Configuration.from_line("0211102"))
    assert out.to_line() == "0222202"


def test_invasion_without_contact_is_identity():
    cfg = Configuration.from_line("1102011")
    # runs of hosts separated from the infected site by empties stay hosts
    assert invasion_closure(cfg).to_line() == "1102011"


def test_invasion_all_infected_unchanged():
    cfg = Configuration.from_line("2222")
    assert invasion_closure(cfg) == cfg


def test_invasion_wraps_around_the_ring():
    # run of 1s spans the index origin; the 2 touches it from inside
    out = invasion_closure(Configuration.from_line("110211"))
    assert out.to_line() == "220222"


def test_invasion_rejects_finite_lambda21():
    with pytest.raises(ValueError):
        invasion_closure(Configuration.from_line("012"), small_params(side=3))


def test_invasion_rejects_higher_dimension():
    cfg = Configuration(np.zeros(9, dtype=np.int8), 2, 3)
    with pytest.raises(ValueError):
        invasion_closure(cfg)


@given(seed=st.integers(0, 2**32 - 1), side=st.integers(3, 24))
@settings(max_examples=80, deadline=None)
def test_invasion_idempotent_and_only_promotes_hosts(seed, side):
    rng = np.random.default_rng(seed)
    cfg = Configuration.random(1, side, (0.3, 0.4, 0.3), rng)
    once = invasion_closure(cfg)
    twice = invasion_closure(once)
    assert once == twice
    # 0s untouched, 2s never removed, changes are exactly 1 -> 2
    changed = cfg.states != once.states
    assert np.all(cfg.states[changed] == HOST)
    assert np.all(once.states[changed] == INFECTED)
    assert np.array_equal(cfg.states == EMPTY, once.states == EMPTY)
    # closure invariant: no host-infected contact remains
    s = once.states
    nbr = np.roll(s, -1)
    assert not np.any((s == HOST) & (nbr == INFECTED))
    assert not np.any((s == INFECTED) & (nbr == HOST))


# -- configuration bookkeeping and serialization -------------------------------


def test_counts_match_states():
    cfg = Configuration.from_line("0012210")
    assert list(cfg.counts) == [3, 2, 2]
    cfg.validate()


def test_validate_flags_desync():
    cfg = Configuration.from_line("0012210")
    _ = cfg.counts
    cfg.states[0] = INFECTED  # mutate behind the cache's back
    with pytest.raises(AssertionError):
        cfg.validate()


def test_validate_checks_invasion_invariant():
    cfg = Configuration.from_line("012")
    with pytest.raises(AssertionError):
        cfg.validate(small_params(side=3, lambda21=INFINITE))


def test_json_roundtrip_byte_exact():
    p = small_params()
    rng = np.random.default_rng(3)
    cfg = Configuration.random(2, 4, (0.5, 0.25, 0.25), rng)
    blob = cfg.to_json(params=p)
    again, p2 = Configuration.from_json(blob)
    assert again == cfg and p2 == p
    assert again.to_json(params=p2) == blob


def test_json_rejects_unknown_schema():
    with pytest.raises(ValueError):
        Configuration.from_json('{"schema": 99}')


def test_line_roundtrip():
    text = "0012210211"
    assert Configuration.from_line(text).to_line() == text
