import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jumpgame.errors import ConfigError, QuadratureError
from jumpgame.levy import (LevyMeasureSpec, a3_integral, build_quadrature, compensator_drift,
                           sample_jump_counts, sample_jumps)
from jumpgame.model import build_problem

EXP = LevyMeasureSpec(kind="exponential-density", intensity=1.0, rate=1.0)
EXP_BOTH = LevyMeasureSpec(kind="exponential-density", intensity=0.7, rate=2.0, sides="both")
POWER = LevyMeasureSpec(kind="power-density-truncated", intensity=0.5, alpha=1.5, radius=2.0)
ATOMS = LevyMeasureSpec(kind="atomic", atoms=(((0.5,), 1.0), ((3.0,), 1.0), ((-0.02,), 4.0)))
SPECS = [EXP, EXP_BOTH, POWER, ATOMS]


def test_single_atom_is_copied():
    q = build_quadrature(LevyMeasureSpec(kind="atomic", atoms=(((1.0,), 2.0),)), cutoff=0.1)
    assert len(q) == 1
    assert q.nodes[0, 0] == 1.0 and q.weights[0] == 2.0
    assert q.total_mass == 2.0 and q.compensator_mean[0] == 2.0


def test_atom_below_cutoff_is_rejected():
    spec = LevyMeasureSpec(kind="atomic", atoms=(((0.05,), 5.0),))
    with pytest.raises(QuadratureError):
        build_quadrature(spec, cutoff=0.1)


def test_exponential_mass_matches_closed_form():
    q = build_quadrature(EXP, cutoff=0.1, node_budget=64)
    assert abs(q.total_mass - math.exp(-0.1)) <= 0.01 * math.exp(-0.1)
    assert np.all(q.weights > 0) and np.all(np.abs(q.nodes) >= 0.1)


@pytest.mark.parametrize("spec", SPECS)
@pytest.mark.parametrize("cutoff", [1e-1, 1e-2, 1e-3, 1e-4])
def test_quadrature_never_overshoots_a3(spec, cutoff):
    q = build_quadrature(spec, cutoff=cutoff)
    norms = np.linalg.norm(q.nodes, axis=1)
    assert np.all(norms >= cutoff)
    approx = float(q.weights @ np.minimum(norms ** 2, 1.0))
    assert approx <= a3_integral(spec) + q.truncation_bound + 1e-12


@pytest.mark.parametrize("spec", SPECS)
def test_cutoff_monotonicity(spec):
    cutoffs = [0.2, 0.1, 0.05, 0.025, 0.0125]
    quads = [build_quadrature(spec, cutoff=c) for c in cutoffs]
    for coarse, fine in zip(quads, quads[1:]):
        assert fine.total_mass >= coarse.total_mass - 1e-12
        assert fine.truncation_bound <= coarse.truncation_bound + 1e-15


@pytest.mark.parametrize("spec", [EXP, EXP_BOTH, POWER])
def test_truncation_bound_vanishes(spec):
    bounds = [build_quadrature(spec, cutoff=c).truncation_bound for c in (1e-2, 1e-4, 1e-6, 1e-10)]
    assert bounds[-1] < 1e-3 * bounds[0] and bounds[0] > bounds[1] > bounds[2] > bounds[3]


def test_power_truncation_bound_closed_form():
    # intensity * ∫_0^eps w^{-0.5} dw
    q = build_quadrature(POWER, cutoff=1e-4)
    assert q.truncation_bound == pytest.approx(0.5 * 2 * math.sqrt(1e-4), rel=1e-12)


def test_a3_closed_forms():
    assert a3_integral(ATOMS) == pytest.approx(1.0 * 0.25 + 1.0 + 4.0 * 0.0004)
    # ∫_0^1 w² e^{-w} dw + ∫_1^∞ e^{-w} dw
    exact = 2 - 5 / math.e + 1 / math.e
    assert a3_integral(EXP) == pytest.approx(exact, rel=1e-12)
    # 0.5 * (∫_0^1 w^{-0.5} dw + ∫_1^2 w^{-2.5} dw)
    assert a3_integral(POWER) == pytest.approx(0.5 * (2 + (1 - 2 ** -1.5) / 1.5), rel=1e-12)


@pytest.mark.parametrize("kwargs", [
    {"kind": "levy-flight"},
    {"kind": "power-density-truncated", "alpha": 2.0},
    {"kind": "power-density-truncated", "alpha": 0.0},
    {"kind": "atomic", "atoms": ()},
    {"kind": "atomic", "atoms": (((0.0,), 1.0),)},
    {"kind": "exponential-density", "jump_dim": 2},
])
def test_invalid_specs(kwargs):
    with pytest.raises(ConfigError):
        LevyMeasureSpec(**kwargs)


def test_bad_cutoff_and_budget():
    with pytest.raises(ConfigError):
        build_quadrature(EXP, cutoff=0.0)
    with pytest.raises(ConfigError):
        build_quadrature(EXP, node_budget=0)


def test_vanishing_intensity_gives_no_events():
    q = build_quadrature(LevyMeasureSpec(kind="atomic", atoms=(((1.0,), 1e-12),)))
    rng = np.random.default_rng(0)
    assert all(sample_jumps(q, 0.0, 1.0, rng) == [] for _ in range(100))


def test_jump_counts_mean():
    q = build_quadrature(LevyMeasureSpec(kind="atomic", atoms=(((1.0,), 2.0),)))
    counts = sample_jump_counts(q, 0.0, 1.0, np.random.default_rng(11), 10 ** 6)
    assert 1.99 <= counts.mean() <= 2.01


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), dt=st.floats(0.01, 2.0))
def test_event_count_mean_test(seed, dt):
    q = build_quadrature(EXP_BOTH, cutoff=0.01)
    trials = 4000
    counts = sample_jump_counts(q, 0.0, dt, np.random.default_rng(seed), trials)
    lam = q.total_mass * dt
    assert abs(counts.mean() - lam) <= 4 * math.sqrt(lam / trials) + 1e-12 or lam * trials < 1


def test_sample_jumps_is_deterministic_and_sorted():
    q = build_quadrature(EXP_BOTH, cutoff=0.01)
    a = sample_jumps(q, 0.2, 3.0, np.random.default_rng(5))
    b = sample_jumps(q, 0.2, 3.0, np.random.default_rng(5))
    assert a == b and len(a) > 0
    times = [e.time for e in a]
    assert times == sorted(times) and all(0.2 < s <= 3.0 for s in times)
    assert all(abs(e.mark[0]) >= q.cutoff for e in a)


def test_sample_jumps_needs_ordered_times():
    q = build_quadrature(EXP)
    with pytest.raises(ValueError):
        sample_jumps(q, 1.0, 1.0, np.random.default_rng(0))


def test_compensator_drift_examples():
    null = build_problem({"preset": "null"})
    q = build_quadrature(null.levy)
    assert np.all(compensator_drift(q, null, 0.0, [0.3], 0.0, 0.0) == 0.0)

    pj = build_problem({"preset": "pure-jump"})
    q = build_quadrature(pj.levy)
    assert compensator_drift(q, pj, 0.0, [0.3], 0.0, 0.0)[0] == 2.0

    sat = build_problem({"preset": "null", "jump": {"id": "saturated", "params": [1.0]},
                         "levy": {"kind": "atomic", "atoms": [[[0.5], 1.0], [[3.0], 1.0]]}})
    q = build_quadrature(sat.levy)
    assert compensator_drift(q, sat, 0.0, [2.0], 0.0, 0.0)[0] == pytest.approx(1.5)
    many = compensator_drift(q, sat, 0.0, np.zeros((4, 1)), 0.0, 0.0)
    assert many.shape == (4, 1) and np.allclose(many, 1.5)


def test_quadrature_arrays_are_read_only():
    q = build_quadrature(EXP)
    with pytest.raises(ValueError):
        q.weights[0] = 1.0
