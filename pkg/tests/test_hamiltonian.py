import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jumpgame.grid import SpatialGrid
from jumpgame.hamiltonian import (GridField, Jet, SmoothField, h_minus, h_plus, isaacs_gap,
                                  local_operator, nonlocal_hessian_oracle, nonlocal_operator,
                                  random_jet_samples)
from jumpgame.levy import LevyMeasureSpec, build_quadrature
from jumpgame.model import PRESETS, build_problem

PURE_JUMP = build_problem({"preset": "pure-jump"})
PURE_JUMP_Q = build_quadrature(PURE_JUMP.levy)
SQUARE = SmoothField.quadratic([[1.0]])


def _quad(problem):
    return build_quadrature(problem.levy)


def test_jet_requires_symmetry():
    Jet(0.0, np.zeros(2), np.array([[1.0, 0.5], [0.5, 2.0]]))
    with pytest.raises(ValueError):
        Jet(0.0, np.zeros(2), np.array([[1.0, 0.5], [0.4, 2.0]]))


def test_local_operator_examples():
    null = build_problem({"preset": "null"})
    assert local_operator(null, 0.0, [1.0], [3.0], [[2.0]], 0.0, 0.0) == 0.0
    sd = build_problem({"preset": "sine-diffusion"})
    assert local_operator(sd, 0.0, [0.3], [9.0], [[-1.0]], 0.0, 0.0) == pytest.approx(-0.125)
    tw = build_problem({"preset": "tug-of-war-drift"})
    assert local_operator(tw, 0.0, [0.3], [2.0], [[0.0]], 1.0, 1.0) == pytest.approx(4.0)


def test_nonlocal_examples():
    null = build_problem({"preset": "null"})
    assert nonlocal_operator(null, _quad(null), 0.0, [0.5], SmoothField.sine([1.0]), 0.0, 0.0) == 0.0
    affine = SmoothField.affine([2.5], 1.0)
    assert abs(nonlocal_operator(PURE_JUMP, PURE_JUMP_Q, 0.0, [0.7], affine, 0.0, 0.0)) < 1e-12
    for x in (-1.0, 0.0, 2.3):
        assert nonlocal_operator(PURE_JUMP, PURE_JUMP_Q, 0.0, [x], SQUARE, 0.0, 0.0) == pytest.approx(2.0)


def test_oracle_examples():
    null = build_problem({"preset": "null"})
    assert nonlocal_hessian_oracle(null, _quad(null), 0.0, [0.5], SQUARE, 0.0, 0.0) == 0.0
    assert nonlocal_hessian_oracle(PURE_JUMP, PURE_JUMP_Q, 0.0, [1.3], SQUARE, 0.0, 0.0) == pytest.approx(2.0)
    x = np.linspace(-3, 3, 13)[:, None]
    sine = SmoothField.sine([1.0], phase=0.3)
    direct = nonlocal_operator(PURE_JUMP, PURE_JUMP_Q, 0.0, x, sine, 0.0, 0.0)
    oracle = nonlocal_hessian_oracle(PURE_JUMP, PURE_JUMP_Q, 0.0, x, sine, 0.0, 0.0)
    assert np.max(np.abs(direct - oracle)) < 1e-8


def test_oracle_needs_enough_gauss_points():
    with pytest.raises(ValueError):
        nonlocal_hessian_oracle(PURE_JUMP, PURE_JUMP_Q, 0.0, [0.0], SQUARE, 0.0, 0.0, n_gauss=16)


@pytest.mark.parametrize("preset", sorted(PRESETS))
def test_nonlocal_kills_affine_fields(preset):
    p = build_problem({"preset": preset})
    q = _quad(p)
    rng = np.random.default_rng(1)
    x = rng.uniform(-3, 3, size=(20, p.dim))
    field = SmoothField.affine(rng.normal(size=p.dim), 0.4)
    for y in p.control_grid_y:
        for z in p.control_grid_z:
            assert np.max(np.abs(nonlocal_operator(p, q, 0.3, x, field, y, z))) < 1e-10


@pytest.mark.parametrize("field", [
    SmoothField.quadratic([[1.5]], slope=[0.2]),
    SmoothField.sine([1.3], phase=0.4),
    SmoothField.gaussian_bump([0.3], width=0.8),
], ids=["quadratic", "sine", "bump"])
def test_direct_matches_hessian_oracle(field):
    p = build_problem({"preset": "separable-jump"})
    q = build_quadrature(p.levy, cutoff=1e-2, node_budget=64)
    x = np.linspace(-2, 2, 9)[:, None]
    direct = nonlocal_operator(p, q, 0.0, x, field, 1.0, 0.5)
    oracle = nonlocal_hessian_oracle(p, q, 0.0, x, field, 1.0, 0.5)
    assert np.max(np.abs(direct - oracle)) < 1e-6


def test_singleton_grids_have_no_optimisation():
    sd = build_problem({"preset": "sine-diffusion"})
    q = _quad(sd)
    field = SmoothField.sine([1.0])
    plus = h_plus(sd, q, 0.0, [0.2], [0.5], [[-1.0]], field)
    minus = h_minus(sd, q, 0.0, [0.2], [0.5], [[-1.0]], field)
    assert plus.value == minus.value == pytest.approx(-0.125)
    assert (plus.y, plus.z) == (0.0, 0.0)


def test_tug_of_war_cancellation():
    tw = build_problem({"preset": "tug-of-war-drift"})
    q = _quad(tw)
    field = SmoothField.sine([1.0])
    plus = h_plus(tw, q, 0.0, [0.0], [1.0], [[0.0]], field)
    minus = h_minus(tw, q, 0.0, [0.0], [1.0], [[0.0]], field)
    assert plus.value == 0.0 and minus.value == 0.0
    assert plus.y == -1.0 and plus.z == 1.0


def test_ties_break_to_lowest_index():
    tw = build_problem({"preset": "tug-of-war-drift"})
    s = h_plus(tw, _quad(tw), 0.0, [0.0], [0.0], [[0.0]], SmoothField.sine([1.0]))
    assert (s.iy, s.iz) == (0, 0)


def test_isaacs_gap_examples():
    rng = np.random.default_rng(3)
    for preset in ("separable-jump", "tug-of-war-drift", "separable-2d"):
        p = build_problem({"preset": preset})
        assert isaacs_gap(p, _quad(p), random_jet_samples(p, 50, rng)) <= 1e-12
    sd = build_problem({"preset": "sine-diffusion"})
    assert isaacs_gap(sd, _quad(sd), random_jet_samples(sd, 20, rng)) == 0.0
    cp = build_problem({"preset": "coupled-product"})
    sample = [(0.0, np.zeros(1), np.ones(1), np.zeros((1, 1)), SmoothField.affine([1.0]))]
    assert isaacs_gap(cp, _quad(cp), sample) == 2.0
    with pytest.raises(ValueError):
        isaacs_gap(cp, _quad(cp), [])


@settings(max_examples=40, deadline=None)
@given(preset=st.sampled_from(sorted(PRESETS)), seed=st.integers(0, 10 ** 6))
def test_maximin_never_exceeds_minimax(preset, seed):
    p = build_problem({"preset": preset})
    q = build_quadrature(p.levy, node_budget=16)
    for t, x, qv, A, field in random_jet_samples(p, 3, np.random.default_rng(seed)):
        assert h_minus(p, q, t, x, qv, A, field).value <= h_plus(p, q, t, x, qv, A, field).value + 1e-12


@settings(max_examples=40, deadline=None)
@given(preset=st.sampled_from(sorted(PRESETS)), seed=st.integers(0, 10 ** 6))
def test_degenerate_ellipticity(preset, seed):
    p = build_problem({"preset": preset})
    q = build_quadrature(p.levy, node_budget=16)
    rng = np.random.default_rng(seed)
    d = p.dim
    x, qv = rng.uniform(-2, 2, d), rng.normal(size=d)
    A1 = np.diag(rng.normal(size=d))
    A2 = A1 + np.diag(rng.uniform(0, 2, size=d))
    field = SmoothField.sine(rng.normal(size=d))
    for h in (h_plus, h_minus):
        assert h(p, q, 0.1, x, qv, A1, field).value <= h(p, q, 0.1, x, qv, A2, field).value + 1e-12


def test_grid_field_clamps_and_differentiates():
    grid = SpatialGrid.uniform(-np.pi, np.pi, 0.01)
    gf = GridField(grid, np.sin(grid.points[:, 0]))
    assert gf.value([[10.0]])[0] == pytest.approx(np.sin(np.pi), abs=1e-12)
    x = np.array([[0.3], [1.1]])
    assert np.allclose(gf.gradient(x)[:, 0], np.cos(x[:, 0]), atol=1e-3)
    assert np.allclose(gf.hessian(x)[:, 0, 0], -np.sin(x[:, 0]), atol=1e-3)


def test_grid_field_hessian_2d_mixed():
    grid = SpatialGrid.uniform([-2, -2], [2, 2], 0.02)
    pts = grid.points
    gf = GridField(grid, pts[:, 0] * pts[:, 1] + pts[:, 0] ** 2)
    H = gf.hessian(np.array([[0.31, -0.47]]))[0]
    assert np.allclose(H, [[2.0, 1.0], [1.0, 0.0]], atol=1e-8)


def test_two_dimensional_jump_quadrature():
    p = build_problem({"preset": "null", "dim": 2, "jump": {"id": "linear", "params": [0.5]},
                       "levy": {"kind": "atomic", "jump_dim": 2,
                                "atoms": [[[1.0, 0.0], 1.0], [[0.3, -0.4], 2.0]]}})
    q = build_quadrature(p.levy)
    field = SmoothField.quadratic([[1.0, 0.2], [0.2, 2.0]])
    x = np.array([[0.1, 0.2], [1.0, -1.0]])
    assert np.allclose(nonlocal_operator(p, q, 0.0, x, field, 0.0, 0.0),
                       nonlocal_hessian_oracle(p, q, 0.0, x, field, 0.0, 0.0), atol=1e-12)
