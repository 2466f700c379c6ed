import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jumpgame.coefficients import CoefficientSpec, REGISTRIES
from jumpgame.errors import ArityError, ConfigError, UnknownPresetError
from jumpgame.levy import build_quadrature
from jumpgame.model import PRESETS, audit_assumptions, build_problem, eval_coefficients


def test_null_preset_is_valid():
    p = build_problem({"preset": "null"})
    assert p.dim == 1 and p.horizon == 1.0
    assert p.control_grid_y == (0.0,) and p.control_grid_z == (0.0,)
    assert float(p.terminal_field(np.array([[3.0]]))[0]) == 0.0


def test_sine_diffusion_preset():
    p = build_problem({"preset": "sine-diffusion"})
    s = eval_coefficients(p, 0.3, [1.2], 0.0, 0.0)
    assert s.sigma[0, 0] == 0.5 and s.b[0] == 0.0 and s.f == 0.0
    assert s.g == pytest.approx(math.sin(1.2))
    assert p.n_pairs == 1


def test_tug_of_war_drift():
    p = build_problem({"preset": "tug-of-war-drift"})
    assert p.control_grid_y == (-1.0, -0.5, 0.0, 0.5, 1.0)
    s = eval_coefficients(p, 0.0, [0.4], 1.0, -0.5)
    assert s.b[0] == 0.5


def test_null_eval_is_zero():
    p = build_problem({"preset": "null"})
    s = eval_coefficients(p, 0.5, [7.0], 0.0, 0.0)
    assert s.b[0] == 0.0 and s.sigma[0, 0] == 0.0 and s.f == 0.0
    assert np.all(s.eta_at([1.0]) == 0.0)


@pytest.mark.parametrize("config, error", [
    ({"preset": "no-such-game"}, UnknownPresetError),
    ({"preset": "null", "drift": {"id": "warp", "params": []}}, UnknownPresetError),
    ({"preset": "null", "drift": {"id": "constant", "params": [1.0, 2.0]}}, ArityError),
    ({"preset": "null", "horizon": 0.0}, ConfigError),
    ({"preset": "null", "horizon": -1.0}, ConfigError),
    ({"preset": "null", "controls": {"y": [], "z": [0.0]}}, ConfigError),
])
def test_build_problem_rejects(config, error):
    with pytest.raises(error):
        build_problem(config)


def test_config_error_names_key():
    with pytest.raises(ArityError) as info:
        build_problem({"preset": "null", "terminal": {"id": "sine", "params": [1.0]}})
    assert info.value.key == "problem.terminal.params"
    assert "problem.terminal.params" in str(info.value)


def test_eval_rejects_bad_inputs():
    p = build_problem({"preset": "tug-of-war-drift"})
    with pytest.raises(ValueError):
        eval_coefficients(p, 1.5, [0.0], 0.0, 0.0)
    with pytest.raises(ValueError):
        eval_coefficients(p, 0.5, [0.0], 0.25, 0.0)


@pytest.mark.parametrize("preset", sorted(PRESETS))
def test_presets_build_and_have_right_shapes(preset):
    p = build_problem({"preset": preset})
    d = p.dim
    x = np.random.default_rng(0).uniform(-3, 3, size=(5, d))
    y, z = p.control_grid_y[-1], p.control_grid_z[0]
    assert p.drift_field(0.0, x, y, z).shape == (5, d)
    assert p.diffusion_field(0.0, x, y, z).shape == (5, d, d)
    assert p.jump_field(0.0, x, y, z, np.ones((3, p.levy.jump_dim))).shape == (3, 5, d)
    assert p.cost_field(0.0, x, y, z).shape == (5,)
    assert p.terminal_field(x).shape == (5,)


def test_eval_is_pure():
    p = build_problem({"preset": "separable-jump"})
    a = eval_coefficients(p, 0.2, [0.7], 1.0, 0.5)
    b = eval_coefficients(p, 0.2, [0.7], 1.0, 0.5)
    assert np.array_equal(a.b, b.b) and np.array_equal(a.sigma, b.sigma) and a.f == b.f
    assert np.array_equal(a.eta_at([0.3]), b.eta_at([0.3]))


@settings(max_examples=60, deadline=None)
@given(preset=st.sampled_from(sorted(PRESETS)),
       x1=st.floats(-20, 20), x2=st.floats(-20, 20), w=st.floats(-5, 5).filter(lambda v: abs(v) > 1e-6))
def test_sampled_quotients_respect_declared_lipschitz(preset, x1, x2, w):
    p = build_problem({"preset": preset})
    if p.dim != 1 or x1 == x2:
        return
    a, b = np.array([[x1]]), np.array([[x2]])
    dist = abs(x1 - x2)
    for y in p.control_grid_y:
        for z in p.control_grid_z:
            pairs = {
                "drift": (p.drift_field(0.0, a, y, z), p.drift_field(0.0, b, y, z), 1.0),
                "diffusion": (p.diffusion_field(0.0, a, y, z), p.diffusion_field(0.0, b, y, z), 1.0),
                "running_cost": (p.cost_field(0.0, a, y, z), p.cost_field(0.0, b, y, z), 1.0),
                "jump": (p.jump_field(0.0, a, y, z, [[w]]), p.jump_field(0.0, b, y, z, [[w]]),
                         min(abs(w), 1.0)),
            }
            for role, (u, v, scale) in pairs.items():
                bound = getattr(p, role).lipschitz(1) * scale
                assert np.max(np.abs(u - v)) / dist <= bound + 1e-9
    g = np.abs(p.terminal_field(a) - p.terminal_field(b))[0] / dist
    assert g <= p.terminal.lipschitz(1) + 1e-9


def test_registry_arity_is_enforced_everywhere():
    for role, registry in REGISTRIES.items():
        for name, fam in registry.items():
            with pytest.raises(ArityError):
                CoefficientSpec(role, name, (0.0,) * (fam.arity + 1))


def test_audit_null_passes_with_zero_estimates():
    rep = audit_assumptions(build_problem({"preset": "null"}), sample_budget=50)
    assert rep.pass_all
    assert all(v == 0 for v in rep.lipschitz_estimates.values())
    assert all(v == 0 for v in rep.bound_estimates.values())
    assert rep.eta_small_jump_ratio == 0


def test_audit_sine_diffusion():
    rep = audit_assumptions(build_problem({"preset": "sine-diffusion"}), sample_budget=1000, k_max=2.0)
    assert rep.lipschitz_estimates["g"] <= 1 + 1e-6
    assert rep.pass_all


def test_audit_unbounded_terminal_fails():
    rep = audit_assumptions(build_problem({"preset": "linear-terminal"}), sample_budget=500, k_max=10.0)
    assert not rep.passed["A2"]
    assert rep.bound_estimates["g"] > 10.0


def test_audit_is_deterministic():
    p = build_problem({"preset": "separable-jump"})
    q = build_quadrature(p.levy)
    a = audit_assumptions(p, sample_budget=200, rng_seed=4, quadrature=q)
    b = audit_assumptions(p, sample_budget=200, rng_seed=4, quadrature=q)
    assert a == b
    assert all(v >= 0 for v in a.lipschitz_estimates.values())


def test_audit_needs_two_samples():
    with pytest.raises(ValueError):
        audit_assumptions(build_problem({"preset": "null"}), sample_budget=1)
