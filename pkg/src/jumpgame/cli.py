"""Command-line front end.

Usage::

    jumpgame COMMAND [--config run.yaml] [--set key.path=value ...] [--out DIR] [--threads N]

The run configuration is a YAML document with the sections ``problem``,
``grid``, ``scheme``, ``levy``, ``mc`` and one optional section per command
(``solve``, ``isaacs``, ``simulate``, ``payoff``, ``value_pi``, ``dpp``,
``verify``, ``moments``, ``audit``).  ``--set`` overrides any key by dotted
path; its value is parsed as YAML.  Every run writes ``COMMAND.manifest``
holding the fully resolved configuration; passing that file back through
``--config`` reproduces the outputs byte for byte.

Exit status: 0 on success, 2 when the configuration is invalid, 1 on any
other error.
"""

from __future__ import annotations

import argparse
import copy
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np
import yaml

from . import io
from .analysis import Partition, dpp_residual, refinement_error, verify_pair, vpi_convergence
from .errors import ConfigError, QuadratureError
from .grid import SpatialGrid
from .hamiltonian import isaacs_gap, random_jet_samples
from .levy import DEFAULT_CUTOFF, DEFAULT_NODE_BUDGET, build_quadrature
from .model import audit_assumptions, build_problem, resolve_problem_config
from .simulator import (FeedbackPolicy, estimate_payoff, feedback_from_grid, moment_scaling_check,
                        simulate_paths)
from .solver import SchemeConfig, regularity_report, solve_terminal_value, with_choice

COMMANDS = ("solve", "isaacs-check", "simulate", "payoff", "value-pi", "dpp-check", "verify",
            "moments", "audit")
STOCHASTIC = {"simulate", "payoff", "verify", "moments"}
NEEDS_GRID = {"solve", "value-pi", "dpp-check", "verify"}

DEFAULTS = {
    "scheme": {"cfl_safety": 0.9, "dt_max": None, "hamiltonian_choice": "plus"},
    "levy": {"cutoff": DEFAULT_CUTOFF, "node_budget": DEFAULT_NODE_BUDGET},
    "mc": {"n_paths": 1000, "dt": 0.01},
    "solve": {"slices": 11},
    "isaacs": {"n_samples": 1000, "rng_seed": 0, "box": 3.0},
    "simulate": {"t0": 0.0, "x0": None, "n_paths": 10, "policy": {"y": None, "z": None}},
    "payoff": {"t0": 0.0, "x0": None, "policy": {"y": None, "z": None}},
    "value_pi": {"blocks": [4, 8, 16], "margin": None},
    "dpp": {"tau": None, "n_blocks": None},
    "verify": {"t0": 0.0, "x0": None, "policy": {"y": "feedback", "z": "feedback"},
               "scheme_error": "auto"},
    "moments": {"t0": 0.0, "x0": None, "horizons": [0.015625, 0.03125, 0.0625, 0.125, 0.25],
                "steps": 8},
    "audit": {"sample_budget": 1000, "rng_seed": 0, "k_max": 10.0, "box": 50.0},
}
SECTION = {"solve": "solve", "isaacs-check": "isaacs", "simulate": "simulate", "payoff": "payoff",
           "value-pi": "value_pi", "dpp-check": "dpp", "verify": "verify", "moments": "moments",
           "audit": "audit"}


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:  # pragma: no cover
        return "0+unknown"


# -- configuration -----------------------------------------------------------

def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def apply_override(config: dict, assignment: str) -> None:
    key, sep, raw = assignment.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {assignment!r} is not of the form key.path=value", "--set")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value {raw!r}: {exc}", key) from None
    node = config
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError("cannot set a key below a non-section value", key)
    node[parts[-1]] = value


def resolve_config(command: str, raw: dict) -> dict:
    """Fill defaults and check the sections ``command`` needs."""
    raw = {k: v for k, v in raw.items() if k not in ("command", "version")}
    for key, value in raw.items():
        if value is not None and not isinstance(value, dict):
            raise ConfigError("expected a section (mapping)", key)
    if "problem" not in raw:
        raise ConfigError("missing section", "problem")
    if not raw["problem"]:
        raise ConfigError("empty section", "problem")
    cfg = {"problem": resolve_problem_config(raw["problem"])}
    for name in ("scheme", "levy"):
        cfg[name] = _merge(DEFAULTS[name], raw.get(name) or {})
    section = SECTION[command]
    cfg[section] = _merge(DEFAULTS[section], raw.get(section) or {})
    if command in STOCHASTIC:
        mc = _merge(DEFAULTS["mc"], raw.get("mc") or {})
        if mc.get("seed") is None:
            raise ConfigError("a seed is required for stochastic commands", "mc.seed")
        if not isinstance(mc["seed"], int) or mc["seed"] < 0:
            raise ConfigError("seed must be a non-negative integer", "mc.seed")
        cfg["mc"] = mc
    if command in NEEDS_GRID or "grid" in raw:
        grid = raw.get("grid")
        if not grid:
            raise ConfigError(f"command {command!r} needs a grid section", "grid")
        for key in ("lower", "upper", "dx"):
            if key not in grid:
                raise ConfigError("missing key", f"grid.{key}")
        cfg["grid"] = copy.deepcopy(grid)
    return cfg


class Run:
    """Objects built from a resolved configuration."""

    def __init__(self, command: str, cfg: dict):
        self.command, self.cfg = command, cfg
        self.problem = build_problem(cfg["problem"])
        lv = cfg["levy"]
        try:
            self.quadrature = build_quadrature(self.problem.levy, cutoff=float(lv["cutoff"]),
                                               node_budget=int(lv["node_budget"]))
        except QuadratureError as exc:
            raise ConfigError(str(exc), "levy.cutoff") from None
        sc = cfg["scheme"]
        self.scheme = SchemeConfig(cfl_safety=float(sc["cfl_safety"]),
                                   dt_max=None if sc["dt_max"] is None else float(sc["dt_max"]),
                                   hamiltonian_choice=str(sc["hamiltonian_choice"]))
        self.grid = None
        if "grid" in cfg:
            g = cfg["grid"]
            if len(np.atleast_1d(g["lower"])) != self.problem.dim:
                raise ConfigError(f"grid bounds need {self.problem.dim} components", "grid.lower")
            self.grid = SpatialGrid.uniform(g["lower"], g["upper"], g["dx"])
        self._vg = None

    @property
    def section(self) -> dict:
        return self.cfg[SECTION[self.command]]

    def value_grid(self):
        if self._vg is None:
            if self.grid is None:
                raise ConfigError("feedback policies need a grid section", "grid")
            self._vg = solve_terminal_value(self.problem, self.grid, self.quadrature, self.scheme)
        return self._vg

    def start(self):
        sec = self.section
        t0 = float(sec.get("t0", 0.0))
        x0 = sec.get("x0")
        x0 = np.zeros(self.problem.dim) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
        key = SECTION[self.command]
        if x0.shape != (self.problem.dim,):
            raise ConfigError(f"x0 needs {self.problem.dim} components", f"{key}.x0")
        if not 0.0 <= t0 < self.problem.horizon:
            raise ConfigError(f"t0 must lie in [0, {self.problem.horizon})", f"{key}.t0")
        return t0, x0

    def policy(self, player: str, spec):
        controls = self.problem.control_grid_y if player == "minimizer" else self.problem.control_grid_z
        key = f"{SECTION[self.command]}.policy.{'y' if player == 'minimizer' else 'z'}"
        if spec is None:
            return FeedbackPolicy.constant_control(player, controls[0], controls)
        if spec == "feedback":
            return feedback_from_grid(self.value_grid(), player, self.problem, self.quadrature)
        try:
            return FeedbackPolicy.constant_control(player, float(spec), controls)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), key) from None


# -- commands ----------------------------------------------------------------

def _cmd_solve(run: Run, out: Path) -> list:
    vg = solve_terminal_value(run.problem, run.grid, run.quadrature, run.scheme)
    n = int(run.section["slices"])
    idx = np.unique(np.round(np.linspace(0, len(vg.times) - 1, max(2, n))).astype(int))
    io.write_value_grid_csv(vg, out / "value.csv", idx)
    io.write_slice_dat(vg, 0, out / "value_t0.dat")
    reg = regularity_report(vg)
    io.write_report(out / "solve.report", {
        "steps": len(vg.times) - 1, "dt": float(vg.times[-1] - vg.times[-2]),
        "nodes": run.grid.size, "boundary_margin": vg.boundary_margin,
        "lip_x": reg.lip_x, "holder_t": reg.holder_t,
        "problem_fingerprint": vg.problem_fingerprint, "scheme_fingerprint": vg.scheme_fingerprint,
    })
    return ["value.csv", "value_t0.dat", "solve.report"]


def _cmd_isaacs(run: Run, out: Path) -> list:
    sec = run.section
    rng = np.random.default_rng(int(sec["rng_seed"]))
    samples = random_jet_samples(run.problem, int(sec["n_samples"]), rng, box=float(sec["box"]))
    gap = isaacs_gap(run.problem, run.quadrature, samples)
    io.write_report(out / "isaacs.report", {"gap": gap, "n_samples": len(samples),
                                            "isaacs_condition": gap <= 1e-12})
    return ["isaacs.report"]


def _cmd_simulate(run: Run, out: Path) -> list:
    t0, x0 = run.start()
    mc, sec = run.cfg["mc"], run.section
    py = run.policy("minimizer", sec["policy"]["y"])
    pz = run.policy("maximizer", sec["policy"]["z"])
    paths = simulate_paths(run.problem, run.quadrature, py, pz, t0, x0, float(mc["dt"]),
                           int(mc["seed"]), range(int(sec["n_paths"])))
    io.write_paths(out / "simulate.paths", paths)
    payoffs = [p.payoff for p in paths]
    io.write_report(out / "simulate.report", {
        "n_paths": len(paths), "seed": int(mc["seed"]), "mean_payoff": float(np.mean(payoffs)),
        "total_jumps": int(sum(len(p.jumps) for p in paths)),
    })
    return ["simulate.paths", "simulate.report"]


def _cmd_payoff(run: Run, out: Path) -> list:
    t0, x0 = run.start()
    mc, sec = run.cfg["mc"], run.section
    py = run.policy("minimizer", sec["policy"]["y"])
    pz = run.policy("maximizer", sec["policy"]["z"])
    est = estimate_payoff(run.problem, run.quadrature, py, pz, t0, x0, float(mc["dt"]),
                          int(mc["n_paths"]), int(mc["seed"]))
    io.write_report(out / "payoff.report", {"mean": est.mean, "std_error": est.std_error,
                                            "n_paths": est.n_paths, "seed": est.seed})
    return ["payoff.report"]


def _cmd_value_pi(run: Run, out: Path) -> list:
    T = run.problem.horizon
    parts = [Partition.uniform(T, int(n)) for n in run.section["blocks"]]
    margin = run.section["margin"]
    errors = vpi_convergence(run.problem, run.quadrature, parts, run.grid, run.scheme,
                             margin=None if margin is None else float(margin))
    rows = [(p.norm, e) for p, e in zip(parts, errors)]
    io.write_sequence_csv(out / "vpi.csv", ["norm", "error"], rows)
    io.write_columns(out / "vpi.dat", ["norm", "error"], rows)
    return ["vpi.csv", "vpi.dat"]


def _cmd_dpp(run: Run, out: Path) -> list:
    T = run.problem.horizon
    tau = run.section["tau"]
    tau = 0.5 * T if tau is None else float(tau)
    if not 0 < tau < T:
        raise ConfigError("tau must lie strictly inside (0, horizon)", "dpp.tau")
    vg = solve_terminal_value(run.problem, run.grid, run.quadrature, run.scheme, checkpoints=[tau])
    nb = run.section["n_blocks"]
    res = dpp_residual(run.problem, run.quadrature, vg, tau, run.grid, run.scheme,
                       n_blocks=None if nb is None else int(nb))
    io.write_report(out / "dpp.report", {"tau": tau, "residual": res,
                                         "boundary_margin": vg.boundary_margin})
    return ["dpp.report"]


def _cmd_verify(run: Run, out: Path) -> list:
    t0, x0 = run.start()
    mc, sec = run.cfg["mc"], run.section
    vg_u = run.value_grid()
    other = "minus" if run.scheme.hamiltonian_choice == "plus" else "plus"
    vg_v = solve_terminal_value(run.problem, run.grid, run.quadrature, with_choice(run.scheme, other))
    py = run.policy("minimizer", sec["policy"]["y"])
    pz = run.policy("maximizer", sec["policy"]["z"])
    err = sec["scheme_error"]
    if err == "auto":
        err = refinement_error(run.problem, run.quadrature, run.grid, run.scheme, x=x0, t=t0)
    report = verify_pair(run.problem, run.quadrature, vg_u, vg_v, py, pz, t0, x0,
                         int(mc["n_paths"]), float(mc["dt"]), int(mc["seed"]),
                         scheme_error=float(err))
    io.write_report(out / "verify.report", report.to_dict())
    return ["verify.report"]


def _cmd_moments(run: Run, out: Path) -> list:
    t0, x0 = run.start()
    mc, sec = run.cfg["mc"], run.section
    res = moment_scaling_check(run.problem, run.quadrature, t0, x0, sec["horizons"],
                               int(mc["n_paths"]), int(mc["seed"]), steps=int(sec["steps"]))
    rows = [(h, m, r) for h, m, r in zip(res.horizons, res.means, res.ratios)]
    io.write_sequence_csv(out / "moments.csv", ["horizon", "mean_abs_increment", "ratio"], rows)
    io.write_report(out / "moments.report", {"slope": res.slope, "seed": int(mc["seed"]),
                                             "max_ratio": max(res.ratios)})
    return ["moments.csv", "moments.report"]


def _cmd_audit(run: Run, out: Path) -> list:
    sec = run.section
    rep = audit_assumptions(run.problem, sample_budget=int(sec["sample_budget"]),
                            rng_seed=int(sec["rng_seed"]), k_max=float(sec["k_max"]),
                            box=float(sec["box"]), quadrature=run.quadrature)
    items = {f"lipschitz.{k}": v for k, v in rep.lipschitz_estimates.items()}
    items.update({f"bound.{k}": v for k, v in rep.bound_estimates.items()})
    items.update({"eta_small_jump_ratio": rep.eta_small_jump_ratio, "a3_integral": rep.a3_integral,
                  "k_max": rep.k_max})
    items.update({f"pass.{k}": v for k, v in rep.passed.items()})
    items["pass_all"] = rep.pass_all
    io.write_report(out / "audit.report", items)
    return ["audit.report"]


HANDLERS = {"solve": _cmd_solve, "isaacs-check": _cmd_isaacs, "simulate": _cmd_simulate,
            "payoff": _cmd_payoff, "value-pi": _cmd_value_pi, "dpp-check": _cmd_dpp,
            "verify": _cmd_verify, "moments": _cmd_moments, "audit": _cmd_audit}


def run(command: str, config: dict, out: Path, threads: int = 1) -> list:
    """Resolve ``config``, execute ``command`` and write outputs plus manifest into ``out``."""
    if command not in HANDLERS:
        raise ConfigError(f"unknown command {command!r}; choose from {list(COMMANDS)}", "command")
    cfg = resolve_config(command, config)
    job = Run(command, cfg)
    out.mkdir(parents=True, exist_ok=True)
    files = HANDLERS[command](job, out)
    manifest = dict(cfg, command=command, version=tool_version())
    io.write_manifest(out / f"{command}.manifest", manifest)
    return files + [f"{command}.manifest"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jumpgame", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="YAML run configuration or a previous manifest")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key by dotted path (repeatable)")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap (the library is vectorised and runs single-threaded)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("must be at least 1", "--threads")
        config = {}
        if args.config is not None:
            try:
                config = io.load_yaml(args.config)
            except (OSError, yaml.YAMLError) as exc:
                raise ConfigError(f"cannot read config: {exc}", "--config") from None
            if not isinstance(config, dict):
                raise ConfigError("config must be a mapping", "--config")
        for assignment in args.overrides:
            apply_override(config, assignment)
        files = run(args.command, config, args.out, args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the exit status contract needs a catch-all
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for name in files:
        print(args.out / name)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
