"""Config-driven experiments: one game, gamma sweeps and Monte-Carlo runs.

A config is a JSON object.  Every key is optional; a ``preset`` supplies the
base values and anything given explicitly overrides it::

    {
      "preset": "fig5",
      "scenario": {
        "dist_0": {"shape": 2, "rate": 2},        # or {"shape": 2, "mean": 1}
        "dist_1": {"shape": 2, "rate": 0.2},      # or omit and give "gamma"
        "gamma": 10,
        "params": {"n_attestors": 12, "threshold": 9, "attest_deadline": 4,
                   "aggregate_deadline": 8, "slot_len": 12},
        "valuation": {"slope_c": 0.25}
      },
      "grid": {"zeta": 0.05, "tau1": 4},
      "mode": "analytic",                         # analytic | monte-carlo | both
      "trials": 100000, "seed": 0, "output_dir": null,
      "strategy_pair": [0, 0],
      "eps": 1e-9,
      "quadrature": {"abs_tol": 1e-12, "rel_tol": 1e-10, "max_subdivisions": 200},
      "rows": [{"label": "a", "shape": 1.5, "rate": 5, "gammas": [0.5, 2]}]
    }

``grid.tau1`` and ``params.attest_deadline`` are the same quantity; giving
both with different values is an error.
"""

import copy
from dataclasses import dataclass, field
import json
import logging
import math
import time
from pathlib import Path

from . import __version__
from .delay import DelayDistribution, ProtocolParams, QuadratureConfig, is_peaked
from .game import StrategyGrid, build_matrix, find_psne, optimal_delay_xi
from .payoff import ScenarioSpec, ValuationModel, utility_2prop
from .serialize import (
    equilibrium_from_dict,
    equilibrium_to_dict,
    fmt,
    matrix_from_dict,
    matrix_to_csv,
    matrix_to_dict,
    spec_from_dict,
    spec_to_dict,
)
from .slot_sim import TWO_PROP, monte_carlo_utility
from .validation import DomainError

log = logging.getLogger(__name__)

__all__ = [
    "ConfigError",
    "SweepRow",
    "ExperimentConfig",
    "ExperimentReport",
    "SweepResult",
    "PRESETS",
    "TABLE2_D1",
    "TABLE2_D2",
    "validate_config",
    "run_experiment",
    "sweep_gamma",
    "sweep_to_csv",
    "write_report",
]

MODES = ("analytic", "monte-carlo", "both")

_GAMMAS_D2 = (0.05, 0.07, 0.11, 0.2, 0.4, 0.5, 0.6, 0.8, 1, 1.2, 1.4)
# (shape, rate, gammas) for proposer 0; proposer 1 uses rate / gamma
TABLE2_D1 = (
    (1.5, 5.0, (0.33, 0.5, 1, 2, 5, 10, 10.25, 10.5, 10.75, 11, 11.25, 11.5, 11.66,
                12.67, 13, 13.33, 13.67, 14)),
    (1.5, 2.5, (0.33, 0.5, 1, 2, 5, 5.2, 5.4, 5.6, 5.7, 5.83, 6, 6.2, 6.33, 6.5, 6.67,
                6.84, 7, 10)),
    (2.0, 2.0, (0.33, 0.5, 1, 2, 2.2, 2.4, 2.6, 2.8, 3, 3.3, 3.5, 3.6, 3.7, 3.8, 3.9, 4,
                4.1, 4.2, 5, 10)),
)
TABLE2_D2 = (
    (1.5, 0.394, _GAMMAS_D2),
    (1.5, 0.37, _GAMMAS_D2),
    (1.5, 0.35, _GAMMAS_D2),
)


def _rows(prefix, table):
    return [
        {"label": f"{prefix}-{k}", "shape": a, "rate": r, "gammas": list(gs)}
        for k, (a, r, gs) in enumerate(table)
    ]


_FIG5_SCENARIO = {"dist_0": {"shape": 2.0, "rate": 2.0}, "gamma": 10.0}

PRESETS = {
    "fig5": {"scenario": _FIG5_SCENARIO},
    # operating point at which the published figure values are reproduced
    "fig5-calibrated": {
        "scenario": {**_FIG5_SCENARIO, "params": {"threshold": 8},
                     "valuation": {"slope_c": 0.26}},
    },
    "homogeneous-mu": {"scenario": {"dist_0": {"shape": 2.0, "mean": 0.16}, "gamma": 1.0}},
    "D1-row": {"row": 0},
    "D2-row": {"row": 0},
    "table2": {"rows": _rows("D1", TABLE2_D1) + _rows("D2", TABLE2_D2)},
    "ethereum": {
        "scenario": {"dist_0": {"shape": 2.0, "rate": 2.0}, "gamma": 1.0,
                     "params": {"n_attestors": 127, "threshold": 85}},
    },
}
_ROW_TABLES = {"D1-row": ("D1", TABLE2_D1), "D2-row": ("D2", TABLE2_D2)}

_DEFAULT = {
    "scenario": {
        "dist_0": {"shape": 2.0, "rate": 2.0},
        "params": {"slot_len": 12.0, "attest_deadline": 4.0, "aggregate_deadline": 8.0,
                   "n_attestors": 12, "threshold": 9},
        "valuation": {"slope_c": 0.25, "normalizer": 1.0},
    },
    "grid": {"zeta": 0.05},
    "mode": "analytic",
    "trials": 100_000,
    "seed": 0,
    "output_dir": None,
    "strategy_pair": None,
    "eps": 1e-9,
    "quadrature": {"abs_tol": 1e-12, "rel_tol": 1e-10, "max_subdivisions": 200},
}
_TOP_KEYS = set(_DEFAULT) | {"preset", "row", "rows"}


class ConfigError(ValueError):
    """Invalid experiment config; ``errors`` lists every offending field."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class SweepRow:
    label: str
    dist_0: DelayDistribution
    gammas: tuple


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioSpec
    zeta: float = 0.05
    mode: str = "analytic"
    trials: int = 100_000
    seed: int = 0
    output_dir: str | None = None
    preset: str | None = None
    strategy_pair: tuple | None = None
    eps: float = 1e-9
    rows: tuple = ()
    quad: QuadratureConfig = QuadratureConfig()
    warnings: tuple = ()
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def grid(self):
        return StrategyGrid(self.zeta, self.scenario.params.tau1)


# distributions are replaced as a whole, never merged key by key
_ATOMIC = {"dist_0", "dist_1", "strategy_pair", "rows"}


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key in _ATOMIC or not (isinstance(val, dict) and isinstance(out.get(key), dict)):
            out[key] = copy.deepcopy(val)
        else:
            out[key] = _merge(out[key], val)
    return out


def _number(errors, path, value, *, integer=False, positive=False, non_negative=False):
    bad_type = isinstance(value, bool) or not isinstance(value, (int, float))
    if bad_type or not math.isfinite(value):
        errors.append(f"{path}: expected a finite number, got {value!r}")
        return None
    if integer and value != int(value):
        errors.append(f"{path}: expected an integer, got {value!r}")
        return None
    if positive and not value > 0:
        errors.append(f"{path}: must be > 0, got {value!r}")
        return None
    if non_negative and value < 0:
        errors.append(f"{path}: must be >= 0, got {value!r}")
        return None
    return int(value) if integer else float(value)


def _parse_dist(errors, path, d):
    if not isinstance(d, dict):
        errors.append(f"{path}: expected an object, got {d!r}")
        return None
    unknown = set(d) - {"shape", "rate", "mean", "family"}
    if unknown:
        errors.append(f"{path}: unknown keys {sorted(unknown)}")
    if d.get("family", "gamma") != "gamma":
        errors.append(f"{path}.family: only 'gamma' is supported in configs")
        return None
    shape = _number(errors, f"{path}.shape", d.get("shape", 2.0), positive=True)
    if ("rate" in d) == ("mean" in d):
        errors.append(f"{path}: give exactly one of 'rate' or 'mean'")
        return None
    if "rate" in d:
        rate = _number(errors, f"{path}.rate", d["rate"], positive=True)
    else:
        mean = _number(errors, f"{path}.mean", d["mean"], positive=True)
        rate = None if mean is None or shape is None else shape / mean
    if shape is None or rate is None:
        return None
    return DelayDistribution(shape, rate)


def _parse_scenario(errors, sc):
    if not isinstance(sc, dict):
        errors.append(f"scenario: expected an object, got {sc!r}")
        return None
    unknown = set(sc) - {"dist_0", "dist_1", "gamma", "params", "valuation"}
    if unknown:
        errors.append(f"scenario: unknown keys {sorted(unknown)}")
    dist_0 = _parse_dist(errors, "scenario.dist_0", sc.get("dist_0"))
    dist_1 = None
    if "dist_1" in sc and "gamma" in sc:
        errors.append("scenario: give 'dist_1' or 'gamma', not both")
    elif "dist_1" in sc:
        dist_1 = _parse_dist(errors, "scenario.dist_1", sc["dist_1"])
    else:
        gamma = _number(errors, "scenario.gamma", sc.get("gamma", 1.0), positive=True)
        if dist_0 is not None and gamma is not None:
            dist_1 = dist_0.scaled(gamma)

    p = dict(sc.get("params") or {})
    unknown = set(p) - {"slot_len", "attest_deadline", "aggregate_deadline",
                        "n_attestors", "threshold"}
    if unknown:
        errors.append(f"scenario.params: unknown keys {sorted(unknown)}")
    nums = {}
    for key in ("slot_len", "attest_deadline", "aggregate_deadline"):
        nums[key] = _number(errors, f"scenario.params.{key}", p.get(key), positive=True)
    for key in ("n_attestors", "threshold"):
        nums[key] = _number(errors, f"scenario.params.{key}", p.get(key),
                            integer=True, positive=True)
    params = None
    if None not in nums.values():
        n, K = nums["n_attestors"], nums["threshold"]
        t1, t2, t = nums["attest_deadline"], nums["aggregate_deadline"], nums["slot_len"]
        if K > n:
            errors.append(f"scenario.params.threshold: K={K} exceeds n_attestors={n}")
        if not t1 < t2 < t:
            errors.append("scenario.params: need attest_deadline < aggregate_deadline "
                          f"< slot_len, got {t1}, {t2}, {t}")
        if K <= n and t1 < t2 < t:
            params = ProtocolParams(t, t1, t2, n, K)

    v = sc.get("valuation") or {}
    unknown = set(v) - {"slope_c", "normalizer"}
    if unknown:
        errors.append(f"scenario.valuation: unknown keys {sorted(unknown)}")
    slope = _number(errors, "scenario.valuation.slope_c", v.get("slope_c"), non_negative=True)
    norm = _number(errors, "scenario.valuation.normalizer", v.get("normalizer"), positive=True)
    if None in (dist_0, dist_1, params, slope, norm):
        return None
    return ScenarioSpec(dist_0, dist_1, params, ValuationModel(slope, norm))


def _parse_rows(errors, rows):
    if not isinstance(rows, list) or not rows:
        errors.append(f"rows: expected a non-empty list, got {rows!r}")
        return ()
    out = []
    for k, r in enumerate(rows):
        path = f"rows[{k}]"
        if not isinstance(r, dict):
            errors.append(f"{path}: expected an object")
            continue
        dist = _parse_dist(errors, path, {key: r[key] for key in ("shape", "rate", "mean")
                                          if key in r})
        gammas = r.get("gammas")
        if not isinstance(gammas, list) or not gammas:
            errors.append(f"{path}.gammas: expected a non-empty list")
            continue
        gs = [_number(errors, f"{path}.gammas[{i}]", g, positive=True)
              for i, g in enumerate(gammas)]
        if dist is not None and None not in gs:
            out.append(SweepRow(str(r.get("label", f"row-{k}")), dist, tuple(gs)))
    return tuple(out)


def validate_config(raw=None, preset=None, overrides=None):
    """Parse and check a config, returning an ``ExperimentConfig``.

    ``raw`` is JSON text, a dict or None.  ``preset`` (if given) takes
    precedence over a ``preset`` key in ``raw``; ``overrides`` (for example
    CLI flags) are applied last.  Raises ``ConfigError`` naming every bad field.
    """
    errors = []
    if raw is None or (isinstance(raw, str) and not raw.strip()):
        doc = {}
    elif isinstance(raw, str):
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config: invalid JSON ({exc})"]) from exc
    else:
        doc = copy.deepcopy(raw)
    if not isinstance(doc, dict):
        raise ConfigError([f"config: expected a JSON object, got {type(doc).__name__}"])
    doc = _merge(doc, {k: v for k, v in (overrides or {}).items() if v is not None})

    name = preset or doc.get("preset")
    if name is not None and name not in PRESETS:
        raise ConfigError([f"preset: unknown preset {name!r}; choose from {sorted(PRESETS)}"])
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        errors.append(f"config: unknown keys {sorted(unknown)}")

    merged = _merge(_merge(_DEFAULT, PRESETS.get(name, {})), doc)
    sc = merged["scenario"]
    # a user-given partner law displaces the preset's, and vice versa
    user_sc = doc.get("scenario") if isinstance(doc.get("scenario"), dict) else {}
    if "dist_1" in user_sc and "gamma" not in user_sc:
        sc.pop("gamma", None)
    elif "gamma" in user_sc and "dist_1" not in user_sc:
        sc.pop("dist_1", None)

    rows = ()
    if name in _ROW_TABLES:
        prefix, table = _ROW_TABLES[name]
        idx = _number(errors, "row", merged.get("row"), integer=True, non_negative=True)
        if idx is not None and idx >= len(table):
            errors.append(f"row: {name} has rows 0..{len(table) - 1}, got {idx}")
        elif idx is not None:
            shape, rate, gammas = table[idx]
            rows = (SweepRow(f"{prefix}-{idx}", DelayDistribution(shape, rate), gammas),)
            if "dist_0" not in user_sc:
                sc["dist_0"] = {"shape": shape, "rate": rate}
            if "dist_1" not in sc:
                sc.setdefault("gamma", gammas[0])
    if "rows" in merged:
        rows = _parse_rows(errors, merged["rows"])

    grid = merged.get("grid") or {}
    unknown = set(grid) - {"zeta", "tau1"}
    if unknown:
        errors.append(f"grid: unknown keys {sorted(unknown)}")
    tau1 = None
    if "tau1" in grid:
        tau1 = _number(errors, "grid.tau1", grid["tau1"], positive=True)
    zeta = _number(errors, "grid.zeta", grid.get("zeta"), positive=True)
    if tau1 is not None:
        user_t1 = (user_sc.get("params") or {}).get("attest_deadline")
        if isinstance(user_t1, (int, float)) and not math.isclose(user_t1, tau1):
            errors.append(f"grid.tau1 ({tau1:g}) contradicts "
                          f"scenario.params.attest_deadline ({user_t1:g})")
        sc.setdefault("params", {})["attest_deadline"] = tau1
    spec = _parse_scenario(errors, sc)
    grid_tau1 = spec.params.tau1 if spec is not None else (
        tau1 or (sc.get("params") or {}).get("attest_deadline"))
    if zeta is not None and isinstance(grid_tau1, (int, float)) and grid_tau1 > 0:
        try:
            StrategyGrid(zeta, float(grid_tau1))
        except DomainError as exc:
            errors.append(f"grid.zeta: {exc}")

    mode = merged.get("mode")
    if mode not in MODES:
        errors.append(f"mode: expected one of {MODES}, got {mode!r}")
    trials = _number(errors, "trials", merged.get("trials"), integer=True, positive=True)
    seed = _number(errors, "seed", merged.get("seed"), integer=True, non_negative=True)
    if seed is not None and seed >= 2**64:
        errors.append(f"seed: must fit in 64 bits, got {seed}")
    eps = _number(errors, "eps", merged.get("eps"), non_negative=True)
    out_dir = merged.get("output_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        errors.append(f"output_dir: expected a path string, got {out_dir!r}")

    pair = merged.get("strategy_pair")
    if pair is not None:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            errors.append(f"strategy_pair: expected two delays, got {pair!r}")
            pair = None
        else:
            pair = tuple(_number(errors, f"strategy_pair[{i}]", d, non_negative=True)
                         for i, d in enumerate(pair))
            if spec is not None and None not in pair:
                for i, d in enumerate(pair):
                    if d > spec.params.tau1 + 1e-12:
                        errors.append(f"strategy_pair[{i}]: {d} exceeds tau1 {spec.params.tau1}")

    qd = merged.get("quadrature") or {}
    unknown = set(qd) - {"abs_tol", "rel_tol", "max_subdivisions"}
    if unknown:
        errors.append(f"quadrature: unknown keys {sorted(unknown)}")
    q_abs = _number(errors, "quadrature.abs_tol", qd.get("abs_tol"), positive=True)
    q_rel = _number(errors, "quadrature.rel_tol", qd.get("rel_tol"), positive=True)
    q_sub = _number(errors, "quadrature.max_subdivisions", qd.get("max_subdivisions"),
                    integer=True, positive=True)

    if errors:
        raise ConfigError(errors)
    quad = QuadratureConfig(q_abs, q_rel, q_sub)

    warnings = []
    for i in (0, 1):
        try:
            peaked = is_peaked(spec.dist(i), spec.params.tau1)
        except ArithmeticError as exc:
            warnings.append(f"dist_{i}: peakedness check could not be evaluated ({exc})")
            continue
        if not peaked:
            warnings.append(f"dist_{i} fails the restricted L2 peakedness check on "
                            f"[0, {spec.params.tau1:g}]; the no-delay equilibrium is "
                            "not guaranteed")
    for msg in warnings:
        log.warning(msg)

    return ExperimentConfig(
        scenario=spec, zeta=zeta, mode=mode, trials=trials, seed=seed,
        output_dir=out_dir, preset=name, strategy_pair=pair, eps=eps, rows=rows,
        quad=quad, warnings=tuple(warnings), raw=merged,
    )


# -- experiments ----------------------------------------------------------------

@dataclass
class ExperimentReport:
    config: dict
    scenario: ScenarioSpec
    matrix: object = None
    equilibria: list | None = None
    xi_optimum: list | None = None
    simulation: dict | None = None
    cross_check: dict | None = None
    notes: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "config": self.config,
            "scenario": spec_to_dict(self.scenario),
            "matrix": None if self.matrix is None else matrix_to_dict(self.matrix),
            "equilibria": None if self.equilibria is None
            else [equilibrium_to_dict(e) for e in self.equilibria],
            "xi_optimum": self.xi_optimum,
            "simulation": self.simulation,
            "cross_check": self.cross_check,
            "notes": self.notes,
            "provenance": self.provenance,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(
            config=d["config"],
            scenario=spec_from_dict(d["scenario"]),
            matrix=None if d["matrix"] is None else matrix_from_dict(d["matrix"]),
            equilibria=None if d["equilibria"] is None
            else [equilibrium_from_dict(e) for e in d["equilibria"]],
            xi_optimum=d["xi_optimum"],
            simulation=d["simulation"],
            cross_check=d["cross_check"],
            notes=d["notes"],
            provenance=d["provenance"],
        )


def _simulate(spec, pair, trials, seed):
    out = {"delta_0": pair[0], "delta_1": pair[1], "trials": trials, "seed": seed}
    est = monte_carlo_utility(spec, pair[0], pair[1], trials, seed, TWO_PROP)
    out.update(mean_0=est.mean_0, mean_1=est.mean_1,
               stderr_0=est.stderr_0, stderr_1=est.stderr_1)
    return out


def run_experiment(cfg):
    """Run the configured analysis; ``write_report`` puts it on disk."""
    start = time.perf_counter()
    spec = cfg.scenario
    quad = cfg.quad
    report = ExperimentReport(config=cfg.raw, scenario=spec, notes=list(cfg.warnings))

    if cfg.mode in ("analytic", "both"):
        grid = cfg.grid
        m = build_matrix(spec, grid, quad)
        report.matrix = m
        report.equilibria = find_psne(m, cfg.eps)
        report.xi_optimum = [
            list(optimal_delay_xi(spec.dist(i), spec.params, spec.valuation, grid))
            for i in (0, 1)
        ]
        if cfg.preset in ("fig5", "fig5-calibrated"):
            report.notes.append(
                "2-Prop utilities at equilibrium are read from the matrix cell; the "
                "published summary lists (0, 0) for this game while its matrix shows "
                "(1.56, 0) at the same cell")
        if not report.equilibria:
            report.notes.append("no pure-strategy equilibrium on this grid")

    if cfg.mode in ("monte-carlo", "both"):
        pair = cfg.strategy_pair
        if pair is None:
            eqs = report.equilibria
            pair = (eqs[0].delta_0, eqs[0].delta_1) if eqs else (0.0, 0.0)
        sim = _simulate(spec, pair, cfg.trials, cfg.seed)
        report.simulation = sim
        if cfg.mode == "both":
            check = {"delta_0": pair[0], "delta_1": pair[1]}
            for i in (0, 1):
                exact = utility_2prop(spec, pair[0], pair[1], i, quad).total
                # a run without variation is judged at one-trial resolution
                se = max(sim[f"stderr_{i}"], 1.0 / cfg.trials)
                diff = sim[f"mean_{i}"] - exact
                check[f"analytic_{i}"] = exact
                check[f"diff_{i}"] = diff
                check[f"z_{i}"] = diff / se
            check["within_3se"] = bool(abs(check["z_0"]) <= 3 and abs(check["z_1"]) <= 3)
            report.cross_check = check

    report.provenance = {
        "version": __version__,
        "wall_time_s": time.perf_counter() - start,
        "preset": cfg.preset,
        "seed": cfg.seed,
    }
    return report


def _equilibria_csv(report):
    lines = ["kind,player,delta_0,delta_1,u0,u1"]
    for e in report.equilibria or []:
        lines.append(",".join(["2-prop", ""] + [fmt(v) for v in (e.delta_0, e.delta_1, e.u0, e.u1)]))
    for i, (delta, u) in enumerate(report.xi_optimum or []):
        row = ["xi", str(i), fmt(delta) if i == 0 else "", fmt(delta) if i == 1 else "",
               fmt(u) if i == 0 else "", fmt(u) if i == 1 else ""]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _simulation_csv(sim):
    keys = ["delta_0", "delta_1", "trials", "seed", "mean_0", "stderr_0", "mean_1", "stderr_1"]
    return ",".join(keys) + "\n" + ",".join(fmt(sim[k]) for k in keys) + "\n"


def write_report(report, out_dir, fmt_name="csv"):
    """Write a report as CSV tables or one JSON document; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    if fmt_name == "json":
        path = out / "report.json"
        path.write_text(report.to_json() + "\n")
        return [path]
    if report.matrix is not None:
        for i in (0, 1):
            path = out / f"u{i}.csv"
            path.write_text(matrix_to_csv(report.matrix, i))
            paths.append(path)
        path = out / "equilibria.csv"
        path.write_text(_equilibria_csv(report))
        paths.append(path)
    if report.simulation is not None:
        path = out / "simulation.csv"
        path.write_text(_simulation_csv(report.simulation))
        paths.append(path)
    return paths


# -- gamma sweeps -----------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    row: str
    shape: float
    rate_0: float
    gamma: float
    mean_0: float
    mean_1: float
    delta0_ne: float | None = None
    delta1_ne: float | None = None
    n_psne: int = 0
    u0_ne: float | None = None
    u1_ne: float | None = None
    xi_delta0: float | None = None
    xi_u0: float | None = None
    xi_delta1: float | None = None
    xi_u1: float | None = None
    error: str = ""


SWEEP_COLUMNS = ("row", "shape", "rate_0", "gamma", "mean_0", "mean_1", "delta0_ne",
                 "delta1_ne", "n_psne", "u0_ne", "u1_ne", "xi_delta0", "xi_u0",
                 "xi_delta1", "xi_u1", "error")


def _sweep_one(base, label, dist_0, gamma, grid, eps, quad):
    dist_1 = dist_0.scaled(gamma)
    head = dict(row=label, shape=dist_0.shape, rate_0=dist_0.rate, gamma=gamma,
                mean_0=dist_0.mean, mean_1=dist_1.mean)
    spec = ScenarioSpec(dist_0, dist_1, base.params, base.valuation)
    try:
        m = build_matrix(spec, grid, quad)
        eqs = find_psne(m, eps)
        x0 = optimal_delay_xi(dist_0, spec.params, spec.valuation, grid)
        x1 = optimal_delay_xi(dist_1, spec.params, spec.valuation, grid)
    except (ArithmeticError, DomainError) as exc:
        log.error("sweep %s gamma=%g failed: %s", label, gamma, exc)
        return SweepResult(**head, error=str(exc).replace(",", ";").replace("\n", " "))
    first = eqs[0] if eqs else None
    return SweepResult(
        **head,
        delta0_ne=first and first.delta_0, delta1_ne=first and first.delta_1,
        n_psne=len(eqs), u0_ne=first and first.u0, u1_ne=first and first.u1,
        xi_delta0=x0[0], xi_u0=x0[1], xi_delta1=x1[0], xi_u1=x1[1],
    )


def sweep_gamma(cfg, gamma_list=None):
    """Equilibria across gamma for each sweep row.

    With ``gamma_list`` the sweep uses the config's ``dist_0`` as its single
    row; otherwise it runs ``cfg.rows``.  A failing game is recorded in the
    ``error`` column and the sweep moves on.
    """
    quad = cfg.quad
    if gamma_list is not None:
        gammas = tuple(float(g) for g in gamma_list)
        if not gammas or not all(math.isfinite(g) and g > 0 for g in gammas):
            raise ConfigError([f"gamma_list: expected positive numbers, got {gamma_list!r}"])
        rows = (SweepRow("custom", cfg.scenario.dist_0, gammas),)
    else:
        rows = cfg.rows
        if not rows:
            raise ConfigError(["rows: this config defines no sweep rows"])
    grid = cfg.grid
    return [
        _sweep_one(cfg.scenario, row.label, row.dist_0, g, grid, cfg.eps, quad)
        for row in rows for g in row.gammas
    ]


def sweep_to_csv(results):
    lines = [",".join(SWEEP_COLUMNS)]
    for r in results:
        cells = []
        for col in SWEEP_COLUMNS:
            v = getattr(r, col)
            cells.append(v if isinstance(v, str) else fmt(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
