"""CSV and JSON encodings of payoff matrices and experiment reports."""

import csv
import io
import json

import numpy as np

from .delay import DelayDistribution, ProtocolParams, UniformDelay
from .game import PayoffMatrix, PureEquilibrium, StrategyGrid
from .payoff import ScenarioSpec, ValuationModel


def fmt(value):
    """Six significant digits; empty string for missing values."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.6g}"


def matrix_to_csv(m, player):
    """One player's payoff matrix with grid points as header row and column."""
    u = m.u0 if player == 0 else m.u1
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["delta_0\\delta_1"] + [fmt(p) for p in m.grid.points])
    for a, row in enumerate(u):
        writer.writerow([fmt(m.grid.points[a])] + [fmt(v) for v in row])
    return buf.getvalue()


def dist_to_dict(dist):
    if isinstance(dist, UniformDelay):
        return {"family": "uniform", "width": dist.width}
    return {"family": "gamma", "shape": dist.shape, "rate": dist.rate}


def dist_from_dict(d):
    if d.get("family", "gamma") == "uniform":
        return UniformDelay(d["width"])
    return DelayDistribution(d["shape"], d["rate"])


def spec_to_dict(spec):
    p = spec.params
    return {
        "dist_0": dist_to_dict(spec.dist_0),
        "dist_1": dist_to_dict(spec.dist_1),
        "params": {
            "slot_len": p.slot_len,
            "attest_deadline": p.attest_deadline,
            "aggregate_deadline": p.aggregate_deadline,
            "n_attestors": p.n_attestors,
            "threshold": p.threshold,
        },
        "valuation": {"slope_c": spec.valuation.slope_c, "normalizer": spec.valuation.normalizer},
    }


def spec_from_dict(d):
    return ScenarioSpec(
        dist_from_dict(d["dist_0"]),
        dist_from_dict(d["dist_1"]),
        ProtocolParams(**d["params"]),
        ValuationModel(**d["valuation"]),
    )


def matrix_to_dict(m):
    return {
        "grid": {"step": m.grid.step, "horizon": m.grid.horizon, "points": list(m.grid.points)},
        "u0": m.u0.tolist(),
        "u1": m.u1.tolist(),
    }


def matrix_from_dict(d):
    grid = StrategyGrid(d["grid"]["step"], d["grid"]["horizon"])
    return PayoffMatrix(grid, np.array(d["u0"]), np.array(d["u1"]))


def equilibrium_to_dict(eq):
    return {"delta_0": eq.delta_0, "delta_1": eq.delta_1, "u0": eq.u0, "u1": eq.u1}


def equilibrium_from_dict(d):
    return PureEquilibrium(d["delta_0"], d["delta_1"], d["u0"], d["u1"])


def game_to_json(spec, m, equilibria):
    """Scenario, grid, both matrices and equilibria as one JSON document."""
    doc = {
        "scenario": spec_to_dict(spec),
        "matrix": matrix_to_dict(m),
        "equilibria": [equilibrium_to_dict(e) for e in equilibria],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def game_from_json(text):
    doc = json.loads(text)
    return (
        spec_from_dict(doc["scenario"]),
        matrix_from_dict(doc["matrix"]),
        [equilibrium_from_dict(e) for e in doc["equilibria"]],
    )
