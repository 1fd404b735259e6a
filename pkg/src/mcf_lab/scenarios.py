"""Built-in scenarios and scenario-file loading.

A scenario file is either a bare problem document or a bundle::

    {"name": ..., "problem": {...}, "solver": {...}, "dp": {...},
     "routes": [...], "expectations": [...], "settings": {...}}

The bundled files under ``scenarios/`` are generated from the builders below;
the test suite checks that the two stay in sync.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .model import (Constant, Polynomial, RadialProblem, ScenarioError, Table,
                    parse_problem, serialize_problem)
from .oracle import DPConfig

BUILTIN = ("constants", "coercive-constant", "linear-f", "boundary-driven",
           "example-4-1", "example-4-2", "viscosity-sweep", "comparison-test")

STICKY_A, STICKY_B = 0.3, 0.6
STICKY_KNOTS_PER_UNIT = 1200

# three routes to the eigenvalue plus the two profile checks
_EIGEN_ROUTES = ["coercivity", "formula", "hj", "evolution", "k-limit", "dp",
                 "oracle-profile"]


@dataclass
class Scenario:
    name: str
    problem: RadialProblem
    routes: list[str] = field(default_factory=list)
    expectations: list[dict] = field(default_factory=list)
    settings: dict = field(default_factory=dict)
    dp: DPConfig = field(default_factory=DPConfig)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "problem": serialize_problem(self.problem),
            "routes": list(self.routes),
            "expectations": list(self.expectations),
            "settings": dict(self.settings),
            "dp": {"m": self.dp.m, "dt": self.dp.dt,
                   "horizon": self.dp.horizon,
                   "controls_per_node": self.dp.controls_per_node},
        }


def _base(**kw) -> RadialProblem:
    args = dict(n=2, R=1.0, c=Constant(3.0), f=Constant(0.0), phi_R=0.0, q=1.0,
                u0=Constant(0.0))
    args.update(kw)
    return RadialProblem(**args)


def sticky_forcing(n: int = 2, R: float = 1.0, a: float = STICKY_A,
                   b: float = STICKY_B) -> Table:
    """Forcing below ``(n-1)/a`` on ``[0, a)``, on ``(n-1)/r`` over ``[a, b]``
    and above ``(n-1)/b`` beyond ``b``.

    The middle piece is tabulated on a fine uniform set of knots so that every
    grid with ``m`` dividing the knot count sees it exactly.
    """
    step = 1.0 / STICKY_KNOTS_PER_UNIT
    lo, hi = round(a / step), round(b / step)
    mid = np.arange(lo, hi + 1) * step
    knots = np.r_[0.0, mid, R]
    vals = np.r_[0.0, (n - 1) / mid, (n - 1) / b + 2.0 * (R - b)]
    return Table(tuple(knots), tuple(vals))


def sticky_transport() -> Table:
    """``f = 1`` before ``a``, dips inside ``[a, b]``, stays positive after."""
    return Table((0.0, STICKY_A, 0.35, STICKY_B, 1.0), (1.0, 1.0, 0.2, 0.6, 0.8))


def _lambda_expectations(target: float) -> list[dict]:
    ref = {"ref": "lambda.formula"}
    return [
        {"quantity": "lambda.formula", "target": target, "tol": 1e-9},
        {"quantity": "lambda.hj", "target": ref, "tol": 2e-2},
        {"quantity": "lambda.evolution", "target": ref, "tol": 2e-2},
        {"quantity": "lambda.k-limit", "target": ref, "tol": 2e-2},
        {"quantity": "lambda.dp", "target": ref, "tol": 5e-2},
        {"quantity": "profile.drift", "op": "le", "target": 5e-2},
        {"quantity": "profile.gap_oracle", "op": "le", "target": 7e-2},
    ]


_EIGEN_SETTINGS = {
    "T": 20.0, "window": [10.0, 20.0], "hj_m": 400,
    "evolution_etas": [0.025, 0.0125], "evolution_m": 120,
    "ks": [0.1, 0.05, 0.025], "k_etas": [0.025, 0.0125], "k_m": 120,
}


def build(name: str) -> Scenario:
    """Construct a built-in scenario from code."""
    if name == "constants":
        p = _base(c=Constant(0.0), u0=Constant(5.0))
        exp = [{"quantity": f"lambda.{r}", "target": 0.0, "tol": 1e-9}
               for r in ("formula", "hj", "evolution", "k-limit", "dp")]
        exp.append({"quantity": "profile.drift", "op": "le", "target": 1e-9})
        settings = dict(_EIGEN_SETTINGS, T=2.0, window=[1.0, 2.0],
                        hj_m=100, evolution_etas=[0.1, 0.05], evolution_m=60,
                        k_m=60, k_etas=[0.1, 0.05])
        return Scenario(name, p, ["formula", "hj", "evolution", "k-limit", "dp"],
                        exp, settings, DPConfig(m=60, horizon=2.0))
    if name == "coercive-constant":
        return Scenario(name, _base(), _EIGEN_ROUTES,
                        _lambda_expectations(0.0) + [
                            {"quantity": "coercivity.delta_star", "target": 9.0,
                             "tol": 1e-9},
                            {"quantity": "coercivity.r_cr", "target": 1 / 3,
                             "tol": 1e-6}],
                        dict(_EIGEN_SETTINGS), DPConfig(m=240))
    if name == "linear-f":
        return Scenario(name, _base(f=Polynomial((0.0, 1.0))), _EIGEN_ROUTES,
                        _lambda_expectations(-1 / 3), dict(_EIGEN_SETTINGS),
                        DPConfig(m=240))
    if name == "boundary-driven":
        p = _base(phi_R=1.0, u0=Polynomial((0.0, 0.0, 0.5)))
        return Scenario(name, p, _EIGEN_ROUTES, _lambda_expectations(4.0),
                        dict(_EIGEN_SETTINGS), DPConfig(m=240))
    if name == "example-4-1":
        p = _base(c=sticky_forcing(), f=sticky_transport())
        exp = [
            {"quantity": "coercivity.satisfied", "target": False},
            {"quantity": "coercivity.delta_star", "op": "le", "target": 0.0},
            {"quantity": "pointwise.error", "op": "le", "target": 5e-2},
            {"quantity": "pointwise.range", "target": "nonconstant",
             "tol": 0.2},
        ]
        settings = {"T": 20.0, "window": [10.0, 20.0], "hj_m": 400}
        return Scenario(name, p, ["coercivity", "formula", "pointwise"], exp,
                        settings, DPConfig(m=240))
    if name == "example-4-2":
        p = _base(c=Constant(0.0), phi_R=1.0, q=0.5, u0=Polynomial((0, 0, 0.5)))
        exp = [
            {"quantity": "residual.pair1.max_over_h", "op": "le", "target": 5.0},
            {"quantity": "residual.pair2.max_over_h", "op": "le", "target": 5.0},
            {"quantity": "residual.pair1.min_ratio", "op": "ge", "target": 1.7},
            {"quantity": "residual.pair1.max_ratio", "op": "le", "target": 2.3},
        ]
        return Scenario(name, p, ["residual-pairs"], exp,
                        {"ms": [100, 200, 400]}, DPConfig(m=240))
    if name == "viscosity-sweep":
        p = _base(u0=Polynomial((0.0, 0.0, 1.0, -2.0 / 3.0)))
        exp = [{"quantity": "sweep.decreasing", "target": True}]
        return Scenario(name, p, ["sweep"], exp,
                        {"etas": [0.2, 0.1, 0.05, 0.025], "T": 1.0, "m": 400},
                        DPConfig(m=240))
    if name == "comparison-test":
        p = _base(f=Polynomial((0.0, 1.0)))
        exp = [{"quantity": "comparison.min_gap.evolve", "op": "ge",
                "target": -1e-12},
               {"quantity": "comparison.min_gap.hj", "op": "ge",
                "target": -1e-12}]
        return Scenario(name, p, ["comparison"], exp,
                        {"pairs": 20, "eta": 0.1, "T": 0.5, "m": 100,
                         "seed": 0}, DPConfig(m=240))
    raise ScenarioError(f"unknown scenario {name!r}; built-ins: {BUILTIN}")


def _data_dir() -> Path:
    return Path(str(resources.files("mcf_lab") / "scenarios"))


def builtin_path(name: str) -> Path:
    return _data_dir() / f"{name}.json"


def from_document(doc: dict[str, Any], default_name: str = "custom") -> Scenario:
    if "problem" not in doc:
        return Scenario(default_name, parse_problem(doc))
    dp = doc.get("dp") or {}
    try:
        dpc = DPConfig(**dp)
    except TypeError as exc:
        raise ScenarioError(str(exc), "dp") from exc
    return Scenario(doc.get("name", default_name), parse_problem(doc["problem"]),
                    list(doc.get("routes", [])), list(doc.get("expectations", [])),
                    dict(doc.get("settings", {})), dpc)


def load(name_or_path: str) -> Scenario:
    """Resolve a built-in name or a path to a scenario file."""
    path = Path(name_or_path)
    if name_or_path in BUILTIN and not path.exists():
        path = builtin_path(name_or_path)
    if not path.exists():
        raise ScenarioError(f"no such scenario or file: {name_or_path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: scenario must be a JSON object")
    return from_document(doc, path.stem)


def write_builtin(directory: Path | None = None) -> list[Path]:
    directory = Path(directory or _data_dir())
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name in BUILTIN:
        path = directory / f"{name}.json"
        path.write_text(json.dumps(build(name).to_dict(), indent=1) + "\n")
        out.append(path)
    return out
