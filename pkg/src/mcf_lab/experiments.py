"""Route runners, expectation checks and output bundles for scenarios."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np

from .eigen import eigen_limit, residual
from .geometry import coercivity_margin, crossing_point
from .hj import evolve_hj, profile_from_evolution
from .model import (Grid, GridFunction, Polynomial, SolverConfig,
                    sup_distance, sup_norm)
from .oracle import (asymptotic_profile, dp_eigenvalue,
                     eigenvalue_formula, pointwise_speed_formula)
from .parabolic import (eigen_from_evolution, evolution_eigenvalue, evolve,
                        viscosity_sweep)
from .scenarios import Scenario

log = logging.getLogger(__name__)

REFUSED_NONCOERCIVE = "refused-noncoercive"


def write_csv(path: Path, gf: GridFunction) -> None:
    path.write_text(gf.to_csv())


def write_pairs(path: Path, header: str, rows) -> None:
    lines = [header] + [",".join(f"{x:.17g}" for x in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, data: Any) -> None:
    path.write_text(json.dumps(data, indent=1, sort_keys=True,
                               default=_json_default) + "\n")


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x)}")


def _clean(x):
    """Replace non-finite floats so output stays strict JSON."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (float, np.floating)) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


class Runner:
    """Executes routes for one scenario, caching shared intermediate runs."""

    def __init__(self, scenario: Scenario, out: Path | None = None,
                 grid_m: int | None = None, seed: int | None = None,
                 backend: str | None = None):
        self.sc = scenario
        self.p = scenario.problem
        self.s = dict(scenario.settings)
        if grid_m is not None:
            self.s["hj_m"] = grid_m
            self.s["m"] = grid_m
        if seed is not None:
            self.s["seed"] = seed
        self.out = Path(out) if out else None
        if self.out:
            self.out.mkdir(parents=True, exist_ok=True)
        self.backend = backend
        self.q: dict[str, Any] = {}
        self.status: dict[str, str] = {}
        self._cache: dict[str, Any] = {}

    # -- helpers ---------------------------------------------------------
    def _hj_series(self):
        if "hj" not in self._cache:
            T = self.s.get("T", 20.0)
            m = self.s.get("hj_m", 400)
            cfg = SolverConfig(eta=0.0, T=T, n_reports=self._reports(T))
            self._cache["hj"] = evolve_hj(self.p, cfg, Grid(self.p.R, m),
                                          self.backend)
        return self._cache["hj"]

    def _reports(self, T: float) -> int:
        w = self.s.get("window", [T / 2, T])
        from .parabolic import _reports_for
        return max(_reports_for(T, tuple(w)), 20)

    def _window(self):
        T = self.s.get("T", 20.0)
        return tuple(self.s.get("window", [T / 2, T]))

    def _save(self, name: str, gf: GridFunction) -> None:
        if self.out:
            write_csv(self.out / name, gf)

    # -- routes ----------------------------------------------------------
    def route_coercivity(self):
        rep = coercivity_margin(self.p)
        try:
            r_cr = crossing_point(self.p, report=rep)
        except RuntimeError:
            r_cr = float("nan")
        self.q["coercivity.delta_star"] = rep.delta_star
        self.q["coercivity.satisfied"] = rep.satisfied
        self.q["coercivity.r_cr"] = r_cr
        self.q["coercivity.C0"] = rep.C0
        self.q["coercivity.K0"] = rep.K0
        self._save("margin.csv", rep.margin)

    def route_formula(self):
        rep = coercivity_margin(self.p)
        # without coercivity the crossing radius need not be unique, and the
        # closed form is only trusted when no crossing exists at all
        if not rep.satisfied and not math.isinf(crossing_point(self.p, report=rep)):
            self.status["formula"] = REFUSED_NONCOERCIVE
            return
        m = self.s.get("hj_m", 400)
        aub = eigenvalue_formula(self.p, Grid(self.p.R, m))
        self.q["lambda.formula"] = aub.lam
        self.q["aubry"] = aub.to_dict()
        self.status["formula"] = "ok"

    def route_hj(self):
        series = self._hj_series()
        t1, t2 = self._window()
        lam, pw = eigen_from_evolution(series, (t1, t2))
        self.q["lambda.hj"] = lam
        self.q["pointwise.hj_range"] = float(np.ptp(pw.values))
        self._save("lambda_pointwise_hj.csv", pw)
        if self.status.get("formula") == REFUSED_NONCOERCIVE:
            return
        w1 = profile_from_evolution(series, lam, t1)
        w2 = profile_from_evolution(series, lam, t2)
        self.q["profile.drift"] = sup_distance(w1, w2)
        self._cache["profile_hj"] = w2
        self._save("profile_hj.csv", w2)
        if self.out:
            write_pairs(self.out / "grad_sup_hj.csv", "t,value",
                        zip(series.times, series.grad_sup))

    def route_evolution(self):
        T = self.s.get("T", 20.0)
        grid = Grid(self.p.R, self.s.get("evolution_m", 120))
        lam, per = evolution_eigenvalue(self.p, self.s.get("evolution_etas",
                                                           [0.025, 0.0125]),
                                        T, self._window(), grid, self.backend)
        self.q["lambda.evolution"] = lam
        self.q["lambda.evolution_per_eta"] = [{"eta": e, "lambda": l}
                                              for e, l in per]

    def route_k_limit(self):
        grid = Grid(self.p.R, self.s.get("k_m", 120))
        est = eigen_limit(self.p, self.s.get("ks", [0.1, 0.05, 0.025]),
                          self.s.get("k_etas", [0.025, 0.0125]), grid=grid,
                          backend=self.backend)
        self.q["lambda.k-limit"] = est.lam
        self.q["k_limit"] = est.to_dict()
        self._save("w_k_limit.csv", est.w)

    def route_dp(self):
        lam, pw = dp_eigenvalue(self.p, self.sc.dp, self._window(),
                                self.backend)
        self.q["lambda.dp"] = lam
        self._save("lambda_pointwise_dp.csv", pw)

    def route_oracle_profile(self):
        w = asymptotic_profile(self.p, self.sc.dp)
        self._save("profile_oracle.csv", w)
        if "profile_hj" not in self._cache:
            self.route_hj()
        wh = self._cache["profile_hj"]
        # compare on the coarser grid's nodes
        wi = np.interp(w.grid.nodes, wh.grid.nodes, wh.values)
        self.q["profile.gap_oracle"] = float(np.max(np.abs(wi - w.values)))

    def route_pointwise(self):
        series = self._hj_series()
        lam, pw = eigen_from_evolution(series, self._window())
        ref = pointwise_speed_formula(self.p, series.grid)
        self.q["pointwise.error"] = sup_distance(pw, ref)
        self.q["pointwise.range"] = float(np.ptp(pw.values))
        self.q["lambda.hj"] = lam
        self._save("lambda_pointwise_hj.csv", pw)
        self._save("lambda_pointwise_formula.csv", ref)

    def route_residual_pairs(self):
        n, R, p = self.p.n, self.p.R, self.p
        lam1, w1 = (n - 1) / R, Polynomial((0.0, 0.0, 1.0 / (2.0 * R)))
        lam2, w2 = 0.0, Polynomial((1.0,))
        rows = []
        for m in self.s.get("ms", [100, 200, 400]):
            g = Grid(R, m)
            r1 = sup_norm(residual(p, lam1, w1, 0.0, p.q, "classical", g))
            r2 = sup_norm(residual(p, lam2, w2, 0.0, p.q, "zero-slope", g))
            rows.append((g.h, r1, r2))
        h = np.array([r[0] for r in rows])
        r1 = np.array([r[1] for r in rows])
        r2 = np.array([r[2] for r in rows])
        ratios = r1[:-1] / r1[1:]
        self.q["residual.pair1"] = r1.tolist()
        self.q["residual.pair2"] = r2.tolist()
        self.q["residual.pair1.max_over_h"] = float(np.max(r1 / h))
        self.q["residual.pair2.max_over_h"] = float(np.max(r2 / h))
        self.q["residual.pair1.min_ratio"] = float(ratios.min())
        self.q["residual.pair1.max_ratio"] = float(ratios.max())
        if self.out:
            write_pairs(self.out / "residuals.csv", "h,pair1,pair2", rows)

    def route_sweep(self):
        etas = self.s.get("etas", [0.2, 0.1, 0.05, 0.025])
        T = self.s.get("T", 1.0)
        grid = Grid(self.p.R, self.s.get("m", 400))
        sw = viscosity_sweep(self.p, etas, SolverConfig(eta=etas[0], T=T,
                                                        n_reports=10),
                             grid, jobs=self.s.get("jobs", 1),
                             backend=self.backend)
        cons = sw.consecutive
        self.q["sweep.distances"] = cons.tolist()
        self.q["sweep.ratios"] = (cons[1:] / cons[:-1]).tolist()
        self.q["sweep.decreasing"] = bool(np.all(np.diff(cons) < 0))
        self.q["sweep.final_grad_sup"] = sw.final_grad_sup.tolist()
        self.q["sweep.grad_spread"] = sw.grad_spread
        if self.out:
            write_pairs(self.out / "sweep.csv", "eta,final_grad_sup",
                        zip(etas, sw.final_grad_sup))

    def route_comparison(self):
        from .comparison import comparison_gap, ordered_pairs
        rng = np.random.default_rng(self.s.get("seed", 0))
        pairs = ordered_pairs(rng, self.s.get("pairs", 20))
        grid = Grid(self.p.R, self.s.get("m", 100))
        T = self.s.get("T", 0.5)
        gaps_e, gaps_h = [], []
        for a, b in pairs:
            gaps_e.append(comparison_gap(self.p, a, b, SolverConfig(
                eta=self.s.get("eta", 0.1), T=T, n_reports=10), grid, evolve,
                self.backend))
            gaps_h.append(comparison_gap(self.p, a, b, SolverConfig(
                eta=0.0, T=T, n_reports=10), grid, evolve_hj, self.backend))
        self.q["comparison.min_gap.evolve"] = float(min(gaps_e))
        self.q["comparison.min_gap.hj"] = float(min(gaps_h))

    ROUTES: dict[str, str] = {
        "coercivity": "route_coercivity", "formula": "route_formula",
        "hj": "route_hj", "evolution": "route_evolution",
        "k-limit": "route_k_limit", "dp": "route_dp",
        "oracle-profile": "route_oracle_profile", "pointwise": "route_pointwise",
        "residual-pairs": "route_residual_pairs", "sweep": "route_sweep",
        "comparison": "route_comparison",
    }

    def run_routes(self, routes) -> dict[str, Any]:
        for r in routes:
            if r not in self.ROUTES:
                raise ValueError(f"unknown route {r!r}")
            log.info("%s: route %s", self.sc.name, r)
            getattr(self, self.ROUTES[r])()
            self.status.setdefault(r, "ok")
        return self.q


def check_expectations(expectations: list[dict], q: dict[str, Any]
                       ) -> list[dict]:
    results = []
    for e in expectations:
        name = e["quantity"]
        val = q.get(name)
        target = e.get("target")
        if isinstance(target, dict) and "ref" in target:
            target = q.get(target["ref"])
        op = e.get("op", "approx")
        tol = e.get("tol", 0.0)
        if val is None or target is None:
            ok = False
        elif target == "nonconstant":
            ok = val >= tol
        elif isinstance(target, bool):
            ok = bool(val) is target
        elif op == "le":
            ok = val <= target
        elif op == "ge":
            ok = val >= target
        else:
            ok = abs(val - target) <= tol
        results.append({"quantity": name, "value": val, "target": target,
                        "op": op, "tol": tol, "ok": bool(ok)})
    return results


def run_scenario(scenario: Scenario, out: Path | None = None,
                 grid_m: int | None = None, seed: int | None = None,
                 backend: str | None = None) -> tuple[int, dict]:
    """Run every route of ``scenario``; exit status 0 iff all expectations hold."""
    runner = Runner(scenario, out, grid_m, seed, backend)
    q = runner.run_routes(scenario.routes)
    checks = check_expectations(scenario.expectations, q)
    summary = _clean({"scenario": scenario.name, "quantities": q,
                      "status": runner.status, "expectations": checks,
                      "passed": all(c["ok"] for c in checks)})
    if runner.out:
        write_json(runner.out / "summary.json", summary)
    return (0 if summary["passed"] else 1), summary


def run_many(scenarios: list[Scenario], out: Path | None, jobs: int = 1,
             **kw) -> list[tuple[int, dict]]:
    def one(sc):
        sub = Path(out) / sc.name if out else None
        return run_scenario(sc, sub, **kw)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, scenarios))
    return [one(sc) for sc in scenarios]


COMPARE_ROUTES = ("formula", "evolution", "hj", "dp", "k-limit")


def compare(scenario: Scenario, routes, out: Path | None = None,
            tol: float = 2e-2, backend: str | None = None,
            grid_m: int | None = None, profile_tol: float = 7e-2) -> dict:
    """Pairwise eigenvalue differences between routes, with profile gaps.

    With both ``hj`` and ``dp`` requested the level-set profile is also
    compared against the control profile. A refused formula route shows up
    in ``status`` and its pairs are marked ``unavailable``.
    """
    routes = list(routes)
    if len(routes) < 2:
        raise ValueError("compare needs at least two routes")
    for r in routes:
        if r not in COMPARE_ROUTES:
            raise ValueError(f"unknown route {r!r}; choose from {COMPARE_ROUTES}")
    runner = Runner(scenario, out, grid_m=grid_m, backend=backend)
    run = []
    if "formula" in routes:
        run.append("formula")
    run += [r for r in routes if r != "formula"]
    runner.run_routes(run)
    lam = {r: runner.q.get(f"lambda.{r}") for r in routes}
    table = []
    for i, a in enumerate(routes):
        for b in routes[i + 1:]:
            if lam[a] is None or lam[b] is None:
                table.append({"routes": [a, b], "difference": None,
                              "flag": "unavailable"})
                continue
            d = abs(lam[a] - lam[b])
            table.append({"routes": [a, b], "difference": d,
                          "flag": "ok" if d <= tol else "disagree"})
    out_doc = {"scenario": scenario.name, "lambda": lam,
               "status": runner.status, "pairs": table}
    if "hj" in routes and "profile.drift" in runner.q:
        out_doc["profile_drift_hj"] = runner.q["profile.drift"]
        if "dp" in routes:
            runner.route_oracle_profile()
            gap = runner.q["profile.gap_oracle"]
            out_doc["profile_gap_oracle"] = gap
            out_doc["profile_flag"] = "ok" if gap <= profile_tol else "disagree"
    if "pointwise.hj_range" in runner.q:
        out_doc["pointwise_range_hj"] = runner.q["pointwise.hj_range"]
    out_doc = _clean(out_doc)
    if runner.out:
        write_json(runner.out / "compare.json", out_doc)
    return out_doc
