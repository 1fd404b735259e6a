"""Problem definitions, radial grids and grid functions.

Everything here is immutable once constructed. Scalar fields are restricted to
constants, polynomials in ``r`` and piecewise-linear tables, which is enough to
encode all the radial scenarios shipped with the package.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, replace
from typing import Any, Mapping, Sequence

import numpy as np

COMPAT_TOL = 1e-8


class ScenarioError(ValueError):
    """Malformed scenario document or violated problem invariant."""

    def __init__(self, message: str, field_name: str | None = None):
        self.field_name = field_name
        if field_name is not None:
            message = f"{field_name}: {message}"
        super().__init__(message)


class GridMismatchError(ValueError):
    pass


class NumericalError(RuntimeError):
    """Raised when a solver produces non-finite values or fails to converge."""


# --------------------------------------------------------------------------
# scalar fields
# --------------------------------------------------------------------------


class ScalarField:
    """A real function of the radius ``r``."""

    def __call__(self, r):
        return self.evaluate(r)

    def evaluate(self, r):
        raise NotImplementedError

    def derivative(self, r):
        raise NotImplementedError

    def abs_slope_bound(self, r):
        """``|f'(r)|``; tables take the larger adjacent slope at knots."""
        return np.abs(self.derivative(r))

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(ScalarField):
    value: float

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        return np.full(r.shape, float(self.value)) if r.ndim else float(self.value)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        return np.zeros(r.shape) if r.ndim else 0.0

    def to_dict(self) -> dict:
        return {"const": float(self.value)}


@dataclass(frozen=True)
class Polynomial(ScalarField):
    """``sum(coefficients[j] * r**j)``."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.coefficients)
        if not coeffs:
            coeffs = (0.0,)
        object.__setattr__(self, "coefficients", coeffs)

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for a in reversed(self.coefficients):
            out = out * r + a
        return out if r.ndim else float(out)

    def derivative(self, r):
        d = tuple(j * a for j, a in enumerate(self.coefficients))[1:]
        return Polynomial(d or (0.0,)).evaluate(r)

    def to_dict(self) -> dict:
        return {"poly": list(self.coefficients)}


@dataclass(frozen=True)
class Table(ScalarField):
    """Piecewise-linear interpolation through ``(knots, values)``."""

    knots: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        knots = tuple(float(x) for x in self.knots)
        values = tuple(float(v) for v in self.values)
        if len(knots) < 2:
            raise ScenarioError("table needs at least two knots", "table.r")
        if len(knots) != len(values):
            raise ScenarioError("knots and values differ in length", "table.v")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise ScenarioError("knots must be strictly increasing", "table.r")
        if not all(math.isfinite(v) for v in knots + values):
            raise ScenarioError("non-finite table entry", "table")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    @property
    def _k(self) -> np.ndarray:
        return np.asarray(self.knots)

    @property
    def _slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.knots)

    def _segment(self, r: np.ndarray) -> np.ndarray:
        # right-continuous: a knot belongs to the segment on its right
        idx = np.searchsorted(self._k, r, side="right") - 1
        return np.clip(idx, 0, len(self.knots) - 2)

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        out = np.interp(r, self._k, self.values)
        return out if r.ndim else float(out)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        out = self._slopes[self._segment(r)]
        return out if r.ndim else float(out)

    def abs_slope_bound(self, r):
        r = np.asarray(r, dtype=float)
        slopes = np.abs(self._slopes)
        seg = self._segment(r)
        out = slopes[seg]
        k = self._k
        at_knot = np.isclose(r, k[np.clip(seg, 0, len(k) - 1)], rtol=0, atol=1e-14)
        left = slopes[np.clip(seg - 1, 0, len(slopes) - 1)]
        out = np.where(at_knot & (seg > 0), np.maximum(out, left), out)
        return out if r.ndim else float(out)

    def to_dict(self) -> dict:
        return {"table": {"r": list(self.knots), "v": list(self.values)}}


def field_from_dict(doc: Any, name: str) -> ScalarField:
    if not isinstance(doc, Mapping) or len(doc) != 1:
        raise ScenarioError("expected one of {const}, {poly}, {table}", name)
    (kind, body), = doc.items()
    try:
        if kind == "const":
            return Constant(_finite(body, name))
        if kind == "poly":
            if not isinstance(body, Sequence) or isinstance(body, str):
                raise ScenarioError("poly expects a list of coefficients", name)
            return Polynomial(tuple(_finite(a, name) for a in body))
        if kind == "table":
            if not isinstance(body, Mapping) or set(body) != {"r", "v"}:
                raise ScenarioError("table expects keys r and v", name)
            return Table(tuple(body["r"]), tuple(body["v"]))
    except ScenarioError as exc:
        if exc.field_name is None or not exc.field_name.startswith(name):
            raise ScenarioError(str(exc), name) from exc
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc), name) from exc
    raise ScenarioError(f"unknown field kind {kind!r}", name)


def _finite(x: Any, name: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioError(f"expected a number, got {x!r}", name)
    if not math.isfinite(x):
        raise ScenarioError("value must be finite", name)
    return float(x)


# --------------------------------------------------------------------------
# grids
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    R: float
    m: int

    def __post_init__(self):
        if not self.R > 0:
            raise ScenarioError("grid radius must be positive", "R")
        if int(self.m) != self.m or self.m < 8:
            raise ScenarioError("grid needs m >= 8 cells", "grid-m")
        object.__setattr__(self, "m", int(self.m))

    @property
    def h(self) -> float:
        return self.R / self.m

    @property
    def nodes(self) -> np.ndarray:
        r = np.arange(self.m + 1) * self.h
        r[-1] = self.R
        return r

    def nearest(self, r: float) -> int:
        return int(np.clip(round(r / self.h), 0, self.m))


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.m + 1,):
            raise GridMismatchError(
                f"expected {self.grid.m + 1} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NumericalError("grid function has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def shifted(self, s: float) -> "GridFunction":
        return GridFunction(self.grid, self.values + s)

    def anchored(self, index: int) -> "GridFunction":
        return GridFunction(self.grid, self.values - self.values[index])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("r,value\n")
        for r, v in zip(self.grid.nodes, self.values):
            buf.write(f"{r:.17g},{v:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridFunction":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "r,value":
            raise ScenarioError("grid function CSV must start with 'r,value'")
        rows = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
        r, v = rows[:, 0], rows[:, 1]
        grid = Grid(float(r[-1]), len(r) - 1)
        if not np.allclose(r, grid.nodes, rtol=0, atol=1e-12 * grid.R):
            raise ScenarioError("CSV nodes are not a uniform grid from 0")
        return cls(grid, v)


def _check_same(a: GridFunction, b: GridFunction) -> None:
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


def sample(f: ScalarField, grid: Grid) -> GridFunction:
    return GridFunction(grid, np.asarray(f.evaluate(grid.nodes), dtype=float))


def sup_norm(a: GridFunction) -> float:
    return float(np.max(np.abs(a.values)))


def sup_distance(a: GridFunction, b: GridFunction) -> float:
    _check_same(a, b)
    return float(np.max(np.abs(a.values - b.values)))


def grid_gradient(a: GridFunction) -> GridFunction:
    """Central differences inside, one-sided at both ends."""
    h = a.grid.h
    return GridFunction(a.grid, np.gradient(a.values, h, edge_order=1))


def radial_mean(values: np.ndarray, grid: Grid, n: int) -> float:
    """Volume average over the ball: trapezoid weights times ``r**(n-1)``."""
    w = grid.nodes ** (n - 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    if w.sum() == 0:
        return float(np.mean(values))
    return float(np.dot(w, values) / w.sum())


# --------------------------------------------------------------------------
# problems
# --------------------------------------------------------------------------


def boundary_slope(phi: float, q: float, eta: float, tol: float = 1e-12) -> float:
    """Solve ``p = phi * (eta**2 + p**2)**((1-q)/2)`` for the boundary slope.

    The map ``p -> p * (eta**2 + p**2)**((q-1)/2)`` is increasing for the
    regimes used here (eta = 1 with q > 0, or q = 1), so bisection on a
    bracket around ``|phi|**(1/q)`` finds the unique root.
    """
    if q == 1.0 or phi == 0.0:
        return float(phi)
    if eta == 0.0:
        return math.copysign(abs(phi) ** (1.0 / q), phi)

    def g(p):
        return p * (eta * eta + p * p) ** ((q - 1.0) / 2.0) - phi

    P = 1.0 + abs(phi) ** (1.0 / q) + abs(phi)
    lo, hi = -P, P
    glo, ghi = g(lo), g(hi)
    if glo > 0 or ghi < 0:
        raise NumericalError(
            f"boundary slope bracket failed for phi={phi}, q={q}, eta={eta}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class RadialProblem:
    """Radially symmetric forced curvature flow on the ball ``B(0, R)``."""

    n: int
    R: float
    c: ScalarField
    f: ScalarField
    phi_R: float
    q: float
    u0: ScalarField
    k: float = 0.0

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise ScenarioError("dimension must be an integer >= 2", "n")
        object.__setattr__(self, "n", int(self.n))
        if not self.R > 0:
            raise ScenarioError("radius must be positive", "R")
        if not self.q > 0:
            raise ScenarioError("capillary exponent must be positive", "q")
        if not self.k >= 0:
            raise ScenarioError("regularization k must be >= 0", "k")
        if not math.isfinite(self.phi_R):
            raise ScenarioError("must be finite", "phi_R")
        for name in ("c", "f", "u0"):
            fld = getattr(self, name)
            if isinstance(fld, Table):
                if fld.knots[0] != 0.0 or not math.isclose(fld.knots[-1], self.R,
                                                          rel_tol=0, abs_tol=1e-12):
                    raise ScenarioError(
                        f"table knots must run from 0 to R={self.R}", name)

    def with_(self, **changes) -> "RadialProblem":
        return replace(self, **changes)

    def compatibility_defect(self, eta: float) -> float:
        """Residual of ``u0'(R) = phi (eta^2 + u0'(R)^2)^((1-q)/2)``."""
        d = float(self.u0.derivative(self.R))
        if eta == 0.0 and self.q != 1.0:
            # level-set reading: the boundary law is u_r = phi
            return abs(d - self.phi_R)
        base = eta * eta + d * d
        if base == 0.0:
            return abs(d) if self.q <= 1.0 else abs(d - 0.0)
        return abs(d - self.phi_R * base ** ((1.0 - self.q) / 2.0))

    def check_compatible(self, eta: float, tol: float = COMPAT_TOL) -> None:
        defect = self.compatibility_defect(eta)
        if defect > tol:
            raise ScenarioError(
                f"initial data incompatible with boundary law (defect {defect:.3g})",
                "u0")

    def coefficients(self, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        r = grid.nodes
        return (np.asarray(self.c.evaluate(r), float),
                np.asarray(self.f.evaluate(r), float))


def parse_problem(document: str | Mapping[str, Any]) -> RadialProblem:
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, Mapping):
        raise ScenarioError("scenario must be a JSON object")
    required = ("n", "R", "c", "f", "phi_R", "q", "u0")
    for key in required:
        if key not in document:
            raise ScenarioError("missing key", key)
    n = document["n"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise ScenarioError("expected an integer", "n")
    return RadialProblem(
        n=n,
        R=_finite(document["R"], "R"),
        c=field_from_dict(document["c"], "c"),
        f=field_from_dict(document["f"], "f"),
        phi_R=_finite(document["phi_R"], "phi_R"),
        q=_finite(document["q"], "q"),
        u0=field_from_dict(document["u0"], "u0"),
        k=_finite(document.get("k", 0.0), "k"),
    )


def serialize_problem(problem: RadialProblem) -> dict:
    return {
        "n": problem.n,
        "R": problem.R,
        "c": problem.c.to_dict(),
        "f": problem.f.to_dict(),
        "phi_R": problem.phi_R,
        "q": problem.q,
        "u0": problem.u0.to_dict(),
        "k": problem.k,
    }


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping controls.

    ``dt=None`` picks ``cfl_safety`` times the largest monotone step.
    ``report_every=None`` spaces about ``n_reports`` snapshots over ``[0, T]``.
    """

    eta: float
    T: float
    dt: float | None = None
    cfl_safety: float = 0.9
    tol_steady: float = 1e-8
    report_every: int | None = None
    n_reports: int = 100
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ScenarioError("eta must lie in [0, 1]", "eta")
        if not self.T > 0:
            raise ScenarioError("final time must be positive", "T")
        if self.dt is not None and not self.dt > 0:
            raise ScenarioError("dt must be positive", "dt")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ScenarioError("cfl_safety must lie in (0, 1]", "cfl_safety")
        if not self.tol_steady > 0:
            raise ScenarioError("tol_steady must be positive", "tol_steady")
        if self.report_every is not None and self.report_every <= 0:
            raise ScenarioError("report_every must be positive", "report_every")
