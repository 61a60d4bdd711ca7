"""Scenario files: parsing, validation and solver dispatch.

A scenario is a TOML document::

    name = "d2_case1"
    solver = "case1"          # case1 | case2 | case3 | rectangle | piecewise | fmd_load
    seed = 0

    [domain]                  # circle | rectangle | superellipse | polyline
    kind = "circle"

    [gamma]                   # optional; arclength parameters of the data arc
    start_pi = -0.25          # ``start``/``end`` in plain units also work
    end_pi = 1.25

    [datum]
    kind = "analytic"
    expr_id = "angular-tent"

    [grid]
    oracle = [64, 128, 256]
    t_grid = 2001

Instead of ``[gamma]`` an ``[upsilon]`` section with ``from_point`` and
``to_point`` names the free arc; both points are projected on the boundary
and the arc runs counter-clockwise between them.
"""

from __future__ import annotations

import copy
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .boundary_data import BoundaryFunction, make_datum
from .errors import GeometryError, ValidationError
from .geometry import BoundaryArc, ConvexBoundary, Rectangle, make_boundary

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SOLVERS = ("case1", "case2", "case3", "rectangle", "piecewise", "fmd_load")


class ScenarioError(ValidationError):
    """Malformed scenario file; ``clause`` names the offending field."""


@dataclass
class Scenario:
    name: str
    solver: str
    domain: dict
    datum: dict
    gamma: dict | None = None
    upsilon: dict | None = None
    oracle_grids: list = field(default_factory=lambda: [64, 128])
    t_grid: int = 2001
    seed: int = 0
    out_dir: str | None = None
    params: dict = field(default_factory=dict)
    source: str | None = None

    def echo(self) -> dict:
        """Everything needed to rebuild the scenario, as plain data."""
        d = {
            "name": self.name,
            "solver": self.solver,
            "seed": self.seed,
            "domain": self.domain,
            "datum": self.datum,
            "grid": {"oracle": list(self.oracle_grids), "t_grid": self.t_grid},
        }
        if self.gamma is not None:
            d["gamma"] = self.gamma
        if self.upsilon is not None:
            d["upsilon"] = self.upsilon
        if self.params:
            d["params"] = self.params
        return copy.deepcopy(d)


def _need(doc, key, where, kind=None):
    if key not in doc:
        raise ScenarioError(f"missing field '{where}{key}'", clause=f"{where}{key}")
    val = doc[key]
    if kind is not None and not isinstance(val, kind):
        raise ScenarioError(f"field '{where}{key}' has the wrong type ({type(val).__name__})", clause=f"{where}{key}")
    return val


def from_dict(doc: dict, source=None) -> Scenario:
    """Validate a decoded document and build a :class:`Scenario`."""
    name = doc.get("name", Path(source).stem if source else "scenario")
    solver = _need(doc, "solver", "", str)
    if solver not in SOLVERS:
        raise ScenarioError(f"unknown solver id {solver!r}; expected one of {', '.join(SOLVERS)}", clause="solver")
    domain = _need(doc, "domain", "", dict)
    _need(domain, "kind", "domain.", str)
    datum = _need(doc, "datum", "", dict)
    gamma = doc.get("gamma")
    upsilon = doc.get("upsilon")
    if gamma is not None and upsilon is not None:
        raise ScenarioError("give either [gamma] or [upsilon], not both", clause="gamma")
    if solver in ("case1", "case2", "case3") and gamma is None and upsilon is None:
        raise ScenarioError(f"solver {solver!r} needs a [gamma] or [upsilon] section", clause="gamma")
    grid = doc.get("grid", {})
    grids = grid.get("oracle", [64, 128])
    if isinstance(grids, int):
        grids = [grids]
    if not all(isinstance(g, int) and g >= 8 for g in grids):
        raise ScenarioError("grid.oracle must be integers >= 8", clause="grid.oracle")
    t_grid = grid.get("t_grid", 2001)
    if not isinstance(t_grid, int) or t_grid < 3:
        raise ScenarioError("grid.t_grid must be an integer >= 3", clause="grid.t_grid")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ScenarioError("seed must be an integer", clause="seed")
    out = doc.get("output", {}).get("dir")
    return Scenario(
        name=name,
        solver=solver,
        domain=dict(domain),
        datum=dict(datum),
        gamma=None if gamma is None else dict(gamma),
        upsilon=None if upsilon is None else dict(upsilon),
        oracle_grids=sorted(grids),
        t_grid=t_grid,
        seed=seed,
        out_dir=out,
        params=dict(doc.get("params", {})),
        source=source,
    )


def parse_scenario(text: str, source=None) -> Scenario:
    """Parse TOML text; syntax errors carry the line and column."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{source or '<text>'}: {exc}", clause="syntax") from exc
    return from_dict(doc, source)


def load_scenario(path) -> Scenario:
    """Read a scenario from a path, or from the bundled set by name."""
    p = Path(path)
    if not p.exists():
        bundled = resources.files("leastgrad") / "scenarios" / f"{path}.toml"
        if not bundled.is_file():
            raise ScenarioError(f"no scenario file or bundled scenario named {path!r}", clause="path")
        return parse_scenario(bundled.read_text(), source=str(path))
    return parse_scenario(p.read_text(), source=str(p))


def bundled_names():
    root = resources.files("leastgrad") / "scenarios"
    return sorted(Path(str(e.name)).stem for e in root.iterdir() if e.name.endswith(".toml"))


# ---------------------------------------------------------------------------
# Building the pieces
# ---------------------------------------------------------------------------


def _arc_param(spec, key, where):
    if f"{key}_pi" in spec:
        return float(spec[f"{key}_pi"]) * math.pi
    if key in spec:
        return float(spec[key])
    raise ScenarioError(f"missing field '{where}.{key}' (or '{where}.{key}_pi')", clause=f"{where}.{key}")


def _arc_between(domain: ConvexBoundary, spec: dict, where: str) -> BoundaryArc:
    if "from_point" in spec or "to_point" in spec:
        a = np.asarray(_need(spec, "from_point", where + "."), float)
        b = np.asarray(_need(spec, "to_point", where + "."), float)
        sa, sb = float(domain.locate(a)), float(domain.locate(b))
        length = (sb - sa) % domain.total_length
        return BoundaryArc(domain, sa, length)
    s0 = _arc_param(spec, "start", where)
    s1 = _arc_param(spec, "end", where)
    if not s1 > s0:
        raise ScenarioError(f"{where}.end must exceed {where}.start", clause=f"{where}.end")
    if s1 - s0 >= domain.total_length:
        raise ScenarioError(f"{where} must be a proper arc", clause=f"{where}.end")
    return BoundaryArc(domain, s0, s1 - s0)


@dataclass
class Built:
    """A scenario turned into geometry, datum and constructed solution."""

    scenario: Scenario
    domain: ConvexBoundary
    arc: BoundaryArc
    datum: BoundaryFunction
    family: object
    solution: object = None

    @property
    def partial(self) -> bool:
        return not self.arc.is_full

    @property
    def upsilon(self):
        return None if not self.partial else self.arc.complement()

    def evaluator(self):
        """Vectorized evaluation of the constructed solution at interior points."""
        from .rect import evaluate_rect

        if self.solution is not None:
            return self.solution.evaluate
        if self.scenario.solver == "rectangle":
            check = self.family.check
            return lambda pts: evaluate_rect(self.domain, self.datum, pts, check=check)
        return self.family.evaluate_many


def _expand_pi(spec: dict) -> dict:
    """``key_pi = v`` becomes ``key = v * pi`` (element-wise for lists)."""
    out = {}
    for k, v in spec.items():
        if k.endswith("_pi"):
            out[k[:-3]] = [x * math.pi for x in v] if isinstance(v, list) else v * math.pi
        else:
            out[k] = v
    return out


def make_domain(s: Scenario) -> ConvexBoundary:
    try:
        return make_boundary(s.domain)
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"malformed domain: {exc}", clause="domain") from exc
    except GeometryError as exc:
        raise ScenarioError(str(exc), clause="domain") from exc


def build(s: Scenario, t_grid=None) -> Built:
    """Construct the solution; solver preconditions raise :class:`ValidationError`."""
    from . import rect, swz

    n_t = t_grid or s.t_grid
    domain = make_domain(s)
    if s.gamma is not None:
        arc = _arc_between(domain, s.gamma, "gamma")
    elif s.upsilon is not None:
        arc = _arc_between(domain, s.upsilon, "upsilon").complement()
    else:
        arc = domain.full_arc()
    if s.solver in ("rectangle", "fmd_load") and not isinstance(domain, Rectangle):
        raise ScenarioError(f"solver {s.solver!r} needs a rectangle domain", clause="domain.kind")
    if s.solver == "fmd_load":
        d = s.datum
        for key in ("b_half", "t_half"):
            _need(d, key, "datum.")
        sol = rect.fmd_load_solution(domain.L, domain.h, d["t_half"], d["b_half"], d.get("l_B", 1.0), n_t=n_t)
        return Built(s, sol.rect, sol.rect.full_arc(), sol.datum, sol.family, sol)
    try:
        f = make_datum(_expand_pi(s.datum), arc)
    except KeyError as exc:
        raise ScenarioError(f"datum is missing field {exc}", clause=f"datum.{exc.args[0]}") from exc
    if s.solver == "rectangle":
        fam = rect.solve_rectangle(domain, f, n_t=n_t)
    elif s.solver == "piecewise":
        fam = swz.solve_piecewise_constant(domain, f, n_t=n_t)
    else:
        solve = {"case1": swz.solve_case1, "case2": swz.solve_case2, "case3": swz.solve_case3}[s.solver]
        fam = solve(domain, arc, f, n_t=n_t)
    return Built(s, domain, arc, f, fam)
