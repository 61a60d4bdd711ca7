"""Command line: ``leastgrad run | validate | compare | list``.

Exit status: 0 when every invariant passes, 2 when one fails, 3 when the
scenario or a solver precondition is rejected.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import GeometryError, ValidationError
from .runner import EXIT_INVARIANT, EXIT_OK, EXIT_PRECONDITION, numeric_diff, run_scenario
from .scenarios import build, bundled_names, load_scenario


def _fail_precondition(exc):
    clause = getattr(exc, "clause", None)
    click.echo(f"precondition failure{f' [{clause}]' if clause else ''}: {exc}", err=True)
    sys.exit(EXIT_PRECONDITION)


@click.group()
def main():
    """Least gradient chord constructions with a discrete TV oracle."""


@main.command()
@click.argument("config")
@click.option("--grid", "grids", multiple=True, type=int, help="Oracle grid size; repeat for a refinement study.")
@click.option("--tgrid", type=int, default=None, help="Number of levels in the t grid.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Artifact directory.")
@click.option("--seed", type=int, default=None, help="Seed for the randomized checks.")
@click.option("--no-oracle", is_flag=True, help="Skip the discrete TV minimization.")
def run(config, grids, tgrid, out_dir, seed, no_oracle):
    """Run CONFIG (a TOML path or a bundled scenario name)."""
    try:
        s = load_scenario(config)
        out = out_dir or s.out_dir or str(Path("out") / s.name)
        rep = run_scenario(s, out_dir=out, grids=list(grids) or None, t_grid=tgrid, seed=seed, oracle=not no_oracle)
    except (ValidationError, GeometryError) as exc:
        _fail_precondition(exc)
    width = max(len(inv.name) for inv in rep.invariants)
    for inv in rep.invariants:
        mark = "PASS" if inv.passed else "FAIL"
        click.echo(f"{mark}  {inv.name:<{width}}  {inv.value:.6g} {inv.relation} {inv.threshold:.3g}  {inv.note}")
    click.echo(f"{s.name}: {'all invariants pass' if rep.passed else 'invariant failure'}; artifacts in {out}")
    sys.exit(rep.exit_code)


@main.command()
@click.argument("config")
def validate(config):
    """Parse CONFIG and check solver preconditions without running the checks."""
    try:
        s = load_scenario(config)
        b = build(s, t_grid=33)
    except (ValidationError, GeometryError) as exc:
        _fail_precondition(exc)
    click.echo(f"{s.name}: ok ({s.solver} on {b.domain.kind})")
    sys.exit(EXIT_OK)


@main.command()
@click.argument("report_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("report_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", type=float, default=1e-12, show_default=True, help="Relative tolerance on numeric fields.")
def compare(report_a, report_b, tol):
    """Compare the numeric fields of two report.json files (timings excluded)."""
    a = json.loads(Path(report_a).read_text())
    b = json.loads(Path(report_b).read_text())
    worst, mismatches = numeric_diff(a, b)
    for m in mismatches:
        click.echo(f"mismatch: {m}")
    click.echo(f"max relative difference: {worst:.3g}")
    sys.exit(EXIT_OK if worst <= tol and not mismatches else EXIT_INVARIANT)


@main.command("list")
def list_():
    """List the bundled scenarios."""
    for name in bundled_names():
        s = load_scenario(name)
        click.echo(f"{name:<18} {s.solver:<10} {s.domain['kind']}")


if __name__ == "__main__":
    main()
