import json
import sys
from pathlib import Path
from typing import Optional

import pandas as pd
from rich.console import Console
from rich.markdown import Markdown
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from src.bc import bc_integral, example_catalog, parse_example_uri, qa_deficits, variation
from src.cli.documents import RunManifest, load_curve
from src.cli.verify import run_suite, suite_checks
from src.curve_core import length
from src.frechet import discrete_frechet, sample_polyline
from src.integrand import get_integrand, line_integral
from src.lib.convergence import MAX_DEPTH, MIN_DEPTH, RefinementSchedule
from src.lib.errors import (CertificationFailed, DimensionMismatch, DomainError, HomogeneityError, MissingDerivative,
                            NonConvergence, RectifyError, SchemaError, UnknownCurve, UnknownExample,
                            UnknownIntegrand, ZeroLength)
from src.lib.numbers import format_summary

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNCONVERGED = 2
EXIT_HOMOGENEITY = 3
EXIT_PROPERTY = 4
FRECHET_DEPTH = 10

console = Console(stderr=True)

exit_codes = [
    ((SchemaError, DomainError, DimensionMismatch, UnknownCurve, UnknownIntegrand, UnknownExample,
      MissingDerivative, ZeroLength), EXIT_INPUT),
    ((NonConvergence, CertificationFailed), EXIT_UNCONVERGED),
    ((HomogeneityError,), EXIT_HOMOGENEITY),
]


def exit_code_for(error: RectifyError) -> int:
    for kinds, code in exit_codes:
        if isinstance(error, kinds):
            return code
    return EXIT_INPUT


def run_command(fn, *args, **kwargs) -> int:
    """Run a cmd_* function, turning library errors into the exit-code contract."""
    try:
        return fn(*args, **kwargs)
    except RectifyError as e:
        console.print(f"[bold red]{type(e).__name__}:[/] {e}")
        return exit_code_for(e)


def _schedule(max_depth: Optional[int]) -> RefinementSchedule:
    hi = MAX_DEPTH if max_depth is None else int(max_depth)
    return RefinementSchedule(min(MIN_DEPTH, hi), hi)


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _write_manifest(path: Optional[str], manifest: RunManifest):
    if path:
        manifest.write(path)


def cmd_length(spec: str, tol: Optional[float] = None, max_depth: Optional[int] = None,
               extrapolate: bool = False, out: Optional[str] = None, manifest: Optional[str] = None) -> int:
    curve = load_curve(spec)
    schedule = _schedule(max_depth)
    report = length(curve, schedule, tol, extrapolate)
    _emit(report.to_csv(), out)
    _write_manifest(manifest, RunManifest(
        "length", [spec], 0, {"tol": report.tol}, {"min_depth": schedule.min_depth, "max_depth": schedule.max_depth},
        [out] if out else [],
    ))
    status = "[green]converged[/]" if report.converged else "[yellow]not converged[/]"
    console.print(f"length({curve.name}) = {format_summary(report.limit_estimate)} "
                  f"(error {format_summary(report.error_estimate)}, {status})")
    return EXIT_OK if report.converged else EXIT_UNCONVERGED


def cmd_frechet(spec_a: str, spec_b: str, depth: Optional[int] = None, out: Optional[str] = None,
                manifest: Optional[str] = None) -> int:
    C, D = load_curve(spec_a), load_curve(spec_b)
    if C.dim != D.dim:
        raise DimensionMismatch(f"{C.name} lives in R^{C.dim} but {D.name} lives in R^{D.dim}")
    n = 2 ** (FRECHET_DEPTH if depth is None else int(depth))
    P, Q = sample_polyline(C, n), sample_polyline(D, n)
    result = discrete_frechet(P, Q)
    _emit(result.coupling_frame(P, Q).to_csv(index=False, float_format="%.17g"), out)
    _write_manifest(manifest, RunManifest("frechet", [spec_a, spec_b], 0, {}, {"depth": n.bit_length() - 1},
                                          [out] if out else []))
    console.print(f"frechet({C.name}, {D.name}) = {format_summary(result.distance)} at {n} steps")
    return EXIT_OK


def cmd_lineint(spec: str, integrand: str = "norm", xi: str = "mid", tol: Optional[float] = None,
                max_depth: Optional[int] = None, seed: int = 0, out: Optional[str] = None,
                manifest: Optional[str] = None) -> int:
    curve = load_curve(spec)
    F = get_integrand(integrand)
    schedule = _schedule(max_depth)
    report = line_integral(curve, F, schedule, tol, xi_rule=xi, seed=seed)
    _emit(report.to_csv(), out)
    _write_manifest(manifest, RunManifest(
        "lineint", [spec, integrand, xi], seed, {"tol": report.tol},
        {"min_depth": schedule.min_depth, "max_depth": schedule.max_depth}, [out] if out else [],
    ))
    meta = report.meta
    console.print(f"integral of {F.name} over {curve.name} = {format_summary(report.limit_estimate)} (xi={xi})")
    console.print(f"  {meta['cross_rule']} rule: {format_summary(meta['cross_limit'])} "
                  f"(gap {format_summary(meta['cross_gap'])})")
    return EXIT_OK if report.converged else EXIT_UNCONVERGED


def _example_params(example: str, f=None, curve=None, integrand=None) -> tuple[int, dict]:
    if str(example).startswith("bc://"):
        id, params = parse_example_uri(example)
    else:
        try:
            id, params = int(example), {}
        except ValueError:
            raise UnknownExample(f"Unknown example {example!r}; known ids are 1..11") from None
    for key, value in (("f", f), ("curve", curve), ("integrand", integrand)):
        if value is not None:
            params[key] = value
    return id, params


def qa_table(entry, seed: int = 0) -> pd.DataFrame:
    """Deficits of consecutive schedule levels: D0 at level k against D at level k+1."""
    targets = entry.schedule.mesh_targets()
    rows = []
    for k in range(len(targets) - 1):
        D0 = entry.space.generate(targets[k], seed + k)
        D = entry.space.generate(targets[k + 1], seed + k + 1)
        rows.append(qa_deficits(entry.space, entry.phi, D0, D, entry.S).to_record())
    return pd.DataFrame(rows, columns=["mesh_D0", "mesh_D", "qa1", "qa2", "qsa"])


def cmd_bc(example: str, seed: int = 0, tol: Optional[float] = None, f: Optional[str] = None,
           curve: Optional[str] = None, integrand: Optional[str] = None, out: Optional[str] = None,
           manifest: Optional[str] = None) -> int:
    id, params = _example_params(example, f, curve, integrand)
    with Progress(
        SpinnerColumn(style="bold cyan"),
        TextColumn(f"[bold]Running example {id}…"),
        console=console,
        transient=True,
    ) as progress:
        progress.add_task("bc", total=None)
        entry = example_catalog(id, **params)
        tol = entry.tol if tol is None else tol
        report = bc_integral(entry.space, entry.phi, entry.S, entry.schedule, tol, seed)
        lower = variation(entry.space, entry.phi, entry.S, entry.schedule, seed)
        table = qa_table(entry, seed)

    _emit(table.to_csv(index=False, float_format="%.17g"), out)
    _write_manifest(manifest, RunManifest(
        "bc", [example], seed, {"tol": tol},
        {"min_depth": entry.schedule.min_depth, "max_depth": entry.schedule.max_depth}, [out] if out else [],
    ))
    console.print(Markdown(f"## Example {id}: {entry.title}"))
    console.print(f"BC integral ≈ {format_summary(report.limit_estimate)} "
                  f"(error {format_summary(report.error_estimate)}), expected {format_summary(entry.expected)}")
    console.print(f"variation ≥ {format_summary(lower)}")
    return EXIT_OK if report.converged else EXIT_UNCONVERGED


def cmd_verify(suite: str = "all", seed: int = 0, jobs: int = 1, out: Optional[str] = None) -> int:
    names = suite_checks(suite)
    with Progress(
        SpinnerColumn(style="bold cyan"),
        TextColumn(f"[bold]Checking {len(names)} properties…"),
        console=console,
        transient=True,
    ) as progress:
        progress.add_task("verify", total=None)
        results = run_suite(suite, seed, jobs)

    _emit(json.dumps(results, indent=2, default=float) + "\n", out)
    table = Table(title=f"suite {suite} (seed {seed})")
    table.add_column("suite")
    table.add_column("check")
    table.add_column("result")
    for r in results:
        table.add_row(r["suite"], r["check"], "[green]pass[/]" if r["passed"] else "[red]FAIL[/]")
    console.print(table)
    return EXIT_OK if all(r["passed"] for r in results) else EXIT_PROPERTY
