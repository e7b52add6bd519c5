"""``fixpoint-lab`` command line: check, solve, suite.

Exit status is 0 when everything requested passed, 1 when a check or solve
failed (the report is still written) and 2 on a usage error.
"""

from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

import click

from . import conditions as cond
from . import solver
from .config import CONDITIONS, SEED_ENV, ConfigError, RunConfig, parse_point, read_config
from .metric_core import sample_points, sample_set, verify_metric_axioms
from .report import SuiteReport, dumps, trajectory_csv, write_atomic
from .suite import run_suite


def _samples(cfg: RunConfig, entry):
    return sample_set(entry.map.space, cfg.points, cfg.samples, cfg.seed)


def resolve_pata(cfg: RunConfig, entry, samples, required: bool = True) -> cond.PataParams | None:
    """Pata-type parameters chosen by the ``pata`` key.

    ``embed`` and ``order:A`` start from ``lambda`` when given and from the
    fitted constant otherwise.  With no ``pata`` key, explicit ``Lambda``/``psi``
    keys are used if present.
    """
    mode = cfg.pata
    if mode is None and cfg.Lambda is not None:
        mode = "explicit"
    if mode is None:
        if required:
            raise ConfigError("this check needs Pata parameters: set pata = embed | order:A | explicit")
        return None
    if mode == "explicit":
        return cfg.explicit_pata()
    lam = cfg.lam if cfg.lam is not None else cond.fit_lambda(entry.map, samples)
    if lam is None:
        if required:
            raise ConfigError(f"cannot embed: {entry.map.name} is not a Kannan map on the samples")
        return None
    alpha = 1.0 if mode == "embed" else float(mode.split(":", 1)[1])
    try:
        return cond.kannan_certificate_params(lam, alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_check(cfg: RunConfig) -> SuiteReport:
    if not cfg.conditions:
        raise ConfigError(f"no conditions selected (choose from {', '.join(CONDITIONS)})")
    entry = cfg.entry()
    m = entry.map
    samples = _samples(cfg, entry)
    grid = cond.EpsilonGrid.uniform(cfg.grid)
    reports = []
    for c in cfg.conditions:
        if c == "metric":
            reports.append(verify_metric_axioms(m.space, samples))
        elif c == "kannan":
            if cfg.lam is None:
                raise ConfigError("check kannan needs 'lambda'")
            try:
                params = cond.KannanParams(cfg.lam)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            reports.append(cond.check_kannan(m, params, samples, cfg.tol))
        elif c == "pata":
            params = resolve_pata(cfg, entry, samples)
            try:
                reports.append(cond.check_pata(m, params, samples, grid, cfg.tol))
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        elif c == "generalized":
            reports.append(cond.check_generalized(m, resolve_pata(cfg, entry, samples), samples, grid, cfg.tol))
        elif c == "bernoulli":
            if cfg.lam is None or not 0 < cfg.lam < 1:
                raise ConfigError("check bernoulli needs 'lambda' in (0, 1)")
            reports.append(cond.bernoulli_check(cfg.lam, grid, cfg.tol))
    return SuiteReport("check", cfg.echo(), reports, passed=all(r.passed for r in reports))


def cmd_solve(cfg: RunConfig) -> tuple[SuiteReport, str]:
    """Solve from several starts, certify the first trajectory, probe uniqueness.

    Returns the report and the CSV text of the first start's trajectory.
    """
    entry = cfg.entry()
    m = entry.map
    space = m.space
    if cfg.start:
        starts = [parse_point(space, s) for s in cfg.start]
    else:
        starts = sample_points(space, cfg.starts, cfg.seed)
    if not starts:
        raise ConfigError("no starting points (set 'start' or 'starts')")

    results = [solver.iterate(m, s, cfg.tol_fix, cfg.max_steps) for s in starts]
    samples = _samples(cfg, entry)
    grid = cond.EpsilonGrid.uniform(cfg.grid)
    if cfg.pata is None and cfg.Lambda is None:
        params = resolve_pata(dataclasses.replace(cfg, pata=f"order:{cfg.order}"), entry, samples, False)
    else:
        params = resolve_pata(cfg, entry, samples)

    reports = []
    if params is not None:
        reports.append(cond.check_generalized(m, params, samples, grid, cfg.tol))
    horizon = solver.picard(m, starts[0], cfg.horizon)
    reports.append(solver.check_step_monotonicity(horizon, cfg.tol))
    reports.append(solver.check_norm_bound(horizon, cfg.tol))
    envelope = None
    if params is not None:
        bp = solver.bound_params(horizon, params)
        reports.append(solver.check_step_bound(horizon, bp, grid, cfg.tol))
        n_list = [n for n in (2, 5, 10, 20) if n + 10 < cfg.horizon]
        reports.append(solver.check_p_step_bound(horizon, bp, grid, (1, 2, 5, 10), n_list, cfg.tol))
        envelope = solver.step_envelope(results[0].trajectory, solver.bound_params(results[0].trajectory, params), grid)
    if len(starts) >= 2:
        reports.append(solver.uniqueness_probe(m, starts, cfg.tol_fix, cfg.max_steps))

    solves = [{"map": m.name, **r.to_json()} for r in results]
    passed = all(r.converged for r in results) and all(r.passed for r in reports)
    csv_text = trajectory_csv(results[0].trajectory, envelope)
    return SuiteReport("solve", cfg.echo(), reports, solves, passed=passed), csv_text


def _control_exit_codes(cfg: RunConfig):
    def run(half: bool, ident: bool) -> dict[str, int]:
        codes = {}
        if half:
            c = RunConfig.from_mapping({}, {"map": "half_scaling", "conditions": ["kannan"], "lam": 0.999,
                                            "seed": cfg.seed, "samples": cfg.samples, "points": cfg.points})
            codes["check half_scaling lambda=0.999"] = 0 if cmd_check(c).passed else 1
        if ident:
            c = RunConfig.from_mapping({}, {"map": "identity", "seed": cfg.seed, "start": ["0.2", "0.8"],
                                            "samples": cfg.samples, "points": cfg.points})
            codes["solve identity"] = 0 if cmd_solve(c)[0].passed else 1
        return codes

    return run


def cmd_suite(cfg: RunConfig) -> SuiteReport:
    return run_suite(cfg, _control_exit_codes(cfg))


# ---------------------------------------------------------------------------
# click wiring


def _load(config: str | None, **overrides) -> RunConfig:
    try:
        kv = read_config(config) if config else {}
        return RunConfig.from_mapping(kv, overrides)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from None


def _emit(report: SuiteReport, out: str | None) -> None:
    text = dumps(report)
    if out:
        write_atomic(out, text)
    else:
        click.echo(text, nl=False)


def _common(f):
    options = [
        click.option("--config", "config", type=click.Path(dir_okay=False), help="Key-value config file."),
        click.option("--seed", type=int, help=f"Sampling seed (falls back to the config, then ${SEED_ENV})."),
        click.option("--out", type=click.Path(dir_okay=False), help="Write the JSON report here instead of stdout."),
        click.option("--grid", type=int, help="Number of uniform epsilon grid points."),
        click.option("--samples", type=int, help="Number of sampled pairs."),
        click.option("--tol", type=float, help="Certificate tolerance."),
    ]
    for opt in reversed(options):
        f = opt(f)
    return f


def _run(fn, config, map_name=None, **flags):
    overrides = {k: v for k, v in flags.items() if v is not None}
    if map_name is not None:
        overrides["map"] = map_name
    cfg = _load(config, **overrides)
    try:
        result = fn(cfg)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from None
    return cfg, result


@click.group()
@click.version_option(package_name="artifact", prog_name="fixpoint-lab")
def main():
    """Certify contractive conditions and locate fixed points."""


@main.command()
@_common
@click.option("--map", "map_name", help="Catalog map name (overrides the config).")
def check(config, seed, out, grid, samples, tol, map_name):
    """Check the selected contractive conditions on one map."""
    cfg, report = _run(cmd_check, config, map_name, seed=seed, grid=grid, samples=samples, tol=tol)
    _emit(report, out or cfg.out)
    sys.exit(0 if report.passed else 1)


@main.command()
@_common
@click.option("--map", "map_name", help="Catalog map name (overrides the config).")
def solve(config, seed, out, grid, samples, tol, map_name):
    """Iterate a map, certify the trajectory bounds and probe uniqueness."""
    cfg, (report, csv_text) = _run(cmd_solve, config, map_name, seed=seed, grid=grid, samples=samples, tol=tol)
    out = out or cfg.out
    _emit(report, out)
    csv_path = cfg.csv or (str(Path(out).with_suffix(".csv")) if out else None)
    if csv_path:
        write_atomic(csv_path, csv_text)
    sys.exit(0 if report.passed else 1)


@main.command()
@_common
def suite(config, seed, out, grid, samples, tol):
    """Run the acceptance battery over the catalog."""
    cfg, report = _run(cmd_suite, config, seed=seed, grid=grid, samples=samples, tol=tol)
    _emit(report, out or cfg.out)
    for c in report.criteria:
        click.echo(f"[{c['status']:>7}] {c['id']:>2}. {c['title']}", err=True)
    sys.exit(0 if report.passed else 1)
