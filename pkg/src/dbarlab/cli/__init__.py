"""Command-line front end.

Every command writes ``report.json`` (deterministic body), one CSV per
table, and ``metadata.json`` (timestamps, runtimes, environment) into the
output directory, prints a JSON summary, and exits 0 iff all tolerances
are met.  ``--report-only`` always exits 0 after writing the reports.
Thread count for the numerical libraries comes from DBARLAB_THREADS.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
import platform
import sys
from pathlib import Path

import click
import numpy as np

from .. import __version__
from ..geometry import DomainSpec
from .config import ConfigError, load_config, serialize
from . import runs

THREADS_ENV = "DBARLAB_THREADS"


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (tuple, set)):
        return list(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o)}")


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def write_outputs(res: runs.RunResult, out: Path, argv=None, config_text=None):
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps(res.body))
    for stem, text in res.tables.items():
        (out / f"{stem}.csv").write_text(text)
    if res.solve_report is not None:
        res.solve_report.save_samples(out / "samples.bin")
    if config_text is not None:
        (out / "config.json").write_text(config_text)
    meta = dict(res.meta, command=res.name, version=__version__,
                argv=list(argv if argv is not None else sys.argv[1:]),
                finished_utc=_dt.datetime.now(_dt.timezone.utc).isoformat(),
                python=platform.python_version(), numpy=np.__version__,
                threads=os.environ.get(THREADS_ENV))
    (out / "metadata.json").write_text(dumps(meta))


def _finish(ctx, res: runs.RunResult, out, config_text=None):
    write_outputs(res, Path(out), config_text=config_text)
    summary = {"command": res.name, "ok": res.ok, "failures": res.failures,
               "output": str(out)}
    click.echo(json.dumps(summary, sort_keys=True))
    if not res.ok and not ctx.obj.get("report_only"):
        ctx.exit(1)


def _limit_threads():
    n = os.environ.get(THREADS_ENV)
    if not n:
        return None
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return None
    return threadpool_limits(int(n))


def _load(ctx, path):
    try:
        return load_config(path)
    except ConfigError as e:
        click.echo(json.dumps({"ok": False, "config_errors": [v.to_dict() for v in e.violations]},
                              sort_keys=True))
        ctx.exit(2)


seed_option = click.option("--seed", type=int, required=True,
                           help="Seed for every randomized step (mandatory).")
out_option = click.option("--out", "out", type=click.Path(file_okay=False), default=None,
                          help="Output directory (default: ./out/<command>).")


@click.group()
@click.option("--report-only", is_flag=True, help="Write reports but always exit 0.")
@click.version_option(__version__)
@click.pass_context
def main(ctx, report_only):
    """dbarlab: homotopy operators for dbar on model domains."""
    ctx.ensure_object(dict)
    ctx.obj["report_only"] = report_only
    ctx.obj["limits"] = _limit_threads()


# ---------------------------------------------------------------------------

@main.group()
def domain():
    """Domain checks."""


@domain.command("check")
@click.option("--kind", type=click.Choice(["unit-ball", "ellipsoid", "graph-perturbation"]),
              default="unit-ball")
@click.option("--n", "n", type=int, default=2)
@click.option("--params", default="", help="Comma-separated domain parameters.")
@click.option("--L0", "L0", type=float, default=1.0)
@click.option("--samples", type=int, default=2000)
@seed_option
@out_option
@click.pass_context
def domain_check(ctx, kind, n, params, L0, samples, seed, out):
    """Validate a domain, its Levi form and the Levi polynomial sign."""
    try:
        spec = DomainSpec(kind, n, tuple(float(p) for p in params.split(",") if p.strip()), L0)
    except ValueError as e:
        raise click.BadParameter(str(e)) from None
    _finish(ctx, runs.domain_run(spec, seed, samples), out or "out/domain")


@main.group()
def extension():
    """Extension operator checks."""


@extension.command("check")
@seed_option
@out_option
@click.pass_context
def extension_check(ctx, seed, out):
    """Moments, Whitney growth slopes, commutator on the closure, cube sandwich."""
    _finish(ctx, runs.extension_run(seed), out or "out/extension")


@main.group()
def kernel():
    """Kernel checks."""


@kernel.command("koppelman")
@click.option("--n", "ns", type=int, multiple=True, help="Dimension(s); default 1, 2, 3.")
@click.option("--count", type=int, default=100)
@click.option("--tol", type=float, default=1e-6)
@seed_option
@out_option
@click.pass_context
def kernel_koppelman(ctx, ns, count, tol, seed, out):
    """Koppelman identities at seeded point pairs."""
    _finish(ctx, runs.koppelman_run(ns or (1, 2, 3), seed, count, tol), out or "out/koppelman")


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@out_option
@click.pass_context
def solve(ctx, config, seed, out):
    """Apply the configured operator and report residuals."""
    cfg = _load(ctx, config)
    _finish(ctx, runs.solve_run(cfg, seed), out or cfg.output, serialize(cfg))


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--min-order", type=float, default=1.0)
@out_option
@click.pass_context
def verify(ctx, config, seed, min_order, out):
    """Homotopy identity across the configured levels with observed order."""
    cfg = _load(ctx, config)
    if cfg.mixed or cfg.operator in ("top", "boundary"):
        raise click.UsageError("verify runs the homotopy identity for Hq/H0/Tq configs")
    if len(cfg.levels) < 2:
        raise click.UsageError("verify needs at least two levels")
    _finish(ctx, runs.verify_run(cfg, seed, min_order), out or cfg.output, serialize(cfg))


@main.group()
def sweep():
    """Exponent sweeps."""


@sweep.command("holder")
@click.option("--gamma", "gammas", type=float, multiple=True)
@click.option("--tol", type=float, default=0.05)
@seed_option
@out_option
@click.pass_context
def sweep_holder(ctx, gammas, tol, seed, out):
    """Recover synthetic boundary exponents d^gamma."""
    _finish(ctx, runs.holder_sweep(gammas or (0.25, 0.5, 1.0, 1.5), seed, tol),
            out or "out/holder")


@sweep.command("scaling")
@click.option("--which", type=click.Choice(["interior", "band", "projection"]), multiple=True)
@click.option("--tol", type=float, default=0.05)
@out_option
@click.pass_context
def sweep_scaling(ctx, which, tol, out):
    """Model-integral scaling exponents over the parameter grids."""
    _finish(ctx, runs.scaling_sweep(which or ("interior", "band", "projection"), tol),
            out or "out/scaling")


@sweep.command("rates")
@out_option
@click.pass_context
def sweep_rates(ctx, out):
    """Second-derivative blow-up rates at a boundary point of the ball in C^2."""
    _finish(ctx, runs.rates_sweep(), out or "out/rates")


@main.group()
def dcomplex():
    """Mixed D-complex."""


@dcomplex.command("solve")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@out_option
@click.pass_context
def dcomplex_solve(ctx, config, seed, out):
    """T or T-tilde on D x S for a dcomplexT / dcomplexTtilde config."""
    cfg = _load(ctx, config)
    if not cfg.mixed:
        raise click.UsageError("dcomplex solve needs operator dcomplexT or dcomplexTtilde")
    _finish(ctx, runs.dcomplex_run(cfg, seed), out or cfg.output, serialize(cfg))


__all__ = ["main", "write_outputs"]
