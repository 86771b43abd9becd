"""Command line interface: ``mosumseg <command> ...``."""

import json
import math
import os
import sys

import click

from . import __version__
from ._validation import ValidationError
from .detector import SegmentationResult, confidence_interval, segment_with_series, simulate_argmax_limit
from .experiments import emit_figure_series, run_table1
from .io import dump_json, read_config, read_events_csv, read_path_csv, write_events_csv, write_path_csv
from .model import ChangeSpec, SegmentationConfig, ThresholdMode
from .simulate import PRESET_NAMES, RenewalScenario, scenario_preset, simulate_renewal_regimes
from .threshold import threshold_linear_mc, threshold_sublinear


def _load_scenario(value, seed=None):
    """Preset name or path to a scenario JSON file."""
    if os.path.isfile(value):
        sc = RenewalScenario.from_json(value)
    else:
        sc = scenario_preset(value)
    if seed is not None:
        sc = RenewalScenario.from_dict({**sc.to_dict(), "seed": seed})
    return sc


def _load_spec(path):
    """ChangeSpec JSON, or a scenario JSON (whose horizon is returned too)."""
    with open(path) as fh:
        data = json.load(fh)
    if "means" in data:
        sc = RenewalScenario.from_dict(data)
        return sc.change_spec(), sc.horizon_T
    return ChangeSpec.from_dict(data), data.get("horizon_T")


def _emit(obj, out):
    if out is None or out == "-":
        dump_json(obj, sys.stdout)
    else:
        dump_json(obj, out)


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except ValidationError as exc:
            raise click.ClickException(str(exc)) from None


@click.group(cls=_Group)
@click.version_option(__version__, prog_name="mosumseg")
def main():
    """MOSUM change point segmentation for multivariate regime-switching processes."""


@main.command()
@click.option("--mode", type=click.Choice(["gumbel", "linear-mc"]), default="gumbel", show_default=True)
@click.option("--T", "T", type=float, help="Observation horizon (gumbel).")
@click.option("--h", type=float, help="Bandwidth (gumbel).")
@click.option("--p", type=int, required=True, help="Dimension.")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--gamma", type=float, help="Relative bandwidth h/T (linear-mc).")
@click.option("--n-mc", type=int, default=5000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--grid-points", type=int, default=2000, show_default=True, help="Grid points per unit time.")
@click.option("--jobs", type=int, default=1, show_default=True)
def threshold(mode, T, h, p, alpha, gamma, n_mc, seed, grid_points, jobs):
    """Print the threshold beta and its inputs as JSON."""
    if mode == "gumbel":
        if T is None or h is None:
            raise click.UsageError("gumbel mode needs --T and --h")
        res = threshold_sublinear(T, h, p, alpha)
    else:
        if gamma is None:
            if T is None or h is None:
                raise click.UsageError("linear-mc mode needs --gamma (or --T and --h)")
            gamma = h / T
        res = threshold_linear_mc(gamma, p, alpha, n_mc=n_mc, grid_points_per_unit=grid_points, seed=seed, n_jobs=jobs)
    _emit(res.to_dict(), None)


@main.command()
@click.option("--events", type=click.Path(exists=True, dir_okay=False), help="Events CSV (component_id,time).")
@click.option("--path", "path_csv", type=click.Path(exists=True, dir_okay=False), help="Path CSV (t,z_1..z_p).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Config JSON; overrides the options below.")
@click.option("--h", type=float, help="Bandwidth.")
@click.option("--eta", type=float, default=0.75, show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--scale-mode", default="local_diag", show_default=True,
              type=click.Choice(["local_diag", "true_diag", "true_full", "identity", "A", "B", "C"]))
@click.option("--grid-step", type=float, default=1.0, show_default=True)
@click.option("--threshold-mode", type=click.Choice(["gumbel", "linear-mc"]), default="gumbel", show_default=True)
@click.option("--T", "T", type=float, help="Horizon of the event data (default: from --spec, else last event).")
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False), help="ChangeSpec or scenario JSON.")
@click.option("--mosum-csv", type=click.Path(dir_okay=False), help="Also write the MOSUM series here.")
@click.option("--out", type=click.Path(dir_okay=False), help="Result JSON (default stdout).")
@click.option("--jobs", type=int, default=1, show_default=True)
def segment(events, path_csv, config_path, h, eta, alpha, scale_mode, grid_step, threshold_mode, T, spec_path, mosum_csv, out, jobs):
    """Estimate change points and write the result JSON."""
    if (events is None) == (path_csv is None):
        raise click.UsageError("give exactly one of --events or --path")
    if config_path:
        config = read_config(config_path)
    else:
        if h is None:
            raise click.UsageError("--h is required without --config")
        config = SegmentationConfig(
            bandwidth_h=h, eta=eta, alpha=alpha, grid_step=grid_step,
            scale_mode=scale_mode, threshold_mode=ThresholdMode(threshold_mode),
        )
    spec, spec_T = (None, None) if spec_path is None else _load_spec(spec_path)
    if events is not None:
        horizon = T if T is not None else spec_T
        if horizon is None:
            click.echo("note: horizon taken from the last event time; pass --T to set it", err=True)
        data = read_events_csv(events, horizon_T=horizon, dim=None if spec is None else spec.dim)
        if horizon is None:
            step = config.grid_step
            data = type(data)(data.components, step * math.ceil(data.horizon_T / step - 1e-9))
    else:
        data = read_path_csv(path_csv)
    result, mosum = segment_with_series(data, config, spec, n_jobs=jobs)
    if mosum_csv:
        mosum.to_csv(mosum_csv)
    _emit(result.to_dict(), out)


@main.command()
@click.option("--result", "result_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--n-mc", type=int, default=10000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
def ci(result_path, alpha, n_mc, seed, out):
    """Limit-law confidence intervals for each estimate in a result JSON."""
    with open(result_path) as fh:
        result = SegmentationResult.from_dict(json.load(fh))
    rows = []
    for rec in result.records:
        row = {"estimate": rec.time}
        if rec.sigma_params is None or rec.d_hat is None:
            row.update(low=None, high=None, note="no drift or variance estimate")
        else:
            law = simulate_argmax_limit(rec.sigma_params, n_mc=n_mc, seed=seed)
            low, high = confidence_interval(rec.time, rec.d_hat, law, alpha, result.horizon_T)
            row.update(low=low, high=high, limit_law=law.to_dict())
        rows.append(row)
    _emit({"schema": "mosumseg.intervals/1", "alpha": alpha, "n_mc": n_mc, "seed": seed, "intervals": rows}, out)


@main.command()
@click.option("--scenario", required=True, help=f"Preset ({', '.join(PRESET_NAMES)}) or scenario JSON.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Events CSV.")
@click.option("--scenario-out", type=click.Path(dir_okay=False), help="Also write the scenario JSON.")
@click.option("--path-out", type=click.Path(dir_okay=False), help="Also write the counting path CSV.")
@click.option("--grid-step", type=float, default=1.0, show_default=True)
def simulate(scenario, seed, out, scenario_out, path_out, grid_step):
    """Simulate one replicate of a renewal scenario."""
    from .model import counting_path

    sc = _load_scenario(scenario, seed)
    events = simulate_renewal_regimes(sc, seed=seed)
    write_events_csv(events, out)
    if scenario_out:
        dump_json(sc.to_dict(), scenario_out)
    if path_out:
        write_path_csv(counting_path(events, grid_step), path_out)


@main.command()
@click.option("--scenario", required=True, help="Preset name or scenario JSON.")
@click.option("--mode", type=click.Choice(["A", "B", "C"]), default="B", show_default=True)
@click.option("--reps", type=int, default=2000, show_default=True)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--h", type=float, default=120.0, show_default=True)
@click.option("--eta", type=float, default=0.75, show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--timing", is_flag=True, help="Include wall-clock seconds in the JSON (breaks bit-identity).")
@click.option("--out", type=click.Path(dir_okay=False))
def experiment(scenario, mode, reps, seed, h, eta, alpha, jobs, timing, out):
    """Detection-rate sweep over seeded replicates."""
    sc = _load_scenario(scenario)
    report = run_table1(sc, mode, n_reps=reps, base_seed=seed, n_jobs=jobs, bandwidth=h, eta=eta, alpha=alpha)
    click.echo(f"wall clock: {report.wall_clock_seconds:.2f} s", err=True)
    _emit(report.to_dict(include_runtime=timing), out)


@main.command()
@click.option("--scenario", required=True, help="Preset name or scenario JSON.")
@click.option("--bandwidths", default="30,60,90,120", show_default=True, help="Comma separated.")
@click.option("--seed", type=int, default=None, help="Simulation seed (default: the scenario's).")
@click.option("--scale-mode", default="local_diag", show_default=True,
              type=click.Choice(["local_diag", "true_diag", "true_full", "identity", "A", "B", "C"]))
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--eta", type=float, default=0.75, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def figures(scenario, bandwidths, seed, scale_mode, alpha, eta, out):
    """Write per-bandwidth MOSUM series CSVs for plotting."""
    try:
        hs = [float(x) for x in bandwidths.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter("bandwidths must be comma separated numbers") from None
    sc = _load_scenario(scenario)
    for path in emit_figure_series(sc, hs, out, scale_mode=scale_mode, alpha=alpha, eta=eta, seed=seed):
        click.echo(path)


if __name__ == "__main__":
    main()
