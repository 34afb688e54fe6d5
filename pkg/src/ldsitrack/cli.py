"""Command line entry points.

Verbs: generate, filter, track, ik, run, serve, compare. Every verb takes
`--config FILE` (shared key/value schema) plus repeatable `--set key=value`
overrides. Failures exit nonzero with one JSON object per line on stderr.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from ldsitrack import config as cfg
from ldsitrack import ldsi, netsim, pipeline, scene as scene_mod, tracker as tracker_mod
from ldsitrack.events import read_stream, write_stream
from ldsitrack.kinematics import geometry_from_dict, inverse_kinematics


def _load_tree(config_path, overrides):
    tree = cfg.load(config_path) if config_path else {}
    for assignment in overrides:
        cfg.apply_override(tree, assignment)
    return tree


def _fail(kind: str, exc: Exception) -> None:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
    sys.exit(1)


@click.group()
def main():
    """Event-based ball tracking testbed."""


_common = [
    click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                 help="key/value config file"),
    click.option("--set", "overrides", multiple=True,
                 help="override a config key, e.g. --set ldsi.TCE=8"),
]


def common_options(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@main.command()
@common_options
@click.option("--events-out", type=click.Path(), required=True)
@click.option("--truth-out", type=click.Path(), default=None)
@click.option("--tags-out", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "binary"]), default="binary")
def generate(config_path, overrides, events_out, truth_out, tags_out, fmt):
    """Synthesize a scene into an event file (+ truth / tag side files)."""
    try:
        tree = _load_tree(config_path, overrides)
        spec = pipeline.runspec_from_dict(tree).scene
        gen = scene_mod.generate(spec)
        with open(events_out, "wb") as fh:
            fh.write(write_stream(gen.stream, fmt))
        if truth_out:
            with open(truth_out, "w") as fh:
                fh.write(gen.truth_csv())
        if tags_out:
            with open(tags_out, "w") as fh:
                fh.write(gen.tags_text())
        click.echo(f"wrote {len(gen.stream)} events to {events_out}")
    except Exception as exc:
        _fail("generate", exc)


@main.command("filter")
@common_options
@click.option("--events-in", type=click.Path(exists=True), required=True)
@click.option("--events-out", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "binary"]), default="binary")
def filter_cmd(config_path, overrides, events_in, events_out, fmt):
    """Run the LDSI filter over an event file."""
    try:
        tree = _load_tree(config_path, overrides)
        params = ldsi.params_from_dict(tree.get("ldsi", {}))
        with open(events_in, "rb") as fh:
            stream = read_stream(fh.read(), fmt)
        out = ldsi.filter_stream(stream, params)
        with open(events_out, "wb") as fh:
            fh.write(write_stream(out, fmt))
        click.echo(f"{len(stream)} events in, {len(out)} out "
                   f"(reduction {1 - len(out) / max(1, len(stream)):.3f})")
    except Exception as exc:
        _fail("filter", exc)


@main.command()
@common_options
@click.option("--events-in", type=click.Path(exists=True), required=True)
@click.option("--estimates-out", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "binary"]), default="binary")
def track(config_path, overrides, events_in, estimates_out, fmt):
    """Vicinity-vote tracking over an event file; writes t,x,y,support CSV."""
    try:
        tree = _load_tree(config_path, overrides)
        tr = tree.get("tracker", {})
        params = tracker_mod.TrackerParams(
            window=int(tr.get("window", 20)),
            vicinity_radius=int(tr.get("vicinity_radius", 3)),
        )
        with open(events_in, "rb") as fh:
            stream = read_stream(fh.read(), fmt)
        estimates = tracker_mod.track_stream(stream, params)
        with open(estimates_out, "w") as fh:
            fh.write(tracker_mod.estimates_csv(estimates))
        click.echo(f"{len(estimates)} estimates from {len(stream)} events")
    except Exception as exc:
        _fail("track", exc)


@main.command()
@common_options
@click.option("--positions-in", type=click.Path(exists=True), required=True,
              help="CSV with x_mm,y_mm per line (optional t first column)")
@click.option("--angles-out", type=click.Path(), required=True)
def ik(config_path, overrides, positions_in, angles_out):
    """Solve inverse kinematics for a CSV of target positions."""
    try:
        tree = _load_tree(config_path, overrides)
        geom = geometry_from_dict(tree.get("robot", {}))
        rows = np.loadtxt(positions_in, delimiter=",", ndmin=2)
        lines = ["xi_deg,sigma_deg"]
        for row in rows:
            x, y = (row[-2], row[-1])
            angles = inverse_kinematics(geom, (float(x), float(y)))
            lines.append(f"{angles.xi:.9f},{angles.sigma:.9f}")
        with open(angles_out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        click.echo(f"solved {len(rows)} targets")
    except Exception as exc:
        _fail("ik", exc)


@main.command()
@common_options
@click.option("--out", "outdir", type=click.Path(), required=True)
def run(config_path, overrides, outdir):
    """Full closed-loop batch run; writes the report bundle."""
    try:
        tree = _load_tree(config_path, overrides)
        spec = pipeline.runspec_from_dict(tree)
        report = pipeline.run(spec)
        pipeline.persist_report(report, outdir, cfg.dumps(tree))
        for mode, rep in sorted(report.reports.items()):
            click.echo(
                f"{mode}: rms {rep.rms_error_mm:.2f} mm, "
                f"max {rep.max_error_mm:.2f} mm, bytes {rep.data_bytes}"
            )
    except Exception as exc:
        _fail("run", exc)


@main.command()
@common_options
@click.option("--out", "outdir", type=click.Path(), default=None)
def compare(config_path, overrides, outdir):
    """Run both modes and print the side-by-side comparison."""
    try:
        tree = _load_tree(config_path, overrides)
        spec = pipeline.runspec_from_dict(tree)
        spec.mode = "both"
        report = pipeline.run(spec)
        summary = pipeline.compare_modes(report)
        if outdir:
            pipeline.persist_report(report, outdir, cfg.dumps(tree))
        click.echo(json.dumps(summary, indent=2, sort_keys=True))
    except Exception as exc:
        _fail("compare", exc)


@main.command()
@common_options
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8765, type=int)
@click.option("--realtime/--fast", default=True)
def serve(config_path, overrides, host, port, realtime):
    """Run the live pipeline with the control/streaming endpoint."""
    try:
        from ldsitrack import live

        tree = _load_tree(config_path, overrides)
        spec = pipeline.runspec_from_dict(tree)
        engine, server = live.serve(spec, host, port, realtime=realtime)
        click.echo(f"live endpoint on {host}:{server.port} (ctrl-c to stop)")
        try:
            import time

            while True:
                time.sleep(1)
        except KeyboardInterrupt:
            engine.stop()
            server.stop()
    except Exception as exc:
        _fail("serve", exc)


if __name__ == "__main__":
    main()
