"""Command-line entry point: collect, synth, run, compare."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .ctrl import write_step_log
from .datagen import export_archive_csv, load_archive, save_archive
from .gainsynth import GainSynthesisError
from .harness import (
    CollectionError,
    ConfigError,
    ScenarioConfig,
    collect_with_retries,
    compare_datasets,
    prepare_dataset,
    run_scenario,
    write_metrics_csv,
    write_trajectory_csv,
    dataset_streams,
)
from .platoon import CollisionError, build_model
from .sysid import export_tube_csv

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_COLLISION = 0, 2, 3, 4


def _config(args) -> ScenarioConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        try:
            data[key] = json.loads(value)
        except json.JSONDecodeError:
            data[key] = value
    if getattr(args, "methods", None):
        data["methods"] = args.methods.split(",")
    return ScenarioConfig.from_dict(data)


def _exit_code(statuses) -> int:
    if "collision" in statuses:
        return EXIT_COLLISION
    if set(statuses) - {"ok"}:
        return EXIT_INFEASIBLE
    return EXIT_OK


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_collect(args) -> int:
    cfg = _config(args)
    rng = dataset_streams(cfg.seed + args.dataset)[0]
    archive = collect_with_retries(cfg, build_model(cfg.n, cfg.v_star, cfg.dt, cfg.ovm), rng,
                                   {"dataset": args.dataset, "seed": cfg.seed + args.dataset})
    path = save_archive(archive, args.out)
    if args.csv:
        export_archive_csv(archive, args.csv)
    print(f"archive written to {path} (T={archive.T}, attempts={archive.meta['attempts']})")
    return EXIT_OK


def _artifacts(cfg, args, methods):
    archive = load_archive(args.archive) if args.archive else None
    return prepare_dataset(cfg, args.dataset, methods, archive)


def cmd_synth(args) -> int:
    cfg = _config(args)
    out = _out_dir(args.out)
    art = _artifacts(cfg, args, ("rdeep",))
    if art.gain is None:
        print(f"synthesis failed: {art.errors.get('rdeep')}", file=sys.stderr)
        return EXIT_INFEASIBLE
    (out / "gain.txt").write_text(art.gain.to_text())
    export_tube_csv(art.tube, out / "tube.csv")
    print(f"gain validated on {art.gain.samples_checked} samples "
          f"(worst spectral radius {art.gain.worst_spectral_radius:.6f})")
    if "rdeep" in art.errors:
        print(f"tube does not fit the constraints: {art.errors['rdeep']}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    art = None
    if any(m != "hdv" for m in cfg.methods):
        art = _artifacts(cfg, args, cfg.methods)
    runs = run_scenario(cfg, art, dataset=args.dataset)
    write_trajectory_csv(runs.values(), args.out)
    if args.step_log:
        write_step_log([r for log in runs.values() for r in log.records], args.step_log)
    for m, log in runs.items():
        print(f"{m:<6} {log.status:<15} {log.message}")
    return _exit_code({log.status for log in runs.values()})


def cmd_compare(args) -> int:
    cfg = _config(args)
    out = _out_dir(args.out)

    def progress(d, runs):
        if not args.quiet:
            print(f"data set {d}: " + ", ".join(f"{m}={log.status}" for m, log in runs.items()),
                  file=sys.stderr)

    report, logs = compare_datasets(cfg, args.datasets, progress, workers=args.workers)
    write_metrics_csv(report, out / "metrics.csv")
    table = report.table()
    (out / "summary.txt").write_text(table + "\n")
    if args.trajectories:
        write_trajectory_csv(logs.values(), out / "trajectories.csv")
    print(table)
    return _exit_code({r["status"] for r in report.rows})


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rdeeplcc", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, dataset=True):
        sp.add_argument("--config", help="JSON scenario config (missing keys take the defaults)")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        if dataset:
            sp.add_argument("--dataset", type=int, default=0, help="data set index (seed offset)")

    sp = sub.add_parser("collect", help="collect one offline archive")
    common(sp)
    sp.add_argument("--out", required=True, help="archive path (.npz)")
    sp.add_argument("--csv", help="also export the archive as CSV")
    sp.set_defaults(fn=cmd_collect)

    sp = sub.add_parser("synth", help="estimate the model set, gain and error tube")
    common(sp)
    sp.add_argument("--archive", help="use this archive instead of collecting")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(fn=cmd_synth)

    sp = sub.add_parser("run", help="simulate one scenario")
    common(sp)
    sp.add_argument("--archive", help="use this archive instead of collecting")
    sp.add_argument("--methods", help="comma-separated subset of hdv,mpc,deepc,rdeep")
    sp.add_argument("--out", required=True, help="trajectory CSV path")
    sp.add_argument("--step-log", help="per-step controller log CSV path")
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("compare", help="run the full multi-data-set campaign")
    common(sp, dataset=False)
    sp.add_argument("--methods", help="comma-separated subset of hdv,mpc,deepc,rdeep")
    sp.add_argument("--datasets", type=int, help="number of data sets (default from config)")
    sp.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    sp.add_argument("--trajectories", action="store_true", help="also write all trajectories")
    sp.add_argument("--quiet", action="store_true")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(fn=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CollectionError, CollisionError) as exc:
        print(f"collision: {exc}", file=sys.stderr)
        return EXIT_COLLISION
    except GainSynthesisError as exc:
        print(f"synthesis failed: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
