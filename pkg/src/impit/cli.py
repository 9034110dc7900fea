"""Batch command-line front end.

Subcommands: episodes | index | calibrate | stats. Every run echoes its
fully expanded configuration into the output directory and writes a
manifest listing each artifact with a content hash, so runs are
reproducible and diffable. Exit codes: 0 success, 2 validation error,
1 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

from . import calibrate as cal
from . import episodes as epi
from . import index as idx
from . import stats as st
from .errors import ImpitError, ValidationError
from .intensity import IntensityKind
from .timeline import Resolution, Season, ingest_signal
from .weights import WeightParams

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2

JOBS_ENV_VAR = "IMPIT_MAX_JOBS"

PARAM_HELP = {
    "m": "memory: length (in resolution units) of the fixed backward window, "
         "ending at the evaluation anchor, within which episodes contribute",
    "a": "persistence dampening: controls how strongly short episodes are "
         "down-weighted relative to their duration within the memory; near "
         "zero gives every episode about the same persistence weight",
    "b": "recency dampening: rate of decay of the recency weight as an "
         "episode's position moves away from the peak; low values flatten "
         "the recency weight",
    "c": "recency skew in [0,1]: positions the recency-weight peak at "
         "fraction c of the memory; near zero favours recent episodes, near "
         "one favours episodes late in the memory",
    "d": "timing dampening: growth rate of the timing weight with the "
         "fraction of the episode overlapping the special season; the "
         "weight increases with d",
}


def _season(text):
    return Season.parse(text) if text else None


def _load_signal(args):
    schema = {}
    if getattr(args, "timestamp_col", None):
        schema["timestamp"] = args.timestamp_col
    if getattr(args, "value_col", None):
        schema["value"] = args.value_col
    return ingest_signal(args.signal, schema=schema, resolution=args.resolution)


def _parse_schedule(text, signal=None):
    """`yearly:START:END[:MM[-DD]]`, a comma list of dates, or default
    December-first of each year spanned by the signal."""
    if text:
        if text.startswith("yearly:"):
            parts = text.split(":")
            start, end = int(parts[1]), int(parts[2])
            month, day = 12, 1
            if len(parts) > 3:
                md = parts[3].split("-")
                month = int(md[0])
                if len(md) > 1:
                    day = int(md[1])
            return idx.EvaluationSchedule.yearly(start, end, month, day)
        import datetime as dt

        anchors = []
        for token in text.split(","):
            token = token.strip()
            if len(token) == 7:
                y, m = token.split("-")
                anchors.append(dt.date(int(y), int(m), 1))
            else:
                anchors.append(dt.date.fromisoformat(token))
        return idx.EvaluationSchedule(tuple(anchors))
    if signal is None:
        raise ValidationError("no schedule given and no signal to derive one from")
    return idx.EvaluationSchedule.yearly(signal.start.year, signal.end.year)


def _check_schedule(schedule, signal):
    for anchor in schedule.anchors:
        if anchor < signal.start:
            raise ValidationError(
                f"anchor {anchor} precedes the first observation {signal.start}"
            )


def _float_list(text):
    return tuple(float(x) for x in text.split(","))


def _int_list(text):
    return tuple(int(x) for x in text.split(","))


class OutputDir:
    """Collects artifacts and writes manifest + expanded-config echo."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.artifacts = []

    def file(self, name) -> Path:
        p = self.path / name
        self.artifacts.append(p)
        return p

    def finish(self, config: dict):
        echo = self.path / "config_echo.json"
        with open(echo, "w", encoding="utf-8") as fh:
            json.dump(config, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
        manifest = {"artifacts": []}
        for p in self.artifacts:
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            manifest["artifacts"].append({"name": p.name, "sha256": digest})
        with open(self.path / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _apply_config_file(args, parser, argv):
    """Re-parse with config values as defaults, so flags override config."""
    if not getattr(args, "config", None):
        return args
    with open(args.config, encoding="utf-8") as fh:
        conf = json.load(fh)
    known = set(vars(args))
    unknown = set(conf) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    coerced = {}
    for key, value in conf.items():
        if key == "m_list" and isinstance(value, list):
            value = tuple(int(v) for v in value)
        elif key.endswith(("_grid", "_list")) and isinstance(value, list):
            value = tuple(float(v) for v in value)
        coerced[key] = value
    # defaults must land on the subcommand parser: subparser defaults would
    # otherwise overwrite top-level ones on re-parse
    parser._command_parsers[args.command].set_defaults(**coerced)
    return parser.parse_args(argv)


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise ValidationError(f"--{name.replace('_', '-')} is required")


def _jobs(args) -> int:
    jobs = getattr(args, "jobs", 1) or 1
    cap = os.environ.get(JOBS_ENV_VAR)
    if cap:
        jobs = min(jobs, int(cap))
    return max(1, jobs)


# --- subcommands ----------------------------------------------------------


def cmd_episodes(args) -> int:
    out = OutputDir(args.out_dir)
    season = _season(args.season)
    if args.method == "threshold":
        signal = _load_signal(args)
        if args.threshold is None:
            raise ValidationError("--threshold is required for method=threshold")
        episode_set = epi.extract_threshold(
            signal, args.threshold, args.direction, args.min_duration, season
        )
    elif args.method == "climatology":
        signal = _load_signal(args)
        if not args.baseline:
            raise ValidationError("--baseline START:END is required for climatology")
        start, end = (int(x) for x in args.baseline.split(":"))
        episode_set = epi.extract_climatology(
            signal, (start, end), args.percentile, args.min_duration, season
        )
    elif args.method == "periodic":
        signal = _load_signal(args)
        if season is None:
            raise ValidationError("--season is required for method=periodic")
        episode_set = epi.extract_periodic(signal, season)
    else:  # load
        signal = _load_signal(args) if args.signal else None
        resolution = Resolution.parse(args.resolution) if signal is None else None
        episode_set = epi.load_episodes(
            args.episodes, season=season, signal=signal, resolution=resolution
        )
    epi.write_episodes(episode_set, out.file(args.out))
    out.finish(_expanded(args))
    print(f"{len(episode_set)} episodes -> {out.path / args.out}")
    return EXIT_OK


def _episode_set_from_args(args, signal):
    season = _season(args.season)
    if args.episodes:
        return epi.load_episodes(
            args.episodes, season=season, signal=signal,
            resolution=Resolution.parse(args.resolution) if signal is None else None,
        )
    if args.threshold is None:
        raise ValidationError("need --episodes FILE or --threshold/--direction")
    if signal is None:
        raise ValidationError("--signal is required to extract threshold episodes")
    return epi.extract_threshold(
        signal, args.threshold, args.direction, args.min_duration, season
    )


def cmd_index(args) -> int:
    _require(args, "m")
    out = OutputDir(args.out_dir)
    signal = _load_signal(args) if args.signal else None
    episode_set = _episode_set_from_args(args, signal)
    timing_season = _season(args.timing_season)
    params = WeightParams(
        m=args.m, a=args.a, b=args.b, c=args.c, d=args.d,
        timing_enabled=timing_season is not None,
    )
    kind = IntensityKind.parse(args.intensity)
    schedule = _parse_schedule(args.anchors, signal)
    if signal is not None:
        _check_schedule(schedule, signal)
    series = idx.evaluate(
        episode_set, params, kind, schedule,
        season=timing_season or episode_set.season, edge=args.edge,
    )
    if timing_season is not None and all(v == 0.0 for v in series.values):
        print("warning: index is identically zero (no season overlap, or d too small)",
              file=sys.stderr)
    resolution = episode_set.resolution
    idx.write_index(series, out.file(args.out), resolution)
    if args.explain:
        idx.write_diagnostics(series, out.file(args.diagnostics_out), resolution)
    out.finish(_expanded(args))
    print(f"{len(series)} anchors -> {out.path / args.out}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    _require(args, "stage", "m_list", "response")
    out = OutputDir(args.out_dir)
    signal = _load_signal(args) if args.signal else None
    episode_set = _episode_set_from_args(args, signal)
    season = _season(args.calibration_season)
    stage = f"S{args.stage}"
    if stage == "S3" and season is None:
        raise ValidationError("stage 3 requires --calibration-season")
    spec = cal.StageSpec(
        stage=stage,
        m_list=args.m_list,
        a_grid=args.a_grid if args.a_grid else cal.DEFAULT_A_GRID,
        a=args.a,
        b_grid=args.b_list if args.b_list else cal.DEFAULT_B_GRID,
        c_grid=args.c_grid if args.c_grid else cal.DEFAULT_C_GRID,
        d_grid=args.d_list if args.d_list else cal.DEFAULT_D_GRID,
        season=season,
        edge=args.edge,
    )
    kind = IntensityKind.parse(args.intensity)
    schedule = _parse_schedule(args.anchors, signal)
    if signal is not None:
        _check_schedule(schedule, signal)
    response = st.load_response(
        args.response, transform="log" if args.log_response else "none"
    )
    cal_map = cal.run_stage(spec, episode_set, kind, schedule, response, jobs=_jobs(args))
    cal.write_map(cal_map, out.file(args.out))
    if args.select:
        selection = cal.select(
            cal_map, rule=args.select, stability_radius=args.stability_radius,
            manual_config=json.loads(args.manual_config) if args.manual_config else None,
            rationale=args.rationale,
        )
        cal.write_selection(selection, out.file("selection.json"))
    out.finish(_expanded(args))
    print(f"{cal_map.cells_evaluated} cells -> {out.path / args.out}")
    return EXIT_OK


def cmd_stats(args) -> int:
    _require(args, "index", "response")
    out = OutputDir(args.out_dir)
    anchors, values = [], []
    with open(args.index, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        import datetime as dt

        for row in reader:
            token = row["anchor"]
            if len(token) == 7:
                y, m = token.split("-")
                anchors.append(dt.date(int(y), int(m), 1))
            else:
                anchors.append(dt.date.fromisoformat(token))
            values.append(float(row["value"]))
    series = idx.IndexSeries(
        anchors=tuple(anchors), values=tuple(values),
        params=WeightParams(m=1), kind=IntensityKind.MEAN,
        episode_source="file", diagnostics=tuple(() for _ in anchors),
    )
    response = st.load_response(
        args.response, transform="log" if args.log_response else "none"
    )
    join = st.align(series, response)
    assoc = st.pearson(join.pairs)
    report = assoc.to_dict()
    report["dropped_left"] = join.dropped_left
    report["dropped_right"] = join.dropped_right
    with open(out.file("association.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.smooth:
        smoothed = st.moving_average(list(zip(anchors, values)), args.smooth)
        with open(out.file("smoothed.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["anchor", "value"])
            for t, v in smoothed:
                writer.writerow([t.isoformat(), repr(v)])
    out.finish(_expanded(args))
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def _expanded(args) -> dict:
    conf = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    return conf


# --- parser ---------------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="JSON config file; flags take precedence")
    p.add_argument("--out-dir", default=".", help="directory for all outputs")
    p.add_argument("--signal", help="signal CSV path")
    p.add_argument("--timestamp-col", help="timestamp column name (default 'timestamp')")
    p.add_argument("--value-col", help="value column name (default 'value')")
    p.add_argument("--resolution", default="monthly",
                   help="daily | monthly | custom:N (grid step in days)")
    p.add_argument("--season", help="episode season MM-DD:MM-DD (overlap counting)")


def _add_episode_source(p):
    p.add_argument("--episodes", help="episode CSV to load instead of extracting")
    p.add_argument("--threshold", type=float, help="threshold for run extraction")
    p.add_argument("--direction", choices=("up", "down"), default="up",
                   help="up: values >= threshold; down: values <= threshold")
    p.add_argument("--min-duration", type=int, default=1,
                   help="minimum run length to qualify as an episode (>= 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="impit",
        description="Episodic environmental index toolkit: extract episodes, "
        "build weighted indices, calibrate against a response series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_epi = sub.add_parser("episodes", help="extract or load episodes, write episode CSV")
    _add_common(p_epi)
    _add_episode_source(p_epi)
    p_epi.add_argument("--method", default="threshold",
                       choices=("threshold", "climatology", "periodic", "load"))
    p_epi.add_argument("--baseline", help="climatology baseline years START:END")
    p_epi.add_argument("--percentile", type=float, default=90.0,
                       help="climatology percentile threshold (default 90)")
    p_epi.add_argument("--out", default="episodes.csv", help="episode CSV filename")
    p_epi.set_defaults(func=cmd_episodes)

    p_idx = sub.add_parser("index", help="evaluate the weighted episodic index")
    _add_common(p_idx)
    _add_episode_source(p_idx)
    p_idx.add_argument("--m", type=int, help=PARAM_HELP["m"])
    p_idx.add_argument("--a", type=float, default=0.0, help=PARAM_HELP["a"])
    p_idx.add_argument("--b", type=float, default=0.0, help=PARAM_HELP["b"])
    p_idx.add_argument("--c", type=float, default=0.5, help=PARAM_HELP["c"])
    p_idx.add_argument("--d", type=float, default=1.0, help=PARAM_HELP["d"])
    p_idx.add_argument("--timing-season",
                       help="special season MM-DD:MM-DD; enables the timing weight")
    p_idx.add_argument("--intensity", default="mean",
                       help="mean | log_sum | median | min | max | sum | precomputed")
    p_idx.add_argument("--anchors",
                       help="yearly:START:END[:MM[-DD]] or comma-separated dates "
                            "(default: December of each signal year)")
    p_idx.add_argument("--edge", default="truncate", choices=("truncate", "drop"),
                       help="treatment of episodes straddling the window edge")
    p_idx.add_argument("--explain", action="store_true",
                       help="also write per-episode weight diagnostics")
    p_idx.add_argument("--out", default="index.csv")
    p_idx.add_argument("--diagnostics-out", default="diagnostics.csv")
    p_idx.set_defaults(func=cmd_index)

    p_cal = sub.add_parser("calibrate", help="run one calibration stage grid sweep")
    _add_common(p_cal)
    _add_episode_source(p_cal)
    p_cal.add_argument("--stage", type=int, choices=(1, 2, 3))
    p_cal.add_argument("--m-list", type=_int_list,
                       help="comma-separated memory lengths; " + PARAM_HELP["m"])
    p_cal.add_argument("--a-grid", type=_float_list,
                       help="stage-1 grid (default 0,0.25,...,5); " + PARAM_HELP["a"])
    p_cal.add_argument("--a", type=float, default=0.0,
                       help="fixed stage-1 choice used by stages 2/3; " + PARAM_HELP["a"])
    p_cal.add_argument("--b-list", type=_float_list,
                       help="grid (default 0.5,1,...,5); " + PARAM_HELP["b"])
    p_cal.add_argument("--c-grid", type=_float_list,
                       help="grid (default 0,0.05,...,1); " + PARAM_HELP["c"])
    p_cal.add_argument("--d-list", type=_float_list,
                       help="stage-3 grid (default 0.5,1,2,3); " + PARAM_HELP["d"])
    p_cal.add_argument("--calibration-season",
                       help="stage-3 special season MM-DD:MM-DD")
    p_cal.add_argument("--response", help="response CSV (timestamp,value)")
    p_cal.add_argument("--log-response", action="store_true",
                       help="natural-log transform the response before pairing")
    p_cal.add_argument("--intensity", default="mean")
    p_cal.add_argument("--anchors")
    p_cal.add_argument("--edge", default="truncate", choices=("truncate", "drop"))
    p_cal.add_argument("--jobs", type=int, default=1,
                       help=f"parallel cell evaluations (capped by ${JOBS_ENV_VAR})")
    p_cal.add_argument("--select", choices=("max_abs_r", "manual"),
                       help="record a selection alongside the map")
    p_cal.add_argument("--stability-radius", type=int, default=1)
    p_cal.add_argument("--manual-config",
                       help='JSON, e.g. \'{"m":30,"a":0,"b":3,"c":0.4,"d":1}\'')
    p_cal.add_argument("--rationale", default="", help="free-text selection rationale")
    p_cal.add_argument("--out", default="map.csv")
    p_cal.set_defaults(func=cmd_calibrate)

    p_st = sub.add_parser("stats", help="associate an index CSV with a response CSV")
    p_st.add_argument("--config", help="JSON config file; flags take precedence")
    p_st.add_argument("--out-dir", default=".")
    p_st.add_argument("--index", help="index CSV (anchor,value,K)")
    p_st.add_argument("--response")
    p_st.add_argument("--log-response", action="store_true")
    p_st.add_argument("--smooth", type=int,
                      help="odd window for a centered moving average of the index")
    p_st.set_defaults(func=cmd_stats)

    parser._command_parsers = {
        "episodes": p_epi, "index": p_idx, "calibrate": p_cal, "stats": p_st,
    }
    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    try:
        args = _apply_config_file(args, parser, argv)
        return args.func(args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ImpitError as exc:
        print(f"error [{exc.reason}]: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
