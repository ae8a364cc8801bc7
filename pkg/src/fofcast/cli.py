"""Command-line front end: ingest, fit, predict, grid, length-study, export.

Exit codes: 0 success, 2 input/validation error, 3 numerical error,
4 lookup error. Every command writes a manifest sufficient to replay it.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FofcastError, SingularityError, StormLookupError
from .experiment import (ExperimentConfig, SplitRunner, forecasts_to_geojson,
                         length_study, repeated_simulation)
from .ingest import (DatasetMatrix, build_matrices, extract_tail,
                     filter_min_length, parse_csv, parse_rsmc, time_grid,
                     train_test_split)
from .regression import FoFModel, predict_trajectory


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace,
                    timings: dict[str, float]) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "arguments": {k: str(v) if isinstance(v, Path) else v
                      for k, v in vars(args).items() if k != "func"},
        "timings_s": timings,
    }
    (out_dir / f"{command}_manifest.json").write_text(
        json.dumps(manifest, indent=2))


def _load_storms(path: Path, fmt: str):
    text = path.read_text()
    return parse_rsmc(text) if fmt == "rsmc" else parse_csv(text)


def _write_matrix_csv(path: Path, matrix: DatasetMatrix) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(matrix.storm_ids)
        for row in matrix.values:
            writer.writerow([repr(float(v)) for v in row])


def _read_matrix_csv(path: Path, total_len: int) -> DatasetMatrix:
    with path.open() as fh:
        rows = list(csv.reader(fh))
    ids = tuple(rows[0])
    values = np.array([[float(v) for v in row] for row in rows[1:]])
    return DatasetMatrix(values=values, time_grid=time_grid(total_len),
                         storm_ids=ids)


def _load_dataset(data_dir: Path) -> tuple[DatasetMatrix, DatasetMatrix, dict]:
    meta = json.loads((data_dir / "dataset.json").read_text())
    lat = _read_matrix_csv(data_dir / "lat.csv", meta["total_len"])
    lon = _read_matrix_csv(data_dir / "lon.csv", meta["total_len"])
    return lat, lon, meta


def _config_from_args(args: argparse.Namespace, meta: dict) -> ExperimentConfig:
    return ExperimentConfig(
        total_len=meta["total_len"], predictor_len=meta["predictor_len"],
        ratio=args.ratio, seed=args.seed, K_t=args.k_t, K_s=args.k_s,
        ridge=args.ridge, k_lat_max=args.k_lat, k_lon_max=args.k_lon,
        n_repetitions=args.reps, min_cluster_size=args.min_cluster_size,
    )


def cmd_ingest(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    if args.predictor_len >= args.total_len:
        print("error: --predictor-len must be smaller than --total-len",
              file=sys.stderr)
        return 2
    if not args.input.exists():
        print(f"error: input file not found: {args.input}", file=sys.stderr)
        return 2
    storms = _load_storms(args.input, args.format)
    storms = filter_min_length(storms, args.min_len)
    windows = [extract_tail(s, args.total_len, args.predictor_len)
               for s in storms if len(s) >= args.total_len]
    lat, lon = build_matrices(windows)
    args.out.mkdir(parents=True, exist_ok=True)
    _write_matrix_csv(args.out / "lat.csv", lat)
    _write_matrix_csv(args.out / "lon.csv", lon)
    (args.out / "dataset.json").write_text(json.dumps({
        "total_len": args.total_len, "predictor_len": args.predictor_len,
        "min_len": args.min_len, "n_storms": lat.n_storms,
        "source_format": args.format, "source_path": str(args.input),
    }, indent=2))
    _write_manifest(args.out, "ingest", args,
                    {"total": time.perf_counter() - t0})
    print(f"ingested {lat.n_storms} storms "
          f"(L={args.total_len}, P={args.predictor_len}) -> {args.out}")
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    lat, lon, meta = _load_dataset(args.data)
    config = _config_from_args(args, meta)
    train_idx, test_idx = train_test_split(lat.n_storms, config.ratio,
                                           config.seed)
    runner = SplitRunner(lat, lon, train_idx, test_idx, config)
    cols = np.arange(len(train_idx))
    lat_model = runner.fit_coordinate("lat", cols)
    lon_model = runner.fit_coordinate("lon", cols)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "lat_model.json").write_text(lat_model.to_json())
    (args.out / "lon_model.json").write_text(lon_model.to_json())
    (args.out / "split.json").write_text(json.dumps({
        "seed": config.seed, "ratio": config.ratio,
        "train": train_idx.tolist(), "test": test_idx.tolist(),
        "total_len": meta["total_len"], "predictor_len": meta["predictor_len"],
    }))
    _write_manifest(args.out, "fit", args, {"total": time.perf_counter() - t0})
    print(f"fitted global lat/lon models on {len(train_idx)} training storms "
          f"-> {args.out}")
    return 0


def _windows_from_dataset(lat: DatasetMatrix, lon: DatasetMatrix, meta: dict):
    from .ingest import TrajectoryWindow
    return [
        TrajectoryWindow(storm_id=sid,
                         lat_series=lat.values[:, j].copy(),
                         lon_series=lon.values[:, j].copy(),
                         total_length=meta["total_len"],
                         predictor_length=meta["predictor_len"])
        for j, sid in enumerate(lat.storm_ids)
    ]


def cmd_predict(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    lat, lon, meta = _load_dataset(args.data)
    lat_model = FoFModel.from_json((args.models / "lat_model.json").read_text())
    lon_model = FoFModel.from_json((args.models / "lon_model.json").read_text())
    windows = _windows_from_dataset(lat, lon, meta)
    by_id = {w.storm_id: w for w in windows}
    unknown = [sid for sid in args.storm_ids if sid not in by_id]
    if unknown:
        print(f"error: unknown storm ids: {', '.join(unknown)}\n"
              f"available: {', '.join(sorted(by_id))}", file=sys.stderr)
        return 4
    grid = time_grid(meta["total_len"])
    P = meta["predictor_len"]
    selected = [by_id[sid] for sid in args.storm_ids] if args.storm_ids else windows
    forecasts = [predict_trajectory(lat_model, lon_model, w, grid[:P], grid[P:])
                 for w in selected]
    geojson = forecasts_to_geojson(selected, forecasts,
                                   include_truth=not args.no_truth)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(geojson, indent=2))
    _write_manifest(args.out.parent, "predict", args,
                    {"total": time.perf_counter() - t0})
    print(f"wrote {len(forecasts)} forecasts -> {args.out}")
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    lat, lon, meta = _load_dataset(args.data)
    config = _config_from_args(args, meta)
    try:
        report = repeated_simulation(lat, lon, config)
    except SingularityError as exc:
        print(f"error: numerical failure during grid search: {exc}",
              file=sys.stderr)
        return 3
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "grid.csv").write_text(report.to_csv())
    (args.out / "report.json").write_text(report.to_json())
    _write_manifest(args.out, "grid", args, {"total": time.perf_counter() - t0})
    k_lat, k_lon = report.best_pair
    print(f"global mean error: {report.global_mean:.2f} km")
    print(f"best pair: k_lat={k_lat}, k_lon={k_lon} "
          f"with {report.best_error:.2f} km over {config.n_repetitions} repetitions")
    return 0


def cmd_length_study(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    if not args.input.exists():
        print(f"error: input file not found: {args.input}", file=sys.stderr)
        return 2
    storms = _load_storms(args.input, args.format)
    config = ExperimentConfig(
        total_len=args.lengths[0], predictor_len=args.lengths[0] - args.response_len,
        ratio=args.ratio, seed=args.seed, K_t=args.k_t, K_s=args.k_s,
        ridge=args.ridge, k_lat_max=args.k_lat, k_lon_max=args.k_lon,
        n_repetitions=args.reps, min_cluster_size=args.min_cluster_size,
    )
    try:
        entries = length_study(storms, config, lengths=args.lengths,
                               response_len=args.response_len)
    except SingularityError as exc:
        print(f"error: numerical failure during length study: {exc}",
              file=sys.stderr)
        return 3
    args.out.mkdir(parents=True, exist_ok=True)
    summary = []
    for e in entries:
        name = f"length_{e.total_len}_minrec_{e.min_records}"
        (args.out / f"{name}.json").write_text(e.report.to_json())
        (args.out / f"{name}.csv").write_text(e.report.to_csv())
        summary.append({
            "min_records": e.min_records, "data_size": e.data_size,
            "total_len": e.total_len, "best_error": e.report.best_error,
            "best_pair": list(e.report.best_pair),
            "global_mean": e.report.global_mean,
        })
        print(f"size {e.data_size:5d} L={e.total_len}: "
              f"best {e.report.best_error:.2f} km at k_lat={e.report.best_pair[0]}, "
              f"k_lon={e.report.best_pair[1]}")
    (args.out / "length_study.json").write_text(json.dumps(summary, indent=2))
    _write_manifest(args.out, "length-study", args,
                    {"total": time.perf_counter() - t0})
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    lat, lon, meta = _load_dataset(args.data)
    lat_model = FoFModel.from_json((args.models / "lat_model.json").read_text())
    lon_model = FoFModel.from_json((args.models / "lon_model.json").read_text())
    split = json.loads((args.models / "split.json").read_text())
    windows = _windows_from_dataset(lat, lon, meta)
    test_windows = [windows[i] for i in split["test"]]
    grid = time_grid(meta["total_len"])
    P = meta["predictor_len"]
    forecasts = [predict_trajectory(lat_model, lon_model, w, grid[:P], grid[P:])
                 for w in test_windows]
    geojson = forecasts_to_geojson(test_windows, forecasts)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(geojson, indent=2))
    _write_manifest(args.out.parent, "export", args,
                    {"total": time.perf_counter() - t0})
    print(f"exported {len(forecasts)} test-set forecasts -> {args.out}")
    return 0


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ratio", type=float, default=0.8,
                   help="train fraction of the split (default 0.8)")
    p.add_argument("--seed", type=int, default=0, help="base random seed")
    p.add_argument("--k-t", type=int, default=12,
                   help="predictor basis dimension (default 12)")
    p.add_argument("--k-s", type=int, default=6,
                   help="response basis dimension (default 6)")
    p.add_argument("--ridge", type=float, default=1e-8,
                   help="ridge on the coefficient surface (default 1e-8)")
    p.add_argument("--k-lat", type=int, default=10,
                   help="largest latitude cluster count (default 10)")
    p.add_argument("--k-lon", type=int, default=10,
                   help="largest longitude cluster count (default 10)")
    p.add_argument("--reps", type=int, default=10,
                   help="number of repeated simulations (default 10)")
    p.add_argument("--min-cluster-size", type=int, default=15,
                   help="smallest pair size fitted locally (default 15)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fofcast",
        description="Cyclone track forecasting with function-on-function "
                    "regression and functional clustering.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse best-track data into matrices")
    p.add_argument("--format", choices=("rsmc", "csv"), default="rsmc")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--min-len", type=int, default=32,
                   help="minimum record count per storm (default 32)")
    p.add_argument("--total-len", type=int, default=32,
                   help="trajectory window length (default 32)")
    p.add_argument("--predictor-len", type=int, default=24,
                   help="predictor segment length (default 24)")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit", help="fit global lat/lon regression models")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_model_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="forecast storms and write GeoJSON")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--models", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--no-truth", action="store_true",
                   help="omit observed response segments and error properties")
    p.add_argument("storm_ids", nargs="*",
                   help="storm ids to forecast (default: all)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("grid", help="cluster-pair grid search with repetitions")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_model_flags(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("length-study",
                       help="window length vs data size trade-off study")
    p.add_argument("--format", choices=("rsmc", "csv"), default="rsmc")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--lengths", type=int, nargs="+", default=[32, 40, 48])
    p.add_argument("--response-len", type=int, default=8,
                   help="fixed response segment length (default 8)")
    _add_model_flags(p)
    p.set_defaults(func=cmd_length_study)

    p = sub.add_parser("export", help="export all test-set forecasts as GeoJSON")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--models", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SingularityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except StormLookupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (FofcastError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
