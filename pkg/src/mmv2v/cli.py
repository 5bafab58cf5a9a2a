"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data or convergence error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .errors import DataFormatError, NoCrossingError
from .estimation import apply_censoring, fit_ml, read_samples_csv, samples_from_arrays
from .ingestion import (build_records, dump_records_jsonl, read_fixes_jsonl,
                        read_records_jsonl, read_spans_csv, read_tags_jsonl, to_path_loss)
from .linkbudget import PRESETS, load_budget, max_measurable_pl
from .models import (ModelKey, PathLossModel, Unavailable, Visibility, evaluate_mean,
                     sample_path_loss, tr37885_model)
from .registry import DEFAULT_REGISTRY, Registry
from .shadowing import ShadowingProcess, crossing_lag

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(v: float) -> str:
    s = f"{v:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _emit(text: str, output) -> None:
    """Write to stdout, or atomically replace ``output``."""
    if output in (None, "-"):
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(output))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mmv2v-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, output)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_key(text) -> ModelKey:
    try:
        return ModelKey.parse(text)
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None


def _registry(args) -> Registry:
    path = getattr(args, "model_file", None)
    if path is None:
        return DEFAULT_REGISTRY
    doc = _load_json(path)
    if not isinstance(doc, list):
        raise DataError(f"{path}: expected a registry document (JSON array)")
    return Registry.from_records(doc)


def _unavailable_message(result: Unavailable, registry: Registry) -> str:
    cells = "\n".join(f"  {k.format()}" for k in registry.unavailable())
    key = result.key.format() if isinstance(result.key, ModelKey) else str(result.key)
    return f"no model for {key}: {result.reason}\nunavailable cells:\n{cells}"


def _lookup(registry: Registry, key: ModelKey) -> PathLossModel:
    result = registry.lookup(key)
    if not result:
        raise DataError(_unavailable_message(result, registry))
    return result


def _resolve_model(args) -> PathLossModel:
    if args.model_file is not None:
        doc = _load_json(args.model_file)
        if isinstance(doc, dict):
            return PathLossModel.from_dict(doc)
        if args.key is None:
            raise UsageError("--model-file holds a registry; --key selects the model")
        return _lookup(Registry.from_records(doc), _parse_key(args.key))
    if args.key is None:
        raise UsageError("one of --key or --model-file is required")
    return _lookup(DEFAULT_REGISTRY, _parse_key(args.key))


def _distances(args, rng=None) -> np.ndarray:
    if getattr(args, "random_distances", None):
        d_min, d_max, n = args.random_distances
        if not (0 < d_min < d_max) or n != int(n) or n < 1:
            raise UsageError("--random-distances expects DMIN DMAX N with 0 < DMIN < DMAX, N >= 1")
        return 10.0 ** rng.uniform(np.log10(d_min), np.log10(d_max), int(n))
    if not args.distances:
        raise UsageError("--distances is required")
    spec = args.distances
    try:
        if spec.startswith("@"):
            with open(spec[1:]) as fh:
                values = [float(line) for line in fh if line.strip()]
        else:
            values = [float(v) for v in spec.split(",") if v.strip()]
    except ValueError as exc:
        raise DataError(f"bad distance list: {exc}") from None
    return np.asarray(values, dtype=float)


def cmd_ingest(args):
    budget = load_budget(args.budget)
    records = build_records(read_spans_csv(args.spans), read_fixes_jsonl(args.fixes),
                            read_tags_jsonl(args.tags), budget,
                            join_tolerance=args.join_tolerance,
                            uwb_max_range=args.uwb_max_range,
                            transition_window=args.window)
    _emit(dump_records_jsonl(records), args.output)
    print(f"{len(records)} records", file=sys.stderr)
    return EXIT_OK


def cmd_fit(args):
    if args.input.endswith((".jsonl", ".ndjson")):
        if args.budget is None:
            raise UsageError("fitting measurement records needs --budget")
        budget = load_budget(args.budget)
        records = read_records_jsonl(args.input)
        if args.key is not None:
            wanted = _parse_key(args.key)
            records = [r for r in records if r.tags.model_key() == wanted]
        samples = [to_path_loss(r, budget) for r in records]
        level = max_measurable_pl(budget) if args.censor_level is None else args.censor_level
    else:
        if args.censor_level is None:
            raise UsageError("--censor-level is required for CSV input")
        samples = read_samples_csv(args.input)
        level = args.censor_level
    result = fit_ml(samples, level, max_iter=args.max_iter)
    _emit(result.to_json(), args.output)
    if not result.converged:
        print(f"fit did not converge in {result.iterations} iterations", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def cmd_eval(args):
    model = _resolve_model(args)
    d = _distances(args)
    pl = np.atleast_1d(evaluate_mean(model, d))
    _emit(_csv(["distance_m", "path_loss_db"], zip(d.tolist(), pl.tolist())), args.output)
    return EXIT_OK


def cmd_sample(args):
    model = _resolve_model(args)
    rng = np.random.default_rng(args.seed)
    d = _distances(args, rng)
    if (args.td is None) != (args.dt is None):
        raise UsageError("--td and --dt must be given together")
    if args.td is not None:
        proc = ShadowingProcess(model.c_sigma, args.td, args.dt, rng=rng)
        pl = np.atleast_1d(evaluate_mean(model, d)) + proc.generate(d.size, rng)
    else:
        pl = np.atleast_1d(sample_path_loss(model, d, rng))
    if args.budget is not None:
        samples = apply_censoring(d, pl, max_measurable_pl(load_budget(args.budget)))
    else:
        samples = samples_from_arrays(d, pl)
    rows = [(s.distance, s.path_loss, int(s.censored)) for s in samples]
    _emit(_csv(["distance_m", "path_loss_db", "censored"], rows), args.output)
    return EXIT_OK


def cmd_compare(args):
    model_a = _resolve_model(args)
    if args.key_b is not None:
        model_b = _lookup(DEFAULT_REGISTRY, _parse_key(args.key_b))
    elif args.tr37885:
        if args.visibility is not None:
            vis = args.visibility
        elif args.key is not None:
            vis = _parse_key(args.key).visibility
        else:
            vis = Visibility.LOS
        model_b = tr37885_model(args.fc, vis)
    else:
        raise UsageError("compare needs --tr37885 or --key-b")
    d = _distances(args)
    pa = np.atleast_1d(evaluate_mean(model_a, d))
    pb = np.atleast_1d(evaluate_mean(model_b, d))
    rows = zip(d.tolist(), pa.tolist(), pb.tolist(), (pa - pb).tolist())
    _emit(_csv(["distance_m", "pl_a_db", "pl_b_db", "delta_db"], rows), args.output)
    return EXIT_OK


def cmd_decorrelate(args):
    series = []
    with open(args.series) as fh:
        for lineno, line in enumerate(fh, start=1):
            cell = line.strip().split(",")[0].strip()
            if not cell:
                continue
            try:
                series.append(float(cell))
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise DataFormatError(f"not a number: {cell!r}", args.series, lineno) from None
    if not args.dt > 0:
        raise UsageError("--dt must be > 0")
    try:
        lag = crossing_lag(series, args.max_lag)
    except NoCrossingError as exc:
        raise DataError(f"{exc} (largest computed lag {exc.max_lag})") from None
    out = {"t_d_s": lag * args.dt, "crossing_lag": lag, "n": len(series)}
    _emit(json.dumps(out, indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_registry(args):
    registry = _registry(args)
    if args.action == "export":
        _emit(registry.to_json(), args.output)
    elif args.action == "list":
        rows = []
        for key, model in registry:
            triple = (f"{{{model.a_slope:g}, {model.b_bias:g}, {model.c_sigma:g}}}"
                      if model else "unavailable")
            rows.append(f"{key.format()}\t{triple}")
        _emit("\n".join(rows) + "\n", args.output)
    else:
        if args.key is None:
            raise UsageError("registry lookup needs --key")
        model = _lookup(registry, _parse_key(args.key))
        _emit(json.dumps(model.to_dict(), indent=2) + "\n", args.output)
    return EXIT_OK


def _add_model_args(p):
    p.add_argument("--key", help="comma-joined key, e.g. omni,rooftop,los,urban[,onecar]")
    p.add_argument("--model-file", help="single model JSON or exported registry JSON")


def _add_distance_args(p, random=False):
    p.add_argument("--distances", help="comma-separated meters, or @FILE with one per line")
    if random:
        p.add_argument("--random-distances", nargs=3, type=float, metavar=("DMIN", "DMAX", "N"),
                       help="draw N log-uniform distances in [DMIN, DMAX] from --seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mmv2v", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="spans + fixes + tags -> measurement records JSONL")
    p.add_argument("--spans", required=True, help="span CSV: timestamp_s,duration_s,p1..pN")
    p.add_argument("--fixes", required=True, help="position fix JSONL")
    p.add_argument("--tags", required=True, help="tag segment JSONL")
    p.add_argument("--budget", default="paper-omni",
                   help=f"preset ({', '.join(PRESETS)}) or budget JSON file")
    p.add_argument("--join-tolerance", type=float, default=0.5, help="seconds")
    p.add_argument("--uwb-max-range", type=float, default=100.0, help="meters")
    p.add_argument("--window", type=float, default=2.0, help="transition window, seconds")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit", help="censored ML fit -> FitResult JSON")
    p.add_argument("input", help="records .jsonl or distance_m,path_loss_db,censored CSV")
    p.add_argument("--censor-level", type=float, help="dB")
    p.add_argument("--budget", help="preset or budget JSON; needed for records input")
    p.add_argument("--key", help="fit only records carrying these tags")
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="mean path loss at distances -> CSV")
    _add_model_args(p)
    _add_distance_args(p)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sample", help="path loss draws with shadowing -> CSV")
    _add_model_args(p)
    _add_distance_args(p, random=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--td", type=float, help="decorrelation time, s (correlated shadowing)")
    p.add_argument("--dt", type=float, help="step between consecutive distances, s")
    p.add_argument("--budget", help="censor draws at this budget's maximum measurable loss")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("compare", help="model vs TR 37.885 or another key -> CSV")
    _add_model_args(p)
    p.add_argument("--tr37885", action="store_true", help="compare against TR 37.885")
    p.add_argument("--fc", type=float, default=26.555, help="carrier, GHz")
    p.add_argument("--visibility", choices=[v.value for v in Visibility],
                   help="TR 37.885 case; defaults to the key's visibility")
    p.add_argument("--key-b", help="compare against another registry key instead")
    _add_distance_args(p)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("decorrelate", help="decorrelation time of a dB series -> JSON")
    p.add_argument("series", help="single-column CSV of dB values")
    p.add_argument("--dt", type=float, required=True, help="sample interval, s")
    p.add_argument("--max-lag", type=int, help="search lags up to this many samples")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_decorrelate)

    p = sub.add_parser("registry", help="list, look up or export the model registry")
    p.add_argument("action", choices=["list", "lookup", "export"])
    p.add_argument("--key")
    p.add_argument("--model-file", help="read the registry from an exported JSON document")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_registry)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mmv2v {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError, OSError, KeyError) as exc:
        print(f"mmv2v {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
