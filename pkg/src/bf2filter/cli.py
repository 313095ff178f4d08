"""``bf2`` command-line interface.

Exit status: 0 success, 1 usage error, 2 bad input data, 3 internal
invariant violation.  Every file written starts with a comment line that
echoes the effective configuration.
"""
from __future__ import annotations

import argparse
import io
import sys

import numpy as np

from . import __version__, metrics, resources, synth, theory
from .estimators import FILTER_KINDS, make_filter
from .events import Label, LabeledStream, SensorGeometry, format_csv, load_stream, mix_streams, save_stream
from .exceptions import Bf2Error, ConfigError, ParseError, StreamIOError
from .svg import write_plot

EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _geometry(text):
    try:
        return SensorGeometry.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def config_echo(args) -> str:
    skip = {"func"}
    items = " ".join(f"{k}={v}" for k, v in sorted(vars(args).items()) if k not in skip)
    return f"bf2 {__version__} {items}"


# -- shared option groups -----------------------------------------------------

def _add_input(p):
    p.add_argument("-i", "--input", "--in", dest="input", required=True, help="event file (.csv or .bin)")
    p.add_argument("--format", choices=("csv", "binary"), help="override format detection")
    p.add_argument("--geometry", type=_geometry, help="sensor WxH (required for CSV input)")
    p.add_argument("--sort", action="store_true", help="sort out-of-order input instead of failing")


def _add_filter(p, default_kind="bf2"):
    p.add_argument("--filter", choices=FILTER_KINDS, default=default_kind)
    p.add_argument("--tau", "--tau-us", dest="tau", type=_positive_int, default=5000,
                   help="correlation time (us)")
    p.add_argument("-s", "--support", type=int, default=None,
                   help="supporting neighbours needed (bf2 default 1, guo default 2)")
    p.add_argument("-W", type=int, default=16384, help="BF2 row width (bits)")
    p.add_argument("-D", type=int, default=4, help="BF2 rows")
    p.add_argument("-K", type=int, default=4, help="BF2 hash functions / banks")
    p.add_argument("--hash-seed", type=int, default=1)
    p.add_argument("--clear-mode", choices=("strict", "literal"), default="strict")
    p.add_argument("--polarity-split", action="store_true")
    p.add_argument("--hh-w", type=float, default=1024.0, help="HashHeat segment length")
    p.add_argument("--hh-m", type=int, default=4096, help="HashHeat cells")


def _build_filter(args):
    kind = args.filter
    if kind == "bf2":
        return make_filter("bf2", tau=args.tau, s=args.support or 1, W=args.W, D=args.D, K=args.K,
                           hash_seed=args.hash_seed, clear_mode=args.clear_mode,
                           polarity_split=args.polarity_split)
    if kind == "guo":
        return make_filter("guo", tau=args.tau, s=args.support or 2)
    if kind in ("baf", "onf"):
        return make_filter(kind, tau=args.tau)
    return make_filter("hashheat", w=args.hh_w, m=args.hh_m, seed=args.hash_seed)


def _load(args) -> LabeledStream:
    fmt = args.format or ("binary" if args.input.endswith((".bin", ".bf2e")) else "csv")
    if fmt == "csv" and args.geometry is None:
        raise UsageError("--geometry is required for CSV input")
    return load_stream(args.input, fmt, args.geometry, sort=args.sort)


def _read_pred_column(args, n):
    """The ``pred`` column of a CSV input, if it has one."""
    if args.input.endswith((".bin", ".bf2e")) or args.format == "binary":
        return None
    from .events import read_csv_columns
    cols, _ = read_csv_columns(args.input)
    if "pred" not in cols:
        return None
    pred = cols["pred"]
    if args.sort:
        order = np.argsort(cols["t"], kind="stable")
        pred = pred[order]
    if np.any(pred > 1) or pred.size != n:
        raise ParseError("pred column must hold 0/1 for every event")
    return pred.astype(bool)


def _write_text(path, text):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise StreamIOError(f"cannot write {path}: {exc}") from exc


def _csv(echo, header, rows, trailer=()):
    buf = io.StringIO()
    buf.write(f"# {echo}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    for line in trailer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "nan" if np.isnan(v) else f"{float(v):.10g}"
    return str(v)


def _emit(args, text):
    if getattr(args, "output", None):
        _write_text(args.output, text)
    else:
        sys.stdout.write(text)


# -- subcommands --------------------------------------------------------------

def cmd_filter(args):
    stream = _load(args)
    est = _build_filter(args).fit(stream)
    pred = est.predict(stream)
    text = format_csv(stream, extra={"pred": pred}, comment=config_echo(args))
    _emit(args, text)
    kept = int(pred.sum())
    print(f"kept {kept} of {len(stream)} events", file=sys.stderr)
    return 0


def cmd_evaluate(args):
    stream = _load(args)
    if not stream.is_labeled:
        raise ParseError("evaluation needs a label column")
    pred = _read_pred_column(args, len(stream))
    source = "pred column"
    if pred is None:
        pred = _build_filter(args).fit(stream).classify(stream).signal
        source = f"{args.filter} filter"
    c = metrics.confusion(pred, stream)
    r = metrics.rates(c)
    rows = [("TP", c.TP), ("FP", c.FP), ("TN", c.TN), ("FN", c.FN), ("FPR", r.fpr), ("FNR", r.fnr),
            ("TPR", r.tpr), ("precision", r.precision), ("F1", r.f1)]
    if args.output:
        _write_text(args.output, _csv(config_echo(args), ("metric", "value"), rows))
    print(f"predictions from {source}")
    for name, v in rows:
        print(f"{name} = {_fmt(v)}")
    return 0


def _grid(args, knob):
    if args.grid:
        return np.array([float(v) for v in args.grid.split(",")])
    if knob == "w":
        return metrics.default_w_grid(args.grid_n)
    return metrics.default_tau_grid(args.grid_n, args.grid_lo, args.grid_hi)


def cmd_roc(args):
    stream = _load(args)
    est = _build_filter(args)
    grid = _grid(args, est.knob)
    curve = metrics.roc_sweep(stream, est, grid=grid)
    text = _csv(config_echo(args), (curve.knob, "fpr", "tpr"), curve.points(),
                trailer=[f"auc={curve.auc:.10g}"])
    _emit(args, text)
    if args.plot:
        order = np.argsort(curve.fpr)
        write_plot(args.plot, [(f"{args.filter} (AUC {curve.auc:.3f})",
                                [0.0, *curve.fpr[order].tolist(), 1.0],
                                [0.0, *curve.tpr[order].tolist(), 1.0])],
                   title="ROC", xlabel="FPR", ylabel="TPR", xlim=(0, 1), ylim=(0, 1),
                   comment=config_echo(args))
    print(f"AUC = {curve.auc:.6f}", file=sys.stderr)
    return 0


def _simulate(stream, tau, W, D, K, seed):
    est = make_filter("bf2", tau=tau, W=W, D=D, K=K, hash_seed=seed).fit(stream)
    return metrics.rates(metrics.confusion(est.classify(stream), stream))


def cmd_predict(args):
    stream = _load(args)
    D = args.D
    rep = theory.predict(stream, args.W, D, args.K, args.tau // D, level=args.level,
                         boundary=args.boundary)
    rows = [("fpr", rep.fpr), ("fnr", rep.fnr), ("f1", rep.f1)]
    if args.simulate:
        r = _simulate(stream, args.tau, args.W, D, args.K, args.hash_seed)
        rows += [("fpr_empirical", r.fpr), ("fnr_empirical", r.fnr), ("f1_empirical", r.f1)]
    if args.output:
        _write_text(args.output, _csv(config_echo(args), ("quantity", "value"), rows))
    for name, v in rows:
        print(f"{name} = {_fmt(v)}")
    return 0


def _parse_configs(text):
    out = []
    for part in text.split(","):
        try:
            W, D = part.lower().split("x")
            out.append((int(W), int(D)))
        except ValueError:
            raise UsageError(f"bad configuration {part!r}; expected WxD") from None
    return out


def cmd_dse(args):
    stream = _load(args)
    if args.configs:
        configs = _parse_configs(args.configs)
    else:
        bank_bits = args.memory_kb * 8 * 1024 // args.K
        configs = [(bank_bits // d, d) for d in (2, 4, 8, 16, 32) if bank_bits // d >= 2]
    reports = theory.dse_sweep(stream, args.tau, args.K, configs, boundary=args.boundary)
    header = ["W", "D", "K", "tau_row", "memory_kb", "fpr_pred", "fnr_pred", "f1_pred"]
    rows = []
    for r in reports:
        row = [r.W, r.D, r.K, r.tau_row, resources.memory_kb(r.memory_bits), r.fpr, r.fnr, r.f1]
        if args.simulate:
            row.append(_simulate(stream, args.tau, r.W, r.D, r.K, args.hash_seed).f1)
        rows.append(row)
    if args.simulate:
        header.append("f1_empirical")
    _emit(args, _csv(config_echo(args), header, rows))
    if args.plot:
        by_d = sorted(rows, key=lambda r: r[1])
        series = [("predicted F1", [r[1] for r in by_d], [r[7] for r in by_d])]
        if args.simulate:
            series.append(("simulated F1", [r[1] for r in by_d], [r[8] for r in by_d]))
        write_plot(args.plot, series, title="F1 vs rows", xlabel="D", ylabel="F1", logx=True,
                   comment=config_echo(args))
    best = reports[0]
    print(f"best predicted: W={best.W} D={best.D} F1={best.f1:.4f}", file=sys.stderr)
    return 0


def cmd_resources(args):
    kinds = resources.FILTER_KINDS if args.filters == "all" else tuple(args.filters.split(","))
    for k in kinds:
        if k not in resources.FILTER_KINDS:
            raise UsageError(f"unknown filter {k!r}")
    if args.geometries in ("standard", "table2"):
        geoms = resources.STANDARD_GEOMETRIES
    else:
        geoms = tuple(SensorGeometry.parse(g) for g in args.geometries.split(","))
    costs = resources.EnergyCostTable.from_json(args.costs) if args.costs else resources.default_costs()
    rows = resources.scaling_table(kinds, geoms, tau=args.tau, costs=costs)
    table = [(r.kind, str(r.geometry), r.memory_bits, r.memory_kb, r.energy_pj) for r in rows]
    trailer = [f"bf2_throughput_eps={resources.throughput(args.clock_hz):.10g} at clock_hz={args.clock_hz:g}"]
    _emit(args, _csv(config_echo(args), ("filter", "geometry", "memory_bits", "memory_kb", "energy_pj"),
                     table, trailer))
    if args.plot:
        series = []
        for k in kinds:
            sel = [r for r in rows if r.kind == k]
            series.append((k, [float(np.sqrt(r.geometry.n_pixels)) for r in sel],
                           [r.memory_kb for r in sel]))
        write_plot(args.plot, series, title="Memory vs sensor size", xlabel="sqrt(R*C)",
                   ylabel="memory (KB)", comment=config_echo(args))
    return 0


def cmd_synth(args):
    g = args.geometry
    if g is None:
        raise UsageError("--geometry is required")
    if args.kind == "noise":
        stream = synth.gen_shot_noise(synth.NoiseSpec(g, args.rate, args.duration_us, args.seed))
    else:
        stream = synth.gen_scene(synth.two_edge_scene(g, args.duration_us, args.seed, args.edge_rate))
        if args.noise_rate > 0:
            noise = synth.gen_shot_noise(synth.NoiseSpec(g, args.noise_rate, args.duration_us,
                                                         args.seed + 1))
            stream = mix_streams(stream, noise)
    if args.output.endswith((".bin", ".bf2e")):
        save_stream(stream, args.output, "binary")
    else:
        save_stream(stream, args.output, "csv", comment=config_echo(args))
    print(f"wrote {len(stream)} events ({stream.count(Label.SIGNAL)} signal)", file=sys.stderr)
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bf2", description="BF2 event-camera noise filter toolkit")
    parser.add_argument("--version", action="version", version=f"bf2 {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("filter", help="classify events; appends a pred column")
    _add_input(p)
    _add_filter(p)
    p.add_argument("-o", "--output", "--out", dest="output", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("evaluate", help="confusion counts and rates against labels")
    _add_input(p)
    _add_filter(p)
    p.add_argument("-o", "--output", "--out", dest="output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("roc", help="ROC sweep over the filter's knob, with AUC")
    _add_input(p)
    _add_filter(p)
    p.add_argument("--grid", help="comma-separated knob values (overrides the log grid)")
    p.add_argument("--grid-n", type=_positive_int, default=16)
    p.add_argument("--grid-lo", type=float, default=100.0)
    p.add_argument("--grid-hi", type=float, default=1e6)
    p.add_argument("-o", "--output", "--out", dest="output")
    p.add_argument("--plot", help="SVG output path")
    p.set_defaults(func=cmd_roc)

    for name, func, helptext in (("predict", cmd_predict, "closed-form FPR/FNR/F1 for one BF2 config"),
                                 ("dse", cmd_dse, "rank BF2 (W, D) configurations by predicted F1")):
        p = sub.add_parser(name, help=helptext)
        _add_input(p)
        p.add_argument("--tau", type=_positive_int, default=5000)
        p.add_argument("-K", type=int, default=4)
        p.add_argument("--hash-seed", type=int, default=1)
        p.add_argument("--boundary", choices=("bin", "phase"), default="bin",
                       help="last-row treatment in the FNR predictor")
        p.add_argument("--simulate", action="store_true", help="also run the filter")
        p.add_argument("-o", "--output", "--out", dest="output")
        p.set_defaults(func=func)
        if name == "predict":
            p.add_argument("-W", type=int, default=16384)
            p.add_argument("-D", type=int, default=4)
            p.add_argument("--level", choices=theory.FPR_LEVELS, default="stcf")
        else:
            p.add_argument("--configs", help="comma-separated WxD list")
            p.add_argument("--memory-kb", type=_positive_int, default=32,
                           help="total memory for the default D in {2..32} grid")
            p.add_argument("--plot", help="SVG output path")

    p = sub.add_parser("resources", help="memory / energy / throughput tables")
    p.add_argument("--filters", default="all")
    p.add_argument("--geometries", default="standard",
                   help="'standard' (240x180 to 1280x960; alias 'table2') or comma-separated WxH")
    p.add_argument("--tau", type=_positive_int, default=5000)
    p.add_argument("--costs", help="JSON cost table (default: shipped 45 nm table)")
    p.add_argument("--clock-hz", type=float, default=166e6)
    p.add_argument("-o", "--output", "--out", dest="output")
    p.add_argument("--plot", help="SVG output path")
    p.set_defaults(func=cmd_resources)

    p = sub.add_parser("synth", help="generate synthetic labelled streams")
    p.add_argument("kind", choices=("noise", "scene"))
    p.add_argument("--geometry", type=_geometry)
    p.add_argument("--duration-us", type=_positive_int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rate", type=float, default=synth.DEFAULT_NOISE_HZ, help="noise Hz per pixel")
    p.add_argument("--edge-rate", type=float, default=1000.0, help="scene: Hz per covered pixel")
    p.add_argument("--noise-rate", type=float, default=0.0, help="scene: mix in shot noise (Hz/px)")
    p.add_argument("-o", "--output", "--out", dest="output", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"bf2: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"bf2: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Bf2Error as exc:
        print(f"bf2: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # anything else is a bug
        print(f"bf2: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
