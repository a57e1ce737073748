"""Command-line front end.

Every subcommand is a thin wrapper over the library; results written here are
identical to the corresponding library calls. ``detect`` exits with 0 when
the data are judged smooth (H0), 1 when not (H1) and 2 on any error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import io as gio
from . import quadform
from .detectors import make_detector
from .exceptions import GraphSmoothError, LowBandZero
from .filters import (
    average_crossing_index,
    claim1_check,
    filter_from_config,
    lpf_order_ratio,
    smoothness_ratio,
)
from .graph import build_spectral_graph
from .simulate import (
    ExperimentSpec,
    generate_batch,
    pd_sweep,
    rbf_graph,
    roc_curve,
    sample_coords,
)

DEFAULT_SEED = 20240601

DEFAULTS = {
    "seed": DEFAULT_SEED,
    "n": 30,
    "kernel_sigma": 0.5,
    "cutoff": 0.55,
    "M": 30,
    "sigma2": 1.0,
    "noise_std": 0.0,
    "filter": "allpass",
    "h0": None,
    "h1": "allpass",
    "trials": 10_000,
    "detector": "semi",
    "n_jobs": 1,
    "threshold_mode": "auto",
}

EXIT_H0, EXIT_H1, EXIT_ERROR = 0, 1, 2


class CliError(GraphSmoothError):
    pass


def _add_graph_source(p, rbf=True):
    p.add_argument("--graph", help="edge-list CSV (src,dst,weight)")
    if rbf:
        p.add_argument("--n", type=int, help="RBF graph: number of nodes")
        p.add_argument("--kernel-sigma", type=float, dest="kernel_sigma")
        p.add_argument("--cutoff", type=float)


def _common(p):
    p.add_argument("--config", help="JSON file of option values; command-line flags take precedence")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphsmooth", description="Smoothness detection for graph signals.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("generate-graph", "generate"):
        p = sub.add_parser(name, help="write a random RBF graph as an edge-list CSV")
        _common(p)
        p.add_argument("--rbf", action="store_true", help="RBF proximity graph (the only generator)")
        _add_graph_source(p)

    p = sub.add_parser("generate-signals", help="write filtered Gaussian signals as CSV")
    _common(p)
    _add_graph_source(p)
    p.add_argument("--filter", help="FILTERSPEC, e.g. tikhonov:alpha=0.2")
    p.add_argument("--M", type=int, dest="M")
    p.add_argument("--sigma2", type=float)
    p.add_argument("--noise-std", type=float, dest="noise_std")

    p = sub.add_parser("filter-info", help="smoothness ratio, LPF ratios and normalization of a filter")
    _common(p)
    _add_graph_source(p)
    p.add_argument("--filter", help="FILTERSPEC")

    p = sub.add_parser("detect", help="run one detector on a signal file")
    _common(p)
    p.add_argument("name", nargs="?", help="detector name (same as --detector)")
    p.add_argument("--detector")
    _add_graph_source(p, rbf=False)
    p.add_argument("--signals")
    p.add_argument("--pfa", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--sigma2", type=float)
    p.add_argument("--h0")
    p.add_argument("--h1")
    p.add_argument("--alpha", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--k", type=int)

    p = sub.add_parser("calibrate", help="analytic threshold for a target false-alarm rate")
    _common(p)
    p.add_argument("name", nargs="?")
    p.add_argument("--detector")
    _add_graph_source(p)
    p.add_argument("--pfa", type=float)
    p.add_argument("--M", type=int, dest="M")
    p.add_argument("--sigma2", type=float)
    p.add_argument("--h0")
    p.add_argument("--h1")
    p.add_argument("--alpha", type=float)
    p.add_argument("--tau", type=float)

    for name in ("roc", "sweep"):
        p = sub.add_parser(name, help="Monte Carlo ROC curve" if name == "roc" else "detection probability over a grid")
        _common(p)
        _add_graph_source(p)
        p.add_argument("--detector", action="append", help="repeatable")
        p.add_argument("--h0")
        p.add_argument("--h1")
        p.add_argument("--M", type=int, dest="M")
        p.add_argument("--sigma2", type=float)
        p.add_argument("--noise-std", type=float, dest="noise_std")
        p.add_argument("--trials", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--tau", type=float)
        p.add_argument("--k", type=int)
        p.add_argument("--n-jobs", type=int, dest="n_jobs")
        if name == "sweep":
            p.add_argument("--param", choices=["M", "alpha", "r", "scale"])
            p.add_argument("--grid", help="comma-separated, strictly increasing")
            p.add_argument("--pfa", type=float)
            p.add_argument("--threshold-mode", dest="threshold_mode", choices=["auto", "analytic", "empirical"])
    return parser


def _merge_config(args) -> dict:
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg = gio.read_json(args.config)
        opts.update({k.replace("-", "_"): v for k, v in cfg.items()})
    for k, v in vars(args).items():
        if v is not None and v is not False:
            opts[k] = v
    return opts


def _filter_cfg(value):
    if value is None:
        return None
    if isinstance(value, dict):
        return value
    return gio.parse_filterspec(value)


def _load_spectrum(opts, allow_rbf=True):
    if opts.get("graph"):
        g = gio.parse_graph_csv(opts["graph"])
    elif allow_rbf:
        g = _rbf_from_opts(opts)
    else:
        raise CliError("--graph is required")
    return build_spectral_graph(g)


def _rbf_from_opts(opts):
    coords = sample_coords(int(opts["n"]), int(opts["seed"]))
    return rbf_graph(coords, float(opts["kernel_sigma"]), float(opts["cutoff"]))


def _graph_source(opts):
    if opts.get("graph"):
        return gio.parse_graph_csv(opts["graph"])
    return {"n": int(opts["n"]), "kernel_sigma": float(opts["kernel_sigma"]), "cutoff": float(opts["cutoff"])}


def _detector_cfg(name, opts):
    cfg = {"name": name, "sigma2": float(opts["sigma2"])}
    for key in ("alpha", "tau", "k"):
        if opts.get(key) is not None:
            cfg[key] = opts[key]
    if name == "lrt":
        if opts.get("h0") is None:
            raise CliError("detector lrt needs --h0")
        cfg["h0"] = _filter_cfg(opts["h0"])
        cfg["h1"] = _filter_cfg(opts.get("h1") or "allpass")
    return cfg


def _emit(obj):
    sys.stdout.write(gio.dumps_json(obj))


# ---------------------------------------------------------------------------
# commands


def run_generate(opts) -> int:
    g = _rbf_from_opts(opts)
    text = gio.format_graph_csv(g)
    if opts.get("out"):
        gio.atomic_write(opts["out"], text)
        _emit({"nodes": g.n_nodes, "edges": len(g.edges), "seed": opts["seed"], "out": opts["out"]})
    else:
        sys.stdout.write(text)
    return 0


def run_generate_signals(opts) -> int:
    sg = _load_spectrum(opts)
    filt = filter_from_config(sg, _filter_cfg(opts["filter"]))
    batch = generate_batch(sg, filt, float(opts["sigma2"]), int(opts["M"]), float(opts["noise_std"]), int(opts["seed"]))
    text = gio.format_signals_csv(batch)
    if opts.get("out"):
        gio.atomic_write(opts["out"], text)
    else:
        sys.stdout.write(text)
    return 0


def run_filter_info(opts) -> int:
    sg = _load_spectrum(opts)
    filt = filter_from_config(sg, _filter_cfg(opts["filter"]))
    etas = []
    for k in range(1, sg.n_nodes):
        try:
            etas.append({"k": k, "eta": lpf_order_ratio(filt, k)})
        except LowBandZero:
            etas.append({"k": k, "eta": float("inf")})
    J = average_crossing_index(sg)
    info = {
        "filter": filt.describe(),
        "beta": filt.beta,
        "r": smoothness_ratio(filt, sg),
        "lambda_avg": sg.lambda_avg,
        "J": J,
        "eta": etas,
        "claim1": [dict(zip(("K", "is_lpf_smooth", "bound"), (k, c.is_lpf_smooth, c.bound)))
                   for k in range(1, J + 1) for c in [claim1_check(sg, filt, k)]],
    }
    _write_or_print(opts, info)
    return 0


def _write_or_print(opts, obj):
    if opts.get("out"):
        gio.write_json(opts["out"], obj)
    _emit(obj)


def run_detect(opts) -> int:
    name = opts.get("name") or opts["detector"]
    if not opts.get("signals"):
        raise CliError("--signals is required")
    sg = _load_spectrum(opts, allow_rbf=False)
    batch = gio.parse_signals_csv(opts["signals"], sg.n_nodes).with_spectrum(sg)
    det = make_detector(_detector_cfg(name, opts), sg)
    threshold, pfa = opts.get("threshold"), opts.get("pfa")
    if threshold is None and pfa is None:
        if name == "lpf":
            threshold = 1.0
        else:
            raise CliError("give --pfa or --threshold")
    report = det.detect(batch, threshold=threshold, target_pfa=None if threshold is not None else pfa)
    out = report.to_dict()
    out["meta"].setdefault("lambda_avg", sg.lambda_avg)
    _write_or_print(opts, out)
    return EXIT_H1 if report.decision == "H1" else EXIT_H0


def run_calibrate(opts) -> int:
    name = opts.get("name") or opts["detector"]
    if opts.get("pfa") is None:
        raise CliError("--pfa is required")
    sg = _load_spectrum(opts)
    det = make_detector(_detector_cfg(name, opts), sg)
    if not det.calibratable:
        raise CliError(f"detector {name} has no analytic false-alarm law")
    M, pfa = int(opts["M"]), float(opts["pfa"])
    thr = det.analytic_threshold(M, pfa)
    if name == "semi":
        gamma_ratio = thr * sg.lambda_avg
        achieved = quadform.semi_tail_prob(sg, M, gamma_ratio)
    else:
        achieved = quadform.lrt_tail_prob(det.h0, det.h1, M, thr)
    out = {"detector": name, "threshold": thr, "target_pfa": pfa, "achieved_pfa": achieved, "M": M, "N": sg.n_nodes}
    _write_or_print(opts, out)
    return 0


def _spec_from_opts(opts, sweep=None):
    if opts.get("h0") is None:
        raise CliError("--h0 is required")
    return ExperimentSpec(graph=_graph_source(opts), h0=_filter_cfg(opts["h0"]), h1=_filter_cfg(opts["h1"]),
                          M=int(opts["M"]), noise_std=float(opts["noise_std"]), trials=int(opts["trials"]),
                          seed=int(opts["seed"]), sigma2=float(opts["sigma2"]), sweep=sweep)


def _detector_names(opts):
    d = opts["detector"]
    return [d] if isinstance(d, str) else list(d)


def run_roc(opts) -> int:
    spec = _spec_from_opts(opts)
    names = _detector_names(opts)
    if len(names) != 1:
        raise CliError("roc takes exactly one --detector")
    curve = roc_curve(spec, _detector_cfg(names[0], opts), n_jobs=int(opts["n_jobs"]))
    summary = {"detector": names[0], "auc": curve.auc, "trials": curve.trials, "seed": spec.seed}
    if opts.get("out"):
        gio.atomic_write(opts["out"], gio.format_roc_csv(curve))
        gio.write_json(opts["out"] + ".json", summary)
    else:
        sys.stdout.write(gio.format_roc_csv(curve))
    _emit(summary)
    return 0


def run_sweep(opts) -> int:
    if not opts.get("param") or not opts.get("grid"):
        raise CliError("--param and --grid are required")
    if opts.get("pfa") is None:
        raise CliError("--pfa is required")
    grid = opts["grid"]
    if isinstance(grid, str):
        grid = [float(v) for v in grid.split(",") if v.strip()]
    spec = _spec_from_opts(opts, sweep={"parameter": opts["param"], "grid": grid})
    configs = [_detector_cfg(n, opts) for n in _detector_names(opts)]
    rows = pd_sweep(spec, configs, float(opts["pfa"]), opts["threshold_mode"], n_jobs=int(opts["n_jobs"]))
    text = gio.format_sweep_csv(rows)
    if opts.get("out"):
        gio.atomic_write(opts["out"], text)
    sys.stdout.write(text)
    return 0


COMMANDS = {
    "generate-graph": run_generate,
    "generate": run_generate,
    "generate-signals": run_generate_signals,
    "filter-info": run_filter_info,
    "detect": run_detect,
    "calibrate": run_calibrate,
    "roc": run_roc,
    "sweep": run_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _merge_config(args)
        return COMMANDS[args.command](opts)
    except (GraphSmoothError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        _emit({"error": type(exc).__name__, "message": str(exc)})
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
