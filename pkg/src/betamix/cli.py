"""The ``betamix`` command line front end.

Subcommands: generate, fit, predict, sample, eval, bench, plot.  Every
run writes a JSON manifest next to its primary output recording the
resolved flags, seed, paths, and wall-clock duration.  Exit codes:
0 success, 2 usage or input error, 3 numerical non-convergence.
Diagnostics go to standard error and are controlled by BETAMIX_LOG
(error, info, or debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from betamix import __version__, baselines, emfit, metrics
from betamix import data as datamod
from betamix.bbeta import QuadratureError
from betamix.emfit import DataMatrix, FitConfig, ModelDocumentError

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOCONV = 3

_PALETTE = (
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
    "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd",
)

_GENERATORS = {
    "circles": lambda n, seed: datamod.gen_circles(n, seed=seed),
    "varied": datamod.gen_varied_blobs,
    "aniso-neg": lambda n, seed: datamod.gen_aniso(n, -1, seed),
    "aniso-pos": lambda n, seed: datamod.gen_aniso(n, 1, seed),
    "blobs": datamod.gen_blobs,
}

_BENCH_CLUSTERS = {
    "circles": 2, "varied": 3, "aniso-neg": 3, "aniso-pos": 3, "blobs": 3,
}


class UsageError(Exception):
    pass


def _setup_logging():
    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(
        os.environ.get("BETAMIX_LOG", "error").lower(), logging.ERROR)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _manifest(path, command, args, inputs, outputs, started, extra=None):
    doc = {
        "tool": f"betamix {__version__}",
        "command": command,
        "flags": {k: v for k, v in sorted(vars(args).items())
                  if k != "func" and not k.startswith("_")},
        "seed": getattr(args, "seed", None),
        "inputs": list(inputs),
        "outputs": list(outputs),
        "duration_seconds": round(time.monotonic() - started, 3),
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _scatter_svg(points, labels):
    """Byte-stable SVG scatter of unit-square points colored by label."""
    size, margin = 480, 20
    span = size - 2 * margin
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
        f'height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="{margin}" y="{margin}" width="{span}" height="{span}" '
        f'fill="white" stroke="#333333" stroke-width="1"/>',
    ]
    for (x, y), lab in zip(points, labels):
        cx = margin + span * float(x)
        cy = margin + span * (1.0 - float(y))
        color = _PALETTE[int(lab) % len(_PALETTE)]
        lines.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3" '
                     f'fill="{color}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _load_model(path):
    with open(path, encoding="utf-8") as fh:
        return emfit.load(fh.read())


def _features(args):
    raw = datamod.read_csv(args.input, labels=args.labels)
    if getattr(args, "pca", False):
        normed = datamod.pca_2d(raw)
    else:
        if raw.values.shape[1] != 2:
            raise UsageError(
                f"expected 2 feature columns, got {raw.values.shape[1]} "
                "(use --pca to reduce)")
        normed = datamod.normalize(raw)
    return normed


def cmd_generate(args):
    started = time.monotonic()
    ds = _GENERATORS[args.dataset](args.n, seed=args.seed)
    datamod.write_csv(ds.data.points, args.output, labels=ds.labels)
    _manifest(args.output + ".manifest.json", "generate", args, [],
              [args.output], started)
    return EXIT_OK


def cmd_fit(args):
    started = time.monotonic()
    normed = _features(args)
    dm = DataMatrix(normed.values)
    cfg = FitConfig(epochs=args.epochs, conv_tol=args.tol, seed=args.seed,
                    restarts=args.restarts)
    model, _, trace = emfit.fit(dm, args.clusters, cfg)
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(emfit.save(model))
    trace_path = args.output + ".trace.csv"
    with open(trace_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,log_likelihood\n")
        for i, ll in enumerate(trace.log_likelihood_per_epoch):
            fh.write(f"{i},{ll:.17g}\n")
    _manifest(args.output + ".manifest.json", "fit", args, [args.input],
              [args.output, trace_path], started,
              {"converged": trace.converged, "epochs_run": trace.epochs_run})
    if not trace.converged:
        log.error("fit did not converge in %d epochs (model written anyway)",
                  args.epochs)
        return EXIT_NOCONV
    return EXIT_OK


def cmd_predict(args):
    started = time.monotonic()
    model = _load_model(args.model)
    normed = _features(args)
    dm = DataMatrix(normed.values)
    labels = emfit.predict(model, dm)
    datamod.write_csv(dm.points, args.output, labels=labels)
    _manifest(args.output + ".manifest.json", "predict", args,
              [args.model, args.input], [args.output], started)
    return EXIT_OK


def cmd_sample(args):
    started = time.monotonic()
    model = _load_model(args.model)
    dm, labels = emfit.sample(model, args.n, np.random.default_rng(args.seed))
    datamod.write_csv(dm.points, args.output, labels=labels)
    _manifest(args.output + ".manifest.json", "sample", args, [args.model],
              [args.output], started)
    return EXIT_OK


def _read_label_column(path):
    raw = datamod.read_csv(path)
    col = raw.values[:, -1]
    if np.any(col != np.rint(col)):
        raise UsageError(f"{path}: last column is not integer labels")
    return col.astype(np.int64)


def cmd_eval(args):
    y = _read_label_column(args.true)
    yhat = _read_label_column(args.pred)
    print(f"CA {metrics.clustering_accuracy(y, yhat):.3f}")
    print(f"ARI {metrics.adjusted_rand_index(y, yhat):.3f}")
    print(f"AMI {metrics.adjusted_mutual_information(y, yhat):.3f}")
    return EXIT_OK


def _bench_predict(algo, ds, k, args):
    if algo == "kmeans":
        model = baselines.kmeans_fit(ds.data, k, seed=args.seed)
        return baselines.kmeans_predict(model, ds.data)
    if algo == "gmm":
        model = baselines.gmm_fit(ds.data, k, seed=args.seed,
                                  epochs=args.epochs, tol=args.tol)
        return baselines.gmm_predict(model, ds.data)
    cfg = FitConfig(epochs=args.epochs, conv_tol=args.tol, seed=args.seed,
                    restarts=args.restarts)
    model, resp, _ = emfit.fit(ds.data, k, cfg)
    return np.argmax(resp.gamma, axis=1)


def cmd_bench(args):
    started = time.monotonic()
    os.makedirs(args.output, exist_ok=True)
    rows = []
    outputs = []
    timings = {}
    for name in ("circles", "varied", "aniso-neg", "aniso-pos", "blobs"):
        ds = _GENERATORS[name](args.n, seed=args.seed)
        k = _BENCH_CLUSTERS[name]
        for algo in ("kmeans", "gmm", "fbbmm"):
            t0 = time.monotonic()
            pred = _bench_predict(algo, ds, k, args)
            timings[f"{name}/{algo}"] = round(time.monotonic() - t0, 3)
            ca = metrics.clustering_accuracy(ds.labels, pred)
            ari = metrics.adjusted_rand_index(ds.labels, pred)
            ami = metrics.adjusted_mutual_information(ds.labels, pred)
            rows.append((name, algo, ca, ari, ami))
            svg_path = os.path.join(args.output, f"{name}_{algo}.svg")
            with open(svg_path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(_scatter_svg(ds.data.points, pred))
            outputs.append(svg_path)
            log.info("bench %s/%s: CA %.3f ARI %.3f AMI %.3f",
                     name, algo, ca, ari, ami)
    csv_path = os.path.join(args.output, "metrics.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("dataset,algorithm,ca,ari,ami\n")
        for name, algo, ca, ari, ami in rows:
            fh.write(f"{name},{algo},{ca:.6f},{ari:.6f},{ami:.6f}\n")
    outputs.append(csv_path)
    _manifest(os.path.join(args.output, "manifest.json"), "bench", args, [],
              outputs, started, {"cell_seconds": timings})
    return EXIT_OK


def cmd_plot(args):
    started = time.monotonic()
    raw = datamod.read_csv(args.input)
    m = raw.values.shape[1]
    col = args.labels_column if args.labels_column >= 0 else m + args.labels_column
    if not 0 <= col < m:
        raise UsageError(f"label column {args.labels_column} out of range for "
                         f"{m} columns")
    lab = raw.values[:, col]
    if np.any(lab != np.rint(lab)):
        raise UsageError(f"column {col} is not integer labels")
    feats = np.delete(raw.values, col, axis=1)
    if feats.shape[1] != 2:
        raise UsageError(f"expected 2 feature columns, got {feats.shape[1]}")
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_scatter_svg(feats, lab.astype(np.int64)))
    _manifest(args.output + ".manifest.json", "plot", args, [args.input],
              [args.output], started)
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="betamix",
        description="Bivariate beta mixture clustering toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic labeled dataset")
    p.add_argument("--dataset", required=True, choices=sorted(_GENERATORS))
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit a mixture model to a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--pca", action="store_true",
                   help="reduce wide inputs to 2 columns first")
    p.add_argument("--labels", action="store_true",
                   help="input has a trailing label column to ignore")
    p.add_argument("--output", required=True, help="model document path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="hard cluster labels for a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--labels", action="store_true")
    p.add_argument("--pca", action="store_true")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sample", help="draw labeled points from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="CA/ARI/AMI between two label CSVs")
    p.add_argument("--true", required=True)
    p.add_argument("--pred", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run all algorithms on all datasets")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--restarts", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plot", help="SVG scatter of a labeled CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--labels-column", type=int, default=-1)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"betamix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelDocumentError, ValueError, OSError) as exc:
        print(f"betamix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QuadratureError as exc:
        print(f"betamix: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NOCONV


if __name__ == "__main__":
    sys.exit(main())
