"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .errors import DataError, NumericalError
from .evaluation import evaluate
from .factorization import SolverConfig, solve
from .graph import MODES, build_knn_affinity
from .harness import ExperimentSpec, alpha_sweep, emit_report, make_synthetic, run_experiment, write_alpha_sweep
from .matrix import load_csv, load_labels, read_matrix, save_csv, save_labels


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; this tool reserves 2 for data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mccgr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("factorize", help="factor a data matrix with one variant")
    p.add_argument("--input", required=True, help="features x samples CSV")
    p.add_argument("--labels", default=None, help="optional single-column label CSV")
    p.add_argument("--variant", required=True, choices=["l2", "kl", "grnmf", "mcc", "mccgr"])
    p.add_argument("--k", required=True, type=int, help="factorization rank")
    p.add_argument("--alpha", type=float, default=100.0, help="graph penalty weight")
    p.add_argument("--theta", type=float, default=1.0, help="kernel width scale")
    p.add_argument("--knn", type=int, default=5, help="neighbors for the affinity graph")
    p.add_argument("--knn-mode", choices=list(MODES), default="mutual")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-h", required=True, help="basis CSV destination")
    p.add_argument("--out-w", required=True, help="coefficients CSV destination")
    p.add_argument("--trace", default=None, help="objective trace CSV destination")
    p.set_defaults(func=_cmd_factorize)

    p = sub.add_parser("eval", help="cluster coefficient columns against labels")
    p.add_argument("--w", required=True, help="coefficients CSV (k x samples)")
    p.add_argument("--labels", required=True, help="single-column label CSV")
    p.add_argument("--k", required=True, type=int, help="number of clusters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--out", required=True, help="JSON report destination")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("graph", help="emit a k-NN affinity matrix")
    p.add_argument("--input", required=True, help="features x samples CSV")
    p.add_argument("--knn", required=True, type=int)
    p.add_argument("--knn-mode", choices=list(MODES), default="mutual")
    p.add_argument("--out", required=True, help="affinity CSV destination")
    p.set_defaults(func=_cmd_graph)

    p = sub.add_parser("experiment", help="run a spec-driven experiment grid")
    p.add_argument("--spec", required=True, help="experiment spec JSON")
    p.add_argument("--out-dir", default=None, help="overrides output_dir from the spec")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--classes", required=True, type=int)
    p.add_argument("--per-class", required=True, type=int)
    p.add_argument("--dim", required=True, type=int)
    p.add_argument("--noise", choices=["gaussian", "heavy"], default="gaussian")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="features CSV destination")
    p.add_argument("--out-labels", required=True, help="labels CSV destination")
    p.set_defaults(func=_cmd_synth)

    return parser


def _cmd_factorize(args) -> int:
    dataset = load_csv(args.input, args.labels)
    cfg = SolverConfig(
        variant=args.variant,
        k=args.k,
        alpha=args.alpha,
        theta=args.theta,
        knn=args.knn,
        max_iter=args.max_iter,
        tol=args.tol,
        seed=args.seed,
    )
    graph = None
    if cfg.variant in ("grnmf", "mccgr") and cfg.alpha > 0:
        graph = build_knn_affinity(dataset.matrix, cfg.knn, args.knn_mode)
    rng = np.random.default_rng(cfg.seed)
    h0 = 1.0 - rng.random((dataset.n_features, cfg.k))
    w0 = 1.0 - rng.random((cfg.k, dataset.n_samples))
    result = solve(dataset.matrix, graph, cfg, h0, w0)
    save_csv(result.h, args.out_h)
    save_csv(result.w, args.out_w)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write("iteration,objective\n")
            for i, value in enumerate(result.trace):
                fh.write(f"{i},{float(value)!r}\n")
    status = "converged" if result.converged else "hit max-iter"
    print(
        f"{cfg.variant}: {status} after {result.iterations_run} iterations, "
        f"objective {result.trace[-1]:.6g}"
    )
    return 0


def _cmd_eval(args) -> int:
    w = read_matrix(args.w)
    labels = load_labels(args.labels)
    report = evaluate(w, labels, args.k, seed=args.seed, restarts=args.restarts)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report.as_dict(), fh, indent=2)
        fh.write("\n")
    print(f"accuracy {report.accuracy:.4f}  nmi {report.nmi:.4f}")
    return 0


def _cmd_graph(args) -> int:
    dataset = load_csv(args.input)
    graph = build_knn_affinity(dataset.matrix, args.knn, args.knn_mode)
    save_csv(graph.affinity, args.out)
    edges = int(graph.affinity.sum()) // 2
    print(f"{graph.n} samples, {edges} edges ({args.knn_mode})")
    return 0


def _cmd_experiment(args) -> int:
    spec = ExperimentSpec.from_json(args.spec)
    out_dir = args.out_dir or spec.output_dir
    if not out_dir:
        raise DataError("no output directory: pass --out-dir or set output_dir in the spec")
    aggregate, records = run_experiment(spec)
    emit_report(aggregate, records, out_dir)
    if spec.alpha_sweep:
        table = alpha_sweep(spec)
        write_alpha_sweep(table, os.path.join(out_dir, "alpha_sweep.csv"))
    for row in aggregate.rows:
        print(
            f"k={row.k} {row.variant}: accuracy {row.mean_accuracy:.4f} "
            f"(+/- {row.std_accuracy:.4f}), nmi {row.mean_nmi:.4f}"
        )
    print(f"report written to {out_dir}")
    return 0


def _cmd_synth(args) -> int:
    x, labels = make_synthetic(
        classes=args.classes,
        per_class=args.per_class,
        dim=args.dim,
        noise=args.noise,
        seed=args.seed,
    )
    save_csv(x, args.out)
    save_labels(labels, args.out_labels)
    print(f"wrote {x.shape[0]}x{x.shape[1]} matrix and {labels.shape[0]} labels")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"mccgr: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError, ValueError) as exc:
        print(f"mccgr: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
