"""Command-line front end.

Subcommands compute factorizations (svd, eig, id, range), run the
experiment protocols (experiment), and time the competing paths (bench).
Factor outputs land in a directory with a JSON manifest that records the
resolved configuration, seed, pass counts, and the posterior error
estimate, so every run is reproducible from its manifest.  Experiment and
bench reports are CSV files with matplotlib renderings saved alongside
(disable with --no-plot).

Exit codes: 0 success, 2 invalid configuration, 3 I/O failure, 4 numerical
failure (for example a Nystrom run on an input that is not positive
semidefinite).
"""

from __future__ import annotations

import argparse
import csv
import os
import secrets
import sys
import time

import numpy as np

from . import bounds as bnd
from . import config, plots
from .core import (
    ConvergenceError,
    DenseOperator,
    NotPSDError,
    small_svd,
)
from .factor import (
    direct_eig_hermitian,
    direct_svd,
    eig_nystrom,
    eig_one_pass,
    eig_via_row_extraction,
    row_id,
    sample_bundle,
    sample_bundle_two_sided,
    svd_one_pass_general,
    svd_via_row_extraction,
    truncate_rank,
)
from .core import orthonormalize_double_gs
from .io import MatrixFormatError, StreamError, read_matrix, write_factors
from .oracle import (
    SyntheticSpec,
    exact_projection_error,
    laplace_bie_matrix,
    synthetic_matrix,
)
from .rangefinder import (
    adaptive_range_finder,
    fast_range_finder,
    posterior_error_estimate,
    randomized_range_finder,
    subspace_iteration_range,
)
from .sketch import (
    SketchSpec,
    gaussian_matrix,
    gsrft_apply,
    haar_orthonormal,
    op_count,
    reset_op_count,
    srft_apply,
)


class ConfigError(Exception):
    pass


class NumericalError(Exception):
    pass


# ---------------------------------------------------------------------------
# Input handling


def _parse_synthetic(text):
    parts = text.split(":")
    kind = parts[0]
    try:
        if kind in ("exact_rank",):
            return kind, int(parts[1])
        if kind in ("power_decay", "exp_decay"):
            return kind, float(parts[1])
        if kind == "flat":
            return kind, (float(parts[1]), int(parts[2]))
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"bad synthetic spec {text!r}: {exc}") from exc
    raise ConfigError(f"unknown synthetic kind {kind!r}")


def _load_matrix(args):
    sources = sum(x is not None for x in (args.input, args.synthetic, args.laplace))
    if sources != 1:
        raise ConfigError("exactly one of --input, --synthetic, --laplace is required")
    if args.input is not None:
        return read_matrix(args.input)
    if args.laplace is not None:
        return laplace_bie_matrix(args.laplace)
    kind, param = _parse_synthetic(args.synthetic)
    if args.m is None or args.n is None:
        raise ConfigError("--synthetic requires --m and --n")
    A, _ = synthetic_matrix(SyntheticSpec(m=args.m, n=args.n, kind=kind,
                                          param=param, seed=args.seed))
    return A


def _resolve_seed(args):
    if args.seed is None:
        args.seed = secrets.randbits(48)
        print(f"seed not supplied; drew seed={args.seed}")
    return args.seed


# ---------------------------------------------------------------------------
# Stage A dispatch


def _stage_a(A, args):
    """Build the range basis per the configured sketch and mode."""
    op = DenseOperator(A)
    n = A.shape[1]
    if getattr(args, "adaptive", False) and args.tol is None:
        raise ConfigError("--adaptive requires --tol")
    if args.tol is not None:
        if args.sketch == "gauss":
            basis = adaptive_range_finder(op, args.tol, r=args.probes,
                                          seed=args.seed, alpha=args.alpha)
            return basis, op
        # structured sketches: escalate the sample count 32, 64, 128, ...
        ell = 32
        while True:
            ell = min(ell, n)
            basis = fast_range_finder(A, ell, args.seed, kind=args.sketch)
            est = posterior_error_estimate(op, basis.Q, r=args.probes,
                                           alpha=args.alpha, seed=args.seed + 7)
            basis.est_error = est
            if est <= args.tol or ell >= n:
                basis.saturated = ell >= n and est > args.tol
                return basis, op
            ell *= 2
    if args.rank is None:
        raise ConfigError("either --rank or --tol is required")
    ell = args.rank + args.oversample
    if args.sketch == "gauss":
        if args.power > 0:
            basis = subspace_iteration_range(op, ell, args.power, args.seed)
        else:
            basis = randomized_range_finder(op, ell, args.seed)
    else:
        if args.power > 0:
            raise ConfigError("power iterations are not available with structured sketches")
        if ell > n:
            raise ConfigError(f"rank+oversample {ell} exceeds the column count {n}")
        basis = fast_range_finder(A, ell, args.seed, kind=args.sketch)
    return basis, op


def _attach_estimate(op, basis, args):
    if basis.est_error is None:
        basis.est_error = posterior_error_estimate(
            op, basis.Q, r=args.probes, alpha=args.alpha, seed=args.seed + 13
        )
    return basis.est_error


def _bound_diagnostics(args, sigma, m, n):
    """Bound evaluations on the computed partial spectrum (diagnostic only)."""
    out = {}
    k = args.rank if args.rank is not None else max(len(sigma) - args.oversample, 1)
    p = max(args.oversample, 2)
    view = bnd.SpectrumView(sigma=np.asarray(sigma), m=m, n=n)
    try:
        out["mean_frobenius_bound"] = bnd.gauss_mean_frobenius(k, p, view)
        if k >= 2:
            out["mean_spectral_bound"] = bnd.gauss_mean_spectral(k, p, view)
            out["power_scheme_bound_q"] = bnd.power_scheme_bound(k, p, args.power, view)
    except ValueError:
        pass
    return out


def _manifest_config(args, keys):
    return {key: getattr(args, key) for key in keys if hasattr(args, key)}


_FACTOR_KEYS = ["command", "input", "synthetic", "laplace", "m", "n", "rank",
                "oversample", "power", "sketch", "tol", "probes", "alpha",
                "seed", "truncate", "single_pass", "row_extraction", "method",
                "bundle_basis", "format", "out"]


def argv_from_config(cfg):
    """Rebuild a command line from a manifest's config block."""
    argv = [cfg["command"]]
    flags = {"truncate", "single_pass", "row_extraction"}
    for key, value in cfg.items():
        if key == "command" or value is None:
            continue
        opt = "--" + key.replace("_", "-")
        if key in flags:
            if value:
                argv.append(opt)
        else:
            argv.extend([opt, str(value)])
    return argv


# ---------------------------------------------------------------------------
# Factorization commands


def _cmd_svd(args):
    _resolve_seed(args)
    A = _load_matrix(args)
    if args.single_pass:
        if args.rank is None:
            raise ConfigError("--single-pass needs --rank")
        ell = args.rank + args.oversample
        rank = args.rank if args.bundle_basis == "svd" else None
        bundle = sample_bundle_two_sided(A, ell, seed=args.seed, rank=rank)
        f = svd_one_pass_general(bundle)
        est = posterior_error_estimate(DenseOperator(A), bundle.Q, r=args.probes,
                                       alpha=args.alpha, seed=args.seed + 13)
        passes = 1
        samples = ell
    else:
        basis, op = _stage_a(A, args)
        if args.row_extraction:
            f = svd_via_row_extraction(A, basis.Q)
        else:
            f = direct_svd(op, basis.Q)
        est = _attach_estimate(op, basis, args)
        passes = basis.passes
        samples = basis.samples_used
    if args.truncate:
        if args.rank is None:
            raise ConfigError("--truncate needs --rank")
        f = truncate_rank(f, min(args.rank, len(f.sigma)))
    extra = {
        "config": _manifest_config(args, _FACTOR_KEYS),
        "seed": args.seed,
        "est_error": est,
        "passes": passes,
        "samples_used": samples,
        "bounds": _bound_diagnostics(args, f.sigma, *A.shape),
    }
    manifest = write_factors(f, args.out, fmt=args.format, manifest_extra=extra)
    print(f"posterior error estimate: {est:.6e}")
    for name, value in extra["bounds"].items():
        print(f"{name}: {value:.6e}")
    print(f"factors written to {args.out}")
    return manifest


def _cmd_eig(args):
    _resolve_seed(args)
    A = _load_matrix(args)
    if A.shape[0] != A.shape[1]:
        raise ConfigError("eig needs a square matrix")
    op = DenseOperator(A)
    if args.single_pass:
        if args.rank is None:
            raise ConfigError("--single-pass needs --rank")
        ell = args.rank + args.oversample
        rank = args.rank if args.bundle_basis == "svd" else None
        bundle = sample_bundle(op, ell, args.seed, rank=rank)
        f = eig_one_pass(bundle)
        est = posterior_error_estimate(op, bundle.Q, r=args.probes,
                                       alpha=args.alpha, seed=args.seed + 13)
        passes, samples = 1, ell
    else:
        basis, op = _stage_a(A, args)
        est = _attach_estimate(op, basis, args)
        passes, samples = basis.passes, basis.samples_used
        try:
            if args.method == "direct":
                f = direct_eig_hermitian(op, basis.Q)
            elif args.method == "row-extraction":
                f = eig_via_row_extraction(A, basis.Q)
            else:
                f, _nys = eig_nystrom(op, basis.Q)
                if f.diagnostics.get("not_psd_fallback"):
                    raise NumericalError(
                        "not PSD: projected block failed the Cholesky tolerance "
                        f"({f.diagnostics.get('detail', '')})"
                    )
        except ValueError as exc:
            raise NumericalError(str(exc)) from exc
    extra = {
        "config": _manifest_config(args, _FACTOR_KEYS),
        "seed": args.seed,
        "est_error": est,
        "passes": passes,
        "samples_used": samples,
        "diagnostics": {k: v for k, v in f.diagnostics.items() if k != "detail"},
    }
    manifest = write_factors(f, args.out, fmt=args.format, manifest_extra=extra)
    print(f"posterior error estimate: {est:.6e}")
    print(f"factors written to {args.out}")
    return manifest


def _cmd_id(args):
    _resolve_seed(args)
    A = _load_matrix(args)
    if args.rank is None:
        raise ConfigError("id needs --rank")
    ell = args.rank + args.oversample
    if args.sketch == "gauss":
        Y = A @ gaussian_matrix(A.shape[1], ell, args.seed)
    else:
        apply_fn = srft_apply if args.sketch == "srft" else gsrft_apply
        Y = apply_fn(A, SketchSpec(kind=args.sketch, ell=ell, seed=args.seed))
    f = row_id(Y, args.rank)
    approx = f.X @ A[f.J, :]
    err = float(np.linalg.norm(A - approx) / max(np.linalg.norm(A), 1e-300))
    extra = {
        "config": _manifest_config(args, _FACTOR_KEYS),
        "seed": args.seed,
        "est_error": err,
        "passes": 1,
        "samples_used": ell,
    }
    manifest = write_factors(f, args.out, fmt=args.format, manifest_extra=extra)
    print(f"relative Frobenius skeleton error: {err:.6e}")
    print(f"factors written to {args.out}")
    return manifest


def _cmd_range(args):
    _resolve_seed(args)
    A = _load_matrix(args)
    basis, op = _stage_a(A, args)
    est = _attach_estimate(op, basis, args)
    extra = {
        "config": _manifest_config(args, _FACTOR_KEYS),
        "seed": args.seed,
        "est_error": est,
        "passes": basis.passes,
        "samples_used": basis.samples_used,
        "saturated": basis.saturated,
    }
    manifest = write_factors(basis, args.out, fmt=args.format, manifest_extra=extra)
    print(f"basis columns: {basis.Q.shape[1]}")
    print(f"posterior error estimate: {est:.6e}")
    print(f"factors written to {args.out}")
    return manifest


# ---------------------------------------------------------------------------
# Experiments


def _write_csv(path, header, rows):
    with open(path, "wt", newline="", encoding="ascii") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([row[h] for h in header])


def _grow_basis_column(A, Q_cols, w):
    y = A @ w
    if Q_cols:
        Q = np.column_stack(Q_cols)
        y = y - Q @ (Q.conj().T @ y)
        y = y - Q @ (Q.conj().T @ y)
    nrm = np.linalg.norm(y)
    if nrm == 0.0:
        return False
    Q_cols.append(y / nrm)
    return True


def _experiment_error_curve(A, args):
    svals = small_svd(A).sigma
    op = DenseOperator(A)
    max_ell = min(args.max_ell, min(A.shape))
    cols = []
    rows = []
    rng_index = 0
    for ell in range(1, max_ell + 1):
        while True:
            w = gaussian_matrix(A.shape[1], 1, args.seed + 100_000 + rng_index)[:, 0]
            rng_index += 1
            if _grow_basis_column(A, cols, w):
                break
        Q = np.column_stack(cols)
        rows.append({
            "ell": ell,
            "sigma_opt": float(svals[ell]) if ell < len(svals) else 0.0,
            "err_actual": exact_projection_error(A, Q),
            "err_estimate": posterior_error_estimate(
                op, Q, r=5, alpha=args.alpha, seed=args.seed + 200_000 + ell),
        })
    return rows


def _experiment_error_hist(A, args):
    n = A.shape[1]
    ell = args.ell
    rows = []
    for trial in range(args.trials):
        for kind in ("gauss", "ortho", "srft", "gsrft"):
            seed = args.seed + 1000 * trial + 17
            if kind == "gauss":
                Y = A @ gaussian_matrix(n, ell, seed)
            elif kind == "ortho":
                Y = A @ haar_orthonormal(n, ell, seed)
            elif kind == "srft":
                Y = srft_apply(A, SketchSpec(kind="srft", ell=ell, seed=seed))
            else:
                Y = gsrft_apply(A, SketchSpec(kind="gsrft", ell=ell, seed=seed))
            Q = orthonormalize_double_gs(Y)
            rows.append({"trial": trial, "kind": kind, "ell": ell,
                         "err": exact_projection_error(A, Q)})
    return rows


def _experiment_power_curve(A, args):
    rows = []
    for q in range(args.max_q + 1):
        for trial in range(args.trials):
            basis = subspace_iteration_range(
                DenseOperator(A), args.ell, q, args.seed + 31 * trial
            )
            rows.append({"q": q, "trial": trial, "ell": args.ell,
                         "err": exact_projection_error(A, basis.Q)})
    return rows


def _experiment_bounds(A, args):
    sigma = small_svd(A).sigma
    view = bnd.SpectrumView(sigma=sigma, m=A.shape[0], n=A.shape[1])
    k, p = args.rank, args.oversample
    if k is None:
        raise ConfigError("bounds mode needs --rank")
    p = max(p, 2)
    ell = k + p
    op = DenseOperator(A)
    fro, spec = [], []
    for trial in range(args.trials):
        basis = randomized_range_finder(op, ell, args.seed + trial)
        fro.append(exact_projection_error(A, basis.Q, "frobenius"))
        spec.append(exact_projection_error(A, basis.Q, "spectral"))
    rows = [
        {"name": "mean_frobenius", "k": k, "p": p, "q": 0,
         "monte_carlo_mean": float(np.mean(fro)),
         "bound": bnd.gauss_mean_frobenius(k, p, view), "trials": args.trials},
        {"name": "mean_spectral", "k": k, "p": p, "q": 0,
         "monte_carlo_mean": float(np.mean(spec)),
         "bound": bnd.gauss_mean_spectral(k, p, view), "trials": args.trials},
    ]
    for q in (1, 2):
        errs = []
        for trial in range(args.trials):
            basis = subspace_iteration_range(op, ell, q, args.seed + 7000 + trial)
            errs.append(exact_projection_error(A, basis.Q))
        rows.append({"name": f"power_spectral_q{q}", "k": k, "p": p, "q": q,
                     "monte_carlo_mean": float(np.mean(errs)),
                     "bound": bnd.power_scheme_bound(k, p, q, view),
                     "trials": args.trials})
    return rows


def _cmd_experiment(args):
    _resolve_seed(args)
    if args.input is None and args.synthetic is None and args.laplace is None:
        args.laplace = 200
    A = _load_matrix(args)
    os.makedirs(args.out, exist_ok=True)
    mode = args.mode
    if mode == "error-curve":
        rows = _experiment_error_curve(A, args)
        header = ["ell", "sigma_opt", "err_actual", "err_estimate"]
        renderer = plots.error_curve_figure
    elif mode == "error-hist":
        rows = _experiment_error_hist(A, args)
        header = ["trial", "kind", "ell", "err"]
        renderer = plots.error_hist_figure
    elif mode == "power-curve":
        rows = _experiment_power_curve(A, args)
        header = ["q", "trial", "ell", "err"]
        renderer = plots.power_curve_figure
    else:
        rows = _experiment_bounds(A, args)
        header = ["name", "k", "p", "q", "monte_carlo_mean", "bound", "trials"]
        renderer = plots.bounds_figure
    csv_path = os.path.join(args.out, f"{mode}.csv")
    _write_csv(csv_path, header, rows)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    if args.plot:
        png = renderer(rows, os.path.join(args.out, f"{mode}.png"))
        print(f"wrote {png}")
    return rows


# ---------------------------------------------------------------------------
# Benchmark


def _cmd_bench(args):
    _resolve_seed(args)
    sizes = [int(s) for s in args.sizes.split(",")]
    ranks = [int(r) for r in args.ranks.split(",")]
    rows = []
    for n in sizes:
        A = gaussian_matrix(n, n, args.seed + n)
        for ell in ranks:
            if ell > n:
                continue
            op = DenseOperator(A)
            t0 = time.perf_counter()
            basis = randomized_range_finder(op, ell, args.seed)
            direct_svd(op, basis.Q)
            t_gauss = time.perf_counter() - t0
            ops_gauss = 2 * n * n * ell  # sketch-phase multiply-adds

            reset_op_count()
            t0 = time.perf_counter()
            fast = fast_range_finder(A, ell, args.seed, kind="srft")
            svd_via_row_extraction(A, fast.Q)
            t_srft = time.perf_counter() - t0
            ops_srft = op_count()

            t0 = time.perf_counter()
            small_svd(A)
            t_svd = time.perf_counter() - t0

            rows.append({
                "n": n, "ell": ell,
                "t_gauss": t_gauss, "t_srft": t_srft, "t_full_svd": t_svd,
                "ops_gauss": ops_gauss, "ops_srft": ops_srft,
                "ops_ratio": ops_srft / ops_gauss,
            })
    os.makedirs(args.out, exist_ok=True)
    header = ["n", "ell", "t_gauss", "t_srft", "t_full_svd",
              "ops_gauss", "ops_srft", "ops_ratio"]
    csv_path = os.path.join(args.out, "bench.csv")
    _write_csv(csv_path, header, rows)
    print("timings are hardware- and implementation-dependent (non-normative)")
    print(f"wrote {csv_path}")
    if args.plot:
        png = plots.bench_figure(rows, os.path.join(args.out, "bench.png"))
        print(f"wrote {png}")
    return rows


# ---------------------------------------------------------------------------
# Parser


def _add_matrix_opts(p):
    p.add_argument("--input", help="matrix file (.mtx/.mm Matrix Market, else binary)")
    p.add_argument("--synthetic", help="synthetic spectrum, e.g. exact_rank:5, "
                                       "power_decay:2, exp_decay:0.9, flat:0.5:20")
    p.add_argument("--laplace", type=int, help="use the built-in integral-operator "
                                               "test matrix with this many nodes")
    p.add_argument("--m", type=int, help="rows for --synthetic")
    p.add_argument("--n", type=int, help="columns for --synthetic")
    p.add_argument("--seed", type=int, default=None)


def _add_stage_a_opts(p):
    p.add_argument("--rank", type=int, help="target rank k")
    p.add_argument("--oversample", type=int, default=config.DEFAULT_OVERSAMPLE)
    p.add_argument("--power", type=int, default=0, help="power-scheme exponent q")
    p.add_argument("--sketch", choices=["gauss", "srft", "gsrft"], default="gauss")
    p.add_argument("--adaptive", action="store_true",
                   help="fixed-precision mode (requires --tol)")
    p.add_argument("--tol", type=float, default=None,
                   help="residual tolerance for adaptive mode")
    p.add_argument("--probes", type=int, default=config.DEFAULT_PROBES)
    p.add_argument("--alpha", type=float, default=config.DEFAULT_ALPHA)


def _add_output_opts(p):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=["binary", "mm", "csv"], default="binary")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lowrank",
        description="randomized low-rank matrix factorizations and diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("svd", help="partial singular value decomposition")
    _add_matrix_opts(p)
    _add_stage_a_opts(p)
    _add_output_opts(p)
    p.add_argument("--row-extraction", action="store_true",
                   help="postprocess by row extraction instead of the direct path")
    p.add_argument("--truncate", action="store_true",
                   help="truncate the result to --rank components")
    p.add_argument("--single-pass", action="store_true")
    p.add_argument("--bundle-basis", choices=["gs", "svd"], default="gs")
    p.set_defaults(func=_cmd_svd)

    p = sub.add_parser("eig", help="partial Hermitian eigendecomposition")
    _add_matrix_opts(p)
    _add_stage_a_opts(p)
    _add_output_opts(p)
    p.add_argument("--method", choices=["direct", "row-extraction", "nystrom"],
                   default="direct")
    p.add_argument("--single-pass", action="store_true")
    p.add_argument("--bundle-basis", choices=["gs", "svd"], default="gs")
    p.set_defaults(func=_cmd_eig)

    p = sub.add_parser("id", help="row interpolative decomposition")
    _add_matrix_opts(p)
    _add_stage_a_opts(p)
    _add_output_opts(p)
    p.set_defaults(func=_cmd_id)

    p = sub.add_parser("range", help="orthonormal range basis only")
    _add_matrix_opts(p)
    _add_stage_a_opts(p)
    _add_output_opts(p)
    p.set_defaults(func=_cmd_range)

    p = sub.add_parser("experiment", help="reproduce the report protocols")
    _add_matrix_opts(p)
    _add_stage_a_opts(p)
    p.add_argument("--mode", choices=["error-curve", "error-hist", "power-curve",
                                      "bounds"], required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-ell", type=int, default=150)
    p.add_argument("--ell", type=int, default=50)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-q", type=int, default=3)
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("bench", help="time gauss vs srft vs full SVD paths")
    p.add_argument("--sizes", default="256,512")
    p.add_argument("--ranks", default="16,32,64")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=_cmd_bench)

    return parser


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, MatrixFormatError, StreamError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, NotPSDError, ConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    return 0


def main(argv=None):
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
