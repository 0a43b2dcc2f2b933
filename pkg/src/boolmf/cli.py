"""Command-line interface: generate / fit / summarize / bench.

Only the standard library is imported at module level; numba-backed
modules load inside the handlers, after the thread setup has had a chance
to fix the pool size.  A manifest (all resolved arguments, seed, paths,
duration, version) is written next to every run's outputs so any run can
be replayed exactly.

Exit codes: 0 success, 2 usage error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

_MATRIX_FORMATS = ("dense-csv", "sparse-coo")


class _UsageError(Exception):
    """Bad flag combination detected after argparse."""


def _version() -> str:
    try:
        from importlib.metadata import version

        return "boolmf-" + version("boolmf")
    except Exception:  # pragma: no cover - metadata missing in odd installs
        return "boolmf-unknown"


def _setup_threads(requested: str) -> int:
    """Resolve the worker count and apply it to numba's pool.

    "auto" defers to the BOOLMF_THREADS environment variable (read at
    package import) and then to numba's own default.  An explicit count
    is clamped to the pool size launched at import time; raising the pool
    beyond that requires setting BOOLMF_THREADS (or NUMBA_NUM_THREADS)
    before the process starts.
    """
    if requested != "auto":
        try:
            n = int(requested)
        except ValueError:
            raise _UsageError("--threads must be a positive integer or 'auto'")
        if n < 1:
            raise _UsageError("--threads must be at least 1")
        if "numba" not in sys.modules:
            os.environ["NUMBA_NUM_THREADS"] = str(n)
    import numba

    if requested == "auto":
        return numba.get_num_threads()
    n = int(requested)
    available = numba.config.NUMBA_NUM_THREADS
    effective = min(n, available)
    if effective != n:
        print(
            f"note: thread pool holds {available} workers; using {effective}",
            file=sys.stderr,
        )
    numba.set_num_threads(effective)
    return effective


def _matrix_ext(format: str) -> str:
    return ".csv" if format == "dense-csv" else ".coo"


def _args_record(args: argparse.Namespace) -> dict:
    record = {}
    for key, value in sorted(vars(args).items()):
        if key == "handler":
            continue
        record[key] = str(value) if isinstance(value, Path) else value
    return record


def _write_manifest(
    out_dir: Path,
    args: argparse.Namespace,
    *,
    inputs: list[str],
    outputs: list[str],
    duration: float,
    threads: int | None = None,
) -> dict:
    manifest = {
        "tool": "boolmf",
        "version": _version(),
        "subcommand": args.subcommand,
        "args": _args_record(args),
        "seed": getattr(args, "seed", None),
        "inputs": inputs,
        "outputs": outputs,
        "threads": threads,
        "duration_seconds": duration,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest


# ---------------------------------------------------------------- generate


def _cmd_generate(args: argparse.Namespace) -> int:
    if args.rows < 1 or args.cols < 1:
        raise _UsageError("--rows and --cols must be at least 1")
    if args.latent < 1:
        raise _UsageError("--latent must be at least 1")
    if not 0.0 <= args.noise <= 0.5:
        raise _UsageError("--noise must lie in [0, 0.5]")
    if not 0.0 < args.density < 1.0:
        raise _UsageError("--density must lie strictly inside (0, 1)")

    from . import dataio, synthgen

    t0 = time.perf_counter()
    ds = synthgen.generate(
        args.rows,
        args.cols,
        args.latent,
        args.seed,
        target_density=args.density,
        noise=args.noise,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = _matrix_ext(args.format)
    paths = {
        "X": out / f"X{ext}",
        "Z_true": out / f"Z_true{ext}",
        "U_true": out / f"U_true{ext}",
    }
    dataio.save_matrix(ds.X, paths["X"], args.format)
    dataio.save_matrix(ds.Z_true, paths["Z_true"], args.format)
    dataio.save_matrix(ds.U_true, paths["U_true"], args.format)
    duration = time.perf_counter() - t0
    _write_manifest(
        out,
        args,
        inputs=[],
        outputs=[str(p) for p in paths.values()],
        duration=duration,
    )
    print(
        f"generated {args.rows}x{args.cols} data (latent {args.latent}, "
        f"noise {args.noise}, density {ds.X.density():.3f}) -> {out}"
    )
    return 0


# ---------------------------------------------------------------- fit


def _summary_dict(chain, X=None) -> dict:
    from . import posterior

    summary = posterior.l_summary(chain)
    out = {
        "model": chain.config_echo.get("model"),
        "n_rows": chain.config_echo.get("n_rows"),
        "n_cols": chain.config_echo.get("n_cols"),
        "n_recorded": len(chain),
        "L_mode": summary.mode,
        "L_mean": summary.mean,
        "L_histogram": {str(k): v for k, v in summary.histogram.items()},
        "lambda_mean": float(chain.lambda_trace().mean()),
        "reconstruction_error": None,
        "match": None,
    }
    if chain.has_factors and X is not None:
        errors = [
            posterior.reconstruction_error(X, s.Z, s.U) for s in chain.samples
        ]
        out["reconstruction_error"] = float(sum(errors) / len(errors))
    return out


def _write_summary_outputs(chain, summary: dict, out_dir: Path) -> list[str]:
    """summary.json plus, when factors were recorded, the mean-Z heatmap."""
    from . import dataio, posterior

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if chain.has_factors:
        mean_z = posterior.marginal_mean_z(chain)
        if mean_z.size:
            heat = out_dir / "mean_z.pgm"
            dataio.export_heatmap(mean_z, heat)
            written.append(str(heat))
    path = out_dir / "summary.json"
    path.write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    written.append(str(path))
    return written


def _cmd_fit(args: argparse.Namespace) -> int:
    if args.samples <= args.burn_in:
        raise _UsageError("--samples must exceed --burn-in")
    if args.burn_in < 0:
        raise _UsageError("--burn-in must be non-negative")
    if args.model == "finite" and args.latent is None:
        raise _UsageError("--latent is required for the finite model")
    if args.latent is not None and args.latent < 1:
        raise _UsageError("--latent must be at least 1")

    threads = _setup_threads(args.threads)
    from . import dataio, finite_sampler, ibp_sampler

    X = dataio.load(
        dataio.DatasetSpec(args.input, args.input_format, args.threshold)
    )
    t0 = time.perf_counter()
    if args.model == "finite":
        config = finite_sampler.FiniteConfig(
            L=args.latent,
            prior_u=args.q,
            n_samples=args.samples,
            burn_in=args.burn_in,
            seed=args.seed,
            lambda_init=args.lambda_init,
        )
        chain = finite_sampler.run_finite(
            X, config, record_factors=not args.traces_only
        )
    else:
        config = ibp_sampler.IbpConfig(
            alpha=args.alpha,
            q=args.q,
            lprime_max=args.lprime_max,
            n_samples=args.samples,
            burn_in=args.burn_in,
            seed=args.seed,
            lambda_init=args.lambda_init,
        )
        chain = ibp_sampler.run_ibp(X, config, record_factors=not args.traces_only)
    duration = time.perf_counter() - t0

    out = Path(args.out)
    chain_dir = out / "chain"
    dataio.save_chain(chain, chain_dir)
    summary = _summary_dict(chain, X)
    written = _write_summary_outputs(chain, summary, out)
    _write_manifest(
        out,
        args,
        inputs=[str(args.input)],
        outputs=[str(chain_dir), *written],
        duration=duration,
        threads=threads,
    )
    print(
        f"fit ({args.model}) finished in {duration:.2f} s: "
        f"L mode {summary['L_mode']}, L mean {summary['L_mean']:.2f}, "
        f"{len(chain)} samples -> {out}"
    )
    return 0


# ---------------------------------------------------------------- summarize


def _cmd_summarize(args: argparse.Namespace) -> int:
    from . import dataio, posterior

    chain = dataio.load_chain(args.chain)
    if args.truth is not None and not chain.has_factors:
        raise _UsageError(
            "--truth needs factor snapshots, but the chain holds traces only"
        )
    summary = _summary_dict(chain)
    if args.truth is not None:
        truth = dataio.load(dataio.DatasetSpec(args.truth, args.truth_format))
        mode = summary["L_mode"]
        ref = next(s for s in chain.samples if s.n_latent == mode)
        match = posterior.match_factors(ref.U, truth)
        summary["match"] = {
            "mean_jaccard": match.mean_jaccard,
            "pairs": [list(p) for p in match.pairs],
        }
    out_dir = Path(args.out) if args.out else Path(args.chain)
    _write_summary_outputs(chain, summary, out_dir)
    print(
        f"chain of {summary['n_recorded']} samples: "
        f"L mode {summary['L_mode']}, L mean {summary['L_mean']:.2f}"
        + (
            f", mean Jaccard vs truth {summary['match']['mean_jaccard']:.3f}"
            if summary["match"]
            else ""
        )
    )
    return 0


# ---------------------------------------------------------------- bench


def _cmd_bench(args: argparse.Namespace) -> int:
    if args.samples <= args.burn_in:
        raise _UsageError("--samples must exceed --burn-in")
    if args.latent < 1:
        raise _UsageError("--latent must be at least 1")
    if not 0.0 < args.density < 1.0:
        raise _UsageError("--density must lie strictly inside (0, 1)")

    threads = _setup_threads(args.threads)
    from . import ibp_sampler, posterior, synthgen

    # Warm-up on a toy problem so JIT compilation stays out of the timings.
    warm = synthgen.generate(16, 16, 2, seed=1)
    ibp_sampler.run_ibp(
        warm.X,
        ibp_sampler.IbpConfig(n_samples=3, burn_in=1, seed=1),
        record_factors=False,
    )

    t0 = time.perf_counter()
    ds = synthgen.generate(
        args.rows,
        args.cols,
        args.latent,
        args.seed,
        target_density=args.density,
        noise=args.noise,
    )
    t_generate = time.perf_counter() - t0

    config = ibp_sampler.IbpConfig(
        alpha=args.alpha,
        q=args.q,
        lprime_max=args.lprime_max,
        n_samples=args.samples,
        burn_in=args.burn_in,
        seed=args.seed,
        lambda_init=args.lambda_init,
    )
    t0 = time.perf_counter()
    chain = ibp_sampler.run_ibp(ds.X, config, record_factors=False)
    t_sample = time.perf_counter() - t0

    summary = posterior.l_summary(chain)
    report = {
        "rows": args.rows,
        "cols": args.cols,
        "latent_true": args.latent,
        "density_target": args.density,
        "density_actual": ds.X.density(),
        "n_sweeps": args.samples,
        "seconds_generate": t_generate,
        "seconds_sampling": t_sample,
        "sweeps_per_second": args.samples / t_sample,
        "L_mode": summary.mode,
        "L_mean": summary.mean,
        "threads": threads,
    }
    print(
        f"bench {args.rows}x{args.cols} (density {report['density_actual']:.3f}): "
        f"{args.samples} sweeps in {t_sample:.1f} s "
        f"({report['sweeps_per_second']:.1f} sweeps/s, generation {t_generate:.1f} s, "
        f"{threads} thread(s)); L mode {summary.mode}"
    )
    if args.out is not None:
        out = Path(args.out)
        report["manifest"] = _write_manifest(
            out,
            args,
            inputs=[],
            outputs=[str(out / "report.json")],
            duration=t_generate + t_sample,
            threads=threads,
        )
        (out / "report.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


# ---------------------------------------------------------------- parser


def _add_sampler_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", type=int, default=200, help="total sweeps to run")
    p.add_argument(
        "--burn-in", type=int, default=100, help="sweeps discarded before recording"
    )
    p.add_argument("--alpha", type=float, default=1.0, help="new-column rate prior")
    p.add_argument(
        "--q", type=float, default=0.5, help="Bernoulli prior on U entries"
    )
    p.add_argument(
        "--lprime-max",
        type=int,
        default=10,
        help="truncation of the new-column draw (exclusive upper bound)",
    )
    p.add_argument("--lambda-init", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--threads",
        default="auto",
        help="worker threads for the sweep kernels ('auto' honours BOOLMF_THREADS)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boolmf",
        description="Boolean matrix factorisation by Gibbs sampling.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    g = sub.add_parser("generate", help="write synthetic data + ground truth")
    g.add_argument("--rows", type=int, default=200)
    g.add_argument("--cols", type=int, default=500)
    g.add_argument("--latent", type=int, default=5)
    g.add_argument("--noise", type=float, default=0.0, help="bit-flip probability")
    g.add_argument(
        "--density", type=float, default=0.5, help="target density of the product"
    )
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--format", choices=_MATRIX_FORMATS, default="dense-csv")
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(handler=_cmd_generate)

    f = sub.add_parser("fit", help="run a sampler on a dataset")
    f.add_argument("--model", choices=("finite", "ibp"), default="ibp")
    f.add_argument("--input", required=True, help="data matrix file")
    f.add_argument("--input-format", choices=_MATRIX_FORMATS, default="dense-csv")
    f.add_argument(
        "--threshold",
        type=float,
        default=0.0,
        help="binarization threshold (entries > threshold become 1)",
    )
    f.add_argument(
        "--latent", type=int, default=None, help="latent width (finite model only)"
    )
    _add_sampler_flags(f)
    f.add_argument(
        "--traces-only",
        action="store_true",
        help="record only (L, lambda) traces, no factor snapshots",
    )
    f.add_argument("--out", required=True, help="output directory")
    f.set_defaults(handler=_cmd_fit)

    s = sub.add_parser("summarize", help="recompute summaries for a saved chain")
    s.add_argument("--chain", required=True, help="chain directory")
    s.add_argument("--truth", default=None, help="ground-truth U matrix file")
    s.add_argument("--truth-format", choices=_MATRIX_FORMATS, default="dense-csv")
    s.add_argument("--out", default=None, help="output directory (default: chain dir)")
    s.set_defaults(handler=_cmd_summarize)

    b = sub.add_parser("bench", help="time the nonparametric sampler at scale")
    b.add_argument("--rows", type=int, default=301)
    b.add_argument("--cols", type=int, default=21000)
    b.add_argument("--latent", type=int, default=9, help="latent width of the data")
    b.add_argument("--density", type=float, default=0.35)
    b.add_argument("--noise", type=float, default=0.0)
    _add_sampler_flags(b)
    b.add_argument("--out", default=None, help="optional report directory")
    b.set_defaults(handler=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
