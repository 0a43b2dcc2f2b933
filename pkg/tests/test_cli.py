import json
import os
import shutil
import subprocess
import sys

import numpy as np
import pytest

from boolmf import DatasetSpec, load, load_chain
from boolmf.cli import main


@pytest.fixture(autouse=True)
def _restore_thread_pool():
    # --threads clamps the live numba pool; put it back so later tests
    # (and the timed acceptance runs) keep their workers
    import numba

    before = numba.get_num_threads()
    yield
    numba.set_num_threads(before)


def gen_args(out, rows=20, cols=24, latent=3, **extra):
    argv = [
        "generate",
        "--rows", str(rows),
        "--cols", str(cols),
        "--latent", str(latent),
        "--seed", "5",
        "--out", str(out),
    ]
    for key, value in extra.items():
        argv += [f"--{key.replace('_', '-')}", str(value)]
    return argv


def fit_args(data, out, **extra):
    argv = [
        "fit",
        "--input", str(data),
        "--samples", "30",
        "--burn-in", "15",
        "--seed", "2",
        "--out", str(out),
    ]
    for key, value in extra.items():
        argv += [f"--{key.replace('_', '-')}", str(value)]
    return argv


# ---------------------------------------------------------------- generate


def test_generate_writes_data_and_manifest(tmp_path, capsys):
    assert main(gen_args(tmp_path / "d")) == 0
    out = capsys.readouterr().out
    assert "generated 20x24" in out
    X = load(DatasetSpec(tmp_path / "d" / "X.csv"))
    Z = load(DatasetSpec(tmp_path / "d" / "Z_true.csv"))
    U = load(DatasetSpec(tmp_path / "d" / "U_true.csv"))
    assert X.shape == (20, 24) and Z.shape == (20, 3) and U.shape == (24, 3)
    manifest = json.loads((tmp_path / "d" / "manifest.json").read_text())
    assert manifest["tool"] == "boolmf"
    assert manifest["version"] == "boolmf-0.1.0"
    assert manifest["subcommand"] == "generate"
    assert manifest["seed"] == 5
    assert manifest["args"]["latent"] == 3
    assert len(manifest["outputs"]) == 3


def test_generate_sparse_format(tmp_path):
    assert main(gen_args(tmp_path / "d", format="sparse-coo")) == 0
    X = load(DatasetSpec(tmp_path / "d" / "X.coo", format="sparse-coo"))
    assert X.shape == (20, 24)


def test_generate_is_deterministic(tmp_path):
    assert main(gen_args(tmp_path / "a")) == 0
    assert main(gen_args(tmp_path / "b")) == 0
    assert (tmp_path / "a" / "X.csv").read_bytes() == (
        tmp_path / "b" / "X.csv"
    ).read_bytes()


@pytest.mark.parametrize(
    "bad",
    [
        dict(latent=0),
        dict(rows=0),
        dict(noise=0.7),
        dict(density=0.0),
    ],
)
def test_generate_usage_errors(tmp_path, capsys, bad):
    assert main(gen_args(tmp_path / "d", **bad)) == 2
    assert "usage error" in capsys.readouterr().err


# ---------------------------------------------------------------- fit


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    assert main(gen_args(d, rows=30, cols=40, latent=3)) == 0
    return d


def test_fit_ibp_full_outputs(dataset, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(fit_args(dataset / "X.csv", out)) == 0
    assert "fit (ibp) finished" in capsys.readouterr().out

    chain = load_chain(out / "chain")
    assert len(chain) == 15 and chain.has_factors
    assert chain.config_echo["model"] == "ibp"

    summary = json.loads((out / "summary.json").read_text())
    assert summary["model"] == "ibp"
    assert summary["n_recorded"] == 15
    assert summary["L_mode"] == 3  # easy noiseless recovery
    assert summary["reconstruction_error"] is not None
    assert summary["reconstruction_error"] <= 0.05
    assert (out / "mean_z.pgm").read_bytes().startswith(b"P5\n")

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["inputs"] == [str(dataset / "X.csv")]
    assert manifest["threads"] >= 1
    assert str(out / "chain") in manifest["outputs"]


def test_fit_finite_needs_latent(dataset, tmp_path, capsys):
    assert main(fit_args(dataset / "X.csv", tmp_path / "r", model="finite")) == 2
    assert "usage error" in capsys.readouterr().err


def test_fit_finite_runs(dataset, tmp_path):
    out = tmp_path / "r"
    assert main(fit_args(dataset / "X.csv", out, model="finite", latent="3")) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["model"] == "finite"
    assert summary["L_mode"] == 3  # finite chains report the fixed width
    assert summary["reconstruction_error"] <= 0.05


def test_fit_traces_only(dataset, tmp_path):
    out = tmp_path / "r"
    argv = fit_args(dataset / "X.csv", out) + ["--traces-only"]
    assert main(argv) == 0
    chain = load_chain(out / "chain")
    assert not chain.has_factors
    summary = json.loads((out / "summary.json").read_text())
    assert summary["reconstruction_error"] is None
    assert not (out / "mean_z.pgm").exists()


def test_fit_usage_errors(dataset, tmp_path, capsys):
    base = dataset / "X.csv"
    cases = [
        fit_args(base, tmp_path / "a", samples="10", burn_in="10"),
        fit_args(base, tmp_path / "b", model="finite", latent="0"),
        fit_args(base, tmp_path / "c", threads="zebra"),
        fit_args(base, tmp_path / "d", threads="0"),
    ]
    for argv in cases:
        assert main(argv) == 2
    assert capsys.readouterr().err.count("usage error") == len(cases)


def test_fit_missing_input_is_runtime_error(tmp_path, capsys):
    assert main(fit_args(tmp_path / "nope.csv", tmp_path / "r")) == 1
    assert "error:" in capsys.readouterr().err


def test_fit_replay_from_manifest_matches_bytes(dataset, tmp_path):
    first = tmp_path / "first"
    assert main(fit_args(dataset / "X.csv", first, alpha="1.5", q="0.4")) == 0
    manifest = json.loads((first / "manifest.json").read_text())

    argv = ["fit", "--out", str(tmp_path / "second")]
    for key, value in manifest["args"].items():
        if key in ("subcommand", "out") or value is None:
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        else:
            argv += [flag, str(value)]
    assert main(argv) == 0

    for rel in ("chain/traces.csv", "chain/config.json"):
        assert (first / rel).read_bytes() == (tmp_path / "second" / rel).read_bytes()


# ---------------------------------------------------------------- summarize


def test_summarize_roundtrip_with_truth(dataset, tmp_path, capsys):
    run = tmp_path / "run"
    assert main(fit_args(dataset / "X.csv", run)) == 0
    capsys.readouterr()

    out = tmp_path / "resummary"
    argv = [
        "summarize",
        "--chain", str(run / "chain"),
        "--truth", str(dataset / "U_true.csv"),
        "--out", str(out),
    ]
    assert main(argv) == 0
    assert "mean Jaccard vs truth" in capsys.readouterr().out
    summary = json.loads((out / "summary.json").read_text())
    assert summary["match"]["mean_jaccard"] >= 0.95
    assert len(summary["match"]["pairs"]) == 3


def test_summarize_defaults_to_chain_dir(dataset, tmp_path):
    run = tmp_path / "run"
    assert main(fit_args(dataset / "X.csv", run)) == 0
    assert main(["summarize", "--chain", str(run / "chain")]) == 0
    assert (run / "chain" / "summary.json").is_file()


def test_summarize_truth_requires_factors(dataset, tmp_path, capsys):
    run = tmp_path / "run"
    assert main(fit_args(dataset / "X.csv", run) + ["--traces-only"]) == 0
    argv = [
        "summarize",
        "--chain", str(run / "chain"),
        "--truth", str(dataset / "U_true.csv"),
    ]
    assert main(argv) == 2
    assert "usage error" in capsys.readouterr().err


def test_summarize_missing_chain(tmp_path, capsys):
    assert main(["summarize", "--chain", str(tmp_path / "ghost")]) == 1
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------- bench


def test_bench_small_with_report(tmp_path, capsys):
    out = tmp_path / "bench"
    argv = [
        "bench",
        "--rows", "24", "--cols", "48", "--latent", "2",
        "--samples", "8", "--burn-in", "4", "--seed", "1",
        "--out", str(out),
    ]
    assert main(argv) == 0
    assert "sweeps/s" in capsys.readouterr().out
    report = json.loads((out / "report.json").read_text())
    assert report["rows"] == 24 and report["n_sweeps"] == 8
    assert report["seconds_sampling"] > 0
    assert report["sweeps_per_second"] > 0
    assert report["manifest"]["subcommand"] == "bench"


def test_bench_usage_errors(tmp_path):
    assert main(["bench", "--latent", "0"]) == 2
    assert main(["bench", "--samples", "5", "--burn-in", "9"]) == 2
    assert main(["bench", "--density", "1.0"]) == 2


# ---------------------------------------------------------------- process


def test_missing_subcommand_is_usage_error(capsys):
    assert main([]) == 2
    capsys.readouterr()


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 2
    capsys.readouterr()


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "generate" in capsys.readouterr().out


def test_console_script_installed():
    exe = shutil.which("boolmf")
    assert exe, "console script should be on PATH after editable install"
    r = subprocess.run([exe, "generate", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    assert "--density" in r.stdout


def test_thread_count_does_not_change_results(dataset, tmp_path):
    """Same manifest, different worker counts: byte-identical traces."""

    def run(threads):
        env = os.environ.copy()
        env["BOOLMF_THREADS"] = str(threads)
        out = tmp_path / f"t{threads}"
        cmd = [
            sys.executable, "-m", "boolmf.cli", "fit",
            "--input", str(dataset / "X.csv"),
            "--samples", "16", "--burn-in", "8", "--seed", "3",
            "--out", str(out),
        ]
        r = subprocess.run(cmd, env=env, capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        return (out / "chain" / "traces.csv").read_bytes()

    assert run(1) == run(2)
