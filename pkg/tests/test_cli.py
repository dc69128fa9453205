import json
import math
import subprocess
import sys

import pytest

from specgap.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_HYPOTHESIS, EXIT_OK, main, parse_kernel_spec, resolve_config, build_parser


def _run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bounds_hard_spheres(capsys):
    code, out, _ = _run(["bounds", "--gamma", "1", "--dim", "3"], capsys)
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["optimized"]["S_gamma_Bo"] == pytest.approx(math.pi * math.sqrt(1 / 8) * math.exp(-0.5) / 24, rel=1e-14)


def test_bounds_small_gamma(capsys):
    code, out, _ = _run(["bounds", "--gamma", "0.0001"], capsys)
    assert code == EXIT_OK
    assert json.loads(out)["optimized"]["S_gamma_Bo"] == pytest.approx(math.pi / 24, rel=1e-3)


def test_exit_codes(capsys):
    assert _run(["bounds", "--phi", "constant:0"], capsys)[0] == EXIT_HYPOTHESIS
    assert _run(["gap", "--truncation", "1"], capsys)[0] == EXIT_CONFIG
    assert _run(["bounds", "--phi", "yukawa:2"], capsys)[0] == EXIT_CONFIG
    assert _run(["verify", "--suite", "lemma3", "--b", "linear", "--n", "2"], capsys)[0] == EXIT_HYPOTHESIS
    assert _run(["grazing", "--eps", "0.1,0.2"], capsys)[0] == EXIT_CONFIG


def test_missing_config_file_is_a_config_error(tmp_path, capsys):
    assert _run(["bounds", "--config", str(tmp_path / "nope.json")], capsys)[0] == EXIT_CONFIG


def test_verify_failure_exit_code(monkeypatch, capsys):
    import specgap.cli as cli
    from specgap.bounds import SuiteResult, VerificationRecord

    bad = VerificationRecord("theorem1", "h", 0.0, 1.0, -1.0, 1e-10, "fail")
    monkeypatch.setattr(cli, "run_suite", lambda *a, **k: SuiteResult("theorem1", 1.0, [bad], []))
    code, out, _ = _run(["verify", "--n", "1"], capsys)
    assert code == EXIT_FAIL
    assert json.loads(out.splitlines()[-1])["summary"]["fail"] == 1


def test_verify_cmcv_gamma_zero(capsys):
    code, out, _ = _run(["verify", "--suite", "cmcv", "--gamma", "0", "--n", "3"], capsys)
    lines = [json.loads(x) for x in out.splitlines()]
    assert code == EXIT_OK
    assert all(r["meta"]["constant"] == 0.25 for r in lines[:-1])
    assert lines[-1]["summary"]["pass"] == 3


def test_gap_table(capsys):
    code, out, _ = _run(["gap", "--phi", "constant:1", "--truncation", "4"], capsys)
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["normalization"] == "unit-mass"
    assert [row["truncation"] for row in doc["table"]] == [2, 4]
    assert doc["gap"] == pytest.approx(4 * math.pi / 3, rel=1e-12)
    code, out, _ = _run(["gap", "--operator", "landau", "--phi", "constant:1", "--truncation", "4"], capsys)
    assert json.loads(out)["gap"] >= 2 * math.pi


def test_grazing_invariant_and_lambda0(capsys):
    code, out, _ = _run(["grazing", "--function", "energy", "--eps", "0.4,0.2"], capsys)
    assert code == EXIT_OK
    rows = [line.split(",") for line in out.splitlines()[1:] if not line.startswith("#")]
    assert all(abs(float(r[1])) < 1e-9 and abs(float(r[2])) < 1e-9 for r in rows)
    code, out, _ = _run(["grazing", "--lambda0"], capsys)
    assert out.splitlines()[0] == "eps,lambda0,limit,rel_error"
    assert out.rstrip().splitlines()[-1].startswith("# fitted_order=")


def test_kernel_short_forms():
    assert parse_kernel_spec("power:0.5", "phi") == {"type": "power", "gamma": 0.5}
    assert parse_kernel_spec("grazing:0.1", "b") == {"type": "grazing", "eps": 0.1}
    assert parse_kernel_spec('{"type": "constant", "value": 2}', "b")["value"] == 2


def test_precedence_and_thread_env(tmp_path, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "verify", "n": 7, "seed": 3}))
    monkeypatch.setenv("SPECGAP_THREADS", "3")
    ns = build_parser().parse_args(["verify", "--config", str(cfg), "--seed", "9"])
    rc = resolve_config(ns)
    assert (rc.n, rc.seed, rc.threads, rc.normalization) == (7, 9, 3, "paper-raw")


@pytest.mark.parametrize(
    "args",
    [
        ["bounds", "--gamma", "2"],
        ["verify", "--suite", "theorem2", "--n", "3", "--seed", "5"],
        ["grazing", "--eps", "0.4,0.2,0.1"],
    ],
)
def test_rerun_from_emitted_config_is_bit_exact(args, tmp_path, monkeypatch):
    first = tmp_path / "first.out"
    assert main(args + ["--output", str(first)]) in (EXIT_OK,)
    config = tmp_path / "first.out.config.json"
    assert json.loads(config.read_text())["command"] == args[0]
    second = tmp_path / "second.out"
    monkeypatch.setenv("SPECGAP_THREADS", "4")
    assert main([args[0], "--config", str(config), "--output", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "specgap", "bounds", "--gamma", "0.5"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["inputs"]["phi"]["gamma"] == 0.5
