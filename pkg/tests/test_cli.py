import json
import subprocess
import sys

import pytest

from qswi.cli import main
from qswi.config import settings


def run(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_qip_wi_reveal(tmp_path):
    code, rep = run(["qip", "wi", "--fixture", "reveal", "--x", "01", "--w0", "00", "--w1", "10"],
                    tmp_path)
    assert code == 0
    assert rep["results"]["wi_error"] == pytest.approx(1.0)
    assert rep["schema"] == 1 and "tolerances" in rep


def test_qip_run(tmp_path):
    code, rep = run(["qip", "run", "--fixture", "lossy-reveal", "--param", "p=0.5",
                     "--x", "01", "--w", "00"], tmp_path)
    assert code == 0
    assert rep["results"]["accept_probability"] == pytest.approx(0.5)


def test_qds_first_bits(tmp_path):
    code, rep = run(["qds", "check", "--family", "first-bits", "--t", "8", "--tprime", "1"],
                    tmp_path)
    assert code == 0
    assert rep["results"]["delta"] == pytest.approx(1 / 16, abs=1e-12)
    assert rep["results"]["gap"] == pytest.approx(1 / 8, abs=1e-12)


def test_qds_enumeration_limit_exit_3(tmp_path):
    code, _ = run(["qds", "check", "--family", "random", "--t", "6", "--tol",
                   "qds_exact_max_t=4"], tmp_path)
    assert code == 3
    assert settings.qds_exact_max_t == 12


def test_grover_curve_csv(tmp_path):
    csv = tmp_path / "curve.csv"
    code, rep = run(["grover", "curve", "--k", "4,8,16", "--csv", str(csv)], tmp_path)
    lines = csv.read_text().splitlines()
    assert lines[0].startswith("k,T,catch_b0_attack")
    assert len(lines) == 4
    assert rep["checks"]["catch_nonincreasing"] and rep["checks"]["slope_in_range"]
    # the attack degrades the b = 1 search by more than 1/sqrt(k) from k = 8 on
    assert not rep["checks"]["degradation_within_1_over_sqrt_k"]
    assert code == 2


def test_grover_run_and_cap(tmp_path):
    code, rep = run(["grover", "run", "--k", "16", "--T", "3", "--b", "1", "--j", "2"], tmp_path)
    assert code == 0
    assert rep["results"]["verdict"]["accept"] == pytest.approx(0.96132, abs=1e-4)
    code, _ = run(["grover", "run", "--k", "64", "--b", "0", "--bad", "63", "--strategy",
                   "attacker"], tmp_path, "cap.json")
    assert code == 3


def test_transform_compress(tmp_path):
    code, rep = run(["transform", "compress", "--fixture", "leaky", "--param", "messages=4",
                     "--param", "p=0.6667", "--param", "theta=0.9"], tmp_path)
    assert code == 0 and rep["passed"]


def test_transform_public_and_majority(tmp_path):
    code, _ = run(["transform", "public", "--fixture", "noisy-reveal", "--param", "messages=3"],
                  tmp_path, "a.json")
    assert code == 0
    code, _ = run(["transform", "seq-majority", "--fixture", "lossy-reveal", "--reps", "3"],
                  tmp_path, "b.json")
    assert code == 0


def test_transform_pipeline_infeasible(tmp_path):
    code, _ = run(["transform", "pipeline", "--fixture", "leaky", "--param", "messages=4",
                   "--target-p", "2"], tmp_path)
    assert code == 3


def test_batch_eval(tmp_path):
    code, rep = run(["batch", "eval", "--fixture", "sketch-batch", "--epsilon", "0.5"], tmp_path)
    assert code == 0
    assert rep["checks"] == {"product_chain": True, "wi_within_advice": True}


def test_batch_advice_file_roundtrip(tmp_path):
    code, rep = run(["batch", "advice", "--fixture", "checking-batch", "--epsilon", "0.5",
                     "--seed", "4"], tmp_path, "adv.json")
    assert code == 0
    code, comp = run(["batch", "compile", "--fixture", "checking-batch", "--advice",
                      str(tmp_path / "adv.json")], tmp_path, "comp.json")
    assert code == 0
    assert comp["results"]["advice"]["entries"] == rep["results"]["advice"]["entries"]


def test_fixtures_list(tmp_path):
    code, rep = run(["fixtures", "list"], tmp_path)
    assert code == 0
    assert "sketch-batch" in [f["name"] for f in rep["results"]["fixtures"]]


@pytest.mark.parametrize("argv", [
    ["qip", "wi", "--fixture", "nope", "--x", "01"],
    ["qip", "run", "--fixture", "sketch-batch", "--x", "01"],
    ["qip", "run", "--fixture", "reveal", "--x", "01", "--param", "oops"],
    ["qds", "check", "--tol", "no_such=1"],
])
def test_usage_errors_exit_1(argv):
    assert main(argv) == 1


def test_unknown_command_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


DETERMINISM = [
    ["qip", "adversary", "--fixture", "noisy-reveal", "--x", "10", "--restarts", "10",
     "--seed", "7"],
    ["qds", "check", "--family", "random", "--t", "5", "--seed", "3"],
    ["batch", "advice", "--fixture", "sketch-batch", "--param", "t=2", "--param", "rho=0.5",
     "--seed", "9", "--epsilon", "0.5"],
    ["grover", "attack", "--k", "8"],
    ["transform", "malicious-sim", "--fixture", "leaky", "--param", "messages=3", "--x", "01"],
]


@pytest.mark.parametrize("argv", DETERMINISM, ids=lambda a: " ".join(a[:2]))
def test_reports_byte_identical(argv, tmp_path):
    main(argv + ["--out", str(tmp_path / "a.json")])
    main(argv + ["--out", str(tmp_path / "b.json")])
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_console_script_subprocess(tmp_path):
    cmd = [sys.executable, "-m", "qswi.cli", "qds", "check", "--family", "identity", "--t", "2"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b
    assert json.loads(a)["results"]["delta"] == pytest.approx(0.5)
