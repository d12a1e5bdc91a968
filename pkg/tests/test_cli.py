import csv
import io
import json
import math
import subprocess
import sys

import pytest

from qsprep.circuit import parse_qasm
from qsprep.cli import EXIT_CAP, EXIT_INPUT, EXIT_OK, EXIT_VERIFY, geo_mean, main
from qsprep.qstate import ground_state, make_state, save
from qsprep.sim import fidelity, simulate

PSI = make_state(3, [0b000, 0b011, 0b101, 0b110])


@pytest.fixture
def psi_file(tmp_path):
    path = tmp_path / "psi.txt"
    save(PSI, path)
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_prepare_psi_exact(capsys, psi_file, tmp_path):
    qasm = tmp_path / "psi.qasm"
    code, out, _ = run(capsys, "prepare", psi_file, "--flow", "exact", "-o", qasm)
    assert code == EXIT_OK and out.strip() == "cnots=2 verified=True"
    circ = parse_qasm(qasm.read_text())
    assert fidelity(simulate(circ), PSI) >= 1 - 1e-9
    code, out, _ = run(capsys, "verify", qasm, psi_file)
    assert code == EXIT_OK and "ok=True" in out


@pytest.mark.parametrize("flow,expected", [("nflow", 6), ("mflow", 7), ("hybrid", 2)])
def test_prepare_flows(capsys, psi_file, flow, expected):
    code, out, _ = run(capsys, "prepare", psi_file, "--flow", flow)
    assert code == EXIT_OK and out.strip() == f"cnots={expected} verified=True"


def test_prepare_ground_state(capsys, tmp_path):
    path = tmp_path / "g.json"
    save(ground_state(3), path)
    code, out, _ = run(capsys, "prepare", path, "--flow", "exact", "--print-qasm")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[-1] == "cnots=0 verified=True"
    assert lines[:-1] == ["OPENQASM 2.0;", 'include "qelib1.inc";', "qreg q[3];"]


def test_prepare_named_dicke(capsys):
    code, out, _ = run(capsys, "prepare", "dicke", "--n", 4, "--k", 2, "--flow", "exact")
    assert code == EXIT_OK
    cnots = int(out.split()[0].split("=")[1])
    assert cnots <= 6 and out.strip().endswith("verified=True")
    code, out, _ = run(capsys, "prepare", "ghz", "--n", 4, "--flow", "exact", "--no-verify")
    assert code == EXIT_OK and out.strip() == "cnots=3 verified=skipped"


def test_prepare_errors(capsys, tmp_path):
    code, _, err = run(capsys, "prepare", tmp_path / "missing.txt")
    assert code == EXIT_INPUT and err.startswith("error:")
    bad = tmp_path / "bad.txt"
    bad.write_text("01x 0.5\n")
    assert run(capsys, "prepare", bad)[0] == EXIT_INPUT
    assert run(capsys, "prepare", "dicke", "--n", 4)[0] == EXIT_INPUT
    code, _, err = run(capsys, "prepare", "dicke", "--n", 5, "--k", 2, "--flow", "exact")
    assert code == EXIT_CAP and "error" in err
    code, _, _ = run(capsys, "prepare", "dicke", "--n", 4, "--k", 2, "--flow", "exact",
                     "--node-budget", 1, "--no-fallback")
    assert code == EXIT_CAP


def test_verify_failure_exit(capsys, psi_file, tmp_path):
    qasm = tmp_path / "wrong.qasm"
    qasm.write_text('OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[3];\nry(0.3) q[0];\n')
    code, out, _ = run(capsys, "verify", qasm, psi_file)
    assert code == EXIT_VERIFY and "ok=False" in out
    narrow = tmp_path / "narrow.qasm"
    narrow.write_text('OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[2];\n')
    assert run(capsys, "verify", narrow, psi_file)[0] == EXIT_VERIFY


def test_decompose_mcry(capsys, tmp_path):
    path = tmp_path / "table.json"
    path.write_text(json.dumps({"controls": [1, 2], "entries": {
        "00": 0.0, "01": math.pi / 2, "10": 3 * math.pi / 2, "11": "X"}}))
    code, out, _ = run(capsys, "decompose-mcry", path)
    assert code == EXIT_OK and out.splitlines()[-1] == "// cnots=2"
    assert parse_qasm(out).count_cx() == 2
    code, out, _ = run(capsys, "decompose-mcry", path, "--mode", "gray")
    assert code == EXIT_OK and out.splitlines()[-1] == "// cnots=4"
    code, out, _ = run(capsys, "decompose-mcry", path, "--initial", "none")
    assert code == EXIT_OK and out.splitlines()[-1] == "// cnots=4"
    path.write_text("{not json")
    assert run(capsys, "decompose-mcry", path)[0] == EXIT_INPUT


def test_canon_count_csv(capsys):
    code, out, _ = run(capsys, "canon-count", "--n", 4, "--m-min", 1, "--m-max", 2)
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert rows == [["m", "raw", "canonical"], ["1", "16", "1"], ["2", "120", "3"]]


def test_bench_dicke_rows(capsys):
    code, out, _ = run(capsys, "bench-dicke", "--max-n", 3, "--flows", "nflow,mflow,hybrid")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    body = [r for r in rows if r["n"] != "geo_mean"]
    assert [(r["n"], r["k"], r["flow"]) for r in body] == [
        ("3", "1", "nflow"), ("3", "1", "mflow"), ("3", "1", "hybrid")]
    assert all(r["verified"] == "True" and r["status"] == "ok" for r in body)
    assert [r["flow"] for r in rows if r["n"] == "geo_mean"] == ["nflow", "mflow", "hybrid"]
    assert "seconds" not in rows[0]


def test_bench_random_is_byte_identical(capsys, tmp_path):
    args = ["bench-random", "--n-min", 3, "--n-max", 4, "--count", 3, "--seed", 5,
            "--flows", "nflow,mflow,hybrid"]
    first = run(capsys, *args, "-o", tmp_path / "a.csv")
    second = run(capsys, *args)
    assert first[0] == second[0] == EXIT_OK
    assert first[1] == second[1] == (tmp_path / "a.csv").read_text()
    rows = list(csv.DictReader(io.StringIO(first[1])))
    assert all(r["verified"] == "True" for r in rows if r["n"] != "geo_mean")
    timed = run(capsys, *args, "--timing")[1]
    assert timed.splitlines()[0].endswith(",seconds")


def test_bench_flag_errors(capsys):
    assert run(capsys, "bench-random", "--flows", "bogus")[0] == EXIT_INPUT


def test_geo_mean():
    assert geo_mean([2, 8]) == pytest.approx(4.0)
    assert geo_mean([0, 4, None]) == pytest.approx(4.0)
    assert geo_mean([]) is None


def test_module_entry_point(psi_file):
    proc = subprocess.run([sys.executable, "-m", "qsprep", "prepare", str(psi_file), "--flow", "exact"],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0 and proc.stdout.strip() == "cnots=2 verified=True"
