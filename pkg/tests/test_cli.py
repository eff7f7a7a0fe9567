import csv
import json
import subprocess
import sys

import pytest

from gausscorr.cli import main
from gausscorr.hermite import HermiteSeries
from gausscorr.ident import IdentResult
from gausscorr.inequality import CorrelationReport


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_example(capsys):
    code, out, _ = run(capsys, "verify", "--g1", "poly:0,1", "--g2", "poly:0,0,0,1",
                       "--sigma", "1", "--rho", "0.5", "--engine", "series")
    assert code == 0
    doc = json.loads(out)
    r = CorrelationReport.from_dict(doc["result"])
    assert abs(r.slack - 0.375) < 1e-9
    assert doc["config"]["order"] == 32 and doc["config"]["engine"] == "series"
    assert doc["maxcorr_bound"] == pytest.approx(3.75)


def test_xmoment_arcsine_example(capsys):
    code, out, _ = run(capsys, "xmoment", "--g1", "sign", "--g2", "sign", "--sigma", "1",
                       "--rho", "0.5", "--engine", "quadrature")
    assert code == 0
    assert abs(json.loads(out)["result"]["value"] - 1 / 3) < 1e-3


def test_rho_out_of_range_exits_1(capsys):
    code, out, err = run(capsys, "verify", "--g1", "identity", "--g2", "identity", "--rho", "1.0")
    assert code == 1 and out == ""
    doc = json.loads(err)
    assert doc["exit"] == 1 and "rho must satisfy |rho| < 1" in doc["message"]


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    [],
    ["verify", "--g1", "cube", "--g2", "identity", "--rho", "0.5"],
    ["verify", "--g1", "identity", "--rho", "0.5"],
    ["verify", "--g1", "identity", "--g2", "abs", "--rho", "-0.5"],
    ["verify", "--g1", "identity", "--g2", "sign", "--rho", "0.5", "--engine", "warp"],
    ["project", "--g", "sign", "--order", "1.5"],
    ["sweep", "--format", "xml"],
    ["verify", "--config", "/nonexistent/config.json"],
])
def test_precondition_errors_exit_1(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert json.loads(err)["exit"] == 1


def test_degeneracy_exits_2(capsys):
    code, _, err = run(capsys, "identify", "--method", "inverse", "--f", "sign", "--degree", "3",
                       "--samples", "20000")
    assert code == 2
    assert json.loads(err)["error"] == "DegeneracyError"


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"g1": "tanh:1", "g2": "sign", "rho": 0.3, "sigma": 2.0}))
    code, out, _ = run(capsys, "verify", "--config", str(cfg), "--rho", "0.7")
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["rho"] == 0.7 and doc["config"]["sigma"] == 2.0
    assert doc["result"]["rho"] == 0.7
    cfg.write_text(json.dumps({"g1": "tanh:1", "bogus": 1}))
    assert run(capsys, "verify", "--config", str(cfg))[0] == 1


def test_project_round_trip(capsys):
    code, out, _ = run(capsys, "project", "--g", "tanh:1", "--order", "8")
    s = HermiteSeries.from_dict(json.loads(out)["result"])
    assert s.order == 8 and abs(s.coeffs[1] - 0.6057055096021588) < 1e-12


def test_csv_output_has_config_header(capsys):
    code, out, _ = run(capsys, "verify", "--g1", "sign", "--g2", "tanh:1", "--rho", "0.5", "--format", "csv")
    lines = out.splitlines()
    assert lines[0].startswith("# verify {")
    assert lines[1] == "g1,g2,sigma,rho,engine,lhs,rhs,slack,equality"
    row = next(csv.reader([lines[2]]))
    assert row[7] == f"{float(row[7]):.16e}"


def test_channel_command(capsys):
    code, out, _ = run(capsys, "channel", "--channel", '{"n_bits": 1, "p": 0.5, "q": 0.1}',
                       "--g1", "identity", "--g2", '{"0": 1, "1": 0}')
    assert code == 0
    r = CorrelationReport.from_dict(json.loads(out)["result"])
    assert abs(r.lhs - 0.0081) < 1e-12 and abs(r.rhs - 0.1681) < 1e-12
    code, out, _ = run(capsys, "channel", "--sigma", "1", "--rho", "0.5", "--g1", "identity", "--g2", "poly:0,0,0,1")
    r = CorrelationReport.from_dict(json.loads(out)["result"])
    assert abs(r.lhs - 2.25) < 1e-8
    assert run(capsys, "channel", "--g1", "identity", "--g2", "identity")[0] == 1


def test_sweep_routing_and_errors(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--function", "identity", "--function", "poly:0,0,1",
                     "--function", "poly:0,0,0,1", "--rhos", "-0.5,0,0.5", "--out", str(out))
    assert code == 0
    rows = list(csv.reader(out.read_text().splitlines()[2:]))
    assert len(rows) == 3 * 3 * 3 + 1
    by = {(r[0], r[1], r[3]): r for r in rows[:-1]}
    odd = by[("identity", "poly:0,0,0,1", "-5.0000000000000000e-01")]
    assert odd[4] == "corollary" and odd[9] == ""
    mixed = by[("identity", "poly:0,0,1", "-5.0000000000000000e-01")]
    assert mixed[9].startswith("ParityError")
    zero = by[("identity", "identity", "0.0000000000000000e+00")]
    assert zero[9].startswith("PreconditionError")
    assert rows[-1][0] == "summary"
    slacks = [float(r[7]) for r in rows[:-1] if r[7]]
    assert float(rows[-1][7]) == min(slacks) and min(slacks) >= -1e-9


def test_sweep_empty_grid_is_header_only(capsys):
    code, out, _ = run(capsys, "sweep", "--rhos", "")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 2 and lines[0].startswith("# sweep") and lines[1].startswith("g1,g2")


def test_sweep_json_and_parallel_determinism(capsys):
    args = ["sweep", "--function", "sign", "--function", "tanh:1", "--sigmas", "0.5,2", "--rhos", "-0.3,0.4"]
    _, serial, _ = run(capsys, *args, "--format", "json")
    _, parallel, _ = run(capsys, *args, "--format", "json", "--jobs", "4")
    a, b = json.loads(serial), json.loads(parallel)
    assert a["result"] == b["result"] and a["min_slack"] == b["min_slack"]
    for rec in a["result"]:
        CorrelationReport.from_dict(rec)


def test_simulate_and_identify_from_file(tmp_path, capsys):
    data = tmp_path / "chain.csv"
    code, out, _ = run(capsys, "simulate", "--f", "poly:0,1,0,0.2", "--samples", "50000", "--seed", "3",
                       "--chunks", "4", "--out", str(data))
    assert code == 0 and data.exists() and (tmp_path / "chain.csv.json").exists()
    assert json.loads(out)["result"]["samples"] == 50000
    code, out, _ = run(capsys, "identify", "--data", str(data), "--order", "3", "--challenger", "sign")
    assert code == 0
    doc = json.loads(out)
    res = IdentResult.from_dict(doc["result"])
    assert res.order == 3 and res.basis == "hermite"
    assert doc["recovered_scale"] > 0
    assert doc["challengers"][0]["g"] == "sign"
    assert run(capsys, "simulate", "--f", "sign")[0] == 1


def test_identify_oracle(capsys):
    code, out, _ = run(capsys, "identify", "--method", "oracle", "--f", "poly:0,1,0,0.2", "--order", "5")
    res = IdentResult.from_dict(json.loads(out)["result"])
    assert abs(res.coeffs[3] - 0.9965457582448817) < 1e-8


def test_identical_invocations_identical_bytes(tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        path = tmp_path / f"{name}.json"
        run(capsys, "xmoment", "--g1", "tanh:1", "--g2", "sign", "--rho", "0.4", "--engine", "montecarlo",
            "--samples", "20000", "--seed", "5", "--out", str(path))
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "gausscorr.cli", "verify", "--g1", "sign", "--g2", "sign",
                          "--rho", "0.5"], capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["result"]["equality"] is True
