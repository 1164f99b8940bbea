import csv
import io
import json
import math

import pytest

from convpow.cli import main, parse_schedule, ConfigError
from convpow.oracle import laguerre_eval

AFFINE = '{"family": "affine", "a": 1, "b": 1}'
SHIFTED = '{"family": "shifted_exp", "a": 1}'


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_rows(text):
    lines = text.splitlines()
    assert lines[0] == "# schema_version: 1"
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_asym_affine_square_sweep(capsys):
    code, out, _ = run(capsys, ["asym", "--spec", AFFINE, "--schedule", "power:2:10..160",
                                "--formula", "thm_a", "--oracle", "exact"])
    assert code == 0
    rows = csv_rows(out)
    assert [int(r["j"]) for r in rows] == [10, 20, 40, 80, 160]
    last = rows[-1]
    assert abs(float(last["ratio_thm_a"]) - 1) < 0.02
    assert float(last["log_oracle"]) == pytest.approx(laguerre_eval(160, 25600.0).log_abs, rel=1e-11)
    assert all(r["status"] == "ok" for r in rows)


def test_asym_all_rows_out_of_range(capsys, caplog):
    code, out, err = run(capsys, ["asym", "--spec", '{"family": "heavy_exp_density", "alpha": 1}',
                                  "--schedule", "ratio:2:10,20,40"])
    assert code == 2
    assert all(r["status"] == "skipped:RatioOutOfRange" for r in csv_rows(out))
    assert "RatioOutOfRange" not in out.splitlines()[1]
    assert "skipped" in caplog.text


def test_asym_json_output(capsys, tmp_path):
    dest = tmp_path / "out.json"
    code, out, _ = run(capsys, ["asym", "--spec", AFFINE, "--schedule", "pairs:50@5000,500@1000",
                                "--formula", "thm_a,thm_b", "--format", "json", "--out", str(dest)])
    assert code == 0 and out == ""
    doc = json.loads(dest.read_text())
    assert doc["schema_version"] == 1 and doc["command"] == "asym"
    assert [r["j"] for r in doc["rows"]] == [50, 500]
    assert {"log_thm_a", "log_thm_b"} <= set(doc["columns"])


def test_asym_grid_oracle(capsys):
    code, out, _ = run(capsys, ["asym", "--spec", '{"family": "power_law", "b": 1, "alpha": 1}',
                                "--schedule", "pairs:4@3", "--oracle", "grid", "--h", "1e-3"])
    assert code == 0
    r = csv_rows(out)[0]
    assert math.isclose(float(r["log_oracle"]), math.log(3 ** 4 / 24), rel_tol=1e-2)


def test_auto_formula(capsys):
    code, out, _ = run(capsys, ["asym", "--spec", AFFINE, "--schedule", "ratio:2:10,20", "--formula", "auto"])
    assert code == 0
    assert "log_thm_b" in out.splitlines()[1]


def test_spec_from_file(capsys, tmp_path):
    p = tmp_path / "spec.json"
    p.write_text(SHIFTED)
    code, out, _ = run(capsys, ["asym", "--spec", str(p), "--schedule", "pairs:40@400"])
    assert code == 0 and len(csv_rows(out)) == 1


def test_deterministic_output(capsys, monkeypatch):
    argv = ["asym", "--spec", AFFINE, "--schedule", "ratio:3:10..640", "--formula", "thm_a,thm_b",
            "--oracle", "exact"]
    _, a, _ = run(capsys, argv)
    _, b, _ = run(capsys, argv)
    monkeypatch.setenv("CONVPOW_THREADS", "4")
    _, c, _ = run(capsys, argv)
    assert a == b == c
    assert "e+" in a or "e-" in a


def test_bad_thread_setting(capsys, monkeypatch):
    monkeypatch.setenv("CONVPOW_THREADS", "many")
    code, _, _ = run(capsys, ["asym", "--spec", AFFINE, "--schedule", "ratio:2:10,20"])
    assert code == 1


@pytest.mark.parametrize("argv", [
    ["asym", "--spec", AFFINE, "--schedule", ""],
    ["asym", "--spec", AFFINE, "--schedule", "pairs:"],
    ["asym", "--spec", AFFINE, "--schedule", "ratio:2:"],
    ["asym", "--spec", AFFINE, "--schedule", "weird:1:2"],
    ["asym", "--spec", '{"family": "affine", "a": 1', "--schedule", "ratio:2:10"],
    ["asym", "--spec", '{"family": "nope"}', "--schedule", "ratio:2:10"],
    ["asym", "--spec", AFFINE, "--schedule", "ratio:2:10", "--formula", "thm_z"],
    ["asym", "--spec", AFFINE, "--schedule", "ratio:2:10", "--oracle", "grid"],
    ["asym", "--spec", '{"family": "exp", "a": 1}', "--schedule", "ratio:2:10", "--oracle", "exact"],
    ["asym", "--spec", AFFINE],
    ["bogus"],
    ["clt", "--spec", "{not json", "--j-list", "10"],
    ["clt", "--spec", SHIFTED],
    ["check", "--spec", SHIFTED, "--j", "10"],
    ["oracle", "--spec", SHIFTED, "--j", "2", "--t", "1"],
])
def test_config_errors_exit_1(capsys, argv):
    assert run(capsys, argv)[0] == 1


def test_missing_file_exit_3(capsys, tmp_path):
    assert run(capsys, ["asym", "--spec", str(tmp_path / "missing.json"), "--schedule", "ratio:2:10"])[0] == 3
    bad_out = str(tmp_path / "no" / "such" / "dir.csv")
    assert run(capsys, ["asym", "--spec", AFFINE, "--schedule", "ratio:2:10", "--out", bad_out])[0] == 3


def test_math_domain_exit_2(capsys):
    # no critical threshold exists for the affine family
    assert run(capsys, ["clt", "--spec", AFFINE, "--j-list", "100"])[0] == 2


def test_check_exit_codes(capsys):
    code, out, _ = run(capsys, ["check", "--spec", SHIFTED, "--j", "1000", "--t", "10000", "--gamma", "7"])
    doc = json.loads(out)
    assert code == 0 and doc["regime"] == "B_ok" and doc["schema_version"] == 1
    code, out, _ = run(capsys, ["check", "--spec", AFFINE, "--j", "1000000", "--t", "1000"])
    assert code == 4 and json.loads(out)["regime"] == "suspect"
    code, out, _ = run(capsys, ["check", "--spec", AFFINE, "--j", "10000", "--t", "1e8", "--sup-threshold", "0.995"])
    assert code == 0 and json.loads(out)["regime"] == "A_ok"
    code, out, _ = run(capsys, ["check", "--spec", AFFINE, "--j", "100", "--t", "1e4", "--format", "csv"])
    assert csv_rows(out)[0]["regime"] == "suspect"


def test_check_inconclusive_exit_4(capsys, caplog):
    lattice = '{"family": "lattice", "span": 1, "masses": [1, 1], "tail": 1}'
    from convpow.measure import spec_from_json
    from convpow.saddle import solve_kappa
    period = 2 * math.pi * solve_kappa(spec_from_json(lattice), 50, 100.0).T_j
    code, _, err = run(capsys, ["check", "--spec", lattice, "--j", "50", "--t", "100",
                                "--gamma", str(0.6 * period), "--z-max", str(0.95 * period), "--n-z", "20"])
    assert code == 4 and "rising" in caplog.text


def test_clt_table(capsys):
    code, out, _ = run(capsys, ["clt", "--spec", SHIFTED, "--y", "0", "--j-list", "1000000"])
    assert code == 0
    r = csv_rows(out)[0]
    assert float(r["gap"]) < 0.05
    _, out2, _ = run(capsys, ["clt", "--spec", SHIFTED, "--y", "2", "--j-list", "1000000"])
    ratio = float(csv_rows(out2)[0]["limit"]) / float(r["limit"])
    assert ratio == pytest.approx(math.exp(-1), rel=1e-11)


def test_renewal_command(capsys, caplog):
    inp = '{"moments": [1, 2, 6, 24], "dist": {"family": "density", "expr": "exp(-x)"}}'
    code, out, err = run(capsys, ["renewal", "--spec", inp, "--schedule", "pairs:3@20,4@40,12@14",
                                  "--oracle", "grid", "--h", "1e-2"])
    assert code == 0
    rows = csv_rows(out)
    assert [r["regime_warning"] for r in rows] == ["false", "false", "true"]
    assert abs(float(rows[0]["ratio"]) - 1) < 0.02
    assert "j^5/t^4" in caplog.text
    assert run(capsys, ["renewal", "--spec", '{"moments": [1, 0.5]}', "--schedule", "pairs:3@20"])[0] == 1
    assert run(capsys, ["renewal", "--spec", '{"moments": [1, 2]}', "--schedule", "pairs:3@20"])[0] == 1
    assert run(capsys, ["renewal", "--spec", '{"moments": [1, 2, 6, 24]}', "--schedule", "pairs:3@20",
                        "--oracle", "grid", "--h", "0.1"])[0] == 1


def test_oracle_command(capsys):
    code, out, _ = run(capsys, ["oracle", "--spec", '{"family": "power_law", "b": 1, "alpha": 1}',
                                "--j", "2", "--t", "2", "--h", "0.5"])
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# schema_version: 1" and lines[1] == "grid_x,log_V_star_j"
    assert len(lines) == 2 + 5
    code, out, _ = run(capsys, ["oracle", "--spec", '{"family": "power_law", "b": 1, "alpha": 1}',
                                "--j", "2", "--t", "2", "--h", "0.5", "--format", "json"])
    doc = json.loads(out)
    assert doc["schema_version"] == 1 and len(doc["grid_x"]) == len(doc["log_V_star_j"]) == 5
    assert doc["log_V_star_j"][0] is None or doc["log_V_star_j"][0] == "-inf"


def test_schedule_parser():
    assert parse_schedule("ratio:2:10..40") == [(10, 20.0), (20, 40.0), (40, 80.0)]
    assert parse_schedule("power:1.5:4") == [(4, 8.0)]
    assert parse_schedule("pairs:3@2.5, 7@9") == [(3, 2.5), (7, 9.0)]
    for bad in ("ratio:x:10", "pairs:0@1", "ratio:2:40..10", "ratio:2:-3"):
        with pytest.raises(ConfigError):
            parse_schedule(bad)


def test_module_entry_point_streams():
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-m", "convpow", "asym", "--spec",
                           '{"family": "heavy_exp_density", "alpha": 1}', "--schedule", "ratio:2:10"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 2
    assert proc.stdout.startswith("# schema_version: 1")
    assert "skipped" in proc.stderr and "WARNING" not in proc.stdout
