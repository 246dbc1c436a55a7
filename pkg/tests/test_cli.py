import csv
import io
import json
import math

import pytest

from hqrsim import cli
from hqrsim.link import evaluate
from hqrsim.states import LinkConfig


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_eval_trivial_limit(capsys):
    code, out, _ = run(["eval", "--theta", "0", "--alpha", "1", "--r", "0", "--beta", "0", "--pc", "0.5",
                        "--distance-km", "10"], capsys)
    assert code == 0
    (row,) = rows(out)
    assert list(row)[:11] == list(cli.COLUMNS[:11])
    assert float(row["F"]) == 0.5
    assert row["P_s"] == "0.682689492137"


def test_sweep_ranges_and_jsonl(capsys):
    code, out, _ = run(["sweep", "--alpha", "0:200:5", "--beta", "40,50", "--r", "1.5", "--pc", "0.1",
                        "--distance-km", "10", "--format", "jsonl"], capsys)
    assert code == 0
    lines = [json.loads(l) for l in out.splitlines()]
    assert len(lines) == 10 and lines[0]["alpha"] == 0.0 and lines[1]["beta"] == 50.0


def test_round_trip_through_eval(capsys):
    _, out, _ = run(["optimize", "--distance-km", "20", "--pc", "0.25", "--n-starts", "4"], capsys)
    (row,) = rows(out)
    res = evaluate(float(row["alpha"]), float(row["r"]), float(row["beta"]), float(row["p_c"]),
                   LinkConfig(float(row["theta"]), float(row["distance_km"])))
    for k in ("F", "F_abs", "P_s"):
        assert getattr(res, k) == pytest.approx(float(row[k]), abs=1e-9)


def test_output_is_deterministic(tmp_path, capsys):
    args = ["optimize", "--distance-km", "10", "--pc", "0.1", "--n-starts", "4", "--seed", "11"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# segment\ncommand = eval\ndistance_km = 10\nalpha = 1  # probe\npc = 0.5\ntheta = 0\n")
    code, out, _ = run(["--config", str(cfg)], capsys)
    assert code == 0 and float(rows(out)[0]["F"]) == 0.5
    code, out, _ = run(["--config", str(cfg), "--theta", "0.01", "--distance-km", "20"], capsys)
    row = rows(out)[0]
    assert float(row["theta"]) == 0.01 and float(row["distance_km"]) == 20


@pytest.mark.parametrize(
    "args,text",
    [
        (["eval", "--alpha", "1", "--pc", "0.1"], "distance_km"),
        (["eval", "--distance-km", "nan", "--alpha", "1", "--pc", "0.1"], "finite"),
        (["reproduce", "fig9"], "fig9"),
        (["sweep", "--distance-km", "1", "--alpha", "0:1", "--pc", "0.1"], "lo:hi:n"),
        (["optimize", "--distance-km", "1", "--pc", "0.1", "--free", "gamma"], "free"),
        ([], "no command"),
    ],
)
def test_usage_errors_exit_2(args, text, capsys):
    code, _, err = run(args, capsys)
    assert code == 2 and text in err


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("command = eval\nwavelength = 1550\n")
    code, _, err = run(["--config", str(cfg)], capsys)
    assert code == 2 and "wavelength" in err


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["eval", "--bogus", "1"])
    assert e.value.code == 2


def test_numerical_failure_flags_rows(capsys):
    code, out, err = run(["sweep", "--alpha", "0", "--beta", "1,20000", "--pc", "0.01", "--distance-km", "10"], capsys)
    assert code == 1 and "flagged" in err
    r = rows(out)
    assert r[0]["error"] == "" and r[1]["error"] and r[1]["F"] == "nan"


def test_reproduce_table1(capsys):
    code, out, _ = run(["reproduce", "table1"], capsys)
    assert code == 0 and len(rows(out)) == 18
    code2, out2, _ = run(["reproduce", "--exhibit", "table1"], capsys)
    assert out2 == out


def test_validate_rows(capsys):
    code, out, _ = run(["validate", "--n-points", "20", "--seed", "4"], capsys)
    r = rows(out)
    assert code == 0 and len(r) == 20
    for row in r:
        assert abs(float(row["F"]) - float(row["F_oracle"])) <= 1e-5
        assert abs(float(row["P_s"]) - float(row["P_s_oracle"])) <= 1e-6


def test_python_module_entry(capsys):
    import runpy
    import sys

    old = sys.argv
    sys.argv = ["hqrsim", "eval", "--alpha", "1", "--pc", "0.2", "--distance-km", "5"]
    try:
        with pytest.raises(SystemExit) as e:
            runpy.run_module("hqrsim", run_name="__main__")
    finally:
        sys.argv = old
    assert e.value.code == 0
