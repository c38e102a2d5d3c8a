import json

import pandas as pd
import pytest

from main import EXIT_INVALID, EXIT_IO, EXIT_OK, main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_cf_sqrt7(capsys):
    code, out = run(capsys, "cf", "7")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["preperiod"] == [2]
    assert payload["period"] == [1, 1, 1, 4]


def test_cf_convergents(capsys):
    code, out = run(capsys, "cf", "7", "--convergents", "3")
    assert code == EXIT_OK
    assert json.loads(out)["convergents"] == [["2", "1"], ["3", "1"], ["5", "2"]]


def test_cf_general_surd(capsys):
    code, out = run(capsys, "cf", "1,2,5")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["preperiod"] == []
    assert payload["period"] == [1]


@pytest.mark.parametrize("arg", ["9", "1,2", "x"])
def test_cf_invalid_input(capsys, arg):
    code, _ = run(capsys, "cf", arg)
    assert code == EXIT_INVALID


def test_class(capsys):
    code, out = run(capsys, "class", "12")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["h_plus"] == 2
    assert payload["h_wide"] == 1
    assert payload["negative_pell"] is False
    assert len(payload["cycles"]) == 2


def test_class_invalid(capsys):
    code, _ = run(capsys, "class", "7")
    assert code == EXIT_INVALID


def test_pell(capsys):
    code, out = run(capsys, "pell", "5")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert (payload["x"], payload["y"]) == ("3", "1")
    assert payload["geodesic_length"] == pytest.approx(2 * payload["regulator"])


def test_stats_with_histogram(capsys, tmp_path):
    out_csv = tmp_path / "sqrt7.csv"
    code, out = run(capsys, "stats", "--sqrt", "7", "--out-csv", str(out_csv))
    assert code == EXIT_OK
    assert json.loads(out)["period"] == [1, 1, 1, 4]
    df = pd.read_csv(out_csv)
    assert list(df.columns) == ["k", "count", "freq", "gk_mass", "abs_diff"]
    assert len(df) == 51


def test_stats_rejects_square(capsys):
    code, _ = run(capsys, "stats", "--sqrt", "9")
    assert code == EXIT_INVALID


def test_sweep(capsys, tmp_path):
    out_csv, out_jsonl = tmp_path / "s.csv", tmp_path / "s.jsonl"
    code, out = run(capsys, "sweep", "--min", "5", "--max", "16", "--class-cap", "10",
                    "--out-csv", str(out_csv), "--out-jsonl", str(out_jsonl))
    assert code == EXIT_OK
    assert json.loads(out)["records"] == 4
    assert pd.read_csv(out_csv)["d"].tolist() == [5, 8, 12, 13]


def test_sweep_bad_range(capsys, tmp_path):
    code, _ = run(capsys, "sweep", "--min", "10", "--max", "5",
                  "--out-csv", str(tmp_path / "s.csv"))
    assert code == EXIT_INVALID


def test_sweep_io_error(capsys, tmp_path):
    code, _ = run(capsys, "sweep", "--min", "5", "--max", "16", "--out-jsonl", str(tmp_path))
    assert code == EXIT_IO


def test_kuzmin(capsys):
    code, out = run(capsys, "kuzmin", "--n", "1", "--samples", "1000", "--seed", "1")
    assert code == EXIT_OK
    assert json.loads(out)["total"] == "1000"


def test_kuzmin_bad_index(capsys):
    code, _ = run(capsys, "kuzmin", "--n", "0", "--samples", "10")
    assert code == EXIT_INVALID


def test_xsection(capsys, tmp_path):
    report = tmp_path / "x.json"
    code, out = run(capsys, "xsection", "--samples", "200", "--seed", "4", "--pairs", "5",
                    "--orbit-length", "2000", "--json", str(report))
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["domain_violations"] == 0
    assert json.loads(report.read_text(encoding="utf-8")) == payload
