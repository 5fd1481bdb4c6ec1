import json

import numpy as np
import pytest

from levyflights.report import RunReport, config_hash, file_digest, read_csv_header, write_csv


def test_hash_ignores_key_order_and_numpy_types():
    a = config_hash({"mu": 1.0, "n": 3})
    b = config_hash({"n": np.int64(3), "mu": np.float64(1.0)})
    assert a == b
    assert a != config_hash({"mu": 1.5, "n": 3})


def test_csv_layout(tmp_path):
    p = write_csv(tmp_path / "a.csv", ["t", "v"], ["time", "length"],
                  [np.array([0.0, 0.5]), np.array([0.1, 1 / 3])], "abc", "demo", {"k": np.float64(2.5)})
    lines = p.read_text().splitlines()
    assert lines[:5] == ["# demo", "# config_hash=abc", "# k=2.5", "# units: time,length", "# t,v"]
    assert float(lines[-1].split(",")[1]) == 1 / 3
    assert read_csv_header(p) == {"config_hash": "abc", "k": "2.5"}


def test_csv_length_mismatch(tmp_path):
    with pytest.raises(ValueError):
        write_csv(tmp_path / "b.csv", ["t"], ["time", "x"], [[1]], "h", "x")


def test_report_round_trip(tmp_path):
    rep = RunReport("sample", {"mu": 1.0}, "abc", seed=3)
    out = tmp_path / "o.csv"
    out.write_text("1\n")
    rep.add_output(out)
    path = rep.write(tmp_path / "r.json")
    back = RunReport.load(path)
    assert back == rep
    assert back.outputs[0]["sha256"] == file_digest(out)
    assert json.loads(path.read_text())["report_version"] == 1


def test_load_rejects_other_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{}")
    with pytest.raises(ValueError):
        RunReport.load(p)
