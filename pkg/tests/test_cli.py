import csv
import json

import pytest

from memflux.cli import SERIES_COLUMNS, SWEEP_COLUMNS, main


def write(tmp_path, name="cfg.json", q=0.5, m=1.0, l=0.5, horizon=1.0, points=51, **extra):
    cfg = {
        "domain": {"kind": "interval", "points": points},
        "params": {"a": 1, "b": 1, "q": q, "m": m, "l": l},
        "kernel": {"kind": "constant", "value": 1},
        "initial": {"kind": "constant", "value": 1},
        "time": {"horizon": horizon},
    }
    cfg.update(extra)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_simulate_global(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", write(tmp_path), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["outcome"] == "reached_horizon" and summary["clip_count"] == 0
    with open(out / "series.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == SERIES_COLUMNS
    assert float(rows[-1][0]) == 1.0
    # 17 significant digits round-trip
    assert all(float(format(float(x), ".17g")) == float(x) for x in rows[5])


def test_simulate_blowup_exit_code(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", write(tmp_path, q=2, l=1, horizon=5), "--out", str(out)]) == 10
    summary = json.loads((out / "summary.json").read_text())
    assert summary["outcome"] == "blow_up" and summary["t_blowup_estimate"] > 1.9


def test_missing_config(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "nope.json")]) == 1
    assert "nope.json" in capsys.readouterr().err


def test_invalid_config_exit_code(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"params": {"a": 0, "b": 1, "q": 1, "m": 1, "l": 1}, "time": {"horizon": 1}}')
    assert main(["simulate", str(path)]) == 1
    assert main(["classify", str(path)]) == 1


@pytest.mark.parametrize("qml,tag,phrase", [
    ((2, 1, 1), "blow_up_all_data", "q-branch"),
    ((0.5, 1, 0.5), "global", "case a"),
    ((2, 2, 2), "indeterminate", "remark"),
])
def test_classify(tmp_path, capsys, qml, tag, phrase):
    q, m, l = qml
    assert main(["classify", write(tmp_path, q=q, m=m, l=l)]) == 0
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["tag"] == tag and phrase in verdict["citation"]


def test_classify_large_data_thresholds(tmp_path, capsys):
    cfg = write(tmp_path, q=1, m=1, l=2, kernel={"kind": "expr", "text": "max(0, 1 - t)"},
                time={"horizon": 2.0})
    assert main(["classify", cfg]) == 0
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["tag"] == "blow_up_large_data"
    assert verdict["thresholds"]["J1_required"] > 0


def test_verify(tmp_path):
    out = tmp_path / "o"
    assert main(["verify", write(tmp_path, horizon=2.0, points=101), "--out", str(out)]) == 0
    rep = json.loads((out / "residual_report.json").read_text())
    assert rep["passed"] and rep["constants"]["family"] == "exponential"
    assert main(["verify", write(tmp_path, q=2, m=3, l=1.5, points=101), "--out", str(out)]) == 0
    rep = json.loads((out / "residual_report.json").read_text())
    assert rep["passed"] and rep["constants"]["family"] == "boundary_layer"
    assert main(["verify", write(tmp_path, q=2, m=1, l=1), "--out", str(out)]) == 2


def _sweep(tmp_path, sweep, workers, name):
    out = tmp_path / name
    assert main(["sweep", write(tmp_path, sweep=sweep), "--out", str(out), "--workers", str(workers)]) == 0
    return (out / "sweep.csv").read_bytes()


def test_sweep_rows_and_tags(tmp_path):
    data = _sweep(tmp_path, {"q": [0.5, 1, 2], "l": [0.5, 1, 2]}, 1, "a").decode()
    rows = list(csv.DictReader(data.splitlines()))
    assert len(rows) == 9
    assert [(float(r["q"]), float(r["l"])) for r in rows] == [(q, l) for q in (0.5, 1, 2) for l in (0.5, 1, 2)]
    for r in rows:
        blow = float(r["q"]) == 2 or float(r["l"]) == 2
        assert (r["tag"] == "blow_up_all_data") == blow


def test_sweep_empty_grid(tmp_path):
    assert _sweep(tmp_path, {"q": [], "l": [1]}, 1, "e").decode() == ",".join(SWEEP_COLUMNS) + "\n"


def test_sweep_indeterminate_row_still_simulated(tmp_path):
    data = _sweep(tmp_path, {"q": [2], "m": [2], "l": [2]}, 1, "i").decode()
    row = next(csv.DictReader(data.splitlines()))
    assert row["tag"] == "indeterminate" and row["outcome"] in ("reached_horizon", "blow_up")


def test_sweep_determinism(tmp_path):
    grid = {"q": [0.5, 1, 2], "l": [0.5, 1, 2]}
    assert _sweep(tmp_path, grid, 1, "s") == _sweep(tmp_path, grid, 4, "p")


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "memflux", "classify", write(tmp_path)],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and json.loads(res.stdout)["tag"] == "global"
