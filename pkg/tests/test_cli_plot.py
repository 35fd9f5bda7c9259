import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from nodal_lab import experiments as ex
from nodal_lab import serialization as ser
from nodal_lab.cli import main
from nodal_lab.plotting import Figure, MissingTableError, Series, plot, render

GOLDEN = Path(__file__).parent / "golden" / "e1_gelfond.svg"
SVG = "{http://www.w3.org/2000/svg}"


def test_list(capsys):
    assert main(["list"]) == 0
    assert "E6  nadirashvili-sweep" in capsys.readouterr().out


def test_usage_errors(tmp_path, capsys):
    assert main(["run", "E42"]) == 2
    assert main(["bogus"]) == 2
    cfg = tmp_path / "c.toml"
    cfg.write_text('experiment = "E1"\n[params]\ncorpus_sz = 3\n')
    assert main(["run", "--config", str(cfg)]) == 2
    assert "params.corpus_sz" in capsys.readouterr().err
    cfg.write_text('experiment = "E1"\ncolour = 1\n')
    assert main(["run", "--config", str(cfg)]) == 2
    assert main(["plot", str(tmp_path / "nothing")]) == 2


def test_run_from_toml_with_overrides(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('experiment = "gelfond-corpus"\nseed = 5\n[params]\ncorpus_size = 6\nexact_max_n = 4\n')
    assert main(["run", "--config", str(cfg), "--seed", "7", "--out", str(tmp_path)]) == 0
    body = ser.read_document(tmp_path / "E1" / "report.json")["data"]
    assert body["config"]["seed"] == 7 and body["config"]["params"]["corpus_size"] == 6
    assert (tmp_path / "E1" / "gelfond.svg").exists()
    assert "E1: PASS" in capsys.readouterr().out


def test_failing_check_gives_exit_1(tmp_path):
    # a factor-1 band cannot hold for two distinct N
    cfg = tmp_path / "c.toml"
    cfg.write_text('experiment = "E3"\n[params]\nN_list = [16, 32]\narea_budget = 10000\nmc_budget = 10000\n'
                   'band = 1.0\n')
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path), "--no-plot"]) == 1


def _e1_report(tmp_path):
    rep = ex.run(ex.ExperimentConfig("E1", seed=11, params={"corpus_size": 10, "exact_max_n": 4}))
    return ex.write_report(rep, tmp_path / "E1")


def test_golden_e1_plot(tmp_path):
    out = _e1_report(tmp_path)
    (svg,) = plot(out)
    assert svg.read_text() == GOLDEN.read_text()


def test_empty_report_gives_axes_only(tmp_path):
    rep = ex.ExperimentReport("E7", {})
    rep.tables["yau"] = ex.Table(("N", "sample", "seed", "length", "B1", "B_inf", "normalized_length", "ratio",
                                  "B_inf_over_sqrt_lambda", "method"))
    out = ex.write_report(rep, tmp_path / "E7")
    (svg,) = plot(out)
    root = ET.fromstring(svg.read_text())
    assert root.find(f".//{SVG}g[@id='axes']") is not None
    assert not root.findall(f".//{SVG}circle")


def test_missing_table_is_named(tmp_path):
    out = ex.write_report(ex.ExperimentReport("E3", {}), tmp_path / "E3")
    with pytest.raises(MissingTableError, match="extremal_sweep"):
        plot(out)


def test_e3_plot_structure(tmp_path):
    rep = ex.ExperimentReport("E3", {})
    t = ex.Table(ex.E3_COLUMNS)
    for N, a in ((16, 0.34), (64, 0.26), (512, 0.17)):
        t.rows.append((N, 0.9, 0.25, a, a * 0.9, 1e-4, a * 2.0))
    rep.tables["extremal_sweep"] = t
    (svg,) = plot(ex.write_report(rep, tmp_path / "E3"))
    root = ET.fromstring(svg.read_text())
    dots = root.findall(f".//{SVG}circle")
    assert len(dots) == 3
    for c in dots:
        assert 80 <= float(c.get("cx")) <= 610 and 40 <= float(c.get("cy")) <= 380
    assert root.find(f".//{SVG}polyline") is not None
    assert "log N" in svg.read_text()


def test_render_skips_nonpositive_on_log_axes():
    s = render(Figure("t", "x", "y", True, True, [Series("s", [0.0, 1.0, 10.0], [1.0, -1.0, 2.0])]))
    assert s.count("<circle") == 1
