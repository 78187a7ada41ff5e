import json

import pytest

from curvanom import pipeline
from curvanom.cli import main
from curvanom.pipeline import PipelineConfig
from curvanom.simgen import GeneratorConfig
from curvanom.som import SomConfig


@pytest.fixture
def cfg_file(tmp_path):
    cfg = PipelineConfig(generator=GeneratorConfig(n_signals=60, n_anomalies=5, seed=3),
                         som=SomConfig(grid_rows=4, grid_cols=4, epochs=8), seed=3)
    path = tmp_path / "cfg.json"
    pipeline.save_config(path, cfg)
    return path


def test_simulate_writes_files(tmp_path, cfg_file, capsys):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg_file), "--n-signals", "20",
                 "--n-anomalies", "2", "--out", str(out)]) == 0
    assert "wrote 20 segments (2 atypical)" in capsys.readouterr().out
    assert (out / "segments.csv").exists() and (out / "labels.csv").exists()
    gen = json.loads((out / "generator.json").read_text())
    assert gen["config"]["n_signals"] == 20


def test_stage_by_stage_equals_run(tmp_path, cfg_file):
    whole, staged = tmp_path / "whole", tmp_path / "staged"
    common = ["--config", str(cfg_file)]
    assert main(["run", *common, "--out", str(whole)]) == 0
    seg, lab = str(whole / "segments.csv"), str(whole / "labels.csv")
    assert main(["cluster", *common, "--in", seg, "--out", str(staged)]) == 0
    assert main(["align", *common, "--in", seg, "--out", str(staged)]) == 0
    assert main(["detect", *common, "--out", str(staged)]) == 0
    assert main(["evaluate", "--labels", lab, "--out", str(staged)]) == 0
    assert main(["report", "--out", str(staged)]) == 0
    for name in ("clusters.csv", "aligned.csv", "tubes.csv", "verdicts.csv", "confusion.csv",
                 "summary.txt"):
        assert (staged / name).read_bytes() == (whole / name).read_bytes(), name


def test_run_on_external_input(tmp_path, cfg_file):
    sim = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg_file), "--out", str(sim)]) == 0
    out = tmp_path / "run"
    assert main(["run", "--config", str(cfg_file), "--in", str(sim / "segments.csv"),
                 "--labels", str(sim / "labels.csv"), "--method", "ct", "--k", "3",
                 "--out", str(out)]) == 0
    verdicts = pipeline.read_verdicts_csv(out / "verdicts.csv")
    assert {v.method for v in verdicts} == {"CT"}
    assert {v.cluster for v in verdicts} <= {1, 2, 3}


def test_errors_exit_nonzero_with_stage(tmp_path, capsys):
    code = main(["cluster", "--in", str(tmp_path / "nope.csv"), "--out", str(tmp_path)])
    assert code == 2
    assert capsys.readouterr().err.startswith("error: [load]")
    code = main(["detect", "--out", str(tmp_path)])
    assert code == 2
    assert "[detect]" in capsys.readouterr().err


def test_bad_flags_rejected():
    with pytest.raises(SystemExit):
        main(["run", "--method", "xx", "--out", "o"])
