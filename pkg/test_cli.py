import csv
import itertools

import numpy as np
import pytest
from click.testing import CliRunner

from fractenna.evaluators import SurrogateEvaluator
from fractenna.exceptions import FractennaError
from fractenna.geometry import build_fractal_layout, dump_layout
from fractenna.ga_engine import repair
from fractenna.genome import expand
from fractenna.rf_metrics import FrequencyResponse, gamma_from_return_loss, vswr
from fractenna.schemas import (BandSummary, FitnessSpec, FractalCutSpec, SolverParams, Symmetry,
                               TargetMetrics)
from fractenna.touchstone import write_sweep_csv
from fractenna.utils.artifacts import write_summary, write_text
from main import cli


@pytest.fixture
def runner():
    return CliRunner()


def table_value(output, label):
    for line in output.splitlines():
        cells = [c.strip() for c in line.strip("|").split("|")]
        if cells[0] == label:
            return float(cells[1])
    raise AssertionError(f"{label} not in output")


def last_generation(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))[-1]


# --- design


def test_design_default_frequency(runner, tmp_path):
    out = tmp_path / "design"
    result = runner.invoke(cli, ["--out", str(out), "design", "--freq", "7GHz", "--er", "4.4", "--h", "1.57mm"])
    assert result.exit_code == 0, result.output
    assert table_value(result.output, "W (mm)") == pytest.approx(13.032, abs=0.01)
    assert table_value(result.output, "eps_reff") == pytest.approx(3.787, abs=0.01)
    assert table_value(result.output, "L (mm)") == pytest.approx(9.60, abs=0.02)
    manifest = (out / "manifest.txt").read_text(encoding="utf-8")
    assert "command = design" in manifest
    assert "run.created_at = " in manifest
    assert not (tmp_path / "design.partial").exists()


def test_design_air_substrate(runner, tmp_path):
    result = runner.invoke(cli, ["--out", str(tmp_path / "d"), "design", "--freq", "7e9", "--er", "1"])
    assert result.exit_code == 0, result.output
    assert table_value(result.output, "W (mm)") == pytest.approx(21.41, abs=0.01)


def test_design_rejects_low_permittivity(runner, tmp_path):
    result = runner.invoke(cli, ["--out", str(tmp_path / "d"), "design", "--er", "0.5"])
    assert result.exit_code == 2
    assert "eps_r must exceed 1" in result.output
    assert not (tmp_path / "d").exists()


def test_design_rejects_bad_units(runner, tmp_path):
    result = runner.invoke(cli, ["--out", str(tmp_path / "d"), "design", "--freq", "7mm"])
    assert result.exit_code == 2


# --- simulate


def test_simulate_disconnected_genome(runner, tmp_path):
    genome = tmp_path / "zeros.txt"
    genome.write_text("000\n000\n000\n", encoding="utf-8")
    out = tmp_path / "sim"
    result = runner.invoke(cli, ["--out", str(out), "simulate", "--genome", str(genome)])
    assert result.exit_code == 4
    assert "error:" in result.output
    assert not out.exists() and not (tmp_path / "sim.partial").exists()


def test_simulate_with_the_surrogate(runner, tmp_path):
    out = tmp_path / "sim"
    result = runner.invoke(cli, ["--out", str(out), "simulate", "--layout", "fractal", "--surrogate"])
    assert result.exit_code == 0, result.output
    for name in ("manifest.txt", "summary.json", "layout.txt", "s11.s1p", "sweep.csv", "gain.csv"):
        assert (out / name).is_file(), name
    assert "fractal (surrogate)" in result.output
    manifest = (out / "manifest.txt").read_text(encoding="utf-8")
    assert "evaluator = surrogate" in manifest


# --- optimize


def test_optimize_rejects_odd_population(runner, tmp_path):
    result = runner.invoke(cli, ["--out", str(tmp_path / "o"), "optimize", "--surrogate", "--pop", "3"])
    assert result.exit_code == 2
    assert "population must be even" in result.output


def test_optimize_finds_the_best_symmetric_genome(runner, tmp_path, baseline):
    out = tmp_path / "opt"
    result = runner.invoke(cli, ["--out", str(out), "--seed", "7", "optimize", "--surrogate",
                                 "--grid", "3", "--pop", "16", "--gens", "20"])
    assert result.exit_code == 0, result.output

    evaluator = SurrogateEvaluator(baseline, FitnessSpec(), SolverParams())
    scores = []
    for bits in itertools.product((0, 1), repeat=6):
        try:
            chrom = repair(expand(np.array(bits), 3, Symmetry.MIRROR_X), baseline, symmetry=Symmetry.MIRROR_X)
            scores.append(evaluator(chrom).fitness)
        except FractennaError:
            continue
    best = max(scores)
    assert float(last_generation(out / "generations.csv")["best_fitness"]) == pytest.approx(best, abs=1e-9)

    for name in ("run.ckpt", "comparison.md", "config.txt", "evaluations.db", "best/genome.txt",
                 "baseline/summary.json", "best/s11.s1p"):
        assert (out / name).is_file(), name
    assert "Unoptimized vs optimized" in result.output


def test_resumed_optimize_matches_an_uninterrupted_run(runner, tmp_path):
    common = ["optimize", "--surrogate", "--grid", "3", "--pop", "8"]
    full = runner.invoke(cli, ["--out", str(tmp_path / "full"), "--seed", "11"] + common + ["--gens", "4"])
    assert full.exit_code == 0, full.output
    first = runner.invoke(cli, ["--out", str(tmp_path / "first"), "--seed", "11"] + common + ["--gens", "2"])
    assert first.exit_code == 0, first.output
    resumed = runner.invoke(cli, ["--out", str(tmp_path / "resumed")] + common +
                            ["--gens", "4", "--resume", str(tmp_path / "first" / "run.ckpt")])
    assert resumed.exit_code == 0, resumed.output

    expected = (tmp_path / "full" / "generations.csv").read_text(encoding="utf-8")
    assert (tmp_path / "resumed" / "generations.csv").read_text(encoding="utf-8") == expected
    assert len(expected.splitlines()) == 1 + 5


def test_resume_from_a_missing_checkpoint(runner, tmp_path):
    result = runner.invoke(cli, ["--out", str(tmp_path / "o"), "optimize", "--surrogate",
                                 "--resume", str(tmp_path / "nope.ckpt")])
    assert result.exit_code == 2
    assert "checkpoint not found" in result.output


# --- report


def summary(rows):
    return BandSummary(targets=[
        TargetMetrics(frequency_hz=f, return_loss_db=rl, vswr=vswr(gamma_from_return_loss(rl)), gain_dbi=g)
        for f, rl, g in rows])


def write_run(run_dir, baseline, best_layout, base_summary, best_summary):
    freqs = np.linspace(1e9, 10e9, 91)
    for name, layout, summ in (("baseline", baseline, base_summary), ("best", best_layout, best_summary)):
        folder = run_dir / name
        folder.mkdir(parents=True)
        write_text(folder / "layout.txt", dump_layout(layout))
        write_summary(folder, summ)
        write_sweep_csv(folder / "sweep.csv", FrequencyResponse(freqs, np.full(freqs.size, 0.3)))


def test_report_percentages(runner, tmp_path, baseline):
    run_dir = tmp_path / "run"
    fractal = build_fractal_layout(baseline, FractalCutSpec())
    write_run(run_dir, baseline, fractal,
              summary([(3.5e9, -12.0, 1.52), (6.0e9, -9.08, 1.8)]),
              summary([(3.5e9, -12.968, 1.56), (6.0e9, -12.184, 2.0)]))
    result = runner.invoke(cli, ["report", str(run_dir)])
    assert result.exit_code == 0, result.output
    for value in ("8.067", "34.185", "2.632", "9.972"):
        assert value in result.output
    assert (run_dir / "comparison.md").read_text(encoding="utf-8") == result.output

    with open(run_dir / "rl_vs_freq.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["design", "freq_hz", "rl_db"]
    assert len(rows) == 1 + 2 * 91
    assert (run_dir / "vswr_vs_freq.csv").is_file()


def test_report_of_an_unchanged_design(runner, tmp_path, baseline):
    run_dir = tmp_path / "run"
    same = summary([(3.5e9, -12.0, 1.52), (6.0e9, -9.08, 1.8)])
    write_run(run_dir, baseline, baseline, same, same)
    result = runner.invoke(cli, ["report", str(run_dir)])
    assert result.exit_code == 0, result.output
    assert "regression" not in result.output
    changes = [line.split("|")[5].strip() for line in result.output.splitlines() if line.startswith("| ")][1:]
    assert changes and all(c == "0.000" for c in changes)


def test_report_without_artifacts(runner, tmp_path):
    result = runner.invoke(cli, ["report", str(tmp_path)])
    assert result.exit_code == 5
    assert "missing artifact" in result.output
