import numpy as np
import pytest

from fractenna.ntff import GainPattern
from fractenna.rf_metrics import FrequencyResponse
from fractenna.touchstone import (GAIN_COLUMNS, SWEEP_COLUMNS, read_s1p, read_sweep_csv, write_gain_csv,
                                  write_s1p, write_sweep_csv)


@pytest.fixture
def response():
    f = np.linspace(1e9, 10e9, 10)
    gamma = 0.5 * np.exp(-1j * np.linspace(0.0, 3.0, 10))
    return FrequencyResponse(f, gamma)


def test_s1p_reads_back(tmp_path, response):
    path = tmp_path / "s11.s1p"
    write_s1p(path, response, comments=["fractenna simulate", "design baseline"])
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "! fractenna simulate"
    assert lines[2] == "# HZ S RI R 50"
    assert len(lines) == 3 + 10

    again = read_s1p(path)
    assert again.z0 == 50.0
    assert np.allclose(again.frequencies, response.frequencies, rtol=1e-9)
    assert np.allclose(again.gamma, response.gamma, atol=1e-8)


def test_sweep_csv(tmp_path, response):
    path = tmp_path / "sweep.csv"
    write_sweep_csv(path, response)
    assert path.read_text(encoding="utf-8").splitlines()[0] == ",".join(SWEEP_COLUMNS)
    rows = read_sweep_csv(path)
    assert len(rows) == 10
    assert rows[0]["s11_db"] == pytest.approx(20 * np.log10(0.5), abs=1e-6)
    assert rows[0]["vswr"] == pytest.approx(3.0, abs=1e-6)
    assert rows[0]["zin_re"] == pytest.approx(150.0, rel=1e-6)


def test_sweep_csv_rejects_other_columns(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="unexpected columns"):
        read_sweep_csv(path)


def test_gain_csv(tmp_path):
    pattern = GainPattern(np.array([3.5e9]), np.array([0.0, 90.0]), np.array([0.0]), np.array([[[1.0], [2.5]]]))
    path = tmp_path / "gain.csv"
    write_gain_csv(path, pattern)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(GAIN_COLUMNS)
    assert lines[2] == "3.5e+09,90,0,2.5"

    write_gain_csv(path, None)
    assert path.read_text(encoding="utf-8").splitlines() == [",".join(GAIN_COLUMNS)]
