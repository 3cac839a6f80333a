import os
from pathlib import Path

import numpy as np
import pytest

import mapgsa

CONFIGS = Path(os.environ.get("MAPGSA_CONFIGS", Path(__file__).resolve().parents[2] / "configs"))


def test_additive_run(tmp_path):
    result = mapgsa.run(str(CONFIGS / "additive.yaml"), output_dir=str(tmp_path))
    assert result["exit_code"] == 0
    (analysis,) = result["analyses"]
    assert analysis["status"] == "ok"
    first, second = (e["estimate"] for e in analysis["indices"])
    assert abs(first - 0.2) <= 0.03
    assert abs(second - 0.8) <= 0.03
    assert (tmp_path / "indices.csv").exists()


def test_validate_reports_issues(tmp_path):
    assert mapgsa.validate(str(CONFIGS / "plume.yaml"))["ok"]
    bad = tmp_path / "bad.yaml"
    bad.write_text(
        "inputs: [{name: x, dist: uniform, bounds: [0, 1]}]\n"
        "model: {kind: synthetic-separable, terms: [{input: x}]}\n"
        "grid: {nc: 0}\n"
        "analyses: [{method: hsic}]\n"
    )
    report = mapgsa.validate(str(bad))
    assert not report["ok"]
    assert any(key == "grid.nc" for key, _, _ in report["issues"])


def test_missing_config_raises(tmp_path):
    with pytest.raises(ValueError):
        mapgsa.run(str(tmp_path / "absent.yaml"))


def test_ustat_three_points():
    A = np.array([[9, 0.5, -0.2], [0.5, 9, 0.1], [-0.2, 0.1, 9]])
    L = np.array([[1, 0.8, 0.3], [0.8, 1, 0.6], [0.3, 0.6, 1]])
    expected = (0.5 * 0.8 - 0.2 * 0.3 + 0.1 * 0.6) / 3
    assert mapgsa.hsic_ustat(A, L) == pytest.approx(expected, abs=1e-14)


def test_universal_micro_dataset():
    num, den = mapgsa.universal_ratio([0.1, 0.2, 0.3, 0.4], np.array([[0.1], [0.4], [0.2], [0.3]]))
    assert num == pytest.approx(-0.01, abs=1e-12)
    assert den == pytest.approx(0.0125, abs=1e-12)


def test_quantile_and_threads():
    assert mapgsa.quantile([3.0, 1.0, 2.0, 4.0], 0.5) == 2.5
    before = mapgsa.num_threads()
    mapgsa.set_num_threads(2)
    assert mapgsa.num_threads() == 2
    mapgsa.set_num_threads(before)
