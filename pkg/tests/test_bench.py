import csv
import json

import pytest

from amrvox.bench import default_cameras, load_uniform_file, run_benchmark
from amrvox.levels import BuildConfig
from amrvox.render import RenderSettings


def test_benchmark_g3(tmp_path, g3):
    outside, inside = default_cameras(g3, size=(16, 16))
    rep = run_benchmark(g3, BuildConfig(), outside, inside, RenderSettings(dt=1 / 64), tmp_path, repeats=1)
    assert rep.multiresolution.active_data_voxels == 3000
    assert rep.uniform.active_data_voxels == 32768
    assert rep.multiresolution.bytes < rep.uniform.bytes
    assert rep.ratios["active_data_voxels"] == pytest.approx(32768 / 3000)
    assert set(rep.multiresolution.render_ms) == {"outside", "inside"}
    data = json.loads((tmp_path / "bench.json").read_text())
    assert data["uniform"]["feasible"] is True
    rows = list(csv.reader(open(tmp_path / "bench.csv")))
    assert rows[0] == ["representation", "metric", "value", "unit"]
    assert ["multiresolution", "active_data_voxels", "3000", "voxels"] in rows
    u = load_uniform_file(tmp_path / "uniform.svol")
    assert u.mask is None and u.level0_voxel_size == pytest.approx(1 / 8)


def test_uniform_over_capacity_is_reported(tmp_path, g3):
    outside, inside = default_cameras(g3, size=(4, 4))
    rep = run_benchmark(
        g3, BuildConfig(), outside, inside, RenderSettings(dt=1 / 32), tmp_path,
        repeats=1, max_uniform_cells=1000,
    )
    assert not rep.uniform.feasible
    assert "1000" in rep.uniform.note
    assert rep.ratios == {}
    assert rep.multiresolution.active_data_voxels == 3000
