import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from amrvox.amr import (
    AMRDataset,
    AMRFormatError,
    AMRGrid,
    AMRValidationError,
    CapacityError,
    OutsideDomainError,
    SynthSpec,
    child_mask,
    covering_grid,
    finest_grid_at,
    g3_dataset,
    ghost_zones,
    load_amr,
    sample_amr,
    save_amr,
    synth_amr,
    validate_dataset,
)


def _grid(level, start, dims, value=1.0):
    return AMRGrid(level, start, dims, np.full(dims, value, dtype=np.float32))


def _dataset(levels, dd=(4, 4, 4)):
    return AMRDataset(dd, 2, levels, (False, False, False), "density")


def test_g3_layout(g3):
    assert g3.max_level == 2
    assert [g.start_index for g in g3.iter_grids()] == [(0, 0, 0), (4, 4, 4), (12, 12, 12)]
    assert g3.resolution(2).tolist() == [32, 32, 32]
    assert g3.cell_size(1) == 1 / 16


def test_grid_cells_are_read_only(g3):
    with pytest.raises(ValueError):
        g3.levels[0][0].cells[0, 0, 0] = 5


def test_overlap_rejected():
    levels = [
        [_grid(0, (0, 0, 0), (4, 4, 4))],
        [_grid(1, (0, 0, 0), (4, 4, 4)), _grid(1, (2, 2, 2), (4, 4, 4))],
    ]
    with pytest.raises(AMRValidationError, match="overlapping grids at level 1: grids 0 and 1"):
        validate_dataset(_dataset(levels))


def test_nesting_violation_rejected():
    # a level-2 grid that pokes outside its level-1 parent
    levels = [
        [_grid(0, (0, 0, 0), (4, 4, 4))],
        [_grid(1, (0, 0, 0), (4, 4, 4))],
        [_grid(2, (4, 4, 4), (8, 8, 8))],
    ]
    with pytest.raises(AMRValidationError, match="nesting violation at level 2 grid 0"):
        validate_dataset(_dataset(levels))


@pytest.mark.parametrize(
    "levels, dd, match",
    [
        ([[_grid(0, (0, 0, 0), (4, 4, 2))]], (4, 4, 2), "cubic"),
        ([[_grid(0, (0, 0, 0), (2, 4, 4))]], (4, 4, 4), "cover"),
        ([[_grid(0, (2, 0, 0), (4, 4, 4))]], (4, 4, 4), "extent|outside|exceed"),
    ],
)
def test_structural_errors(levels, dd, match):
    with pytest.raises(AMRValidationError, match=match):
        validate_dataset(_dataset(levels, dd))


def test_nonfinite_rejected():
    cells = np.ones((4, 4, 4), dtype=np.float32)
    cells[1, 2, 3] = np.nan
    with pytest.raises(AMRValidationError, match="finite"):
        validate_dataset(_dataset([[AMRGrid(0, (0, 0, 0), (4, 4, 4), cells)]]))


def test_child_mask_g3(g3):
    m0 = child_mask(g3, 0, g3.levels[0][0])
    assert m0.shape == (8, 8, 8)
    assert int(m0.sum()) == 448
    assert not m0[2:6, 2:6, 2:6].any()
    assert child_mask(g3, 2, g3.levels[2][0]).all()
    # truncating the hierarchy at level 1 makes level 1 a leaf level
    assert child_mask(g3, 1, g3.levels[1][0], max_level=1).all()


def test_ghost_zones_interior_and_linear_ramp():
    ds = g3_dataset("linear-x")
    for grid in ds.iter_grids():
        gz = ghost_zones(ds, grid)
        assert gz.shape == (10, 10, 10)
        np.testing.assert_array_equal(gz[1:-1, 1:-1, 1:-1], grid.cells)
    g1 = ds.levels[1][0]
    gz = ghost_zones(ds, g1)
    # ghost at global x index 3 and 12 of the 16-wide level
    assert gz[0, 5, 5] == pytest.approx(3.5 / 16, abs=1e-6)
    assert gz[-1, 5, 5] == pytest.approx(12.5 / 16, abs=1e-6)


def test_ghost_zones_only_one_layer(g3):
    with pytest.raises(ValueError, match="n=2"):
        ghost_zones(g3, g3.levels[0][0], 2)


def test_ghost_zones_domain_edge_clamps(g3):
    gz = ghost_zones(g3, g3.levels[0][0])
    assert np.all(gz == 1.0)


def test_covering_grid(g3):
    ds = g3_dataset("constant", 1.0, fine_value=3.0)
    cg = covering_grid(ds, 2)
    assert cg.shape == (32, 32, 32)
    assert cg[0, 0, 0] == 1.0
    assert cg[8, 8, 8] == 3.0
    assert cg[20, 20, 20] == 3.0
    with pytest.raises(CapacityError):
        covering_grid(g3, 2, max_cells=1000)


def test_sample_amr(g3):
    ds = g3_dataset("linear-x")
    assert sample_amr(ds, (0.5, 0.5, 0.5)) == pytest.approx(0.5, abs=1e-6)
    assert finest_grid_at(ds, (0.45, 0.45, 0.45)) == (2, 0)
    assert finest_grid_at(ds, (0.05, 0.05, 0.05)) == (0, 0)
    with pytest.raises(OutsideDomainError):
        sample_amr(ds, (1.5, 0.5, 0.5))


def test_bundle_round_trip(tmp_path, g3):
    save_amr(g3, tmp_path / "b")
    back = load_amr(tmp_path / "b")
    assert back.domain_dimensions == g3.domain_dimensions
    for a, b in zip(g3.iter_grids(), back.iter_grids()):
        assert a.start_index == b.start_index
        np.testing.assert_array_equal(a.cells, b.cells)


def test_bundle_errors(tmp_path, g3):
    path = save_amr(g3, tmp_path / "b")
    blob = path / "grid_0001.bin"
    blob.write_bytes(blob.read_bytes()[:-4])
    with pytest.raises(AMRFormatError, match="blob length mismatch"):
        load_amr(path)
    blob.unlink()
    with pytest.raises(AMRFormatError, match="missing blob"):
        load_amr(path)
    with pytest.raises((AMRFormatError, OSError)):
        load_amr(tmp_path / "nothere")


def test_bundle_invalid_hierarchy(tmp_path, g3):
    path = save_amr(g3, tmp_path / "b")
    idx = json.loads((path / "index.json").read_text())
    idx["grids"][2]["start_index"] = [0, 0, 0]
    (path / "index.json").write_text(json.dumps(idx))
    with pytest.raises(AMRValidationError, match="nesting"):
        load_amr(path)


def test_synth_spec_validation():
    with pytest.raises(ValueError, match="thresholds"):
        SynthSpec(max_level=2, thresholds=(0.5,)).validate()
    with pytest.raises(ValueError, match="increasing"):
        SynthSpec(max_level=2, thresholds=(0.5, 0.4)).validate()
    with pytest.raises(ValueError, match="kind"):
        SynthSpec(kind="sinc").validate()


synth_specs = st.builds(
    lambda n, r, levels, c, w, base, step, pad: SynthSpec(
        domain_dimensions=(n, n, n),
        refine_by=r,
        max_level=levels,
        kind="gaussian",
        center=c,
        width=w,
        thresholds=tuple(base + step * i for i in range(levels)),
        pad=pad,
    ),
    n=st.sampled_from([4, 8]),
    r=st.sampled_from([2, 2, 4]),
    levels=st.integers(0, 3),
    c=st.tuples(*[st.floats(0.2, 0.8)] * 3),
    w=st.floats(0.05, 0.3),
    base=st.floats(0.1, 0.6),
    step=st.floats(0.05, 0.15),
    pad=st.integers(0, 1),
)


@given(synth_specs)
def test_synth_output_is_valid(spec):
    ds = synth_amr(spec)
    validate_dataset(ds)
    assert ds.max_level <= spec.max_level
    for level in range(1, ds.max_level + 1):
        for g in ds.grids(level):
            assert all(d % spec.refine_by == 0 for d in g.dims)
