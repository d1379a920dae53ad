import numpy as np
import pytest
from hypothesis import given, strategies as st

from amrvox.amr import SynthSpec, g3_dataset, synth_amr
from amrvox.levels import (
    AlignmentError,
    BuildConfig,
    PrecisionError,
    build_level,
    build_levels,
    convert_dataset,
    load_level_file,
    load_levels,
    mask_selection,
    uniform_pair,
    verify_alignment,
    voxel_size,
)


def test_translations(g3_pairs):
    v0 = 1 / 8
    for pair in g3_pairs:
        v = v0 / 2**pair.level
        assert pair.voxel_size == v
        assert pair.data.translation == (-v / 2 - v0,) * 3
        assert pair.mask.translation == (v / 2 - v0,) * 3
        assert pair.data.name == "density"
        assert pair.mask.name == "mask"


def test_ghosted_data_and_mask_share_centres(g3_pairs):
    rep = verify_alignment(g3_pairs, samples=200)
    assert rep.max_deviation < 1e-12
    assert set(rep.per_level) == {0, 1, 2}


def test_misalignment_detected(g3):
    pairs = build_levels(g3, BuildConfig(with_shift=False))
    with pytest.raises(AlignmentError, match="level 0"):
        verify_alignment(pairs)


def test_variant_flags(g3):
    p = build_level(g3, 1, BuildConfig(with_ghost=False))
    assert p.ghost == 0
    assert p.data.active_voxel_count == 512
    p = build_level(g3, 0, BuildConfig(with_mask=False))
    assert p.mask.active_voxel_count == 512
    assert np.all(p.mask.values_at(np.argwhere(np.ones((8, 8, 8), bool))) == 1.0)
    p = build_level(g3, 2, BuildConfig(with_shift=False))
    assert p.data.translation == p.mask.translation == (0.0, 0.0, 0.0)


def test_truncated_range_makes_top_level_a_leaf(g3):
    pairs = build_levels(g3, BuildConfig(max_level=1))
    assert len(pairs) == 2
    assert pairs[1].mask.values_at([8, 8, 8]) == 1.0


def test_field_must_exist(g3):
    with pytest.raises(ValueError, match="temperature"):
        build_level(g3, 0, BuildConfig(field="temperature"))


def test_voxel_size_precision(g3):
    assert voxel_size(g3, 2, 16.0) == 0.5
    with pytest.raises(PrecisionError, match="scale"):
        voxel_size(g3, 2, 1e-12)


def test_convert_and_load_round_trip(tmp_path, g3, g3_pairs):
    paths = convert_dataset(g3, BuildConfig(), tmp_path)
    assert [p.name for p in paths] == ["level0.svol", "level1.svol", "level2.svol"]
    loaded = load_levels(paths)
    for a, b in zip(g3_pairs, loaded):
        assert b.level == a.level
        assert b.ghost == 1
        assert b.voxel_size == a.voxel_size
        assert b.level0_voxel_size == pytest.approx(a.level0_voxel_size, abs=1e-15)
        assert b.data.translation == a.data.translation
        assert b.mask.translation == a.mask.translation


def test_unnumbered_file_loads_as_level_zero(tmp_path, g3):
    paths = convert_dataset(g3, BuildConfig(), tmp_path)
    other = paths[1].rename(tmp_path / "foo.svol")
    pair = load_level_file(other)
    assert pair.level == 0
    assert pair.voxel_size == 1 / 16
    assert pair.ghost == 1


def test_uniform_pair_frame(g3):
    u = uniform_pair(g3, 2)
    assert u.mask is None
    assert u.data.active_voxel_count == 32**3
    # cell 0 centre at v/2 - V0
    np.testing.assert_allclose(u.data.index_to_world([0, 0, 0]), 1 / 64 - 1 / 8)
    ug = uniform_pair(g3, 2, ghost=True)
    assert ug.data.active_voxel_count == 34**3
    np.testing.assert_allclose(ug.data.index_to_world([1, 1, 1]), 1 / 64 - 1 / 8)


def test_g3_selection_regions(g3_pairs):
    v0 = 1 / 8
    pts = np.array([[0.05, 0.05, 0.05], [0.3, 0.3, 0.3], [0.45, 0.45, 0.45]]) - v0
    sel = mask_selection(g3_pairs, pts)
    np.testing.assert_array_equal(sel, np.eye(3))


@st.composite
def datasets(draw):
    levels = draw(st.integers(0, 3))
    spec = SynthSpec(
        domain_dimensions=(draw(st.sampled_from([4, 8])),) * 3,
        refine_by=draw(st.sampled_from([2, 4])),
        max_level=levels,
        kind="gaussian",
        center=tuple(draw(st.floats(0.2, 0.8)) for _ in range(3)),
        width=draw(st.floats(0.05, 0.3)),
        thresholds=tuple(0.3 + 0.15 * i for i in range(levels)),
        pad=draw(st.integers(0, 1)),
    )
    return synth_amr(spec)


@given(ds=datasets(), seed=st.integers(0, 2**31))
def test_masks_partition_domain(ds, seed):
    pairs = build_levels(ds, BuildConfig())
    rng = np.random.default_rng(seed)
    v0 = pairs[0].level0_voxel_size
    pts = rng.uniform(0, 1, (500, 3)) - v0
    sel = mask_selection(pairs, pts)
    assert set(np.unique(sel)) <= {0.0, 1.0}
    np.testing.assert_array_equal(sel.sum(axis=1), 1.0)
