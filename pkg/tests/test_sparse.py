import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from _util import random_volume, volumes_equal
from amrvox.sparse import SparseVolume, active_stats
from amrvox.svol import LEAF_BYTES, SvolFormatError, read_svol, serialized_size, write_svol


def test_copy_from_array_spans_leaves():
    vol = SparseVolume()
    block = np.arange(10 * 3 * 2, dtype=np.float32).reshape(10, 3, 2)
    vol.copy_from_array(block, (-1, 6, 7))
    assert vol.active_voxel_count == block.size
    # x range -1..8 touches three leaf columns, y 6..8 two, z 7..8 two
    assert vol.leaf_count == 12
    lo, hi = vol.active_bounds()
    assert lo.tolist() == [-1, 6, 7]
    assert hi.tolist() == [8, 8, 8]
    idx = np.array([[-1, 6, 7], [8, 8, 8], [3, 7, 8]])
    np.testing.assert_array_equal(vol.values_at(idx), block[idx[:, 0] + 1, idx[:, 1] - 6, idx[:, 2] - 7])


def test_flat_input_is_x_fastest():
    vol = SparseVolume()
    vol.copy_from_array(np.arange(6, dtype=np.float32), dims=(3, 2, 1))
    assert vol.values_at([1, 0, 0]) == 1.0
    assert vol.values_at([0, 1, 0]) == 3.0
    with pytest.raises(ValueError, match="dims"):
        vol.copy_from_array(np.arange(5), dims=(3, 2, 1))


def test_inactive_reads_background():
    vol = SparseVolume(background=-2.0)
    vol.copy_from_array(np.ones((2, 2, 2)), (0, 0, 0))
    assert vol.values_at([5, 5, 5]) == -2.0
    assert vol.values_at([100, 0, 0]) == -2.0
    assert vol.index_sample([0.4, 0.4, 0.4]) == 1.0


def test_containing_index_half_open():
    vol = SparseVolume(voxel_size=0.5, translation=(1.0, 0.0, 0.0))
    # voxel 0 is centred on x = 1.0 and owns [0.75, 1.25)
    assert vol.containing_index([0.75, 0, 0])[0] == 0
    assert vol.containing_index([1.25, 0, 0])[0] == 1
    assert vol.containing_index([0.7499, 0, 0])[0] == -1


def test_scaled_shares_leaves():
    vol = SparseVolume(voxel_size=0.25, translation=(0.5, 0.0, -0.5))
    vol.copy_from_array(np.ones((2, 2, 2)))
    s = vol.scaled(4.0)
    assert s.voxel_size == 1.0
    assert s.translation == (2.0, 0.0, -2.0)
    assert s.leaves is vol.leaves


def test_packed_cache_invalidated_on_write():
    vol = SparseVolume()
    vol.copy_from_array(np.ones((1, 1, 1)))
    assert vol.index_sample([0, 0, 0]) == 1.0
    vol.copy_from_array(np.full((1, 1, 1), 7.0))
    assert vol.index_sample([0, 0, 0]) == 7.0


@given(
    coef=arrays(np.float64, 4, elements=st.floats(-2, 2)),
    pts=arrays(np.float64, (16, 3), elements=st.floats(1.0, 9.0)),
    v=st.sampled_from([0.25, 0.5, 1.0]),
)
def test_trilinear_reproduces_affine(coef, pts, v):
    # cell centres at (i * v); evaluate inside the interior so all 8 taps are active
    idx = np.indices((12, 12, 12)).transpose(1, 2, 3, 0) * v
    field = coef[0] + idx @ coef[1:]
    vol = SparseVolume(voxel_size=v)
    vol.copy_from_array(field.astype(np.float32))
    p = pts * v
    expect = coef[0] + p @ coef[1:]
    got = vol.trilinear_sample(p)
    np.testing.assert_allclose(got, expect, atol=1e-5 * (1 + np.abs(expect).max()))


def test_trilinear_at_centres_is_exact():
    rng = np.random.default_rng(3)
    arr = rng.normal(size=(5, 6, 7)).astype(np.float32)
    vol = SparseVolume(voxel_size=0.1, translation=(0.3, -0.2, 0.0))
    vol.copy_from_array(arr)
    idx = np.argwhere(np.ones(arr.shape, bool))
    got = vol.trilinear_sample(vol.index_to_world(idx))
    np.testing.assert_allclose(got, arr[tuple(idx.T)], atol=1e-6)


def test_active_stats():
    a = SparseVolume()
    a.copy_from_array(np.ones((8, 8, 8)))
    b = SparseVolume(name="mask")
    b.copy_from_array(np.ones((3, 3, 3)), (7, 7, 7))
    s = active_stats([a, b])
    assert s["active_voxels"] == 512 + 27
    assert s["leaf_count"] == 1 + 8
    assert s["bytes"] == serialized_size([a, b])


def test_svol_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    vols = [random_volume(rng, "density"), random_volume(rng, "mask")]
    path = write_svol(tmp_path / "v.svol", vols)
    assert path.stat().st_size == serialized_size(vols)
    back = read_svol(path)
    assert all(volumes_equal(a, b) for a, b in zip(vols, back))


def test_svol_layout(tmp_path):
    vol = SparseVolume("d", 0.5, (1.0, 2.0, 3.0))
    vol.copy_from_array(np.ones((1, 1, 1)), (9, 0, 0))
    raw = write_svol(tmp_path / "v.svol", [vol]).read_bytes()
    assert raw[:4] == b"SVOL"
    assert len(raw) == 12 + 2 + 1 + 44 + LEAF_BYTES
    leaf = raw[12 + 2 + 1 + 44:]
    assert np.frombuffer(leaf[:12], "<i4").tolist() == [8, 0, 0]
    # voxel (1, 0, 0) inside the leaf is bit 1 of the first mask byte
    assert leaf[12] == 0b10


@pytest.mark.parametrize(
    "mutate, match",
    [
        (lambda b: b"XXXX" + b[4:], "bad magic"),
        (lambda b: b[:-100], "truncated"),
        (lambda b: b + b"\0", "trailing"),
        (lambda b: b[:8], "truncated"),
    ],
)
def test_svol_errors(tmp_path, mutate, match):
    vol = SparseVolume()
    vol.copy_from_array(np.ones((2, 2, 2)))
    raw = write_svol(tmp_path / "v.svol", [vol]).read_bytes()
    (tmp_path / "bad.svol").write_bytes(mutate(raw))
    with pytest.raises(SvolFormatError, match=match) as err:
        read_svol(tmp_path / "bad.svol")
    assert err.value.offset >= 0


def test_svol_requires_a_volume(tmp_path):
    with pytest.raises(ValueError):
        write_svol(tmp_path / "v.svol", [])
