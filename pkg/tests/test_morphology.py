import numpy as np
import pytest

from contourdice import (
    BandSpec,
    BinaryMask,
    ContourSpec,
    CROSS_2D,
    CUBE_3D,
    ProbabilityVolume,
    SQUARE_2D,
    StructuringElement,
    complement,
    count_true,
    dilate,
    dilate_soft,
    erode,
    erode_soft,
    extract_band,
    extract_contour,
    soft_contour,
    xor,
)
from contourdice.errors import ShapeMismatchError
from oracles import naive_band, naive_contour, naive_morph, random_mask


def square_mask(n=7, lo=1, hi=6):
    bits = np.zeros((n, n, 1), bool)
    bits[lo:hi, lo:hi, 0] = True
    return BinaryMask.from_array(bits)


def single_voxel_mask(n=5):
    bits = np.zeros((n, n, 1), bool)
    bits[n // 2, n // 2, 0] = True
    return BinaryMask.from_array(bits)


def test_se_mode_constraints():
    StructuringElement("square3x3_2d", "per_slice")
    StructuringElement("cube3x3x3_3d", "volumetric")
    with pytest.raises(ValueError):
        StructuringElement("cube3x3x3_3d", "per_slice")
    with pytest.raises(ValueError):
        StructuringElement("square3x3_2d", "volumetric")
    with pytest.raises(ValueError):
        StructuringElement("blob5x5")


def test_erode_single_voxel_vanishes():
    assert count_true(erode(single_voxel_mask())) == 0


def test_erode_5x5_square_leaves_3x3():
    er = erode(square_mask())
    assert count_true(er) == 9
    assert er.bits[2:5, 2:5, 0].all()


def test_erode_full_slice_keeps_interior():
    m = BinaryMask.from_array(np.ones((6, 5, 2), bool))
    er = erode(m)
    assert count_true(er) == 4 * 3 * 2
    assert er.bits[1:-1, 1:-1, :].all()


def test_dilate_empty_stays_empty():
    m = BinaryMask.from_array(np.zeros((4, 4, 2), bool))
    assert count_true(dilate(m)) == 0


def test_dilate_single_voxel_makes_3x3():
    d = dilate(single_voxel_mask())
    assert count_true(d) == 9
    bits = np.zeros((3, 3, 1), bool)
    bits[0, 0, 0] = True
    clipped = dilate(BinaryMask.from_array(bits))
    assert count_true(clipped) == 4  # clipped at the border


def test_open_close_sandwich():
    # opening is a subset everywhere; closing contains the mask wherever the
    # structuring element stays in bounds (zero padding erodes the border)
    rng = np.random.default_rng(5)
    for _ in range(20):
        bits = random_mask(rng, max_dims=(12, 12, 4), min_dims=(4, 4, 1))
        m = BinaryMask.from_array(bits)
        opened = dilate(erode(m))
        closed = erode(dilate(m))
        assert not (opened.bits & ~m.bits).any()
        interior = (m.bits & ~closed.bits)[1:-1, 1:-1, :]
        assert not interior.any()


def test_xor_basics():
    m = square_mask()
    empty = BinaryMask.from_array(np.zeros((7, 7, 1), bool))
    assert count_true(xor(m, m)) == 0
    assert np.array_equal(xor(m, empty).bits, m.bits)
    assert count_true(xor(m, erode(m))) == 16
    with pytest.raises(ShapeMismatchError):
        xor(m, BinaryMask.from_array(np.zeros((6, 6, 1), bool)))


def test_extract_contour_cases():
    empty = BinaryMask.from_array(np.zeros((5, 5, 1), bool))
    assert count_true(extract_contour(empty)) == 0

    ring = extract_contour(square_mask())
    assert count_true(ring) == 16
    # subset of the input and disjoint union with the eroded interior
    m = square_mask()
    assert not (ring.bits & ~m.bits).any()
    er = erode(m)
    assert not (ring.bits & er.bits).any()
    assert np.array_equal(ring.bits | er.bits, m.bits)

    two = extract_contour(square_mask(), ContourSpec(erosion_iterations=2))
    assert count_true(two) == 24  # 25-pixel square minus its 1-pixel core


def test_extract_band_cases():
    empty = BinaryMask.from_array(np.zeros((5, 5, 1), bool))
    assert count_true(extract_band(empty)) == 0

    sv = single_voxel_mask()
    assert count_true(extract_band(sv, BandSpec())) == 9
    ring8 = extract_band(sv, BandSpec(dilate_iterations=1, erode_iterations=0))
    assert count_true(ring8) == 8  # zero erosions leave the mask itself

    m = square_mask(9, 2, 7)
    band = extract_band(m, BandSpec())
    assert count_true(band) == 49 - 9  # 7x7 dilation minus 3x3 erosion

    contour = extract_contour(m)
    assert not (contour.bits & ~band.bits).any()  # band covers the contour


def test_band_invalid_iterations():
    with pytest.raises(ValueError):
        BandSpec(dilate_iterations=0, erode_iterations=0)


def test_matches_naive_reference():
    rng = np.random.default_rng(77)
    for _ in range(25):
        bits = random_mask(rng, max_dims=(14, 14, 5))
        m = BinaryMask.from_array(bits)
        for se, kind in ((SQUARE_2D, "square3x3_2d"), (CROSS_2D, "cross3x3_2d"),
                         (CUBE_3D, "cube3x3x3_3d")):
            assert np.array_equal(erode(m, se).bits, naive_morph(bits, kind, "erode"))
            assert np.array_equal(dilate(m, se).bits, naive_morph(bits, kind, "dilate"))
        assert np.array_equal(extract_contour(m).bits, naive_contour(bits))
        assert np.array_equal(extract_band(m).bits, naive_band(bits))


def test_duality_on_interior():
    # erosion and complement-of-dilated-complement agree wherever the
    # structuring element stays in bounds
    rng = np.random.default_rng(8)
    for _ in range(15):
        bits = random_mask(rng, max_dims=(12, 12, 4), min_dims=(4, 4, 2))
        m = BinaryMask.from_array(bits)
        a = erode(m).bits
        b = complement(dilate(complement(m))).bits
        assert np.array_equal(a[1:-1, 1:-1, :], b[1:-1, 1:-1, :])


def test_per_slice_is_stackable():
    rng = np.random.default_rng(9)
    bits = random_mask(rng, max_dims=(10, 10, 6), min_dims=(6, 6, 4))
    m = BinaryMask.from_array(bits)
    whole = extract_contour(m).bits
    for z in range(bits.shape[2]):
        single = BinaryMask.from_array(bits[:, :, z : z + 1])
        assert np.array_equal(extract_contour(single).bits[:, :, 0], whole[:, :, z])


def test_soft_ops_reduce_to_binary():
    rng = np.random.default_rng(10)
    bits = random_mask(rng, max_dims=(10, 10, 3))
    p = ProbabilityVolume.from_array(bits.astype(float))
    m = BinaryMask.from_array(bits)
    assert np.array_equal(erode_soft(p).values.astype(bool), erode(m).bits)
    assert np.array_equal(dilate_soft(p).values.astype(bool), dilate(m).bits)
    sc = soft_contour(p)
    assert np.array_equal(sc.values.astype(bool), extract_contour(m).bits)


def test_soft_ops_constant_interior():
    p = ProbabilityVolume.from_array(np.full((6, 6, 1), 0.4))
    assert np.allclose(erode_soft(p).values[1:-1, 1:-1, 0], 0.4)
    assert np.allclose(dilate_soft(p).values[1:-1, 1:-1, 0], 0.4)
    assert np.allclose(soft_contour(p).values[1:-1, 1:-1, 0], 0.0)


def test_soft_ops_center_ring_case():
    vals = np.full((3, 3, 1), 0.4)
    vals[1, 1, 0] = 0.9
    p = ProbabilityVolume.from_array(vals)
    assert dilate_soft(p).values[1, 1, 0] == 0.9
    assert erode_soft(p).values[1, 1, 0] == 0.4


def test_soft_contour_bounds():
    rng = np.random.default_rng(13)
    p = ProbabilityVolume.from_array(rng.random((8, 8, 3)))
    sc = soft_contour(p).values
    assert (sc >= 0).all()
    assert (sc <= p.values + 1e-15).all()
