import numpy as np
import pytest

from contourdice import (
    BinaryMask,
    ContourSpec,
    assd_2d,
    contour_dice_metric,
    count_true,
    dice,
    evaluate,
    extract_band,
    extract_contour,
    hausdorff,
    per_slice_assd,
)
from contourdice.errors import EmptyMaskError, NoCommonSlicesError, ShapeMismatchError
from oracles import (
    brute_assd_2d,
    brute_hausdorff,
    random_blob_mask,
    random_mask,
    set_contour_dice,
)


def mask(bits, spacing=(1.0, 1.0, 1.0)):
    return BinaryMask.from_array(bits, spacing=spacing)


def test_dice_trivials():
    rng = np.random.default_rng(0)
    bits = random_mask(rng, max_dims=(8, 8, 3), nonempty=True)
    m = mask(bits)
    assert dice(m, m) == 1.0

    a = np.zeros((4, 4, 1), bool)
    b = np.zeros((4, 4, 1), bool)
    a[0, 0, 0] = True
    b[3, 3, 0] = True
    assert dice(mask(a), mask(b)) == 0.0

    a = np.zeros((4, 4, 1), bool)
    b = np.zeros((4, 4, 1), bool)
    a[0, 0:4, 0] = True          # |a| = 4
    b[0, 2:4, 0] = True          # overlap 2
    b[1, 0:2, 0] = True          # |b| = 4
    assert dice(mask(a), mask(b)) == 0.5

    empty = mask(np.zeros((4, 4, 1), bool))
    assert dice(empty, empty) == 1.0
    with pytest.raises(ShapeMismatchError):
        dice(empty, mask(np.zeros((5, 4, 1), bool)))


def test_hausdorff_trivials():
    rng = np.random.default_rng(1)
    bits = random_mask(rng, max_dims=(8, 8, 3), nonempty=True)
    m = mask(bits, spacing=(1.56, 1.56, 3.0))
    assert hausdorff(m, m) == 0.0

    a = np.zeros((8, 4, 1), bool)
    b = np.zeros((8, 4, 1), bool)
    a[1, 1, 0] = True
    b[6, 1, 0] = True  # 5 voxels apart along x
    sp = (1.56, 1.56, 3.0)
    assert hausdorff(mask(a, sp), mask(b, sp)) == pytest.approx(7.8, abs=1e-12)

    with pytest.raises(EmptyMaskError):
        hausdorff(m, mask(np.zeros(bits.shape, bool), spacing=(1.56, 1.56, 3.0)))
    with pytest.raises(ValueError):
        hausdorff(m, m, percentile=0.0)


def test_hausdorff_symmetry_and_percentile():
    rng = np.random.default_rng(2)
    for _ in range(10):
        a = random_mask(rng, max_dims=(10, 10, 4), nonempty=True)
        b = random_mask(rng, max_dims=(10, 10, 4), nonempty=True)
        dims = tuple(min(x, y) for x, y in zip(a.shape, b.shape))
        a = a[: dims[0], : dims[1], : dims[2]]
        b = b[: dims[0], : dims[1], : dims[2]]
        if not a.any() or not b.any():
            continue
        ma, mb = mask(a), mask(b)
        assert hausdorff(ma, mb) == hausdorff(mb, ma)
        assert hausdorff(ma, mb, percentile=95.0) <= hausdorff(ma, mb) + 1e-12


def test_hausdorff_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(15):
        dims = (int(rng.integers(4, 12)), int(rng.integers(4, 12)), int(rng.integers(1, 5)))
        a = random_mask(rng, max_dims=dims, min_dims=dims, nonempty=True)
        b = random_mask(rng, max_dims=dims, min_dims=dims, nonempty=True)
        sp = tuple(rng.uniform(0.5, 3.0, size=3))
        got = hausdorff(mask(a, sp), mask(b, sp))
        want = brute_hausdorff(a, b, sp)
        assert got == pytest.approx(want, abs=1e-9)


def test_assd_identical_masks_zero():
    blob = random_blob_mask(np.random.default_rng(4))
    m = mask(blob)
    assert assd_2d(m, m) == 0.0


def test_assd_concentric_squares_frozen_value():
    a = np.zeros((11, 11, 1), bool)
    a[3:8, 3:8, 0] = True  # 5x5 -> 16-pixel ring
    b = np.zeros((11, 11, 1), bool)
    b[1:10, 1:10, 0] = True  # 9x9 -> 32-pixel ring
    got = assd_2d(mask(a), mask(b))
    # frozen from the all-pairs nearest-neighbor enumeration over the rings
    assert got == pytest.approx(2.0812851924841107, abs=1e-12)
    want, _ = brute_assd_2d(a, b, (1.0, 1.0, 1.0))
    assert got == pytest.approx(want, abs=1e-12)


def test_assd_skips_one_sided_slices():
    a = np.zeros((6, 6, 3), bool)
    b = np.zeros((6, 6, 3), bool)
    a[2:4, 2:4, 0] = True
    b[2:4, 2:4, 0] = True
    a[1:5, 1:5, 2] = True  # no b contour on slice 2
    rows = per_slice_assd(mask(a), mask(b))
    assert [z for z, _ in rows] == [0]
    assert assd_2d(mask(a), mask(b)) == 0.0


def test_assd_no_common_slices():
    a = np.zeros((6, 6, 2), bool)
    b = np.zeros((6, 6, 2), bool)
    a[2:4, 2:4, 0] = True
    b[2:4, 2:4, 1] = True
    with pytest.raises(NoCommonSlicesError):
        assd_2d(mask(a), mask(b))


def test_assd_matches_brute_force():
    rng = np.random.default_rng(5)
    checked = 0
    while checked < 10:
        a = random_blob_mask(rng, dims=(14, 14, 4))
        b = random_blob_mask(rng, dims=(14, 14, 4))
        sp = (float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0)), 3.0)
        want, _ = brute_assd_2d(a, b, sp)
        if want is None:
            continue
        got = assd_2d(mask(a, sp), mask(b, sp))
        assert got == pytest.approx(want, abs=1e-9)
        checked += 1


def test_contour_dice_metric_trivials():
    blob = random_blob_mask(np.random.default_rng(6))
    c = extract_contour(mask(blob))
    assert contour_dice_metric(c, c, c, c) == 1.0

    a = np.zeros((8, 8, 1), bool)
    b = np.zeros((8, 8, 1), bool)
    a[1, 1, 0] = True
    b[6, 6, 0] = True
    assert contour_dice_metric(mask(a), mask(b), mask(a), mask(b)) == 0.0

    empty = mask(np.zeros((4, 4, 1), bool))
    assert contour_dice_metric(empty, empty, empty, empty) == 1.0


def test_contour_dice_metric_arithmetic_case():
    # |dT| = |dS| = 16, |dT & bS| = 8, |dS & bT| = 12 -> 20/32
    d_t = np.zeros((40, 2, 1), bool)
    d_s = np.zeros((40, 2, 1), bool)
    b_t = np.zeros((40, 2, 1), bool)
    b_s = np.zeros((40, 2, 1), bool)
    d_t[0:16, 0, 0] = True
    b_t[0:16, 0, 0] = True
    d_s[0:16, 1, 0] = True
    b_s[0:16, 1, 0] = True
    b_s[0:8, 0, 0] = True   # covers 8 of d_t
    b_s[16:24, 0, 0] = True
    b_t[4:16, 1, 0] = True  # covers 12 of d_s
    got = contour_dice_metric(mask(d_t), mask(d_s), mask(b_t), mask(b_s))
    assert got == pytest.approx(0.625, abs=1e-15)


def test_contour_dice_metric_warns_on_nonsubset():
    d = np.zeros((4, 4, 1), bool)
    d[1, 1, 0] = True
    band = np.zeros((4, 4, 1), bool)  # does not contain the contour
    other = mask(d)
    with pytest.warns(UserWarning):
        contour_dice_metric(mask(d), other, mask(band), other)


def test_contour_dice_metric_matches_set_oracle():
    rng = np.random.default_rng(7)
    for _ in range(15):
        a = random_blob_mask(rng, dims=(14, 14, 5))
        b = random_blob_mask(rng, dims=(14, 14, 5))
        ca, cb = extract_contour(mask(a)), extract_contour(mask(b))
        ba, bb = extract_band(mask(a)), extract_band(mask(b))
        got = contour_dice_metric(ca, cb, ba, bb)
        want = set_contour_dice(ca.bits, cb.bits, ba.bits, bb.bits)
        assert got == pytest.approx(want, abs=1e-15)
        # with bands equal to contours this is a pure overlap ratio of counts
        got_same = contour_dice_metric(ca, cb, ca, cb)
        inter = int(np.count_nonzero(ca.bits & cb.bits))
        denom = count_true(ca) + count_true(cb)
        if denom:
            assert got_same == pytest.approx(2 * inter / denom, abs=1e-15)


def test_hausdorff_dominates_assd_on_blobs():
    rng = np.random.default_rng(8)
    for _ in range(10):
        a = random_blob_mask(rng, dims=(14, 14, 4))
        b = random_blob_mask(rng, dims=(14, 14, 4))
        if not a.any() or not b.any():
            continue
        ma, mb = mask(a), mask(b)
        try:
            assd = assd_2d(ma, mb)
        except NoCommonSlicesError:
            continue
        assert hausdorff(ma, mb) >= assd - 1e-12


def test_evaluate_report_fields_and_serialization():
    rng = np.random.default_rng(9)
    a = random_blob_mask(rng, dims=(12, 12, 4))
    b = random_blob_mask(rng, dims=(12, 12, 4))
    rep = evaluate(mask(a), mask(b))
    assert 0.0 <= rep.dice <= 1.0
    assert rep.contour_dice is not None
    obj = rep.to_json_obj()
    assert set(obj) == {"dice", "hausdorff_mm", "assd2d_mm", "contour_dice", "per_slice_assd"}
    row = rep.to_csv_row()
    assert len(row.split(",")) == 4

    empty = mask(np.zeros((12, 12, 4), bool))
    rep2 = evaluate(empty, mask(b))
    assert rep2.hausdorff_mm is None          # undefined, marked absent
    assert rep2.assd2d_mm is None
    assert "" in rep2.to_csv_row().split(",")


def test_evaluate_uses_contour_spec():
    blob = random_blob_mask(np.random.default_rng(10), dims=(14, 14, 4))
    m = mask(blob)
    rep1 = evaluate(m, m, contour_spec=ContourSpec(erosion_iterations=1))
    rep2 = evaluate(m, m, contour_spec=ContourSpec(erosion_iterations=2))
    assert rep1.dice == rep2.dice == 1.0
    assert rep1.contour_dice == rep2.contour_dice == 1.0
