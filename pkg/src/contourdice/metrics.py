"""Evaluation metrics: Dice, Hausdorff, slice-wise 2D ASSD, and Contour Dice.

Conventions when a value is undefined (e.g. Hausdorff of an empty mask):
the report carries ``None``, never NaN. Perfect agreement on empty
structures scores perfectly (dice = 1, contour dice = 1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .distance import edt, squared_edt_array
from .errors import EmptyMaskError, NoCommonSlicesError
from .morphology import BandSpec, ContourSpec, DEFAULT_CONTOUR, extract_band, extract_contour
from .volume import BinaryMask, Spacing, count_true, require_same_shape

CSV_FIELDS = ("dice", "hausdorff_mm", "assd2d_mm", "contour_dice")


@dataclass(frozen=True)
class MetricReport:
    dice: float
    hausdorff_mm: float | None
    assd2d_mm: float | None
    contour_dice: float | None
    per_slice_assd: tuple[tuple[int, float], ...] = field(default=())

    def to_json_obj(self) -> dict:
        return {
            "dice": self.dice,
            "hausdorff_mm": self.hausdorff_mm,
            "assd2d_mm": self.assd2d_mm,
            "contour_dice": self.contour_dice,
            "per_slice_assd": [[z, v] for z, v in self.per_slice_assd],
        }

    @staticmethod
    def csv_header() -> str:
        return ",".join(CSV_FIELDS)

    def to_csv_row(self) -> str:
        vals = []
        for name in CSV_FIELDS:
            v = getattr(self, name)
            vals.append("" if v is None else f"{v:.6f}")
        return ",".join(vals)


def dice(a: BinaryMask, b: BinaryMask) -> float:
    """2|a&b| / (|a|+|b|); 1.0 when both masks are empty."""
    require_same_shape(a, b)
    na, nb = count_true(a), count_true(b)
    if na + nb == 0:
        return 1.0
    inter = int(np.count_nonzero(a.bits & b.bits))
    return 2.0 * inter / (na + nb)


def _directed_percentile(src: BinaryMask, dist_to_other: np.ndarray, percentile: float) -> float:
    vals = dist_to_other[src.bits]
    return float(np.percentile(vals, percentile))


def hausdorff(
    a: BinaryMask,
    b: BinaryMask,
    spacing: Spacing | None = None,
    percentile: float = 100.0,
) -> float:
    """Symmetric (percentile-)Hausdorff distance in mm between two masks."""
    require_same_shape(a, b)
    if not (0.0 < percentile <= 100.0):
        raise ValueError(f"percentile must lie in (0, 100], got {percentile}")
    if count_true(a) == 0 or count_true(b) == 0:
        raise EmptyMaskError("hausdorff needs two nonempty masks")
    d_to_b = edt(b, spacing).values
    d_to_a = edt(a, spacing).values
    return max(
        _directed_percentile(a, d_to_b, percentile),
        _directed_percentile(b, d_to_a, percentile),
    )


def per_slice_assd(
    a: BinaryMask,
    b: BinaryMask,
    spacing: Spacing | None = None,
    contour_spec: ContourSpec = DEFAULT_CONTOUR,
) -> list[tuple[int, float]]:
    """Per-slice symmetric average contour distance, for slices where both
    masks have a nonempty in-plane contour. In-plane distances only."""
    require_same_shape(a, b)
    if contour_spec.se.mode != "per_slice":
        raise ValueError("2D ASSD needs a per-slice structuring element")
    sp = a.shape.spacing if spacing is None else tuple(float(s) for s in spacing)
    ca = extract_contour(a, contour_spec).bits
    cb = extract_contour(b, contour_spec).bits
    out: list[tuple[int, float]] = []
    for z in range(a.shape.nz):
        sa = ca[:, :, z]
        sb = cb[:, :, z]
        if not sa.any() or not sb.any():
            continue
        d_to_b = np.sqrt(squared_edt_array(sb, sp[:2]))
        d_to_a = np.sqrt(squared_edt_array(sa, sp[:2]))
        mean_ab = float(d_to_b[sa].mean())
        mean_ba = float(d_to_a[sb].mean())
        out.append((z, 0.5 * (mean_ab + mean_ba)))
    return out


def assd_2d(
    a: BinaryMask,
    b: BinaryMask,
    spacing: Spacing | None = None,
    contour_spec: ContourSpec = DEFAULT_CONTOUR,
) -> float:
    """Mean over qualifying slices of the per-slice symmetric contour distance."""
    rows = per_slice_assd(a, b, spacing, contour_spec)
    if not rows:
        raise NoCommonSlicesError("no slice has a contour in both masks")
    return float(np.mean([v for _, v in rows]))


def contour_dice_metric(
    d_truth: BinaryMask,
    d_seg: BinaryMask,
    b_truth: BinaryMask,
    b_seg: BinaryMask,
) -> float:
    """Contour Dice of extracted contours (d_*) against offset bands (b_*):

        (|d_truth & b_seg| + |d_seg & b_truth|) / (|d_truth| + |d_seg|)

    Returns 1.0 when both contours are empty. Contours are expected to be
    subsets of their own bands; a warning is emitted otherwise.
    """
    require_same_shape(d_truth, d_seg)
    require_same_shape(d_truth, b_truth)
    require_same_shape(d_truth, b_seg)
    if (d_truth.bits & ~b_truth.bits).any() or (d_seg.bits & ~b_seg.bits).any():
        warnings.warn("contour is not a subset of its band", stacklevel=2)
    n_t, n_s = count_true(d_truth), count_true(d_seg)
    if n_t + n_s == 0:
        return 1.0
    cross_t = int(np.count_nonzero(d_truth.bits & b_seg.bits))
    cross_s = int(np.count_nonzero(d_seg.bits & b_truth.bits))
    return (cross_t + cross_s) / (n_t + n_s)


def evaluate(
    pred: BinaryMask,
    truth: BinaryMask,
    spacing: Spacing | None = None,
    contour_spec: ContourSpec = DEFAULT_CONTOUR,
    band_spec: BandSpec | None = None,
    percentile: float = 100.0,
) -> MetricReport:
    """All metrics in one report; fields that are undefined for these inputs
    (empty masks, no common contour slices) come back as None.

    ``band_spec=None`` uses the contours themselves as the Contour Dice bands.
    """
    require_same_shape(pred, truth)
    d = dice(pred, truth)
    try:
        hd = hausdorff(pred, truth, spacing, percentile)
    except EmptyMaskError:
        hd = None
    rows = per_slice_assd(pred, truth, spacing, contour_spec)
    assd = float(np.mean([v for _, v in rows])) if rows else None

    c_pred = extract_contour(pred, contour_spec)
    c_truth = extract_contour(truth, contour_spec)
    if band_spec is None:
        b_pred, b_truth = c_pred, c_truth
    else:
        b_pred = extract_band(pred, band_spec)
        b_truth = extract_band(truth, band_spec)
    cd = contour_dice_metric(c_truth, c_pred, b_truth, b_pred)

    return MetricReport(
        dice=d,
        hausdorff_mm=hd,
        assd2d_mm=assd,
        contour_dice=cd,
        per_slice_assd=tuple(rows),
    )
