"""Exact anisotropic Euclidean distance transforms between voxel centers.

The transform is separable: the squared distance field is built one axis at
a time with an exact min-plus reduction

    d_new[i] = min_j ( d_old[j] + (s * (i - j))**2 )

which keeps results identical to the all-pairs definition while staying
vectorized. Distances are in millimeters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMaskError, EmptyMaskError
from .volume import BinaryMask, GridShape, Spacing, VoxelGrid


@dataclass(frozen=True, eq=False)
class DistanceGrid:
    """Distance field in mm. Unsigned maps are 0 exactly on the foreground;
    signed maps are negative inside and positive outside."""

    grid: VoxelGrid

    @property
    def values(self) -> np.ndarray:
        return self.grid.values

    @property
    def shape(self) -> GridShape:
        return self.grid.shape


def _minplus_axis(dsq: np.ndarray, axis: int, s: float) -> np.ndarray:
    n = dsq.shape[axis]
    if n == 1:
        return dsq
    moved = np.moveaxis(dsq, axis, 0)
    flat = moved.reshape(n, -1)
    idx = np.arange(n, dtype=np.float64)
    out = np.full_like(flat, np.inf)
    for j in range(n):
        w = (s * (idx - j)) ** 2
        np.minimum(out, flat[j][None, :] + w[:, None], out=out)
    return np.moveaxis(out.reshape(moved.shape), 0, axis)


def squared_edt_array(bits: np.ndarray, spacing) -> np.ndarray:
    """Squared distance in mm^2 from each cell to the nearest true cell.

    Works for any ndim as long as ``spacing`` has one entry per axis;
    requires at least one true cell.
    """
    bits = np.asarray(bits, dtype=bool)
    if not bits.any():
        raise EmptyMaskError("distance transform needs a nonempty mask")
    dsq = np.where(bits, 0.0, np.inf)
    for axis, s in enumerate(spacing):
        dsq = _minplus_axis(dsq, axis, float(s))
    return dsq


def edt(m: BinaryMask, spacing: Spacing | None = None) -> DistanceGrid:
    """Distance in mm from each voxel center to the nearest foreground voxel center."""
    sp = m.shape.spacing if spacing is None else tuple(float(s) for s in spacing)
    dist = np.sqrt(squared_edt_array(m.bits, sp))
    return DistanceGrid(VoxelGrid(m.shape, dist))


def signed_distance(m: BinaryMask, spacing: Spacing | None = None) -> DistanceGrid:
    """Signed distance map: -edt-to-background inside, +edt-to-foreground outside.

    The sign flips exactly at the mask (never zero), so ``value < 0`` is
    equivalent to the voxel being foreground.
    """
    bits = m.bits
    if not bits.any() or bits.all():
        raise DegenerateMaskError("signed distance needs both foreground and background")
    sp = m.shape.spacing if spacing is None else tuple(float(s) for s in spacing)
    outside = np.sqrt(squared_edt_array(bits, sp))
    inside = np.sqrt(squared_edt_array(~bits, sp))
    phi = np.where(bits, -inside, outside)
    return DistanceGrid(VoxelGrid(m.shape, phi))
