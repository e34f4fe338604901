"""Binary and grayscale morphology plus contour/band extraction.

Contours are computed as ``mask XOR erode(mask)`` and offset bands as
``dilate(mask) XOR erode(mask)``. Voxels outside the grid count as
background (false / 0.0), so an all-true slice still produces a border
contour. The 2D structuring elements never mix information across
z-slices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .volume import BinaryMask, ProbabilityVolume, VoxelGrid, require_same_shape

SE_KINDS_2D = ("square3x3_2d", "cross3x3_2d")
SE_KINDS_3D = ("cube3x3x3_3d",)
SE_MODES = ("per_slice", "volumetric")

_OFFSETS = {
    "square3x3_2d": tuple(
        (dx, dy, 0) for dx in (-1, 0, 1) for dy in (-1, 0, 1)
    ),
    "cross3x3_2d": ((0, 0, 0), (-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0)),
    "cube3x3x3_3d": tuple(
        (dx, dy, dz)
        for dx in (-1, 0, 1)
        for dy in (-1, 0, 1)
        for dz in (-1, 0, 1)
    ),
}


@dataclass(frozen=True)
class StructuringElement:
    kind: str = "square3x3_2d"
    mode: str = "per_slice"

    def __post_init__(self):
        if self.kind not in _OFFSETS:
            raise ValueError(f"unknown structuring element kind {self.kind!r}")
        if self.mode not in SE_MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "per_slice" and self.kind not in SE_KINDS_2D:
            raise ValueError("per_slice mode requires a 2-D kind")
        if self.mode == "volumetric" and self.kind not in SE_KINDS_3D:
            raise ValueError("volumetric mode requires the 3-D kind")

    def offsets(self) -> tuple[tuple[int, int, int], ...]:
        return _OFFSETS[self.kind]


SQUARE_2D = StructuringElement("square3x3_2d", "per_slice")
CROSS_2D = StructuringElement("cross3x3_2d", "per_slice")
CUBE_3D = StructuringElement("cube3x3x3_3d", "volumetric")


@dataclass(frozen=True)
class ContourSpec:
    """Contour = mask XOR its erosion, iterated ``erosion_iterations`` times."""

    se: StructuringElement = SQUARE_2D
    erosion_iterations: int = 1

    def __post_init__(self):
        if self.erosion_iterations < 1:
            raise ValueError("erosion_iterations must be >= 1")


@dataclass(frozen=True)
class BandSpec:
    """Band = dilate(mask, D iters) XOR erode(mask, E iters); 0 iterations is identity."""

    se: StructuringElement = SQUARE_2D
    dilate_iterations: int = 1
    erode_iterations: int = 1

    def __post_init__(self):
        if self.dilate_iterations < 0 or self.erode_iterations < 0:
            raise ValueError("iteration counts must be >= 0")
        if self.dilate_iterations + self.erode_iterations < 1:
            raise ValueError("band needs at least one dilation or erosion")


DEFAULT_CONTOUR = ContourSpec()
DEFAULT_BAND = BandSpec()


def _translated(arr: np.ndarray, offset: tuple[int, int, int], fill) -> np.ndarray:
    """Return t with t[x] = arr[x + offset], out-of-bounds filled with ``fill``."""
    out = np.full(arr.shape, fill, dtype=arr.dtype)
    src = []
    dst = []
    for axis, off in enumerate(offset):
        n = arr.shape[axis]
        lo = max(0, -off)
        hi = min(n, n - off)
        if hi <= lo:
            return out
        dst.append(slice(lo, hi))
        src.append(slice(lo + off, hi + off))
    out[tuple(dst)] = arr[tuple(src)]
    return out


def _binary_pass(bits: np.ndarray, offsets, combine, fill: bool) -> np.ndarray:
    acc = None
    for off in offsets:
        t = _translated(bits, off, fill)
        acc = t if acc is None else combine(acc, t)
    return acc


def erode(m: BinaryMask, se: StructuringElement = SQUARE_2D, iters: int = 1) -> BinaryMask:
    """Voxel stays true iff every se-neighbor is true; outside counts false."""
    if iters < 0:
        raise ValueError("iters must be >= 0")
    bits = m.bits
    for _ in range(iters):
        bits = _binary_pass(bits, se.offsets(), np.logical_and, False)
    return BinaryMask(m.shape, bits)


def dilate(m: BinaryMask, se: StructuringElement = SQUARE_2D, iters: int = 1) -> BinaryMask:
    """Voxel becomes true iff any se-neighbor is true; outside counts false."""
    if iters < 0:
        raise ValueError("iters must be >= 0")
    bits = m.bits
    for _ in range(iters):
        bits = _binary_pass(bits, se.offsets(), np.logical_or, False)
    return BinaryMask(m.shape, bits)


def xor(a: BinaryMask, b: BinaryMask) -> BinaryMask:
    require_same_shape(a, b)
    return BinaryMask(a.shape, np.logical_xor(a.bits, b.bits))


def complement(m: BinaryMask) -> BinaryMask:
    return BinaryMask(m.shape, ~m.bits)


def extract_contour(m: BinaryMask, spec: ContourSpec = DEFAULT_CONTOUR) -> BinaryMask:
    """Boundary layer of a mask: the voxels removed by erosion."""
    return xor(m, erode(m, spec.se, spec.erosion_iterations))


def extract_band(m: BinaryMask, spec: BandSpec = DEFAULT_BAND) -> BinaryMask:
    """Offset band around the mask surface, width set by the iteration counts."""
    return xor(
        dilate(m, spec.se, spec.dilate_iterations),
        erode(m, spec.se, spec.erode_iterations),
    )


def _soft_pass(values: np.ndarray, offsets, reduce_fn) -> np.ndarray:
    acc = None
    for off in offsets:
        t = _translated(values, off, 0.0)
        acc = t if acc is None else reduce_fn(acc, t)
    return acc


def erode_soft(p: ProbabilityVolume, se: StructuringElement = SQUARE_2D) -> ProbabilityVolume:
    """Grayscale erosion: voxelwise minimum over the neighborhood, outside = 0."""
    out = _soft_pass(p.values, se.offsets(), np.minimum)
    return ProbabilityVolume(VoxelGrid(p.shape, out))


def dilate_soft(p: ProbabilityVolume, se: StructuringElement = SQUARE_2D) -> ProbabilityVolume:
    """Grayscale dilation: voxelwise maximum over the neighborhood, outside = 0."""
    out = _soft_pass(p.values, se.offsets(), np.maximum)
    return ProbabilityVolume(VoxelGrid(p.shape, out))


def soft_contour(p: ProbabilityVolume, se: StructuringElement = SQUARE_2D) -> VoxelGrid:
    """Continuous contour response ``p - erode_soft(p)``; 0 on binary interiors.

    Reduces to the binary contour (as a 0/1 grid) when p is binary valued.
    """
    eroded = _soft_pass(p.values, se.offsets(), np.minimum)
    return VoxelGrid(p.shape, p.values - eroded)
