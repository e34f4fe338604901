"""Dense 3D grid types and binarization.

All grids use index order ``[x, y, z]`` (array shape ``(nx, ny, nz)``) with
an anisotropic voxel spacing in millimeters carried by :class:`GridShape`.
Arrays are made read-only after construction so grids can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatchError

Spacing = tuple[float, float, float]

# Binarizing at t == 1 uses this tolerance below 1.0 so that saturated
# probabilities survive floating-point representation.
T_ONE_EPS = 1e-6


@dataclass(frozen=True)
class GridShape:
    """Voxel counts per axis plus physical spacing (sx, sy, sz) in mm."""

    nx: int
    ny: int
    nz: int
    spacing: Spacing = (1.0, 1.0, 1.0)

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or n < 1:
                raise ValueError(f"{name} must be a positive integer, got {n!r}")
            object.__setattr__(self, name, int(n))
        sp = tuple(float(s) for s in self.spacing)
        if len(sp) != 3 or any(not np.isfinite(s) or s <= 0 for s in sp):
            raise ValueError(f"spacing must be 3 positive finite floats, got {self.spacing!r}")
        object.__setattr__(self, "spacing", sp)

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def voxel_count(self) -> int:
        return self.nx * self.ny * self.nz


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, order="C", copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """Dense float64 scalar field over a :class:`GridShape`."""

    shape: GridShape
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = _frozen_array(self.values, np.float64)
        if arr.shape != self.shape.dims:
            raise ShapeMismatchError(
                f"values shape {arr.shape} does not match grid dims {self.shape.dims}"
            )
        if not np.isfinite(arr).all():
            raise ValueError("VoxelGrid values must all be finite")
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_array(cls, values, spacing: Spacing = (1.0, 1.0, 1.0)) -> "VoxelGrid":
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 3:
            raise ShapeMismatchError(f"expected a 3-D array, got ndim={arr.ndim}")
        return cls(GridShape(*arr.shape, spacing=spacing), arr)


@dataclass(frozen=True, eq=False)
class ProbabilityVolume:
    """A :class:`VoxelGrid` whose values all lie in [0, 1]."""

    grid: VoxelGrid

    def __post_init__(self):
        v = self.grid.values
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ValueError("probability values must lie in [0, 1]")

    @property
    def shape(self) -> GridShape:
        return self.grid.shape

    @property
    def values(self) -> np.ndarray:
        return self.grid.values

    @classmethod
    def from_array(cls, values, spacing: Spacing = (1.0, 1.0, 1.0)) -> "ProbabilityVolume":
        return cls(VoxelGrid.from_array(values, spacing))


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Dense boolean field over a :class:`GridShape`."""

    shape: GridShape
    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = _frozen_array(self.bits, bool)
        if arr.shape != self.shape.dims:
            raise ShapeMismatchError(
                f"bits shape {arr.shape} does not match grid dims {self.shape.dims}"
            )
        object.__setattr__(self, "bits", arr)

    @classmethod
    def from_array(cls, bits, spacing: Spacing = (1.0, 1.0, 1.0)) -> "BinaryMask":
        arr = np.asarray(bits)
        if arr.ndim != 3:
            raise ShapeMismatchError(f"expected a 3-D array, got ndim={arr.ndim}")
        return cls(GridShape(*arr.shape, spacing=spacing), arr.astype(bool))


def require_same_shape(a, b) -> None:
    """Raise :class:`ShapeMismatchError` unless both grids share dims and spacing."""
    sa = a.shape if isinstance(a.shape, GridShape) else None
    sb = b.shape if isinstance(b.shape, GridShape) else None
    if sa != sb:
        raise ShapeMismatchError(f"grid shapes differ: {sa} vs {sb}")


def binarize(p: ProbabilityVolume, t: float) -> BinaryMask:
    """Threshold a probability volume at ``t`` in (0, 1].

    A voxel is foreground when ``p(x) >= t_eff`` where ``t_eff = t`` for
    t < 1 and ``t_eff = 1 - 1e-6`` for t == 1, so that near-saturated
    probabilities count as fully certain.
    """
    t = float(t)
    if not (0.0 < t <= 1.0):
        raise ValueError(f"threshold must lie in (0, 1], got {t}")
    t_eff = 1.0 - T_ONE_EPS if t == 1.0 else t
    return BinaryMask(p.shape, p.values >= t_eff)


def count_true(m: BinaryMask) -> int:
    """Number of foreground voxels."""
    return int(np.count_nonzero(m.bits))


def slice_view(g: VoxelGrid | ProbabilityVolume | BinaryMask, z: int) -> np.ndarray:
    """Read-only (nx, ny) plane at slice index ``z``.

    Raises IndexError when z is outside [0, nz).
    """
    if isinstance(g, ProbabilityVolume):
        g = g.grid
    nz = g.shape.nz
    if not isinstance(z, (int, np.integer)) or z < 0 or z >= nz:
        raise IndexError(f"slice index {z} out of range [0, {nz})")
    arr = g.values if isinstance(g, VoxelGrid) else g.bits
    return arr[:, :, z]
