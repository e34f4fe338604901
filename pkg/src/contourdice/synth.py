"""Deterministic synthetic phantoms: a ground-truth shape plus a corrupted
probability volume emulating an imperfect network output.

Two regimes: ``fuzzy_blob`` (smooth ellipsoid, uncertainty concentrated at
the boundary) and ``folded_shape`` (ellipsoid with sinusoidal radial lobes,
a wiggly high-perimeter boundary). The corruption is a logistic of the
signed distance to the truth surface, scaled by ``boundary_blur_mm``, plus
seeded smooth lattice noise. Everything is reproducible from the spec: the
noise uses a counter-based splitmix64 stream, never the platform RNG.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import signed_distance
from .errors import GridTooSmallError
from .numerics import sigmoid
from .volume import BinaryMask, GridShape, ProbabilityVolume, VoxelGrid

PHANTOM_KINDS = ("fuzzy_blob", "folded_shape")

# Fraction of each half-extent used as the ellipsoid radius.
_RADIUS_FRACTION = 0.7
# Noise lattice node pitch in voxels.
_NOISE_CELL = 8

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)


@dataclass(frozen=True)
class PhantomSpec:
    kind: str
    shape: GridShape
    seed: int
    fold_count: int = 0
    fold_depth: float = 0.25
    boundary_blur_mm: float = 2.0
    noise_amplitude: float = 0.1

    def __post_init__(self):
        if self.kind not in PHANTOM_KINDS:
            raise ValueError(f"unknown phantom kind {self.kind!r}")
        if self.kind == "fuzzy_blob" and self.fold_count != 0:
            raise ValueError("fuzzy_blob has no folds; set fold_count=0")
        if self.fold_count < 0:
            raise ValueError("fold_count must be >= 0")
        if not (0.0 <= self.fold_depth < 1.0):
            raise ValueError("fold_depth must lie in [0, 1)")
        if self.boundary_blur_mm < 0:
            raise ValueError("boundary_blur_mm must be >= 0")
        if not (0.0 <= self.noise_amplitude < 1.0):
            raise ValueError("noise_amplitude must lie in [0, 1)")

    @property
    def label(self) -> str:
        return f"{self.kind}_s{self.seed}"


@dataclass(frozen=True, eq=False)
class Phantom:
    truth: BinaryMask
    corrupted: ProbabilityVolume
    spec: PhantomSpec


def _splitmix64(counter: np.ndarray) -> np.ndarray:
    """splitmix64 output for the given 64-bit counters (vectorized)."""
    z = (counter * _GOLDEN).astype(_U64)
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def _lattice_noise(shape: GridShape, seed: int) -> np.ndarray:
    """Smooth noise in [-1, 1): uniform values on a coarse lattice,
    trilinearly interpolated to the full grid."""
    nx, ny, nz = shape.dims
    kn = [int(np.ceil((n - 1) / _NOISE_CELL)) + 1 for n in (nx, ny, nz)]
    node_idx = np.arange(kn[0] * kn[1] * kn[2], dtype=np.uint64)
    key = _splitmix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))
    bits = _splitmix64(node_idx + key + _U64(1))
    nodes = ((bits >> _U64(11)).astype(np.float64) / float(1 << 53)) * 2.0 - 1.0
    nodes = nodes.reshape(kn)

    out = None
    for axis, n in enumerate((nx, ny, nz)):
        pos = np.arange(n, dtype=np.float64) / _NOISE_CELL
        i0 = np.minimum(pos.astype(np.int64), kn[axis] - 2)
        frac = pos - i0
        if out is None:
            out = nodes
        lo = np.take(out, i0, axis=axis)
        hi = np.take(out, i0 + 1, axis=axis)
        sh = [1, 1, 1]
        sh[axis] = n
        f = frac.reshape(sh)
        out = lo * (1.0 - f) + hi * f
    return out


def _shape_mask(spec: PhantomSpec) -> np.ndarray:
    nx, ny, nz = spec.shape.dims
    sx, sy, sz = spec.shape.spacing
    cx, cy, cz = (nx - 1) / 2.0 * sx, (ny - 1) / 2.0 * sy, (nz - 1) / 2.0 * sz
    rx = _RADIUS_FRACTION * nx * sx / 2.0
    ry = _RADIUS_FRACTION * ny * sy / 2.0
    rz = _RADIUS_FRACTION * nz * sz / 2.0
    x = (np.arange(nx) * sx - cx) / rx
    y = (np.arange(ny) * sy - cy) / ry
    z = (np.arange(nz) * sz - cz) / rz
    u, v, w = np.meshgrid(x, y, z, indexing="ij")
    rho = np.sqrt(u * u + v * v + w * w)
    if spec.kind == "fuzzy_blob" or spec.fold_count == 0:
        return rho <= 1.0
    cos_theta = np.where(rho > 0, w / np.maximum(rho, 1e-300), 1.0)
    sin2_theta = 1.0 - np.clip(cos_theta, -1.0, 1.0) ** 2
    phi = np.arctan2(v, u)
    radius = 1.0 - spec.fold_depth * sin2_theta * (1.0 - np.cos(spec.fold_count * phi)) / 2.0
    return rho <= radius


def generate(spec: PhantomSpec) -> Phantom:
    """Build the phantom; deterministic given the spec.

    At zero blur the corruption is the 0/1 cast of the truth; at zero noise
    the corruption stays sign-faithful (>= 0.5 exactly inside the truth).
    """
    if min(spec.shape.dims) < 16:
        raise GridTooSmallError(
            f"phantom needs >= 16 voxels per axis, got {spec.shape.dims}"
        )
    truth_bits = _shape_mask(spec)
    truth = BinaryMask(spec.shape, truth_bits)

    if spec.boundary_blur_mm == 0.0:
        vals = truth_bits.astype(np.float64)
    else:
        phi = signed_distance(truth).values
        vals = sigmoid(-phi / spec.boundary_blur_mm)
    if spec.noise_amplitude > 0.0:
        vals = vals + spec.noise_amplitude * _lattice_noise(spec.shape, spec.seed)
        vals = np.clip(vals, 0.0, 1.0)
    corrupted = ProbabilityVolume(VoxelGrid(spec.shape, vals))
    return Phantom(truth=truth, corrupted=corrupted, spec=spec)
