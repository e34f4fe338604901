"""Volume file formats.

Native container: a raw little-endian payload file plus a JSON sidecar at
``<path>.json`` describing dims, spacing, dtype (u8 for masks, f32 for
grids) and the x-fastest flattening order. Round trips are bit-exact.

NIfTI-1 subset: single-file uncompressed ``.nii``, little-endian, datatype
2 (uint8, read as a mask) or 16 (float32, read as a grid), spacing from
pixdim[1..3], vox_offset honored. Anything outside the subset is rejected
with a precise diagnostic, never misread.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import (
    MalformedHeaderError,
    MalformedPayloadError,
    SizeMismatchError,
    UnsupportedDtypeError,
)
from .volume import BinaryMask, GridShape, VoxelGrid

SIDECAR_SUFFIX = ".json"
CONTAINER_VERSION = 1

_NIFTI_HEADER_BYTES = 348
_NIFTI_MAGIC = b"n+1\x00"
_NIFTI_UINT8 = 2
_NIFTI_FLOAT32 = 16


def save_volume(vol: VoxelGrid | BinaryMask, path: str | Path) -> None:
    """Write a grid or mask; format chosen by extension (.nii or container)."""
    path = Path(path)
    if path.suffix == ".nii":
        _save_nifti(vol, path)
    else:
        _save_container(vol, path)


def load_volume(path: str | Path) -> VoxelGrid | BinaryMask:
    """Read a grid (float payload) or mask (byte payload) back from disk."""
    path = Path(path)
    if path.suffix == ".nii":
        return _load_nifti(path)
    return _load_container(path)


def _flat(vol: VoxelGrid | BinaryMask) -> np.ndarray:
    arr = vol.values if isinstance(vol, VoxelGrid) else vol.bits
    return arr.ravel(order="F")


def _save_container(vol: VoxelGrid | BinaryMask, path: Path) -> None:
    shape = vol.shape
    if isinstance(vol, BinaryMask):
        payload = _flat(vol).astype(np.uint8)
        dtype = "u8"
    else:
        payload = _flat(vol).astype("<f4")
        dtype = "f32"
    sidecar = {
        "dims": list(shape.dims),
        "spacing_mm": list(shape.spacing),
        "dtype": dtype,
        "order": "x-fastest",
        "version": CONTAINER_VERSION,
    }
    path.write_bytes(payload.tobytes())
    Path(str(path) + SIDECAR_SUFFIX).write_text(
        json.dumps(sidecar, indent=2) + "\n", encoding="utf-8"
    )


def _container_meta(path: Path) -> tuple[tuple[int, int, int], tuple[float, ...], str]:
    sidecar_path = Path(str(path) + SIDECAR_SUFFIX)
    if not sidecar_path.exists():
        raise MalformedHeaderError(f"missing sidecar {sidecar_path}")
    try:
        meta = json.loads(sidecar_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedHeaderError(f"sidecar is not valid JSON: {exc}") from exc
    if not isinstance(meta, dict):
        raise MalformedHeaderError("sidecar must be a JSON object")
    if meta.get("version") != CONTAINER_VERSION:
        raise MalformedHeaderError(f"unsupported container version {meta.get('version')!r}")
    if meta.get("order") != "x-fastest":
        raise MalformedHeaderError(f"unsupported order {meta.get('order')!r}")
    dims = meta.get("dims")
    if (not isinstance(dims, list) or len(dims) != 3
            or any(not isinstance(d, int) or d < 1 for d in dims)):
        raise MalformedHeaderError(f"dims must be 3 positive integers, got {dims!r}")
    spacing = meta.get("spacing_mm")
    if (not isinstance(spacing, list) or len(spacing) != 3
            or any(not isinstance(s, (int, float)) or s <= 0 for s in spacing)):
        raise MalformedHeaderError(f"spacing_mm must be 3 positive numbers, got {spacing!r}")
    dtype = meta.get("dtype")
    if dtype not in ("u8", "f32"):
        raise UnsupportedDtypeError(f"container dtype must be u8 or f32, got {dtype!r}")
    return tuple(dims), tuple(float(s) for s in spacing), dtype


def _load_container(path: Path) -> VoxelGrid | BinaryMask:
    dims, spacing, dtype = _container_meta(path)
    nx, ny, nz = dims
    itemsize = 1 if dtype == "u8" else 4
    expected = nx * ny * nz * itemsize
    raw = path.read_bytes()
    if len(raw) != expected:
        raise SizeMismatchError(
            f"{path}: expected {expected} payload bytes, found {len(raw)}"
        )
    shape = GridShape(nx, ny, nz, spacing=spacing)
    if dtype == "u8":
        flat = np.frombuffer(raw, dtype=np.uint8)
        if flat.max(initial=0) > 1:
            raise MalformedPayloadError(f"{path}: mask payload has values other than 0/1")
        bits = flat.reshape(dims, order="F").astype(bool)
        return BinaryMask(shape, bits)
    flat = np.frombuffer(raw, dtype="<f4")
    values = flat.reshape(dims, order="F").astype(np.float64)
    return VoxelGrid(shape, values)


def _save_nifti(vol: VoxelGrid | BinaryMask, path: Path) -> None:
    shape = vol.shape
    if isinstance(vol, BinaryMask):
        payload = _flat(vol).astype(np.uint8)
        datatype, bitpix = _NIFTI_UINT8, 8
    else:
        payload = _flat(vol).astype("<f4")
        datatype, bitpix = _NIFTI_FLOAT32, 32
    hdr = bytearray(_NIFTI_HEADER_BYTES)
    struct.pack_into("<i", hdr, 0, _NIFTI_HEADER_BYTES)
    struct.pack_into("<8h", hdr, 40, 3, shape.nx, shape.ny, shape.nz, 1, 1, 1, 1)
    struct.pack_into("<h", hdr, 70, datatype)
    struct.pack_into("<h", hdr, 72, bitpix)
    sx, sy, sz = shape.spacing
    struct.pack_into("<8f", hdr, 76, 1.0, sx, sy, sz, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<f", hdr, 108, 352.0)
    struct.pack_into("<f", hdr, 112, 1.0)  # scl_slope
    struct.pack_into("<f", hdr, 116, 0.0)  # scl_inter
    hdr[344:348] = _NIFTI_MAGIC
    # 4-byte extender (no extensions), then the voxel data at offset 352.
    path.write_bytes(bytes(hdr) + b"\x00\x00\x00\x00" + payload.tobytes())


def _load_nifti(path: Path) -> VoxelGrid | BinaryMask:
    raw = path.read_bytes()
    if len(raw) < _NIFTI_HEADER_BYTES:
        raise MalformedHeaderError(
            f"{path}: file has {len(raw)} bytes, shorter than the 348-byte header"
        )
    (sizeof_hdr,) = struct.unpack_from("<i", raw, 0)
    if sizeof_hdr != _NIFTI_HEADER_BYTES:
        raise MalformedHeaderError(
            f"{path}: sizeof_hdr is {sizeof_hdr}, expected 348 "
            "(big-endian or non-NIfTI-1 files are not supported)"
        )
    magic = raw[344:348]
    if magic != _NIFTI_MAGIC:
        raise MalformedHeaderError(
            f"{path}: magic is {magic!r}, expected {_NIFTI_MAGIC!r} (single-file NIfTI-1)"
        )
    dim = struct.unpack_from("<8h", raw, 40)
    ndim = dim[0]
    if ndim < 3 or ndim > 7:
        raise MalformedHeaderError(f"{path}: dim[0]={ndim} outside the supported 3-D subset")
    nx, ny, nz = dim[1], dim[2], dim[3]
    if nx < 1 or ny < 1 or nz < 1:
        raise MalformedHeaderError(f"{path}: non-positive dims {(nx, ny, nz)}")
    for k in range(4, ndim + 1):
        if dim[k] not in (0, 1):
            raise MalformedHeaderError(
                f"{path}: dim[{k}]={dim[k]}; multi-frame volumes are not supported"
            )
    (datatype,) = struct.unpack_from("<h", raw, 70)
    if datatype not in (_NIFTI_UINT8, _NIFTI_FLOAT32):
        raise UnsupportedDtypeError(
            f"{path}: datatype code {datatype} not supported (only 2=uint8, 16=float32)"
        )
    pixdim = struct.unpack_from("<8f", raw, 76)
    spacing = pixdim[1:4]
    if any(not np.isfinite(s) or s <= 0 for s in spacing):
        raise MalformedHeaderError(f"{path}: non-positive pixdim spacing {spacing}")
    (vox_offset_f,) = struct.unpack_from("<f", raw, 108)
    vox_offset = int(round(vox_offset_f))
    if vox_offset < _NIFTI_HEADER_BYTES:
        raise MalformedHeaderError(f"{path}: vox_offset {vox_offset_f} is before the header end")
    itemsize = 1 if datatype == _NIFTI_UINT8 else 4
    expected = nx * ny * nz * itemsize
    available = len(raw) - vox_offset
    if available < expected:
        raise SizeMismatchError(
            f"{path}: expected {expected} payload bytes, found {available}"
        )
    payload = raw[vox_offset : vox_offset + expected]
    shape = GridShape(nx, ny, nz, spacing=tuple(float(s) for s in spacing))
    if datatype == _NIFTI_UINT8:
        bits = np.frombuffer(payload, dtype=np.uint8).reshape((nx, ny, nz), order="F") != 0
        return BinaryMask(shape, bits)
    values = np.frombuffer(payload, dtype="<f4").reshape((nx, ny, nz), order="F")
    return VoxelGrid(shape, values.astype(np.float64))
