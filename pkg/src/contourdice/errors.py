"""Exception hierarchy shared by all modules."""


class ContourDiceError(Exception):
    """Base class for all domain errors raised by this package."""


class ShapeMismatchError(ContourDiceError):
    """Two grids that must share a lattice (dims and spacing) do not."""


class EmptyMaskError(ContourDiceError):
    """An operation that needs at least one foreground voxel got none."""


class DegenerateMaskError(ContourDiceError):
    """A signed distance map needs both foreground and background voxels."""


class NoCommonSlicesError(ContourDiceError):
    """No z-slice has a nonempty contour in both masks."""


class GridTooSmallError(ContourDiceError):
    """The requested grid cannot contain the phantom shape."""


class ConfigError(ContourDiceError):
    """A configuration file failed validation; message carries the JSON path."""


class VolumeFormatError(ContourDiceError):
    """Base class for volume file format errors."""


class MalformedHeaderError(VolumeFormatError):
    """Header or sidecar is structurally invalid or outside the supported subset."""


class UnsupportedDtypeError(VolumeFormatError):
    """The file declares a datatype this reader does not support."""


class SizeMismatchError(VolumeFormatError):
    """Payload byte count disagrees with the declared dimensions."""


class MalformedPayloadError(VolumeFormatError):
    """Payload bytes violate the container contract (e.g. non-0/1 mask values)."""
