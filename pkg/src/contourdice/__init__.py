"""Segmentation-boundary toolkit: Contour Dice metric and loss, competing
boundary losses, contour/band morphology, exact distance transforms,
evaluation metrics, synthetic phantoms, and a desk-scale fitting harness."""

from .distance import DistanceGrid, edt, signed_distance
from .errors import (
    ConfigError,
    ContourDiceError,
    DegenerateMaskError,
    EmptyMaskError,
    GridTooSmallError,
    MalformedHeaderError,
    MalformedPayloadError,
    NoCommonSlicesError,
    ShapeMismatchError,
    SizeMismatchError,
    UnsupportedDtypeError,
    VolumeFormatError,
)
from .io import load_volume, save_volume
from .losses import (
    CompoundLossSpec,
    ContourLossConfig,
    GradCheckResult,
    LOSS_NAMES,
    LossResult,
    WeightSchedule,
    boundary_loss,
    compound_loss,
    contour_dice_loss,
    contour_dice_loss_v1,
    cross_entropy_loss,
    evaluate_loss,
    gradient_check,
    hausdorff_dt_loss,
    perimeter_loss,
    soft_dice_loss,
)
from .metrics import (
    MetricReport,
    assd_2d,
    contour_dice_metric,
    dice,
    evaluate,
    hausdorff,
    per_slice_assd,
)
from .morphology import (
    BandSpec,
    ContourSpec,
    CROSS_2D,
    CUBE_3D,
    SQUARE_2D,
    StructuringElement,
    complement,
    dilate,
    dilate_soft,
    erode,
    erode_soft,
    extract_band,
    extract_contour,
    soft_contour,
    xor,
)
from .numerics import logit, sigmoid
from .optimize import (
    AblationCell,
    EpochRecord,
    LogitVolume,
    OptimizerConfig,
    RunRecord,
    ablate,
    ablation_csv,
    default_ablation_grid,
    default_phantom_suite,
    fit,
)
from .synth import Phantom, PhantomSpec, generate
from .volume import (
    BinaryMask,
    GridShape,
    ProbabilityVolume,
    VoxelGrid,
    binarize,
    count_true,
    slice_view,
)

__version__ = "0.1.0"
