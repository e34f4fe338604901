"""Desk-scale training stand-in: gradient descent on a per-voxel logit
volume against a ground-truth mask, with reduce-on-plateau and early
stopping, plus the threshold-ablation grid driver.

A per-voxel logit model isolates what the losses do to boundaries without
any network in the way; runs are fully deterministic given their inputs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ContourDiceError
from .losses import CompoundLossSpec, compound_loss
from .metrics import MetricReport, evaluate
from .numerics import logit, sigmoid
from .synth import PhantomSpec, generate
from .volume import BinaryMask, GridShape, ProbabilityVolume, VoxelGrid, binarize

# An epoch counts as improving only when the loss drops by more than this.
PLATEAU_TOL = 1e-7
# Probabilities are clamped into [LOGIT_CLAMP, 1 - LOGIT_CLAMP] before logit().
LOGIT_CLAMP = 1e-6


@dataclass(frozen=True, eq=False)
class LogitVolume:
    """Unbounded real field mapped to probabilities through the sigmoid."""

    grid: VoxelGrid

    @property
    def shape(self) -> GridShape:
        return self.grid.shape

    def to_probabilities(self) -> ProbabilityVolume:
        return ProbabilityVolume(VoxelGrid(self.shape, sigmoid(self.grid.values)))

    @classmethod
    def zeros(cls, shape: GridShape) -> "LogitVolume":
        return cls(VoxelGrid(shape, np.zeros(shape.dims)))

    @classmethod
    def from_probabilities(cls, p: ProbabilityVolume) -> "LogitVolume":
        clamped = np.clip(p.values, LOGIT_CLAMP, 1.0 - LOGIT_CLAMP)
        return cls(VoxelGrid(p.shape, logit(clamped)))


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 1.0
    lr_reduce_factor: float = 0.5
    plateau_patience: int = 10
    early_stop_patience: int = 50
    max_epochs: int = 500

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not (0.0 < self.lr_reduce_factor < 1.0):
            raise ValueError("lr_reduce_factor must lie in (0, 1)")
        if self.plateau_patience < 1 or self.max_epochs < 1:
            raise ValueError("patience and max_epochs must be >= 1")
        if self.early_stop_patience < self.plateau_patience:
            raise ValueError("early_stop_patience must be >= plateau_patience")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    weight: float
    lr: float


@dataclass(frozen=True)
class RunRecord:
    epochs: tuple[EpochRecord, ...]
    final: MetricReport | None
    best_epoch: int
    loss_spec: CompoundLossSpec
    config: OptimizerConfig
    diverged: bool = False
    diagnostic: str | None = None
    wall_time_s: float = field(default=0.0, compare=False)

    def to_json_obj(self, include_wall_time: bool = False) -> dict:
        obj = {
            "best_epoch": self.best_epoch,
            "diverged": self.diverged,
            "diagnostic": self.diagnostic,
            "final": None if self.final is None else self.final.to_json_obj(),
            "config": {
                "learning_rate": self.config.learning_rate,
                "lr_reduce_factor": self.config.lr_reduce_factor,
                "plateau_patience": self.config.plateau_patience,
                "early_stop_patience": self.config.early_stop_patience,
                "max_epochs": self.config.max_epochs,
            },
            "loss": {
                "companion": self.loss_spec.companion,
                "weight": _schedule_obj(self.loss_spec),
                "t": self.loss_spec.resolved_contour().t,
            },
            "epochs": [[e.epoch, e.loss, e.weight, e.lr] for e in self.epochs],
        }
        if include_wall_time:
            obj["wall_time_s"] = self.wall_time_s
        return obj


def _schedule_obj(spec: CompoundLossSpec) -> dict:
    w = spec.resolved_weight()
    if w.kind == "constant":
        return {"kind": "constant", "gamma": w.gamma}
    return {"kind": "ramp", "init": w.init, "step": w.step}


def fit(
    initial: LogitVolume,
    truth: BinaryMask,
    loss: CompoundLossSpec,
    cfg: OptimizerConfig = OptimizerConfig(),
) -> RunRecord:
    """Gradient-descend the logits; return the full epoch trace plus metrics
    evaluated at the best-loss epoch's state (prediction thresholded at 0.5).

    The learning rate halves (by ``lr_reduce_factor``) after
    ``plateau_patience`` consecutive epochs without improvement and the loop
    stops after ``early_stop_patience`` such epochs. A non-finite loss or
    gradient aborts with a diagnostic record instead of raising.
    """
    t0 = time.perf_counter()
    theta = initial.grid.values.copy()
    lr = cfg.learning_rate
    schedule = loss.resolved_weight()
    records: list[EpochRecord] = []
    best_value = np.inf
    best_theta = theta.copy()
    best_epoch = 0
    plateau_ref = np.inf
    stall = 0
    diverged = False
    diagnostic = None

    for epoch in range(cfg.max_epochs):
        p_arr = sigmoid(theta)
        try:
            p = ProbabilityVolume(VoxelGrid(truth.shape, p_arr))
            res = compound_loss(p, truth, loss, epoch)
        except (ValueError, FloatingPointError) as exc:
            diverged = True
            diagnostic = f"epoch {epoch}: {exc}"
            break
        records.append(EpochRecord(epoch, res.value, schedule.current(epoch), lr))
        if res.value < best_value:
            best_value = res.value
            best_theta = theta.copy()
            best_epoch = epoch
        if res.value < plateau_ref - PLATEAU_TOL:
            plateau_ref = res.value
            stall = 0
        else:
            stall += 1
            if stall >= cfg.early_stop_patience:
                break
            if stall % cfg.plateau_patience == 0:
                lr *= cfg.lr_reduce_factor
        theta = theta - lr * res.grad.values * p_arr * (1.0 - p_arr)

    final = None
    if not diverged:
        p_best = ProbabilityVolume(VoxelGrid(truth.shape, sigmoid(best_theta)))
        final = evaluate(binarize(p_best, 0.5), truth)
    return RunRecord(
        epochs=tuple(records),
        final=final,
        best_epoch=best_epoch,
        loss_spec=loss,
        config=cfg,
        diverged=diverged,
        diagnostic=diagnostic,
        wall_time_s=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class AblationCell:
    phantom: str
    loss: str
    t: float
    report: MetricReport | None
    error: str | None = None


ABLATION_CSV_HEADER = "phantom,loss,t,dice,hausdorff,assd2d,status"


def ablation_csv(cells: list[AblationCell]) -> str:
    lines = [ABLATION_CSV_HEADER]
    for c in cells:
        if c.report is None:
            lines.append(f"{c.phantom},{c.loss},{c.t:g},,,,failed: {c.error}")
            continue
        r = c.report
        hd = "" if r.hausdorff_mm is None else f"{r.hausdorff_mm:.6f}"
        assd = "" if r.assd2d_mm is None else f"{r.assd2d_mm:.6f}"
        lines.append(
            f"{c.phantom},{c.loss},{c.t:g},{r.dice:.6f},{hd},{assd},ok"
        )
    return "\n".join(lines) + "\n"


def ablate(
    phantoms: list[PhantomSpec],
    losses: list[CompoundLossSpec],
    thresholds: list[float],
    cfg: OptimizerConfig = OptimizerConfig(),
) -> list[AblationCell]:
    """Cross-product of fits: each phantom, each loss, each contour-extraction
    threshold. Initial logits come from the phantom's corrupted volume. A
    failing cell is recorded and the grid continues."""
    if not phantoms or not losses or not thresholds:
        raise ValueError("phantoms, losses and thresholds must be nonempty")
    cells: list[AblationCell] = []
    for ph_spec in phantoms:
        phantom = generate(ph_spec)
        theta0 = LogitVolume.from_probabilities(phantom.corrupted)
        for loss_spec in losses:
            for t in thresholds:
                spec_t = loss_spec.with_threshold(t)
                try:
                    rec = fit(theta0, phantom.truth, spec_t, cfg)
                    if rec.diverged:
                        cells.append(AblationCell(
                            ph_spec.label, loss_spec.companion, t, None, rec.diagnostic
                        ))
                    else:
                        cells.append(AblationCell(
                            ph_spec.label, loss_spec.companion, t, rec.final
                        ))
                except (ContourDiceError, ValueError) as exc:
                    cells.append(AblationCell(
                        ph_spec.label, loss_spec.companion, t, None, str(exc)
                    ))
    return cells


def default_phantom_suite() -> list[PhantomSpec]:
    """One fuzzy blob and two folded shapes at a realistic slice anisotropy."""
    shape = GridShape(32, 32, 16, spacing=(1.56, 1.56, 3.0))
    return [
        PhantomSpec("fuzzy_blob", shape, seed=101, boundary_blur_mm=3.0,
                    noise_amplitude=0.15),
        PhantomSpec("folded_shape", shape, seed=202, fold_count=6, fold_depth=0.3,
                    boundary_blur_mm=1.5, noise_amplitude=0.1),
        PhantomSpec("folded_shape", shape, seed=303, fold_count=10, fold_depth=0.25,
                    boundary_blur_mm=1.0, noise_amplitude=0.1),
    ]


def default_ablation_grid() -> tuple[list[PhantomSpec], list[CompoundLossSpec], list[float]]:
    """The threshold-ablation layout: contour-dice and perimeter companions
    crossed with t in {0.5, 1}."""
    losses = [CompoundLossSpec(companion="contour_dice"),
              CompoundLossSpec(companion="perimeter")]
    return default_phantom_suite(), losses, [0.5, 1.0]
