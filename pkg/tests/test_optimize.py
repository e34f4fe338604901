import numpy as np
import pytest

from contourdice import (
    BinaryMask,
    CompoundLossSpec,
    GridShape,
    LogitVolume,
    OptimizerConfig,
    PhantomSpec,
    ProbabilityVolume,
    VoxelGrid,
    ablate,
    ablation_csv,
    binarize,
    fit,
    generate,
)


def blob_truth(dims=(16, 16, 4)):
    nx, ny, nz = dims
    xs, ys, zs = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    r = (((xs - (nx - 1) / 2) / (0.35 * nx)) ** 2
         + ((ys - (ny - 1) / 2) / (0.35 * ny)) ** 2
         + ((zs - (nz - 1) / 2) / (0.4 * nz)) ** 2)
    return BinaryMask.from_array(r <= 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        OptimizerConfig(lr_reduce_factor=1.0)
    with pytest.raises(ValueError):
        OptimizerConfig(plateau_patience=10, early_stop_patience=5)


def test_truth_initialized_logits_start_optimal():
    truth = blob_truth()
    theta = np.where(truth.bits, 10.0, -10.0)
    rec = fit(LogitVolume(VoxelGrid(truth.shape, theta)), truth,
              CompoundLossSpec(), OptimizerConfig(max_epochs=40))
    first = rec.epochs[0].loss
    assert first == pytest.approx(-1.0, abs=1e-3)
    assert all(e.loss <= first + 1e-9 for e in rec.epochs)


def test_zero_logits_recover_blob_exactly():
    truth = blob_truth()
    rec = fit(LogitVolume.zeros(truth.shape), truth, CompoundLossSpec(),
              OptimizerConfig(max_epochs=500))
    assert not rec.diverged
    assert rec.final.dice == 1.0


def test_fit_is_deterministic():
    truth = blob_truth((12, 12, 4))
    spec = CompoundLossSpec(companion="contour_dice")
    cfg = OptimizerConfig(max_epochs=60)
    a = fit(LogitVolume.zeros(truth.shape), truth, spec, cfg)
    b = fit(LogitVolume.zeros(truth.shape), truth, spec, cfg)
    assert a == b  # wall time is excluded from equality
    assert [e.loss for e in a.epochs] == [e.loss for e in b.epochs]


def test_best_loss_is_monotone_nonincreasing():
    truth = blob_truth((12, 12, 4))
    rec = fit(LogitVolume.zeros(truth.shape), truth,
              CompoundLossSpec(companion="perimeter"), OptimizerConfig(max_epochs=80))
    best = np.inf
    for e in rec.epochs:
        best = min(best, e.loss)
        assert best <= e.loss
    assert rec.epochs[rec.best_epoch].loss == min(e.loss for e in rec.epochs)


def test_lr_trace_nonincreasing_and_weight_ramp():
    truth = blob_truth((12, 12, 4))
    spec = CompoundLossSpec(companion="boundary")  # ramp schedule by default
    rec = fit(LogitVolume.zeros(truth.shape), truth, spec, OptimizerConfig(max_epochs=50))
    lrs = [e.lr for e in rec.epochs]
    assert all(b <= a for a, b in zip(lrs, lrs[1:]))
    for e in rec.epochs:
        assert e.weight == pytest.approx(0.01 + 0.01 * e.epoch, abs=1e-15)


def test_final_report_at_best_epoch_state():
    truth = blob_truth((12, 12, 4))
    rec = fit(LogitVolume.zeros(truth.shape), truth, CompoundLossSpec(),
              OptimizerConfig(max_epochs=200))
    assert rec.final is not None
    assert rec.final.dice == 1.0
    assert rec.final.hausdorff_mm == 0.0


def test_contour_dice_companion_not_worse_than_plain_dice():
    shape = GridShape(24, 24, 16, spacing=(1.56, 1.56, 3.0))
    phantom = generate(PhantomSpec("fuzzy_blob", shape, seed=11,
                                   boundary_blur_mm=3.0, noise_amplitude=0.15))
    theta0 = LogitVolume.from_probabilities(phantom.corrupted)
    cfg = OptimizerConfig(max_epochs=150)
    with_cd = fit(theta0, phantom.truth, CompoundLossSpec(companion="contour_dice"), cfg)
    without = fit(theta0, phantom.truth, CompoundLossSpec(), cfg)
    assert with_cd.final.contour_dice >= without.final.contour_dice - 0.02


def test_ablate_single_cell_equals_direct_fit():
    shape = GridShape(20, 20, 16, spacing=(1.0, 1.0, 2.0))
    ph = PhantomSpec("fuzzy_blob", shape, seed=5, boundary_blur_mm=2.0,
                     noise_amplitude=0.1)
    loss = CompoundLossSpec(companion="contour_dice")
    cfg = OptimizerConfig(max_epochs=40)
    cells = ablate([ph], [loss], [0.5], cfg)
    assert len(cells) == 1
    phantom = generate(ph)
    direct = fit(LogitVolume.from_probabilities(phantom.corrupted), phantom.truth,
                 loss.with_threshold(0.5), cfg)
    assert cells[0].report == direct.final
    assert cells[0].error is None


def test_ablate_grid_layout_and_csv():
    shape = GridShape(16, 16, 16, spacing=(1.56, 1.56, 3.0))
    phantoms = [PhantomSpec("fuzzy_blob", shape, seed=1, noise_amplitude=0.1)]
    losses = [CompoundLossSpec(companion="contour_dice"),
              CompoundLossSpec(companion="perimeter")]
    cells = ablate(phantoms, losses, [0.5, 1.0], OptimizerConfig(max_epochs=30))
    assert [(c.loss, c.t) for c in cells] == [
        ("contour_dice", 0.5), ("contour_dice", 1.0),
        ("perimeter", 0.5), ("perimeter", 1.0),
    ]
    csv = ablation_csv(cells)
    lines = csv.strip().splitlines()
    assert lines[0] == "phantom,loss,t,dice,hausdorff,assd2d,status"
    assert len(lines) == 5
    assert all(ln.endswith("ok") for ln in lines[1:])


def test_ablate_validates_empty_lists():
    with pytest.raises(ValueError):
        ablate([], [], [0.5])


def test_ablate_marks_failed_cells_and_continues(monkeypatch):
    import contourdice.optimize as opt

    real_fit = opt.fit
    calls = {"n": 0}

    def flaky_fit(initial, truth, loss, cfg):
        calls["n"] += 1
        if calls["n"] == 1:
            raise ValueError("injected failure")
        return real_fit(initial, truth, loss, cfg)

    monkeypatch.setattr(opt, "fit", flaky_fit)
    shape = GridShape(16, 16, 16)
    ph = PhantomSpec("fuzzy_blob", shape, seed=2, noise_amplitude=0.1)
    cells = opt.ablate([ph], [CompoundLossSpec(companion="perimeter")], [0.5, 1.0],
                       OptimizerConfig(max_epochs=10))
    assert len(cells) == 2
    assert cells[0].report is None and "injected failure" in cells[0].error
    assert cells[1].report is not None and cells[1].error is None
    csv = ablation_csv(cells)
    assert "failed: injected failure" in csv


def test_divergence_is_reported_not_raised():
    truth = blob_truth((8, 8, 2))
    # an absurd learning rate drives the logits to overflow into NaN
    cfg = OptimizerConfig(learning_rate=1e300, max_epochs=30)
    rec = fit(LogitVolume.zeros(truth.shape), truth, CompoundLossSpec(), cfg)
    if rec.diverged:
        assert rec.final is None
        assert rec.diagnostic
    else:
        assert rec.final is not None


def test_run_record_serialization():
    truth = blob_truth((8, 8, 2))
    rec = fit(LogitVolume.zeros(truth.shape), truth, CompoundLossSpec(),
              OptimizerConfig(max_epochs=10))
    obj = rec.to_json_obj()
    assert "wall_time_s" not in obj
    assert len(obj["epochs"]) == len(rec.epochs)
    obj2 = rec.to_json_obj(include_wall_time=True)
    assert "wall_time_s" in obj2


def test_initial_probabilities_round_trip_through_logits():
    rng = np.random.default_rng(2)
    vals = rng.uniform(0.05, 0.95, (8, 8, 2))
    p = ProbabilityVolume.from_array(vals)
    back = LogitVolume.from_probabilities(p).to_probabilities()
    assert np.allclose(back.values, vals, atol=1e-12)
    m = binarize(back, 0.5)
    assert np.array_equal(m.bits, vals >= 0.5)
