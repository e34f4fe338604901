"""Command-line driver tying the kernels into reproducible runs.

Exit codes: 0 success, 1 domain error (bad data, bad file contents),
2 usage error. Diagnostics go to stderr; data goes to declared output
files or stdout. Outputs embed no timing unless --timestamp is given,
so identical inputs produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, ContourDiceError
from .io import load_volume, save_volume
from .losses import (
    COMPANION_NAMES,
    CompoundLossSpec,
    ContourLossConfig,
    LOSS_NAMES,
    WeightSchedule,
    evaluate_loss,
    gradient_check,
)
from .metrics import MetricReport, evaluate
from .morphology import BandSpec, ContourSpec, StructuringElement, extract_band, extract_contour
from .optimize import (
    OptimizerConfig,
    LogitVolume,
    ablate,
    ablation_csv,
    default_ablation_grid,
    fit,
)
from .synth import PhantomSpec, generate
from .volume import BinaryMask, GridShape, ProbabilityVolume, VoxelGrid


# ---------------------------------------------------------------------------
# config file parsing (JSON, with error messages carrying the offending path)
# ---------------------------------------------------------------------------

def _load_json(path: str) -> object:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}")


def _as_obj(val, path: str) -> dict:
    if not isinstance(val, dict):
        raise ConfigError(f"{path}: expected an object")
    return val


def _num(obj: dict, key: str, path: str, default=None, required=False):
    if key not in obj:
        if required:
            raise ConfigError(f"{path}.{key}: required")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    return v


def _int(obj: dict, key: str, path: str, default=None, required=False):
    v = _num(obj, key, path, default, required)
    if v is None:
        return None
    if isinstance(v, float) and not v.is_integer():
        raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
    return int(v)


def _triple(obj: dict, key: str, path: str, required=True):
    if key not in obj:
        if required:
            raise ConfigError(f"{path}.{key}: required")
        return None
    v = obj[key]
    if not isinstance(v, list) or len(v) != 3:
        raise ConfigError(f"{path}.{key}: expected a 3-element list")
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ConfigError(f"{path}.{key}[{i}]: expected a number, got {x!r}")
    return v


def parse_phantom_spec(val: object, path: str = "$") -> PhantomSpec:
    obj = _as_obj(val, path)
    kind = obj.get("kind")
    if kind not in ("fuzzy_blob", "folded_shape"):
        raise ConfigError(f"{path}.kind: expected fuzzy_blob or folded_shape, got {kind!r}")
    dims = _triple(obj, "dims", path)
    spacing = _triple(obj, "spacing_mm", path, required=False) or [1.0, 1.0, 1.0]
    seed = _int(obj, "seed", path, required=True)
    try:
        shape = GridShape(int(dims[0]), int(dims[1]), int(dims[2]),
                          spacing=tuple(float(s) for s in spacing))
        return PhantomSpec(
            kind=kind,
            shape=shape,
            seed=seed,
            fold_count=_int(obj, "fold_count", path, 0),
            fold_depth=float(_num(obj, "fold_depth", path, 0.25)),
            boundary_blur_mm=float(_num(obj, "boundary_blur_mm", path, 2.0)),
            noise_amplitude=float(_num(obj, "noise_amplitude", path, 0.1)),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}")


def _parse_se(obj: dict, path: str) -> StructuringElement:
    kind = obj.get("se", "square3x3_2d")
    if kind not in ("square3x3_2d", "cross3x3_2d", "cube3x3x3_3d"):
        raise ConfigError(f"{path}.se: unknown structuring element {kind!r}")
    mode = "volumetric" if kind == "cube3x3x3_3d" else "per_slice"
    return StructuringElement(kind, mode)


def parse_contour_config(val: object, path: str = "$") -> ContourLossConfig:
    obj = _as_obj(val, path)
    se = _parse_se(obj, path)
    iters = _int(obj, "contour_iterations", path, 1)
    band_val = obj.get("band", "same_as_contour")
    if band_val == "same_as_contour":
        band = None
    else:
        bobj = _as_obj(band_val, f"{path}.band")
        band = BandSpec(
            se=se,
            dilate_iterations=_int(bobj, "dilate", f"{path}.band", 1),
            erode_iterations=_int(bobj, "erode", f"{path}.band", 1),
        )
    try:
        return ContourLossConfig(
            t=float(_num(obj, "t", path, 1.0)),
            contour=ContourSpec(se=se, erosion_iterations=iters),
            band=band,
            epsilon=float(_num(obj, "epsilon", path, 1e-5)),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}")


def parse_loss_spec(val: object, path: str = "$") -> CompoundLossSpec:
    obj = _as_obj(val, path)
    companion = obj.get("companion", "none")
    if companion not in COMPANION_NAMES:
        raise ConfigError(f"{path}.companion: expected one of {COMPANION_NAMES}, got {companion!r}")
    weight = None
    if "weight" in obj:
        wobj = _as_obj(obj["weight"], f"{path}.weight")
        kind = wobj.get("kind")
        if kind == "constant":
            weight = WeightSchedule.constant(float(_num(wobj, "gamma", f"{path}.weight", required=True)))
        elif kind == "ramp":
            weight = WeightSchedule.ramp(
                float(_num(wobj, "init", f"{path}.weight", 0.01)),
                float(_num(wobj, "step", f"{path}.weight", 0.01)),
            )
        else:
            raise ConfigError(f"{path}.weight.kind: expected constant or ramp, got {kind!r}")
    contour = parse_contour_config(obj, path) if _has_contour_keys(obj) else None
    try:
        return CompoundLossSpec(
            companion=companion,
            weight=weight,
            contour=contour,
            epsilon=float(_num(obj, "epsilon", path, 1e-5)),
            alpha=float(_num(obj, "alpha", path, 2.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}")


def _has_contour_keys(obj: dict) -> bool:
    return any(k in obj for k in ("t", "contour_iterations", "band", "se"))


def parse_optimizer_config(val: object, path: str = "$") -> OptimizerConfig:
    obj = _as_obj(val, path)
    try:
        return OptimizerConfig(
            learning_rate=float(_num(obj, "learning_rate", path, 1.0)),
            lr_reduce_factor=float(_num(obj, "lr_reduce_factor", path, 0.5)),
            plateau_patience=_int(obj, "plateau_patience", path, 10),
            early_stop_patience=_int(obj, "early_stop_patience", path, 50),
            max_epochs=_int(obj, "max_epochs", path, 500),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}")


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------

def _load_mask(path: str) -> BinaryMask:
    vol = load_volume(path)
    if not isinstance(vol, BinaryMask):
        raise ContourDiceError(f"{path}: expected a binary mask (u8 payload), got a float grid")
    return vol


def _load_probabilities(path: str) -> ProbabilityVolume:
    vol = load_volume(path)
    if isinstance(vol, BinaryMask):
        return ProbabilityVolume(VoxelGrid(vol.shape, vol.bits.astype(np.float64)))
    try:
        return ProbabilityVolume(vol)
    except ValueError as exc:
        raise ContourDiceError(f"{path}: {exc}")


def _write_report(report: MetricReport, out: str) -> None:
    if out.endswith(".json"):
        Path(out).write_text(json.dumps(report.to_json_obj(), indent=2) + "\n", encoding="utf-8")
    elif out.endswith(".csv"):
        Path(out).write_text(report.csv_header() + "\n" + report.to_csv_row() + "\n", encoding="utf-8")
    else:
        raise ContourDiceError(f"{out}: report extension must be .csv or .json")


def _cmd_synth(args) -> int:
    spec = parse_phantom_spec(_load_json(args.spec))
    phantom = generate(spec)
    save_volume(phantom.truth, args.out_truth)
    save_volume(phantom.corrupted.grid, args.out_prob)
    return 0


def _cmd_eval(args) -> int:
    pred = _load_mask(args.pred)
    truth = _load_mask(args.truth)
    report = evaluate(
        pred, truth,
        contour_spec=ContourSpec(erosion_iterations=args.contour_iters),
        percentile=args.percentile,
    )
    _write_report(report, args.out)
    return 0


def _cmd_loss(args) -> int:
    p = _load_probabilities(args.pred)
    g = _load_mask(args.truth)
    contour = None
    epsilon, alpha = 1e-5, 2.0
    if args.config:
        obj = _load_json(args.config)
        contour = parse_contour_config(obj)
        epsilon = float(_as_obj(obj, "$").get("epsilon", 1e-5))
        alpha = float(_as_obj(obj, "$").get("alpha", 2.0))
    res = evaluate_loss(args.name, p, g, contour=contour, epsilon=epsilon, alpha=alpha)
    out = {"name": args.name, "value": res.value}
    Path(args.out).write_text(json.dumps(out, indent=2) + "\n", encoding="utf-8")
    if args.grad_out:
        save_volume(res.grad, args.grad_out)
    return 0


def _cmd_grad_check(args) -> int:
    p = _load_probabilities(args.pred)
    g = _load_mask(args.truth)
    contour = None
    if args.config:
        contour = parse_contour_config(_load_json(args.config))
    res = gradient_check(
        args.name, p, g, samples=args.samples, h=args.h, seed=args.seed, contour=contour
    )
    print(json.dumps({
        "name": res.name,
        "max_rel_err": res.max_rel_err,
        "samples": res.n_checked,
        "passed": res.passed,
    }))
    return 0 if res.passed else 1


def _cmd_contour(args) -> int:
    mask = _load_mask(args.input)
    kind = args.se
    mode = "volumetric" if kind == "cube3x3x3_3d" else "per_slice"
    se = StructuringElement(kind, mode)
    if args.band:
        try:
            d_str, e_str = args.band.split(":")
            d_iters, e_iters = int(d_str), int(e_str)
        except ValueError:
            raise ContourDiceError(f"--band must look like D:E (got {args.band!r})")
        out = extract_band(mask, BandSpec(se=se, dilate_iterations=d_iters,
                                          erode_iterations=e_iters))
    else:
        out = extract_contour(mask, ContourSpec(se=se, erosion_iterations=args.iters))
    save_volume(out, args.out)
    return 0


def _cmd_fit(args) -> int:
    phantom = generate(parse_phantom_spec(_load_json(args.phantom)))
    loss_spec = parse_loss_spec(_load_json(args.loss))
    cfg = parse_optimizer_config(_load_json(args.opt)) if args.opt else OptimizerConfig()
    theta0 = LogitVolume.from_probabilities(phantom.corrupted)
    rec = fit(theta0, phantom.truth, loss_spec, cfg)
    obj = rec.to_json_obj(include_wall_time=args.timestamp)
    Path(args.out).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
    return 0 if not rec.diverged else 1


def _cmd_ablate(args) -> int:
    if args.grid:
        obj = _as_obj(_load_json(args.grid), "$")
        phantoms = [parse_phantom_spec(v, f"$.phantoms[{i}]")
                    for i, v in enumerate(obj.get("phantoms", []))]
        losses = [parse_loss_spec(v, f"$.losses[{i}]")
                  for i, v in enumerate(obj.get("losses", []))]
        thresholds = obj.get("thresholds", [0.5, 1.0])
        if not isinstance(thresholds, list) or not all(
                isinstance(t, (int, float)) and not isinstance(t, bool) for t in thresholds):
            raise ConfigError("$.thresholds: expected a list of numbers")
        cfg = (parse_optimizer_config(obj["opt"], "$.opt")
               if "opt" in obj else OptimizerConfig())
        if not phantoms or not losses:
            raise ConfigError("$: grid needs nonempty phantoms and losses")
    else:
        phantoms, losses, thresholds = default_ablation_grid()
        cfg = OptimizerConfig()
    cells = ablate(phantoms, losses, [float(t) for t in thresholds], cfg)
    Path(args.out).write_text(ablation_csv(cells), encoding="utf-8")
    return 0


def _read_table(path: str) -> tuple[list[str], list[list[str]]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ContourDiceError(f"{path}: empty table")
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    return header, rows


def _cmd_report(args) -> int:
    header, rows = _read_table(args.input)
    if args.format == "md":
        out = ["| " + " | ".join(header) + " |",
               "|" + "|".join("---" for _ in header) + "|"]
        for row in rows:
            out.append("| " + " | ".join(row) + " |")
        Path(args.out).write_text("\n".join(out) + "\n", encoding="utf-8")
        return 0
    Path(args.out).write_text(_grouped_bar_svg(header, rows), encoding="utf-8")
    return 0


def _grouped_bar_svg(header: list[str], rows: list[list[str]]) -> str:
    """Two panels of grouped bars (dice and assd2d), mean with a std whisker
    per (loss, t) group, aggregated over phantoms."""
    try:
        i_loss = header.index("loss")
        i_t = header.index("t")
        i_dice = header.index("dice")
        i_assd = header.index("assd2d")
    except ValueError:
        raise ContourDiceError("table must have loss,t,dice,assd2d columns")
    groups: dict[tuple[str, str], dict[str, list[float]]] = {}
    order: list[tuple[str, str]] = []
    for row in rows:
        key = (row[i_loss], row[i_t])
        if key not in groups:
            groups[key] = {"dice": [], "assd2d": []}
            order.append(key)
        if row[i_dice]:
            groups[key]["dice"].append(float(row[i_dice]))
        if row[i_assd]:
            groups[key]["assd2d"].append(float(row[i_assd]))

    panel_w, panel_h, margin = 380, 260, 50
    width = 2 * panel_w + 3 * margin
    height = panel_h + 2 * margin + 40
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for panel, (metric, color) in enumerate((("dice", "#4caf50"), ("assd2d", "#2196f3"))):
        x0 = margin + panel * (panel_w + margin)
        y0 = margin
        vals = [(k, groups[k][metric]) for k in order if groups[k][metric]]
        vmax = max((np.mean(v) + (np.std(v) if len(v) > 1 else 0.0) for _, v in vals),
                   default=1.0)
        vmax = max(vmax, 1e-9)
        if metric == "dice":
            vmax = max(vmax, 1.0)
        parts.append(
            f'<text x="{x0 + panel_w / 2:.1f}" y="{y0 - 14}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{metric}</text>'
        )
        parts.append(
            f'<line x1="{x0}" y1="{y0 + panel_h}" x2="{x0 + panel_w}" '
            f'y2="{y0 + panel_h}" stroke="black"/>'
        )
        n = max(len(vals), 1)
        slot = panel_w / n
        bar_w = slot * 0.6
        for i, (key, v) in enumerate(vals):
            mean = float(np.mean(v))
            std = float(np.std(v)) if len(v) > 1 else 0.0
            bx = x0 + i * slot + (slot - bar_w) / 2
            bh = panel_h * mean / vmax
            by = y0 + panel_h - bh
            parts.append(
                f'<rect x="{bx:.1f}" y="{by:.1f}" width="{bar_w:.1f}" '
                f'height="{bh:.1f}" fill="{color}"/>'
            )
            if std > 0:
                cx = bx + bar_w / 2
                y_hi = y0 + panel_h - panel_h * min(mean + std, vmax) / vmax
                y_lo = y0 + panel_h - panel_h * max(mean - std, 0.0) / vmax
                parts.append(
                    f'<line x1="{cx:.1f}" y1="{y_hi:.1f}" x2="{cx:.1f}" '
                    f'y2="{y_lo:.1f}" stroke="black" stroke-width="1.5"/>'
                )
            label = f"{key[0]} t={key[1]}"
            parts.append(
                f'<text x="{bx + bar_w / 2:.1f}" y="{y0 + panel_h + 16}" '
                f'text-anchor="middle" font-family="sans-serif" font-size="9">{label}</text>'
            )
            parts.append(
                f'<text x="{bx + bar_w / 2:.1f}" y="{by - 4:.1f}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="9">{mean:.3f}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contourdice",
        description="Segmentation-boundary losses, metrics and phantom studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a phantom (truth mask + corrupted probabilities)")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-truth", required=True)
    p.add_argument("--out-prob", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("eval", help="compute metrics between two masks")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--contour-iters", type=int, default=1)
    p.add_argument("--percentile", type=float, default=100.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("loss", help="evaluate one loss on a probability volume")
    p.add_argument("--name", required=True, choices=LOSS_NAMES)
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--grad-out")
    p.set_defaults(func=_cmd_loss)

    p = sub.add_parser("grad-check", help="verify a loss gradient against finite differences")
    p.add_argument("--name", required=True, choices=LOSS_NAMES)
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--h", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_grad_check)

    p = sub.add_parser("contour", help="extract a contour or offset band from a mask")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--iters", type=int, default=1)
    p.add_argument("--band", help="dilate:erode iteration counts, e.g. 1:1")
    p.add_argument("--se", default="square3x3_2d",
                   choices=["square3x3_2d", "cross3x3_2d", "cube3x3x3_3d"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_contour)

    p = sub.add_parser("fit", help="optimize logits against a phantom's ground truth")
    p.add_argument("--phantom", required=True)
    p.add_argument("--loss", required=True)
    p.add_argument("--opt")
    p.add_argument("--out", required=True)
    p.add_argument("--timestamp", action="store_true",
                   help="embed wall time in the output")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("ablate", help="run the loss-by-threshold study grid")
    p.add_argument("--grid", help="grid JSON; omitted runs the default study grid")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("report", help="render an ablation table as markdown or SVG")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", required=True, choices=["md", "svg"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (ContourDiceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
