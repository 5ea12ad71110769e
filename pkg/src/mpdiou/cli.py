"""Command-line front end.

Machine-readable JSON goes to stdout, diagnostics to stderr.  Exit
codes: 0 success, 1 runtime or verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import BoxError, SchemaError, VerificationFailure
from .geometry import BBox, ImageDims, canonicalize
from .losses import LossSpec, fd_gradient, gradient, loss
from .metrics import MetricKind, compute
from .simulator import (
    FAMILIES,
    ConvergenceRecord,
    RunConfig,
    export_records,
    generate_suite,
    run_regression,
)
from .theorem import Report, build_instance, verify_bounds, verify_discrimination, verify_equalities
from .evaluator import load_dataset, summarize, summary_to_csv


def _parse_box(text: str, flag: str, parser: argparse.ArgumentParser) -> BBox:
    parts = text.split(",")
    if len(parts) != 4:
        parser.error(f"{flag} expects x1,y1,x2,y2")
    try:
        return canonicalize([float(p) for p in parts])
    except (ValueError, BoxError):
        parser.error(f"{flag} expects four finite numbers")


def _parse_img(text: str, parser: argparse.ArgumentParser) -> ImageDims:
    parts = text.split(",")
    if len(parts) != 2:
        parser.error("--img expects w,h")
    try:
        return ImageDims(float(parts[0]), float(parts[1]))
    except ValueError:
        parser.error("--img expects two positive numbers")


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _metric_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--kind", required=True, choices=[k.value for k in MetricKind])
    sub.add_argument("--gt", required=True, metavar="x1,y1,x2,y2")
    sub.add_argument("--prd", required=True, metavar="x1,y1,x2,y2")
    sub.add_argument("--img", metavar="w,h")


def _resolve_metric_args(args, parser) -> tuple[MetricKind, BBox, BBox, ImageDims | None]:
    kind = MetricKind(args.kind)
    if kind.needs_image and args.img is None:
        parser.error("--img is required for mpdiou")
    if not kind.needs_image and args.img is not None:
        parser.error(f"--img is not accepted for {kind.value}")
    gt = _parse_box(args.gt, "--gt", parser)
    prd = _parse_box(args.prd, "--prd", parser)
    img = _parse_img(args.img, parser) if args.img else None
    return kind, gt, prd, img


def cmd_metric(args, parser) -> int:
    kind, gt, prd, img = _resolve_metric_args(args, parser)
    result = compute(kind, gt, prd, img)
    _emit({"kind": kind.value, "value": result.value, "terms": result.terms})
    return 0


def cmd_loss(args, parser) -> int:
    kind, gt, prd, img = _resolve_metric_args(args, parser)
    value = loss(LossSpec(kind, img), gt, prd)
    _emit({"kind": kind.value, "loss": value})
    return 0


def cmd_grad(args, parser) -> int:
    kind, gt, prd, img = _resolve_metric_args(args, parser)
    spec = LossSpec(kind, img)
    grad = gradient(spec, gt, prd)
    payload = {"kind": kind.value, "gradient": asdict(grad)}
    if args.check:
        payload["finite_difference"] = asdict(fd_gradient(spec, gt, prd))
    _emit(payload)
    return 0


def _random_theorem_report(samples: int, seed: int, img: ImageDims) -> Report:
    rng = np.random.default_rng(seed)
    report = Report(suite="theorem", passed=True)
    for i in range(samples):
        k = rng.uniform(1.0, 10.0)
        if k <= 1.0:
            continue
        max_w = img.w / k
        max_h = img.h / k
        bw = rng.uniform(0.1 * max_w, 0.95 * max_w)
        bh = rng.uniform(0.1 * max_h, 0.95 * max_h)
        xc = rng.uniform(k * bw / 2, img.w - k * bw / 2)
        yc = rng.uniform(k * bh / 2, img.h - k * bh / 2)
        inst = build_instance((xc, yc), (bw, bh), k, img)
        eq = verify_equalities(inst)
        disc = verify_discrimination(inst)
        if i == 0:
            report.checks.extend(eq.checks + disc.checks)
    return report


def cmd_verify(args, parser) -> int:
    if args.samples <= 0:
        parser.error("--samples must be positive")
    img = _parse_img(args.img, parser)
    try:
        if args.suite == "theorem":
            report = _random_theorem_report(args.samples, args.seed, img)
        else:
            report = verify_bounds(args.samples, img, args.seed)
    except VerificationFailure as exc:
        _emit(exc.report.to_dict() if exc.report else {"passed": False})
        print(f"verification failed: {exc}", file=sys.stderr)
        return 1
    _emit(report.to_dict())
    return 0


def _load_sim_config(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read config: {exc}", "")
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", "")
    if not isinstance(raw, dict):
        raise SchemaError("top level must be an object", "")
    img = raw.get("img")
    if not (isinstance(img, list) and len(img) == 2):
        raise SchemaError("expected [w, h]", "/img")
    families = raw.get("families")
    if not isinstance(families, list) or not families:
        raise SchemaError("expected a non-empty list", "/families")
    for i, fam in enumerate(families):
        if fam not in FAMILIES:
            raise SchemaError(f"unknown family {fam!r}", f"/families/{i}")
    kinds = raw.get("kinds")
    if not isinstance(kinds, list) or not kinds:
        raise SchemaError("expected a non-empty list", "/kinds")
    for i, kind in enumerate(kinds):
        try:
            MetricKind(kind)
        except ValueError:
            raise SchemaError(f"unknown kind {kind!r}", f"/kinds/{i}")
    if not isinstance(raw.get("n_cases"), int) or raw["n_cases"] <= 0:
        raise SchemaError("expected a positive integer", "/n_cases")
    if not isinstance(raw.get("seed"), int):
        raise SchemaError("expected an integer", "/seed")
    run = raw.get("run", {})
    if not isinstance(run, dict):
        raise SchemaError("expected an object", "/run")
    return raw


def _iteration_stats(records: list[ConvergenceRecord]) -> dict:
    reached = [r.iters_to_threshold for r in records if r.iters_to_threshold is not None]
    return {
        "cases": len(records),
        "reached_iou_threshold": len(reached),
        "mean_iters_to_threshold": (sum(reached) / len(reached)) if reached else None,
        "max_iters_to_threshold": max(reached) if reached else None,
        "diverged": sum(1 for r in records if r.diverged),
        "mean_final_iou": sum(r.final_iou for r in records) / len(records),
    }


def cmd_simulate(args, parser) -> int:
    cfg = _load_sim_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    img = ImageDims(float(cfg["img"][0]), float(cfg["img"][1]))
    run_kwargs = cfg.get("run", {})
    summary: dict = {"families": {}}
    for family in cfg["families"]:
        suite = generate_suite(family, cfg["n_cases"], img, cfg["seed"])
        fam_stats = {}
        for kind_name in cfg["kinds"]:
            kind = MetricKind(kind_name)
            run_cfg = RunConfig(kind=kind, seed=cfg["seed"], **run_kwargs)
            records = run_regression(suite, run_cfg)
            export_records(records, out / f"{family}_{kind.value}.csv")
            fam_stats[kind.value] = _iteration_stats(records)
        summary["families"][family] = fam_stats
        # Convergence-speed ranking; the expectation is that mpdiou is
        # fastest or tied, and a contrary outcome is surfaced rather
        # than hidden.
        if "mpdiou" in fam_stats:
            ranked = sorted(
                (
                    (stats["mean_iters_to_threshold"], kind_name)
                    for kind_name, stats in fam_stats.items()
                    if stats["mean_iters_to_threshold"] is not None
                ),
            )
            summary["families"][family]["_ranking"] = [name for _, name in ranked]
            mp_mean = fam_stats["mpdiou"]["mean_iters_to_threshold"]
            summary["families"][family]["_mpdiou_fastest_or_tied"] = (
                mp_mean is not None and bool(ranked) and ranked[0][0] >= mp_mean
            )
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _emit(summary)
    return 0


def cmd_evaluate(args, parser) -> int:
    ds = load_dataset(args.data)
    summary = summarize(ds, MetricKind(args.metric))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(summary_to_csv(summary))
    _emit(summary.to_dict())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpdiou",
        description="Box-similarity metrics, losses, verification, simulation, "
        "and detection evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metric", help="compute a similarity metric")
    _metric_args(p)
    p.set_defaults(fn=cmd_metric)

    p = sub.add_parser("loss", help="compute 1 - metric")
    _metric_args(p)
    p.set_defaults(fn=cmd_loss)

    p = sub.add_parser("grad", help="analytic loss gradient w.r.t. the prediction")
    _metric_args(p)
    p.add_argument("--check", action="store_true", help="also print the FD gradient")
    p.set_defaults(fn=cmd_grad)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", required=True, choices=["theorem", "bounds"])
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--img", default="640,480", metavar="w,h")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("simulate", help="run the regression simulator")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("evaluate", help="evaluate a detection dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--metric", default="iou", choices=["iou", "mpdiou"])
    p.add_argument("--csv", help="also write the summary as CSV to this path")
    p.set_defaults(fn=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args, parser)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BoxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
