"""Batch command-line interface: detect / eval / bench / fixtures-gen.

Exit codes: 0 ok, 1 config or schema problem, 2 I/O or integrity problem.
Failures print a single machine-parseable JSON line to stderr:
``{"error": "<class>", "message": "..."}`` with class one of
config | schema | io | integrity.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema

from .errors import ConfigError, IntegrityError, OvdkitError, SchemaError
from .evaluation import evaluate, load_dataset, load_detections
from .geometry import box_to_xywh
from .pipelines import VARIANTS, Pipeline, PipelineConfig, bench
from .postprocess import Detection, NmsConfig
from .providers.backbone import StubSpec
from .providers.fixtures import FixtureBundle, generate_bundle, load_fixtures
from .classify import ClassifyConfig
from .roialign import RoiAlignConfig

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "required": ["variant", "fixtures"],
    "additionalProperties": False,
    "properties": {
        "variant": {"enum": list(VARIANTS)},
        "fixtures": {"type": "string"},
        "proposals": {"type": "integer", "minimum": 1},
        "fusion": {"type": "boolean"},
        "crop_ensemble": {"type": "boolean"},
        "classifier_input_size": {"type": "integer", "minimum": 1},
        "workers": {"type": "integer", "minimum": 1},
        "detections_out": {"type": "string"},
        "nms": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "iou_threshold": {"type": "number", "minimum": 0, "maximum": 1},
                "score_threshold": {"type": "number", "minimum": 0, "maximum": 1},
                "max_detections": {"type": "integer", "minimum": 1},
            },
        },
        "classify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "temperature": {"type": "number", "exclusiveMinimum": 0},
                "crop_factors": {
                    "type": "array",
                    "items": {"type": "number", "exclusiveMinimum": 0},
                    "minItems": 1,
                },
                "background_enabled": {"type": "boolean"},
            },
        },
        "roialign": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "output_size": {"type": "integer", "minimum": 1},
                "sampling_ratio": {"type": "integer", "minimum": 1},
                "aligned": {"type": "boolean"},
            },
        },
        "bench": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "variants": {"type": "array", "items": {"enum": list(VARIANTS)}, "minItems": 1},
                "reps": {"type": "integer", "minimum": 1},
            },
        },
    },
}


def _load_run_config(path: str) -> tuple[dict, Path]:
    cfg_path = Path(path)
    try:
        cfg = json.loads(cfg_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: config is not valid JSON ({exc})") from exc
    try:
        jsonschema.validate(cfg, RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: invalid config at {where}: {exc.message}") from exc
    return cfg, cfg_path.parent


def _pipeline_config(cfg: dict, variant: str, bundle: FixtureBundle) -> PipelineConfig:
    nms = NmsConfig(**cfg.get("nms", {}))
    classify = cfg.get("classify", {}).copy()
    if "crop_factors" in classify:
        classify["crop_factors"] = tuple(classify["crop_factors"])
    roialign = RoiAlignConfig(**cfg.get("roialign", {}))
    return PipelineConfig(
        variant=variant,
        proposal_count=cfg.get("proposals", 100),
        fusion=cfg.get("fusion", True),
        crop_ensemble=cfg.get("crop_ensemble", True),
        classifier_input_size=cfg.get("classifier_input_size", bundle.backbone.input_size),
        nms=nms,
        classify=ClassifyConfig(**classify),
        roialign=roialign,
    )


def _build_pipeline(cfg: dict, variant: str, bundle: FixtureBundle) -> Pipeline:
    det = bundle.det_backbone if variant in ("vanilla", "drr") else None
    return Pipeline(
        _pipeline_config(cfg, variant, bundle),
        backbone=bundle.backbone,
        proposals=bundle.proposals,
        bank=bundle.bank,
        det_backbone=det,
    )


def _detection_rows(dets: list[Detection]) -> list[dict]:
    ordered = sorted(dets, key=lambda d: (d.image_id, -d.score, d.class_id) + d.box.key())
    return [
        {
            "image_id": d.image_id,
            "category_id": d.class_id,
            "bbox": list(box_to_xywh(d.box)),
            "score": d.score,
        }
        for d in ordered
    ]


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# -- subcommands --------------------------------------------------------------


def cmd_detect(args) -> int:
    cfg, base = _load_run_config(args.config)
    bundle = load_fixtures(base / cfg["fixtures"])
    pipeline = _build_pipeline(cfg, cfg["variant"], bundle)
    workers = args.workers if args.workers is not None else cfg.get("workers", 1)
    out = args.out or cfg.get("detections_out")
    if out is None:
        raise ConfigError("no output path: set 'detections_out' in the config or pass --out")
    dets = pipeline.run(bundle.images, workers=workers)
    _write_json(Path(out), _detection_rows(dets))
    print(
        f"wrote {len(dets)} detections for {len(bundle.images)} images to {out} "
        f"(variant={cfg['variant']}, k={pipeline.config.proposal_count}, workers={workers})"
    )
    return 0


def cmd_eval(args) -> int:
    gt, split = load_dataset(args.annotations, args.split)
    dets = load_detections(args.detections)
    report = evaluate(dets, gt, split, protocol=args.protocol)
    _write_json(Path(args.out), report.to_dict())
    print(report.to_table())
    return 0


def cmd_bench(args) -> int:
    cfg, base = _load_run_config(args.config)
    bench_cfg = cfg.get("bench", {})
    variants = bench_cfg.get("variants", list(VARIANTS))
    reps = args.reps if args.reps is not None else bench_cfg.get("reps", 3)
    if reps < 1:
        raise ConfigError(f"benchmark needs reps >= 1, got {reps}")
    bundle = load_fixtures(base / cfg["fixtures"])
    for v in ("vanilla", "drr"):
        if v in variants and bundle.det_backbone is None:
            raise ConfigError(f"variant '{v}' needs a detection backbone; the bundle manifest has no det_stub")
    pipelines = {v: _build_pipeline(cfg, v, bundle) for v in variants}
    reports = bench(pipelines, bundle.images, reps)
    _write_json(Path(args.out), [r.to_dict() for r in reports])
    print(f"{'variant':<10}{'params':>10}{'img/s':>10}   stage seconds (propose/encode/classify/postprocess)")
    for r in reports:
        s = r.stage_seconds
        print(
            f"{r.variant:<10}{r.param_count:>10}{r.images_per_sec:>10.2f}   "
            f"{s['propose']:.3f}/{s['encode']:.3f}/{s['classify']:.3f}/{s['postprocess']:.3f}"
        )
    return 0


def cmd_fixtures_gen(args) -> int:
    spec = StubSpec(input_size=args.size)
    manifest = generate_bundle(
        args.out,
        seed=args.seed,
        n_images=args.images,
        image_size=args.size,
        proposals_per_image=args.proposals,
        n_classes=args.classes,
        n_prompts=args.prompts,
        spec=spec,
    )
    print(f"wrote fixture bundle: {manifest}")
    return 0


# -- entry ---------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are config errors, not exit 2
        raise ConfigError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ovdkit", description="Open-vocabulary detection pipeline engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="run a pipeline over a fixture bundle")
    p.add_argument("--config", required=True, help="run configuration JSON")
    p.add_argument("--out", help="detections output path (overrides config)")
    p.add_argument("--workers", type=int, help="image-level thread workers (overrides config)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score detections against ground truth")
    p.add_argument("--detections", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--protocol", choices=["generalized-ap50", "lvis-groups"], default="generalized-ap50")
    p.add_argument("--out", default="metrics.json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="compare variant throughput and parameters")
    p.add_argument("--config", required=True)
    p.add_argument("--reps", type=int, help="timed passes per variant (overrides config)")
    p.add_argument("--out", default="timing.json")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("fixtures-gen", help="write a synthetic fixture bundle")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--images", type=int, default=3)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--proposals", type=int, default=12)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--prompts", type=int, default=2)
    p.set_defaults(func=cmd_fixtures_gen)
    return parser


def _fail(code: int, error_class: str, message: str) -> int:
    print(json.dumps({"error": error_class, "message": str(message)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        return _fail(1, "config", str(exc))
    except SchemaError as exc:  # includes SplitError
        return _fail(1, "schema", str(exc))
    except IntegrityError as exc:
        return _fail(2, "integrity", str(exc))
    except FileNotFoundError as exc:
        return _fail(2, "io", str(exc))
    except OSError as exc:
        return _fail(2, "io", str(exc))
    except (ValueError, KeyError, OvdkitError) as exc:
        return _fail(1, "config", str(exc))


if __name__ == "__main__":
    sys.exit(main())
