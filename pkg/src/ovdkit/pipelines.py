"""The three detection pipeline assemblies and the throughput benchmark.

* ``vanilla``   crop each proposal (tight and expanded), resize, encode with
                the full backbone, classify by cosine similarity.
* ``drr``       separate proposal and classification backbones: one whole-image
                encoding, RoIAlign per proposal, tail-stage head encoding.
* ``crr``       the drr flow over a single shared backbone, so parameters are
                counted (and proposal-side compute paid) once.

Pipelines are deterministic end to end for fixed providers and config; images
may be processed concurrently and results are keyed/sorted by image id so the
output is independent of completion order.
"""

from __future__ import annotations

import dataclasses
import gc
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from time import perf_counter
from typing import Mapping

import numpy as np

from . import _kernels
from .classify import ClassifyConfig, EmbeddingBank, class_scores, ensemble_embeddings
from .errors import ConfigError, DegenerateBoxError
from .geometry import ImageExtent, clip_box, expand_box
from .postprocess import Detection, NmsConfig, fuse_scores, per_class_nms, sigmoid
from .providers.backbone import StagedBackbone
from .providers.proposals import ProposalProvider
from .roialign import RoiAlignConfig, roi_align
from .tensor import Image, crop, resize_bilinear

VARIANTS = ("vanilla", "drr", "crr")


@dataclass(frozen=True)
class PipelineConfig:
    variant: str
    proposal_count: int = 100
    fusion: bool = True
    crop_ensemble: bool = True
    classifier_input_size: int = 224
    nms: NmsConfig = NmsConfig()
    classify: ClassifyConfig = ClassifyConfig()
    roialign: RoiAlignConfig = RoiAlignConfig()

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant '{self.variant}', expected one of {VARIANTS}")
        if self.proposal_count < 1:
            raise ConfigError(f"proposal_count must be >= 1, got {self.proposal_count}")
        if self.classifier_input_size < 1:
            raise ConfigError(f"classifier_input_size must be >= 1, got {self.classifier_input_size}")


@dataclass
class Trace:
    """Wall time per stage plus invocation counters for the classification encoder."""

    stage_seconds: dict[str, float] = field(
        default_factory=lambda: {"propose": 0.0, "encode": 0.0, "classify": 0.0, "postprocess": 0.0}
    )
    encoder_calls: dict[str, int] = field(default_factory=lambda: {"full": 0, "head": 0, "crop": 0})
    det_full_calls: int = 0


@contextmanager
def _timed(trace: Trace, stage: str):
    t0 = perf_counter()
    try:
        yield
    finally:
        trace.stage_seconds[stage] += perf_counter() - t0


class Pipeline:
    """Immutable assembly of providers, bank, and config for one variant."""

    def __init__(
        self,
        config: PipelineConfig,
        backbone: StagedBackbone,
        proposals: ProposalProvider,
        bank: EmbeddingBank,
        det_backbone: StagedBackbone | None = None,
    ):
        if bank.dim != backbone.embed_dim:
            raise ConfigError(f"bank dimension {bank.dim} does not match backbone embedding dimension {backbone.embed_dim}")
        if config.variant == "vanilla":
            if backbone.input_size != config.classifier_input_size:
                raise ConfigError(
                    f"classifier input size {config.classifier_input_size} does not match "
                    f"backbone input size {backbone.input_size}"
                )
            if config.crop_ensemble and len(config.classify.crop_factors) < 2:
                raise ConfigError("crop ensemble needs two crop factors")
        if config.variant == "crr" and det_backbone is not None:
            raise ConfigError("the coupled variant shares one backbone; no separate detection backbone allowed")
        self.config = config
        self.backbone = backbone
        self.det_backbone = det_backbone
        self.proposals = proposals
        self.bank = bank

    @property
    def param_count(self) -> int:
        """Parameters of all backbones this assembly deploys at inference."""
        total = self.backbone.param_count
        if self.det_backbone is not None:
            total += self.det_backbone.param_count
        return total

    # -- per-image flows -----------------------------------------------------

    def detect_image(self, image_id: int, image: Image, trace: Trace | None = None) -> list[Detection]:
        trace = trace if trace is not None else Trace()
        with _timed(trace, "propose"):
            if self.det_backbone is not None:
                # the proposal side runs its own backbone at inference; its
                # output is replayed, but the compute is part of the budget
                self.det_backbone.encode_full(image)
                trace.det_full_calls += 1
            props = self.proposals.top_k(image_id, self.config.proposal_count)
        if self.config.variant == "vanilla":
            dets = self._vanilla_detections(image_id, image, props, trace)
        else:
            dets = self._roi_detections(image_id, image, props, trace)
        with _timed(trace, "postprocess"):
            return per_class_nms(dets, self.config.nms)

    def _vanilla_detections(self, image_id, image, props, trace) -> list[Detection]:
        cfg = self.config
        size = cfg.classifier_input_size
        extent = ImageExtent(image.width, image.height)
        factors = cfg.classify.crop_factors
        dets = []
        for p in props:
            box = clip_box(p.box, extent)
            with _timed(trace, "encode"):
                try:
                    tight = expand_box(box, factors[0], extent)
                    e1 = self._encode_crop(resize_bilinear(crop(image, tight), size, size), trace)
                except DegenerateBoxError:
                    continue
                emb = e1
                if cfg.crop_ensemble:
                    try:
                        wide = expand_box(box, factors[1], extent)
                        e2 = self._encode_crop(resize_bilinear(crop(image, wide), size, size), trace)
                        emb = ensemble_embeddings(e1, e2)
                    except DegenerateBoxError:
                        emb = e1  # expanded crop clipped away: fall back to the tight crop
            det = self._classify_region(image_id, box, p.objectness, emb, trace)
            if det is not None:
                dets.append(det)
        return dets

    def _roi_detections(self, image_id, image, props, trace) -> list[Detection]:
        cfg = self.config
        extent = ImageExtent(image.width, image.height)
        with _timed(trace, "encode"):
            fmap = self.backbone.encode_full(image, image_id)
            trace.encoder_calls["full"] += 1
        dets = []
        for p in props:
            box = clip_box(p.box, extent)
            with _timed(trace, "encode"):
                try:
                    pooled = roi_align(fmap, box, cfg.roialign)
                except DegenerateBoxError:
                    continue
                emb = self.backbone.encode_head(pooled)
                trace.encoder_calls["head"] += 1
            det = self._classify_region(image_id, box, p.objectness, emb, trace)
            if det is not None:
                dets.append(det)
        return dets

    def _encode_crop(self, img: Image, trace: Trace) -> np.ndarray:
        emb = self.backbone.encode_crop(img)
        trace.encoder_calls["crop"] += 1
        return emb

    def _classify_region(self, image_id, box, objectness, emb, trace) -> Detection | None:
        with _timed(trace, "classify"):
            scores = class_scores(emb, self.bank, self.config.classify)
            vec = scores.probs
            if self.config.fusion:
                vec = fuse_scores(sigmoid(objectness), vec)
            idx = int(np.argmax(vec))
            return Detection(image_id, self.bank.class_ids[idx], box, float(vec[idx]))

    # -- batch entry ----------------------------------------------------------

    def run(self, images: Mapping[int, Image], workers: int = 1) -> list[Detection]:
        """Detect over all images; output order is independent of ``workers``."""
        ids = sorted(images)
        if workers <= 1:
            per = {i: self.detect_image(i, images[i]) for i in ids}
        else:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                futures = {i: ex.submit(self.detect_image, i, images[i]) for i in ids}
                per = {i: futures[i].result() for i in ids}
        out: list[Detection] = []
        for i in ids:
            out.extend(per[i])
        return out


def _single(variant: str, config: PipelineConfig | None) -> PipelineConfig:
    if config is None:
        return PipelineConfig(variant=variant)
    return dataclasses.replace(config, variant=variant)


def run_vanilla(image_id, image, backbone, proposals, bank, config=None, det_backbone=None) -> list[Detection]:
    """Crop-and-classify flow for one image."""
    pipe = Pipeline(_single("vanilla", config), backbone, proposals, bank, det_backbone=det_backbone)
    return pipe.detect_image(image_id, image)


def run_drr(image_id, image, det_backbone, clip_backbone, proposals, bank, config=None) -> list[Detection]:
    """Decoupled two-backbone flow for one image."""
    pipe = Pipeline(_single("drr", config), clip_backbone, proposals, bank, det_backbone=det_backbone)
    return pipe.detect_image(image_id, image)


def run_crr(image_id, image, shared_backbone, proposals, bank, config=None) -> list[Detection]:
    """Coupled shared-backbone flow for one image."""
    pipe = Pipeline(_single("crr", config), shared_backbone, proposals, bank)
    return pipe.detect_image(image_id, image)


# -- benchmarking -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TimingReport:
    variant: str
    param_count: int
    images_per_sec: float
    stage_seconds: dict[str, float]
    per_image_mean_s: float
    per_image_p50_s: float
    per_image_p95_s: float
    proposal_count: int
    encoder_calls: dict[str, int]
    det_full_calls: int
    images: int
    reps: int
    backend: str

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def bench(pipelines: Mapping[str, Pipeline], images: Mapping[int, Image], reps: int) -> list[TimingReport]:
    """Time each pipeline over the image set; one untimed warm-up pass per pipeline.

    Timed passes interleave across pipelines rep by rep so slow machine drift
    hits every variant equally, and garbage collection pauses are kept out of
    the timed region. Counters and stage times accumulate over
    reps * len(images) calls. Timing runs single-threaded so rates are
    comparable across variants.
    """
    if reps < 1:
        raise ConfigError(f"benchmark needs reps >= 1, got {reps}")
    if not images:
        raise ConfigError("benchmark needs a nonempty image set")
    ids = sorted(images)
    for pipe in pipelines.values():
        for i in ids:
            pipe.detect_image(i, images[i])  # warm-up: primes JIT and caches
    traces = {name: Trace() for name in pipelines}
    per_image: dict[str, list[float]] = {name: [] for name in pipelines}
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(reps):
            for name, pipe in pipelines.items():
                for i in ids:
                    t0 = perf_counter()
                    pipe.detect_image(i, images[i], trace=traces[name])
                    per_image[name].append(perf_counter() - t0)
    finally:
        if gc_was_enabled:
            gc.enable()
    reports = []
    for name, pipe in pipelines.items():
        times = per_image[name]
        reports.append(
            TimingReport(
                variant=name,
                param_count=pipe.param_count,
                images_per_sec=len(times) / sum(times),
                stage_seconds=dict(traces[name].stage_seconds),
                per_image_mean_s=float(np.mean(times)),
                per_image_p50_s=float(np.percentile(times, 50)),
                per_image_p95_s=float(np.percentile(times, 95)),
                proposal_count=pipe.config.proposal_count,
                encoder_calls=dict(traces[name].encoder_calls),
                det_full_calls=traces[name].det_full_calls,
                images=len(ids),
                reps=reps,
                backend=_kernels.BACKEND,
            )
        )
    return reports
