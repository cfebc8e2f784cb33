"""ovdkit: an open-vocabulary detection inference and evaluation engine.

Three pipeline assemblies over pluggable neural providers (deterministic
synthetic stubs or replayed fixture tensors): crop-and-classify, a decoupled
two-backbone flow with RoIAlign region pooling, and the same flow over one
shared backbone. Includes base/novel-split AP50 evaluation and a
throughput/parameter benchmark.
"""

from ._kernels import BACKEND
from .classify import ClassifyConfig, ClassScores, EmbeddingBank, build_bank, class_scores, ensemble_embeddings
from .distill import KdConfig, grad_check, l1_kd_grad, l1_kd_loss
from .errors import (
    ConfigError,
    DegenerateBoxError,
    IntegrityError,
    OvdkitError,
    SchemaError,
    SplitError,
)
from .evaluation import (
    CategorySplit,
    GroundTruthSet,
    MetricsReport,
    average_precision,
    build_dataset,
    evaluate,
    load_dataset,
    load_detections,
    match_detections,
)
from .geometry import Box, ImageExtent, box_from_xywh, box_to_xywh, clip_box, expand_box, iou
from .ovdt import read_ovdt, write_ovdt
from .pipelines import (
    Pipeline,
    PipelineConfig,
    TimingReport,
    bench,
    run_crr,
    run_drr,
    run_vanilla,
)
from .postprocess import Detection, NmsConfig, fuse_scores, per_class_nms, sigmoid
from .providers import (
    Proposal,
    ProposalProvider,
    StagedBackbone,
    StageSpec,
    StubSpec,
    generate_bundle,
    load_fixtures,
    make_stub,
    synthetic_proposals,
)
from .roialign import RoiAlignConfig, roi_align
from .tensor import FeatureMap, Image, bilinear_sample, crop, resize_bilinear

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Box",
    "CategorySplit",
    "ClassScores",
    "ClassifyConfig",
    "ConfigError",
    "DegenerateBoxError",
    "Detection",
    "EmbeddingBank",
    "FeatureMap",
    "GroundTruthSet",
    "Image",
    "ImageExtent",
    "IntegrityError",
    "KdConfig",
    "MetricsReport",
    "NmsConfig",
    "OvdkitError",
    "Pipeline",
    "PipelineConfig",
    "Proposal",
    "ProposalProvider",
    "RoiAlignConfig",
    "SchemaError",
    "SplitError",
    "StagedBackbone",
    "StageSpec",
    "StubSpec",
    "TimingReport",
    "average_precision",
    "bench",
    "bilinear_sample",
    "box_from_xywh",
    "box_to_xywh",
    "build_bank",
    "build_dataset",
    "class_scores",
    "clip_box",
    "crop",
    "ensemble_embeddings",
    "evaluate",
    "expand_box",
    "fuse_scores",
    "generate_bundle",
    "grad_check",
    "iou",
    "l1_kd_grad",
    "l1_kd_loss",
    "load_dataset",
    "load_detections",
    "load_fixtures",
    "make_stub",
    "match_detections",
    "per_class_nms",
    "read_ovdt",
    "resize_bilinear",
    "roi_align",
    "run_crr",
    "run_drr",
    "run_vanilla",
    "sigmoid",
    "synthetic_proposals",
    "write_ovdt",
]
