"""Open-vocabulary class head.

A bank of per-class unit-norm text embeddings replaces a trained classifier:
region embeddings score against the bank by cosine similarity, a temperature
softmax turns similarities into probabilities, and an optional weighted
background logit absorbs non-object mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

_ROW_NORM_TOL = 1e-5
_REGION_NORM_TOL = 1e-3


@dataclass(frozen=True, eq=False)
class EmbeddingBank:
    """Ordered class ids with a K x D matrix of unit-norm class embeddings."""

    class_ids: tuple[int, ...]
    matrix: np.ndarray
    names: tuple[str, ...] | None = None
    background_logit: float = 0.0
    background_weight: float = 1.0

    def __post_init__(self):
        mat = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != len(self.class_ids):
            raise ValueError(f"bank matrix shape {mat.shape} does not match {len(self.class_ids)} class ids")
        if len(set(self.class_ids)) != len(self.class_ids):
            raise ValueError("bank class ids must be unique")
        if self.names is not None and len(self.names) != len(self.class_ids):
            raise ValueError("bank names must align with class ids")
        if not (self.background_weight > 0):
            raise ValueError(f"background weight must be positive, got {self.background_weight}")
        norms = np.linalg.norm(mat, axis=1)
        if np.any(np.abs(norms - 1.0) > _ROW_NORM_TOL):
            worst = int(np.argmax(np.abs(norms - 1.0)))
            raise ValueError(f"bank row for class {self.class_ids[worst]} is not unit norm ({norms[worst]:.6f})")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def num_classes(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class ClassifyConfig:
    """Softmax temperature (cosine space), crop ensemble factors, background switch."""

    temperature: float = 0.01
    crop_factors: tuple[float, ...] = (1.0, 1.5)
    background_enabled: bool = False

    def __post_init__(self):
        if not (self.temperature > 0):
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if len(self.crop_factors) < 1 or any(f <= 0 for f in self.crop_factors):
            raise ValueError(f"crop factors must be positive, got {self.crop_factors}")


def normalize(v: np.ndarray) -> np.ndarray:
    """L2-normalize a vector; zero norm raises."""
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def build_bank(
    prompt_embeddings: Mapping[int, Sequence[np.ndarray]],
    names: Mapping[int, str] | None = None,
    background_logit: float = 0.0,
    background_weight: float = 1.0,
) -> EmbeddingBank:
    """Average prompt-template embeddings into one unit row per class.

    Each prompt embedding is L2-normalized, the normalized prompts are
    averaged, and the average is re-normalized. A class whose prompts cancel
    out (zero-norm average) is reported by id.
    """
    ids = tuple(prompt_embeddings.keys())
    if not ids:
        raise ValueError("bank needs at least one class")
    rows = []
    for cid in ids:
        prompts = prompt_embeddings[cid]
        if len(prompts) == 0:
            raise ValueError(f"class {cid} has no prompt embeddings")
        unit = []
        for p in prompts:
            try:
                unit.append(normalize(p))
            except ValueError:
                raise ValueError(f"class {cid} has a zero-norm prompt embedding") from None
        dims = {u.shape for u in unit}
        if len(dims) != 1 or unit[0].ndim != 1:
            raise ValueError(f"class {cid} prompt embeddings disagree on dimension: {sorted(dims)}")
        mean = np.mean(unit, axis=0)
        if np.linalg.norm(mean) == 0.0:
            raise ValueError(f"prompt embeddings of class {cid} average to zero; cannot build a bank row")
        rows.append(normalize(mean))
    widths = {r.shape[0] for r in rows}
    if len(widths) != 1:
        raise ValueError(f"classes disagree on embedding dimension: {sorted(widths)}")
    name_tuple = tuple(names[cid] for cid in ids) if names is not None else None
    return EmbeddingBank(
        class_ids=ids,
        matrix=np.stack(rows),
        names=name_tuple,
        background_logit=background_logit,
        background_weight=background_weight,
    )


def ensemble_embeddings(e1: np.ndarray, e15: np.ndarray) -> np.ndarray:
    """Normalized mean of the tight-crop and expanded-crop embeddings.

    Falls back to ``e1`` when the two cancel out exactly.
    """
    e1 = np.asarray(e1, dtype=np.float64)
    e15 = np.asarray(e15, dtype=np.float64)
    if e1.shape != e15.shape:
        raise ValueError(f"embedding shapes differ: {e1.shape} vs {e15.shape}")
    mean = (e1 + e15) / 2.0
    n = np.linalg.norm(mean)
    if n == 0.0:
        return e1.copy()
    return mean / n


@dataclass(frozen=True, eq=False)
class ClassScores:
    """Per-class probabilities plus the background probability when enabled."""

    probs: np.ndarray
    background: float | None = None
    class_ids: tuple[int, ...] = field(default=())

    def argmax_class(self) -> int:
        """Id of the highest-probability foreground class."""
        return self.class_ids[int(np.argmax(self.probs))]


def class_scores(region: np.ndarray, bank: EmbeddingBank, cfg: ClassifyConfig = ClassifyConfig()) -> ClassScores:
    """Cosine-similarity softmax of a region embedding against the bank.

    Logits are cosine/temperature per class; with background enabled an extra
    logit ``weight * background_logit`` joins the softmax. Foreground
    probabilities plus the background probability sum to 1.
    """
    region = np.asarray(region, dtype=np.float64)
    if region.shape != (bank.dim,):
        raise ValueError(f"region embedding shape {region.shape} does not match bank dimension {bank.dim}")
    if abs(np.linalg.norm(region) - 1.0) > _REGION_NORM_TOL:
        raise ValueError(f"region embedding is not unit norm ({np.linalg.norm(region):.6f})")
    logits = (bank.matrix @ region) / cfg.temperature
    if cfg.background_enabled:
        logits = np.concatenate([logits, [bank.background_weight * bank.background_logit]])
    # numerically stable softmax
    z = np.exp(logits - logits.max())
    p = z / z.sum()
    if cfg.background_enabled:
        return ClassScores(probs=p[:-1], background=float(p[-1]), class_ids=bank.class_ids)
    return ClassScores(probs=p, background=None, class_ids=bank.class_ids)
