"""L1 distillation loss between region embeddings and teacher embeddings.

The temperature acts as a multiplicative loss weight; with an L1 embedding
loss there are no logits to soften, so a weight is the only meaningful
reading. A finite-difference checker validates the analytic subgradient for
any future trainer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KdConfig:
    temperature: float = 1.0
    embedding_dim: int = 64

    def __post_init__(self):
        if not (self.temperature > 0):
            raise ValueError(f"temperature must be positive, got {self.temperature}")


def _stack(embeddings, dim: int, label: str) -> np.ndarray:
    arr = np.asarray(embeddings, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"{label} embeddings must be (N, {dim}), got {arr.shape}")
    return arr


def l1_kd_loss(student, teacher, cfg: KdConfig) -> float:
    """temperature * mean absolute coordinate difference over all regions."""
    s = _stack(student, cfg.embedding_dim, "student")
    t = _stack(teacher, cfg.embedding_dim, "teacher")
    if s.shape != t.shape:
        raise ValueError(f"student/teacher shapes differ: {s.shape} vs {t.shape}")
    return cfg.temperature * float(np.mean(np.abs(s - t)))


def l1_kd_grad(student, teacher, cfg: KdConfig) -> np.ndarray:
    """Analytic subgradient of the loss w.r.t. the student: +-T/(N*D) per coordinate."""
    s = _stack(student, cfg.embedding_dim, "student")
    t = _stack(teacher, cfg.embedding_dim, "teacher")
    if s.shape != t.shape:
        raise ValueError(f"student/teacher shapes differ: {s.shape} vs {t.shape}")
    return cfg.temperature * np.sign(s - t) / s.size


def grad_check(
    student,
    teacher,
    cfg: KdConfig,
    epsilon: float = 1e-5,
    exclude_nonsmooth: bool = True,
) -> float:
    """Max relative error between the analytic subgradient and central differences.

    The loss is non-smooth where a residual is zero, so coordinates within
    10*epsilon of their teacher value are excluded; with exclusion disabled
    their presence is an error, as is excluding everything.
    """
    s = _stack(student, cfg.embedding_dim, "student").copy()
    t = _stack(teacher, cfg.embedding_dim, "teacher")
    if s.shape != t.shape:
        raise ValueError(f"student/teacher shapes differ: {s.shape} vs {t.shape}")
    near = np.abs(s - t) < 10.0 * epsilon
    if exclude_nonsmooth:
        if near.all():
            raise ValueError("all coordinates sit at non-smooth points; nothing to check")
    elif near.any():
        raise ValueError(f"{int(near.sum())} coordinates sit within 10*epsilon of a non-smooth point")
    analytic = l1_kd_grad(s, t, cfg)
    worst = 0.0
    for i in range(s.shape[0]):
        for j in range(s.shape[1]):
            if near[i, j]:
                continue
            orig = s[i, j]
            s[i, j] = orig + epsilon
            hi = l1_kd_loss(s, t, cfg)
            s[i, j] = orig - epsilon
            lo = l1_kd_loss(s, t, cfg)
            s[i, j] = orig
            numeric = (hi - lo) / (2.0 * epsilon)
            denom = max(abs(analytic[i, j]), abs(numeric), 1e-300)
            worst = max(worst, abs(analytic[i, j] - numeric) / denom)
    return worst
