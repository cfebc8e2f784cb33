"""Fixture bundles: self-contained directories of OVDT tensors plus a manifest.

A bundle carries everything a pipeline run needs (images, whole-image feature
maps, proposals, the embedding bank) with per-file sha256 integrity. Synthetic
bundles embed the stub backbone specs so the replayed feature maps and the
recomputed ones are bit-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import _rng
from ..classify import EmbeddingBank, build_bank
from ..errors import IntegrityError, SchemaError
from ..geometry import Box, ImageExtent
from ..ovdt import read_ovdt, write_ovdt
from ..tensor import FeatureMap, Image
from .backbone import StagedBackbone, StubSpec, make_stub
from .proposals import Proposal, ProposalProvider, synthetic_proposals

_TAG_IMAGE = 1000
_TAG_PROPOSAL = 2000
_TAG_GT = 3000
_TAG_PROMPTS = 4000

MANIFEST_KEYS = ("version", "images", "tensors", "sha256")


@dataclass
class FixtureBundle:
    """Loaded view of a bundle, ready to feed a pipeline."""

    root: Path
    images: dict[int, Image]
    extents: dict[int, ImageExtent]
    backbone: StagedBackbone
    det_backbone: StagedBackbone | None
    proposals: ProposalProvider
    bank: EmbeddingBank
    prompt_embeddings: np.ndarray | None
    annotations_path: Path | None
    split_path: Path | None


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _dump_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def generate_bundle(
    out_dir: str | Path,
    seed: int,
    n_images: int = 3,
    image_size: int = 32,
    proposals_per_image: int = 12,
    n_classes: int = 3,
    n_prompts: int = 2,
    spec: StubSpec | None = None,
) -> Path:
    """Write a complete synthetic fixture bundle; returns the manifest path.

    Identical arguments produce byte-identical bundles.
    """
    if n_images < 1 or n_classes < 1 or n_prompts < 1 or proposals_per_image < 1:
        raise ValueError("bundle sizes must be positive")
    out = Path(out_dir)
    spec = spec or StubSpec(input_size=image_size)
    stub = make_stub(seed, spec)
    det_stub_seed = seed + 1

    image_ids = list(range(1, n_images + 1))
    extents = {i: ImageExtent(image_size, image_size) for i in image_ids}
    tensors: dict[str, str] = {}

    images: dict[int, Image] = {}
    for i in image_ids:
        data = _rng.unit_floats(seed, _TAG_IMAGE + i, 3 * image_size * image_size)
        img = Image(data.reshape(3, image_size, image_size).astype(np.float32))
        rel = f"images/{i:06d}.ovdt"
        write_ovdt(out / rel, img.data)
        tensors[f"image/{i}"] = rel
        images[i] = img

    for i in image_ids:
        fmap = stub.encode_full(images[i])
        rel = f"features/{i:06d}.ovdt"
        write_ovdt(out / rel, fmap.data)
        tensors[f"features/{i}"] = rel

    provider = synthetic_proposals(seed, extents, proposals_per_image, tag_base=_TAG_PROPOSAL)
    for i in image_ids:
        props = provider.top_k(i, proposals_per_image)
        arr = np.array(
            [[p.box.x1, p.box.y1, p.box.x2, p.box.y2, p.objectness] for p in props],
            dtype=np.float32,
        ).reshape(len(props), 5)
        rel = f"proposals/{i:06d}.ovdt"
        write_ovdt(out / rel, arr)
        tensors[f"proposals/{i}"] = rel

    class_ids = list(range(1, n_classes + 1))
    d = spec.embed_dim
    prompts = _rng.uniform(seed, _TAG_PROMPTS, n_classes * n_prompts * d, -1.0, 1.0)
    prompts = prompts.reshape(n_classes, n_prompts, d)
    bank = build_bank(
        {cid: [prompts[k, p] for p in range(n_prompts)] for k, cid in enumerate(class_ids)},
        names={cid: f"class-{cid}" for cid in class_ids},
    )
    write_ovdt(out / "bank/prompts.ovdt", prompts)
    write_ovdt(out / "bank/rows.ovdt", bank.matrix)
    tensors["bank/prompts"] = "bank/prompts.ovdt"
    tensors["bank/rows"] = "bank/rows.ovdt"
    _dump_json(
        out / "bank/meta.json",
        {
            "classes": [{"id": cid, "name": f"class-{cid}", "row": k} for k, cid in enumerate(class_ids)],
            "background_logit": 0.0,
            "background_weight": 1.0,
        },
    )

    annotations = _generate_ground_truth(seed, extents, class_ids)
    _dump_json(out / "annotations.json", annotations)
    _dump_json(
        out / "split.json",
        {
            "base": [cid for cid in class_ids if cid % 2 == 1],
            "novel": [cid for cid in class_ids if cid % 2 == 0],
        },
    )

    hashed_files = sorted(set(tensors.values()) | {"bank/meta.json", "annotations.json", "split.json"})
    manifest = {
        "version": 1,
        "images": [{"id": i, "width": image_size, "height": image_size} for i in image_ids],
        "tensors": tensors,
        "sha256": {rel: _sha256(out / rel) for rel in hashed_files},
        "stub": spec.to_dict(),
        "stub_seed": seed,
        "det_stub": spec.to_dict(),
        "det_stub_seed": det_stub_seed,
        "bank_meta": "bank/meta.json",
        "annotations": "annotations.json",
        "split": "split.json",
    }
    _dump_json(out / "manifest.json", manifest)
    return out / "manifest.json"


def _generate_ground_truth(seed: int, extents: dict[int, ImageExtent], class_ids: list[int]) -> dict:
    images = [{"id": i, "width": e.width, "height": e.height} for i, e in sorted(extents.items())]
    annotations = []
    ann_id = 1
    for i in sorted(extents):
        e = extents[i]
        w, h = float(e.width), float(e.height)
        u = _rng.unit_floats(seed, _TAG_GT + i, 1 + 5 * 3)
        n_gt = 1 + int(u[0] * 3.0)
        for g in range(min(n_gt, 3)):
            u1, u2, u3, u4, u5 = u[1 + 5 * g : 6 + 5 * g]
            x1 = u1 * (w - 4.0)
            y1 = u2 * (h - 4.0)
            bw = 4.0 + u3 * (w - x1 - 4.0)
            bh = 4.0 + u4 * (h - y1 - 4.0)
            cid = class_ids[int(u5 * len(class_ids)) % len(class_ids)]
            annotations.append(
                {"id": ann_id, "image_id": i, "category_id": cid, "bbox": [x1, y1, bw, bh]}
            )
            ann_id += 1
    categories = [{"id": cid, "name": f"class-{cid}"} for cid in class_ids]
    return {"images": images, "annotations": annotations, "categories": categories}


def load_fixtures(manifest_path: str | Path) -> FixtureBundle:
    """Load and verify a bundle: hashes, shapes, and cross-references.

    Hash mismatches raise IntegrityError, inconsistent shapes SchemaError,
    missing files FileNotFoundError.
    """
    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{manifest_path}: manifest is not valid JSON ({exc})") from exc
    for key in MANIFEST_KEYS:
        if key not in manifest:
            raise SchemaError(f"{manifest_path}: manifest lacks required key '{key}'")
    if manifest["version"] != 1:
        raise SchemaError(f"{manifest_path}: unsupported manifest version {manifest['version']}")

    for rel, expect in sorted(manifest["sha256"].items()):
        path = root / rel
        if not path.exists():
            raise FileNotFoundError(f"bundle file missing: {path}")
        got = _sha256(path)
        if got != expect:
            raise IntegrityError(f"{path}: sha256 mismatch (manifest {expect[:12]}.., file {got[:12]}..)")

    try:
        stub_spec = StubSpec.from_dict(manifest["stub"])
        backbone = make_stub(int(manifest["stub_seed"]), stub_spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{manifest_path}: invalid or missing stub spec ({exc})") from exc
    det_backbone = None
    if "det_stub" in manifest:
        det_backbone = make_stub(int(manifest["det_stub_seed"]), StubSpec.from_dict(manifest["det_stub"]))

    tensors = manifest["tensors"]
    extents: dict[int, ImageExtent] = {}
    images: dict[int, Image] = {}
    per_image_proposals: dict[int, list[Proposal]] = {}
    for entry in manifest["images"]:
        i = int(entry["id"])
        extents[i] = ImageExtent(int(entry["width"]), int(entry["height"]))
        try:
            images[i] = Image(read_ovdt(root / tensors[f"image/{i}"]))
        except KeyError:
            raise SchemaError(f"manifest lists image {i} but no 'image/{i}' tensor") from None
        except ValueError as exc:
            raise SchemaError(f"image tensor for id {i} is invalid: {exc}") from exc
        if images[i].height != extents[i].height or images[i].width != extents[i].width:
            raise SchemaError(f"image {i} tensor size does not match its declared extent")

        fkey = f"features/{i}"
        if fkey in tensors:
            fdata = read_ovdt(root / tensors[fkey])
            if fdata.ndim != 3 or fdata.shape[0] != backbone.feature_channels:
                raise SchemaError(
                    f"feature map for image {i} has shape {fdata.shape}, "
                    f"expected {backbone.feature_channels} channels"
                )
            backbone._full_cache[i] = FeatureMap(fdata, stride=backbone.full_stride)

        pkey = f"proposals/{i}"
        if pkey in tensors:
            parr = read_ovdt(root / tensors[pkey])
            if parr.ndim != 2 or parr.shape[1] != 5:
                raise SchemaError(f"proposal tensor for image {i} must be (N, 5), got {parr.shape}")
            per_image_proposals[i] = [
                Proposal(Box(float(r[0]), float(r[1]), float(r[2]), float(r[3])), float(r[4])) for r in parr
            ]
        else:
            per_image_proposals[i] = []

    proposals = ProposalProvider(per_image_proposals, extents, source="fixture")

    try:
        rows = read_ovdt(root / tensors["bank/rows"])
    except KeyError:
        raise SchemaError("manifest lacks a 'bank/rows' tensor") from None
    prompts = read_ovdt(root / tensors["bank/prompts"]) if "bank/prompts" in tensors else None
    meta = json.loads((root / manifest["bank_meta"]).read_text()) if "bank_meta" in manifest else None
    if meta is None:
        raise SchemaError("manifest lacks 'bank_meta'")
    classes = sorted(meta["classes"], key=lambda c: c["row"])
    if [c["row"] for c in classes] != list(range(len(classes))) or len(classes) != rows.shape[0]:
        raise SchemaError("bank sidecar rows do not align with the bank matrix")
    if rows.shape[1] != backbone.embed_dim:
        raise SchemaError(f"bank dimension {rows.shape[1]} does not match backbone embedding dimension {backbone.embed_dim}")
    if prompts is not None and (prompts.ndim != 3 or prompts.shape[0] != rows.shape[0] or prompts.shape[2] != rows.shape[1]):
        raise SchemaError(f"prompt tensor shape {prompts.shape} does not match bank shape {rows.shape}")
    try:
        bank = EmbeddingBank(
            class_ids=tuple(int(c["id"]) for c in classes),
            matrix=rows.astype(np.float64),
            names=tuple(str(c["name"]) for c in classes),
            background_logit=float(meta.get("background_logit", 0.0)),
            background_weight=float(meta.get("background_weight", 1.0)),
        )
    except ValueError as exc:
        raise SchemaError(f"bank is invalid: {exc}") from exc

    ann = root / manifest["annotations"] if "annotations" in manifest else None
    split = root / manifest["split"] if "split" in manifest else None
    return FixtureBundle(
        root=root,
        images=images,
        extents=extents,
        backbone=backbone,
        det_backbone=det_backbone,
        proposals=proposals,
        bank=bank,
        prompt_embeddings=prompts,
        annotations_path=ann,
        split_path=split,
    )
