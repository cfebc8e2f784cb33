#!/usr/bin/env python3
"""Regenerate every committed golden artifact under tests/data/.

Goldens freeze the output of the synthetic providers so regressions are
caught bit-exactly. Rerun after any intentional change to the stub
architecture, the PRNG scheme, or the kernel conventions, and commit the
results.
"""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
DATA = REPO / "tests" / "data"

sys.path.insert(0, str(REPO / "src"))

from ovdkit import Box, Image, cli, generate_bundle, make_stub, roi_align, write_ovdt  # noqa: E402
from ovdkit import _rng  # noqa: E402
from ovdkit.providers.backbone import StubSpec  # noqa: E402
from ovdkit.providers.fixtures import _TAG_IMAGE  # noqa: E402
from ovdkit.roialign import RoiAlignConfig  # noqa: E402

GOLDEN_SEED = 7
GOLDEN_ROI = Box(3.0, 5.0, 27.5, 24.0)


def main() -> None:
    golden = DATA / "golden"
    golden.mkdir(parents=True, exist_ok=True)

    # 32x32 test image drawn from the same stream the bundle generator uses
    data = _rng.unit_floats(GOLDEN_SEED, _TAG_IMAGE + 1, 3 * 32 * 32).reshape(3, 32, 32)
    image = Image(data.astype(np.float32))
    write_ovdt(golden / "image32.ovdt", image.data)

    spec = StubSpec(input_size=32)
    stub = make_stub(GOLDEN_SEED, spec)
    (golden / "weights_sha256.txt").write_text(stub.weights_sha256() + "\n")

    fmap = stub.encode_full(image)
    write_ovdt(golden / "full_seed7.ovdt", fmap.data)

    pooled = roi_align(fmap, GOLDEN_ROI, RoiAlignConfig())
    write_ovdt(golden / "pooled_seed7.ovdt", pooled)
    write_ovdt(golden / "head_emb_seed7.ovdt", stub.encode_head(pooled).astype(np.float32))
    write_ovdt(golden / "crop_emb_seed7.ovdt", stub.encode_crop(image).astype(np.float32))

    # the bundled micro dataset
    micro = DATA / "micro"
    if micro.exists():
        shutil.rmtree(micro)
    generate_bundle(micro, seed=GOLDEN_SEED, n_images=3, image_size=32,
                    proposals_per_image=12, n_classes=3, n_prompts=2,
                    spec=spec)

    # run config for the micro bundle + the golden detections it produces
    config = {
        "variant": "drr",
        "fixtures": "micro/manifest.json",
        "proposals": 12,
        "fusion": True,
        "crop_ensemble": True,
        "classifier_input_size": 32,
    }
    (DATA / "micro_drr.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")
    rc = cli.main([
        "detect",
        "--config", str(DATA / "micro_drr.json"),
        "--out", str(golden / "detections_drr.json"),
    ])
    if rc != 0:
        raise SystemExit(f"golden detect run failed with exit code {rc}")
    print(f"regenerated goldens under {DATA}")


if __name__ == "__main__":
    main()
