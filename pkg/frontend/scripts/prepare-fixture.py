#!/usr/bin/env python3
"""Prepare a small service data dir for the UI flow test: one dataset and
one trained model (ds0001 / m0001). Reuses an existing fixture dir."""

import json
import sys
from pathlib import Path


def main() -> int:
    out = Path(sys.argv[1] if len(sys.argv) > 1 else ".fixture")
    marker = out / "models" / "m0001" / "meta.json"
    if marker.exists() and json.loads(marker.read_text()).get("status") == "done":
        print(f"fixture ready: {out}")
        return 0

    from queryscout.faultlab import DatasetConfig, generate_dataset, save_dataset
    from queryscout.ranker import TrainConfig, evaluate, save_bundle, train_bundle
    from queryscout.service.store import ModelMeta

    config = DatasetConfig(
        n_services=5,
        n_faults=10,
        reports_per_fault=4,
        seed=41,
        duration_s=20.0,
        generalize_fraction=0.1,
    )
    dataset = generate_dataset(config)
    save_dataset(dataset, out / "datasets" / "ds0001")

    bundle = train_bundle(dataset, TrainConfig(seed=4, epochs=6, patience=6))
    model_dir = out / "models" / "m0001"
    model_dir.mkdir(parents=True, exist_ok=True)
    save_bundle(bundle, model_dir / "bundle.qsb")
    meta = ModelMeta(
        model_id="m0001",
        dataset_id="ds0001",
        status="done",
        seed=4,
        epochs=6,
        patience=6,
        metrics=evaluate(bundle, dataset.scenarios),
    )
    (model_dir / "meta.json").write_text(json.dumps(meta.to_json(), indent=2) + "\n")
    print(f"fixture ready: {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
