"""Run every attack model against one dataset and report accuracies."""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .dataset import AttackDataset, DatasetError
from .models import MODEL_NAMES, AttackResult, majority_baseline, train_one

MIN_LABELED_BITS = 10_000
SCHEMA_VERSION = 1


def run_attacks(dataset: AttackDataset, seed: int = 0,
                n_jobs: int | None = None) -> dict[str, AttackResult]:
    """Train the five models plus the majority baseline; merge by name.

    Trainings are independent, so with n_jobs > 1 they run in parallel
    worker processes.  Degenerate single-class data is reported without
    training anything.
    """
    if dataset.n_bits < MIN_LABELED_BITS:
        raise DatasetError(
            f"need at least {MIN_LABELED_BITS} labeled bits, "
            f"got {dataset.n_bits}")
    split = dataset.split(seed)
    results = {"majority": majority_baseline(split.y_train, split.y_test)}

    if np.unique(split.y_train).size < 2:
        for name in MODEL_NAMES:
            results[name] = AttackResult(
                name, None, False, detail="single-class labels; not trained")
        return results

    jobs = [(name, split.x_train, split.y_train, split.x_test, split.y_test,
             seed) for name in MODEL_NAMES]
    workers = (min(len(jobs), os.cpu_count() or 1)
               if n_jobs is None else n_jobs)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for name, res in pool.map(train_one, jobs):
                results[name] = res
    else:
        for job in jobs:
            name, res = train_one(job)
            results[name] = res
    return results


def write_report(path, dataset: AttackDataset,
                 results: dict[str, AttackResult], seed: int) -> dict:
    """JSON accuracy report next to the run; returns the document."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "source": dataset.source,
        "split_ratio": dataset.split_ratio,
        "n_bits": dataset.n_bits,
        "results": {
            name: {
                "accuracy": (None if r.accuracy is None
                             else round(r.accuracy, 4)),
                "trained": r.trained,
                "detail": r.detail,
            }
            for name, r in results.items()
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc
