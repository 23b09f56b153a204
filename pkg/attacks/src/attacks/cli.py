"""Command line: train the attack battery on one exported CSV."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .dataset import DatasetError, import_dataset
from .harness import run_attacks, write_report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="puf-attack",
        description="train modeling attacks on an exported PUF dataset")
    parser.add_argument("csv", type=Path, help="exported attack CSV")
    parser.add_argument("--meta", type=Path, default=None,
                        help="exporter metadata JSON (checksum verification)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--split", type=float, default=0.7,
                        help="train share (default 0.7)")
    parser.add_argument("--jobs", type=int, default=None,
                        help="worker processes (default: one per cpu)")
    parser.add_argument("--out", type=Path, default=Path("attack_report.json"))
    args = parser.parse_args(argv)

    try:
        dataset = import_dataset(args.csv, meta_path=args.meta,
                                 split_ratio=args.split)
        results = run_attacks(dataset, seed=args.seed, n_jobs=args.jobs)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_report(args.out, dataset, results, args.seed)
    majority = results["majority"].accuracy
    print(f"{'model':10s} {'accuracy':>9s}")
    print(f"{'majority':10s} {majority:9.4f}")
    for name, r in results.items():
        if name == "majority":
            continue
        shown = "     -   " if r.accuracy is None else f"{r.accuracy:9.4f}"
        note = f"  [{r.detail}]" if r.detail else ""
        print(f"{name:10s} {shown}{note}")
    print(f"report written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
