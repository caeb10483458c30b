#!/usr/bin/env python3
"""Measure end-to-end EERs on synthetic corpora to calibrate the separation
acceptance check.

Each seed builds a corpus whose eval split holds 100 bonafide and 100
replayed utterances (channel pools disjoint from training), then runs
extract, train, score and eval with the default configuration for every
classifier. Prints one row per seed and a summary to paste into the
acceptance test.
"""

import argparse
import json
import re
import subprocess
import sys
import tempfile
import time
from pathlib import Path

CLASSIFIERS = ("vae", "ocsvm", "anogan")


def run(cli, *args):
    proc = subprocess.run([cli, "-q", *args], capture_output=True, text=True)
    if proc.returncode != 0:
        sys.exit(f"{' '.join(args)} failed ({proc.returncode}): {proc.stderr}")
    return proc.stdout


def measure(cli, seed, per_class, root):
    corpus = root / f"corpus_{seed}"
    work = root / f"work_{seed}"
    run(cli, "--seed", str(seed), "synth", "--out", str(corpus),
        "--bonafide", str(2 * per_class), "--spoof", str(2 * per_class))
    base = ["--config", str(corpus / "experiment.cfg"), "--workdir", str(work)]
    run(cli, *base, "extract")
    eers = {}
    for kind in CLASSIFIERS:
        model = work / f"{kind}.rdmd"
        scores = work / f"{kind}.txt"
        run(cli, *base, "--set", f"classifier.kind={kind}", "train", "--model", str(model))
        run(cli, *base, "score", "--model", str(model), "--scores", str(scores))
        report = run(cli, *base, "eval", "--scores", str(scores))
        eers[kind] = float(re.search(r"EER: ([0-9.]+)%", report).group(1)) / 100
    return eers


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cli", default="build/tools/replaydet")
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    ap.add_argument("--per-class", type=int, default=100,
                    help="eval utterances per class (the training split matches)")
    ap.add_argument("--json", type=Path, help="also write the results here")
    args = ap.parse_args()

    rows = {}
    with tempfile.TemporaryDirectory(prefix="replaydet_calib_") as tmp:
        for seed in args.seeds:
            start = time.time()
            rows[seed] = measure(args.cli, seed, args.per_class, Path(tmp))
            cells = "  ".join(f"{k}={rows[seed][k]:.4f}" for k in CLASSIFIERS)
            print(f"seed {seed}: {cells}  ({time.time() - start:.0f} s)", flush=True)

    worst = {k: max(r[k] for r in rows.values()) for k in CLASSIFIERS}
    best_of = max(min(r.values()) for r in rows.values())
    print("worst per classifier: " + "  ".join(f"{k}={v:.4f}" for k, v in worst.items()))
    print(f"worst best-of-three: {best_of:.4f}")
    if args.json:
        args.json.write_text(json.dumps({"per_seed": rows, "worst": worst,
                                         "worst_best_of_three": best_of}, indent=2))


if __name__ == "__main__":
    main()
