#!/usr/bin/env python3
"""Few-shot pattern injection curve for one held-out agreement pattern.

Retrains from scratch for every (k, seed) cell, so expect roughly half an
hour of CPU time at the defaults. The smaller training partition (2,000
pairs) and longer schedule (120 epochs, batch 64) are deliberate: one or two
injected examples have to survive against the entire rest of the data, and
at larger scales their gradient signal is simply drowned out before the
model converges.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gecprobe.cli import main  # noqa: E402


def step(argv: list[str]) -> None:
    code = main(argv)
    if code != 0:
        raise SystemExit(f"`{' '.join(argv[:2])}` exited {code}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--run", default="runs/fewshot_sva")
    parser.add_argument("--pattern", default=None,
                        help="'src=>corr' (default: first held-out pattern)")
    parser.add_argument("--k", default="0,1,2")
    parser.add_argument("--seeds", default="0,1,2")
    parser.add_argument("--epochs", type=int, default=120)
    args = parser.parse_args()

    base = ["--run", args.run]
    step(["gen", *base, "--etype", "VERB:SVA", "--count", "10000", "--seed", "7"])
    step(["split", *base, "--train-size", "2000", "--dev-size", "300",
          "--test-size", "1000", "--n-patterns", "4", "--seed", "0"])
    fewshot = ["fewshot", *base, "--k", args.k, "--seeds", args.seeds,
               "--epochs", str(args.epochs), "--batch-size", "64", "--beam", "5"]
    if args.pattern:
        fewshot += ["--pattern", args.pattern]
    step(fewshot)
