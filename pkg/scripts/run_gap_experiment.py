#!/usr/bin/env python3
"""Known/unknown generalization gap, one run directory per error type.

Drives the CLI end to end (gen -> split -> train x2 -> correct x2 -> score x2)
with desk-scale settings that finish in a few minutes per type on a laptop
CPU. The per-type corpus and split sizes below were chosen so the unknown
split is feasible: pattern classes are large, so holding out even a few
classes removes a sizable slice of the corpus (MORPH has only 5,250 distinct
pairs in total, hence the smaller numbers).
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gecprobe.cli import main  # noqa: E402

# etype -> (corpus_size, train, dev, test, held_out_patterns)
SETTINGS = {
    "VERB:SVA": (10_000, 5_000, 500, 1_000, 4),
    "VERB:FORM": (10_000, 5_000, 500, 1_000, None),
    "WO": (10_000, 5_000, 500, 1_000, 8),
    "MORPH": (4_500, 3_000, 400, 800, 1),
    "NOUN:NUM": (10_000, 5_000, 500, 1_000, None),
}

MODEL = ["--layers", "2", "--dim", "128", "--ff-dim", "256", "--heads", "4",
         "--dropout", "0.3", "--label-smoothing", "0.1"]
TRAINING = ["--epochs", "30", "--batch-size", "128", "--warmup", "400"]


def run_type(etype: str, out_root: Path, seed: int, epochs: int | None) -> None:
    corpus_size, train, dev, test, n_patterns = SETTINGS[etype]
    run = str(out_root / etype.replace(":", "_").lower())
    base = ["--run", run, "--seed", str(seed)]
    training = TRAINING if epochs is None else ["--epochs", str(epochs),
                                                "--batch-size", "128", "--warmup", "400"]

    def step(argv: list[str]) -> None:
        code = main(argv)
        if code != 0:
            raise SystemExit(f"{etype}: `{' '.join(argv[:2])}` exited {code}")

    step(["gen", *base, "--etype", etype, "--count", str(corpus_size)])
    split = ["split", *base, "--train-size", str(train), "--dev-size", str(dev),
             "--test-size", str(test)]
    if n_patterns is not None:
        split += ["--n-patterns", str(n_patterns)]
    step(split)
    for setting in ("known", "unknown"):
        step(["train", *base, "--setting", setting, *MODEL, *training])
        step(["correct", *base, "--setting", setting, "--beam", "5"])
        step(["score", *base, "--setting", setting])
    step(["report", *base])


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--types", nargs="+", default=list(SETTINGS),
                        choices=list(SETTINGS), metavar="ETYPE")
    parser.add_argument("--out", default="runs", help="root for run directories")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--epochs", type=int, default=None,
                        help="override training epochs for every type")
    args = parser.parse_args()
    for etype in args.types:
        print(f"=== {etype} ===", flush=True)
        run_type(etype, Path(args.out), args.seed, args.epochs)
