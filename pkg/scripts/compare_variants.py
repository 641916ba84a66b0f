"""Train and evaluate every model variant with the CLI and print a macro-F1 table.

    python scripts/compare_variants.py --train-file TRAIN_FILE.TXT \
        --test-file TEST_FILE_FULL.TXT --embeddings glove.6B.100d.txt --out runs/
"""

import argparse
import json
from pathlib import Path

from rrgru import cli
from rrgru.net import VARIANTS


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--train-file", required=True)
    ap.add_argument("--test-file", required=True)
    ap.add_argument("--embeddings", default="")
    ap.add_argument("--out", default="runs")
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--variants", nargs="+", choices=VARIANTS, default=list(VARIANTS))
    args = ap.parse_args()

    common = ["--seed", str(args.seed)]
    if args.embeddings:
        common += ["--embeddings", args.embeddings]
    results = {}
    for variant in args.variants:
        out = Path(args.out) / variant
        steps = [
            ["preprocess", "--train-file", args.train_file, "--test-file", args.test_file],
            ["train", "--variant", variant, "--epochs", str(args.epochs)],
            ["eval", "--test-file", args.test_file],
        ]
        for step in steps:
            code = cli.main(step + common + ["--out-dir", str(out)])
            if code:
                raise SystemExit(f"{variant}: '{step[0]}' exited with {code}")
        results[variant] = json.loads((out / "metrics.json").read_text())["macro_f1"]

    print(f"\n{'variant':<16}macro-F1")
    for variant, f1 in results.items():
        print(f"{variant:<16}{100 * f1:.2f}")


if __name__ == "__main__":
    main()
