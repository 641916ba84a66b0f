"""Write a synthetic train/test pair in the task file format.

    python scripts/make_synthetic_corpus.py --out data/synth --train 2000 --test 500
"""

import argparse
from pathlib import Path

from rrgru import synthetic


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data/synth")
    ap.add_argument("--train", type=int, default=2000)
    ap.add_argument("--test", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    synthetic.write_semeval(synthetic.generate(args.train, args.seed), out / "train.txt")
    synthetic.write_semeval(synthetic.generate(args.test, args.seed + 1, start_id=8001), out / "test.txt")
    print(f"wrote {args.train} + {args.test} sentences to {out}/")


if __name__ == "__main__":
    main()
