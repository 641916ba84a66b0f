"""Train on a seeded 1000-sentence sample and score a disjoint 200-sentence split.

Prints validation macro-F1 after every epoch. Works on the official
training file or on a synthetic corpus.

    python scripts/learning_check.py TRAIN_FILE.TXT --embeddings glove.6B.100d.txt
"""

import argparse
import time

from rrgru import corpus
from rrgru.config import substream, substream_seed
from rrgru.metrics import macro_f1
from rrgru.net import VARIANTS, ModelConfig, ModelParams, predict_examples
from rrgru.train import LossConfig, TrainConfig, fit


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("train_file")
    ap.add_argument("--embeddings", default="")
    ap.add_argument("--n-train", type=int, default=1000)
    ap.add_argument("--n-valid", type=int, default=200)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--variant", choices=VARIANTS, default="full")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    raw = corpus.parse_semeval(args.train_file)
    pick = substream(args.seed, "folds").permutation(len(raw))[: args.n_train + args.n_valid]
    vocab = corpus.Vocabulary()
    train = corpus.tokenize_all([raw[i] for i in pick[: args.n_train]], vocab)
    valid = corpus.tokenize_all([raw[i] for i in pick[args.n_train :]], vocab, frozen=True)

    cfg = ModelConfig(variant=args.variant)
    seed = substream_seed(args.seed, "embeddings")
    if args.embeddings:
        emb = corpus.load_embeddings(args.embeddings, vocab, seed)
        print(f"embedding coverage {emb.coverage['coverage']:.3f}")
    else:
        emb = corpus.random_embeddings(vocab, cfg.d_e, seed)
    params = ModelParams.init(cfg, emb.matrix, substream(args.seed, "init"))

    gold = [ex.label_id for ex in valid]
    start = time.perf_counter()

    def report(r):
        f1 = macro_f1(gold, predict_examples(valid, params, cfg)).macro_f1
        print(f"epoch {r.epoch:3d}  loss {r.mean_loss:.4f}  train acc {r.train_accuracy:.3f}  "
              f"valid macro-F1 {100 * f1:5.1f}  ({time.perf_counter() - start:.0f}s)", flush=True)

    fit(train, params, cfg, TrainConfig(epochs=args.epochs), LossConfig(),
        substream(args.seed, "shuffle"), substream(args.seed, "dropout"), on_epoch=report)


if __name__ == "__main__":
    main()
