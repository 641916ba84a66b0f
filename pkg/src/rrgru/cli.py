"""Command-line entry point: ``rrgru {preprocess,train,eval,predict,gradcheck}``.

Exit codes: 0 success, 1 gradient check failed, 2 configuration error,
3 data/checkpoint error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import corpus
from .checkpoint import check_arrays, load_checkpoint, save_checkpoint
from .config import RunConfig, substream, substream_seed
from .errors import (
    CheckpointError,
    ConfigError,
    ContractError,
    DataError,
    NumericError,
    ShapeError,
)
from .gradcheck import check_variant
from .metrics import PredictionRecord, emit_scorer_file, macro_f1, write_report
from .net import VARIANTS, ModelConfig, ModelParams, forward, predict
from .train import EpochReport, fit

log = logging.getLogger("rrgru")

EXIT_OK, EXIT_GRADCHECK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4

VOCAB_FILE = "vocab.txt"
TRAIN_CACHE = "train.cache"
TEST_CACHE = "test.cache"
COVERAGE_FILE = "embeddings_coverage.json"
TRAIN_LOG = "train.log"


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_file(path: str, what: str) -> Path:
    if not path:
        raise ConfigError(f"no {what} given")
    p = Path(path)
    if not p.is_file():
        raise DataError(f"{what} not found", path=p)
    return p


def _embeddings(cfg: RunConfig, vocab: corpus.Vocabulary) -> corpus.EmbeddingMatrix:
    seed = substream_seed(cfg.seed, "embeddings")
    if cfg.embeddings:
        emb = corpus.load_embeddings(_require_file(cfg.embeddings, "embeddings file"), vocab, seed)
        if emb.d_e != cfg.d_e:
            raise ConfigError(f"embedding file has dimension {emb.d_e} but d_e = {cfg.d_e}")
        return emb
    log.warning("no embeddings file configured; using random word vectors")
    return corpus.random_embeddings(vocab, cfg.d_e, seed)


def cmd_preprocess(cfg: RunConfig) -> int:
    train_path = _require_file(cfg.train_file, "training file")
    test_path = _require_file(cfg.test_file, "test file") if cfg.test_file else None
    if cfg.embeddings:
        _require_file(cfg.embeddings, "embeddings file")
    out = _out(cfg)

    vocab = corpus.Vocabulary()
    train = corpus.tokenize_all(corpus.parse_semeval(train_path), vocab, frozen=False)
    corpus.write_cache(train, out / TRAIN_CACHE)
    if test_path is not None:
        test = corpus.tokenize_all(corpus.parse_semeval(test_path), vocab, frozen=True)
        corpus.write_cache(test, out / TEST_CACHE)
    vocab.save(out / VOCAB_FILE)

    report = {"seed": cfg.seed, "vocab_size": len(vocab), "vocab_sha256": vocab.sha256(), "train_examples": len(train)}
    if test_path is not None:
        report["test_examples"] = len(test)
    if cfg.embeddings:
        emb = _embeddings(cfg, vocab)
        report.update(embeddings_dim=emb.d_e, **emb.coverage)
    (out / COVERAGE_FILE).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    (out / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
    print(f"{len(train)} training examples, vocabulary of {len(vocab)} tokens -> {out}")
    return EXIT_OK


def _load_vocab(cfg: RunConfig) -> corpus.Vocabulary:
    path = Path(cfg.out_dir) / VOCAB_FILE
    if not path.is_file():
        raise DataError("vocabulary missing; run 'rrgru preprocess' first", path=path)
    return corpus.Vocabulary.load(path)


def cmd_train(cfg: RunConfig) -> int:
    out = _out(cfg)
    vocab = _load_vocab(cfg)
    cache = out / TRAIN_CACHE
    if not cache.is_file():
        raise DataError("training cache missing; run 'rrgru preprocess' first", path=cache)
    data = corpus.read_cache(cache)
    if not data:
        raise DataError("training cache is empty", path=cache)

    model_cfg = cfg.model_config()
    params = ModelParams.init(model_cfg, _embeddings(cfg, vocab).matrix, substream(cfg.seed, "init"))
    train, valid = data, []
    if cfg.folds >= 2:
        train, valid = corpus.kfold_split(data, cfg.folds, substream_seed(cfg.seed, "folds"))[cfg.fold]
    log.info("training on %d examples, validating on %d", len(train), len(valid))

    log_path = out / TRAIN_LOG
    with open(log_path, "w", encoding="utf-8") as fh:
        fh.write("epoch\tmean_loss\ttrain_accuracy\tvalid_macro_f1\n")

        def on_epoch(r: EpochReport):
            f1 = "" if r.valid_f1 is None else f"{r.valid_f1:.6f}"
            fh.write(f"{r.epoch}\t{r.mean_loss:.6f}\t{r.train_accuracy:.6f}\t{f1}\n")
            fh.flush()

        result = fit(
            train, params, model_cfg, cfg.train_config(), cfg.loss_config(),
            substream(cfg.seed, "shuffle"), substream(cfg.seed, "dropout"),
            valid=valid, on_epoch=on_epoch,
        )
    ckpt = cfg.checkpoint_path
    save_checkpoint(ckpt, result.best_params.arrays(), cfg.to_dict(), vocab.sha256())
    (out / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
    msg = f"saved {ckpt} (epoch {result.best_epoch}"
    if result.best_f1 is not None:
        msg += f", validation macro-F1 {result.best_f1:.4f}"
    print(msg + ")")
    return EXIT_OK


def load_model(cfg: RunConfig) -> tuple[ModelParams, ModelConfig, corpus.Vocabulary]:
    """Checkpoint plus the run's vocabulary; refuses on any mismatch."""
    header, arrays = load_checkpoint(cfg.checkpoint_path)
    saved = header["config"]
    model_cfg = ModelConfig(d_e=saved["d_e"], d_h=saved["d_h"], k=saved["k"], variant=saved["variant"])
    vocab = _load_vocab(cfg)
    if vocab.sha256() != header["vocab_sha256"]:
        raise CheckpointError(
            f"vocabulary hash {vocab.sha256()} does not match checkpoint's {header['vocab_sha256']}"
        )
    check_arrays(arrays, ModelParams.expected_shapes(model_cfg, len(vocab)))
    return ModelParams(arrays), model_cfg, vocab


def _predict_file(cfg: RunConfig, labeled: bool):
    params, model_cfg, vocab = load_model(cfg)
    path = _require_file(cfg.test_file, "test file")
    raw = corpus.parse_semeval(path, labeled=labeled)
    if not raw:
        raise ContractError(f"{path} contains no examples")
    examples = corpus.tokenize_all(raw, vocab, frozen=True)
    preds = [predict(forward(ex, params, model_cfg).s_c) for ex in examples]
    return examples, preds


def cmd_eval(cfg: RunConfig) -> int:
    examples, preds = _predict_file(cfg, labeled=True)
    out = _out(cfg)
    gold = [ex.label_id for ex in examples]
    emit_scorer_file([PredictionRecord(ex.id, corpus.LABELS.decode(p)) for ex, p in zip(examples, preds)],
                     out / "predictions.txt")
    emit_scorer_file([PredictionRecord(ex.id, corpus.LABELS.decode(g)) for ex, g in zip(examples, gold)],
                     out / "answer_key.txt")
    report = macro_f1(gold, preds)
    write_report(report, out)
    print(f"macro-F1 (9 relations, directional, Other excluded): {100 * report.macro_f1:.2f}")
    print(f"accuracy: {100 * report.accuracy:.2f}  ({len(examples)} examples)")
    return EXIT_OK


def cmd_predict(cfg: RunConfig) -> int:
    examples, preds = _predict_file(cfg, labeled=False)
    out = _out(cfg) / "predictions.txt"
    emit_scorer_file([PredictionRecord(ex.id, corpus.LABELS.decode(p)) for ex, p in zip(examples, preds)], out)
    print(f"wrote {len(preds)} predictions to {out}")
    return EXIT_OK


def cmd_gradcheck(cfg: RunConfig, variants=VARIANTS) -> int:
    ok = True
    for variant in variants:
        report = check_variant(variant, seed=cfg.seed)
        print(f"[{variant}]")
        print(report.summary())
        ok &= report.passed
    return EXIT_OK if ok else EXIT_GRADCHECK


COMMANDS = {
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "gradcheck": cmd_gradcheck,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file; flags override it")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        kw = {"default": None, "dest": f.name, "metavar": f.name.upper()}
        if f.name == "variant":
            kw["choices"] = VARIANTS
            kw.pop("metavar")
        common.add_argument(flag, **kw)
    parser = argparse.ArgumentParser(prog="rrgru", description="Range-restricted bidirectional GRU relation classifier")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig) if getattr(args, f.name) is not None}
    cfg.update(overrides)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    level = os.environ.get("RRGRU_LOG", "info").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "gradcheck":
            variants = (args.variant,) if args.variant else VARIANTS
            return cmd_gradcheck(cfg, variants)
        return COMMANDS[args.command](cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, CheckpointError, ContractError, ShapeError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as err:
        print(f"numeric error: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
