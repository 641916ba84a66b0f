"""Finite-difference check of the full training loss on a tiny model."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .corpus import E1_CLOSE, E1_OPEN, E2_CLOSE, E2_OPEN, LABELS, TokenizedExample, Vocabulary
from .net import ModelConfig, ModelParams
from .train import LossConfig, TrainConfig, batch_loss


def tiny_problem(variant: str, seed: int = 0, d_e: int = 8, d_h: int = 6, k: int = 1):
    """A 7-token sentence pair (one directional gold, one Other) and random params."""
    rng = np.random.default_rng(seed)
    vocab = Vocabulary(["w0", "w1", "w2", "w3", "w4"])
    ind = {t: vocab.stoi[t] for t in (E1_OPEN, E1_CLOSE, E2_OPEN, E2_CLOSE)}
    w = [vocab.stoi[f"w{i}"] for i in range(5)]
    # <e1> w0 </e1> w1 <e2> w2 </e2>  and a reversed-order variant
    ex1 = TokenizedExample(1, (ind[E1_OPEN], w[0], ind[E1_CLOSE], w[1], ind[E2_OPEN], w[2], ind[E2_CLOSE]), 1, 5,
                           int(rng.integers(0, LABELS.n_directional)))
    ex2 = TokenizedExample(2, (w[3], ind[E2_OPEN], w[4], ind[E2_CLOSE], ind[E1_OPEN], w[1], ind[E1_CLOSE]), 5, 2,
                           LABELS.other_id)
    cfg = ModelConfig(d_e=d_e, d_h=d_h, k=k, variant=variant)
    params = ModelParams.init(cfg, rng.uniform(-0.5, 0.5, size=(d_e, len(vocab))), rng)
    # non-zero attention and bias so their grads are not trivially tiny
    for name in params:
        if name.startswith("att.") or name == "b_c":
            params[name].data[...] = rng.uniform(-0.5, 0.5, size=params[name].shape)
    return [ex1, ex2], params, cfg


def check_variant(variant: str, seed: int = 0, eps: float = 1e-5, tol: float = 1e-4) -> ad.GradCheckReport:
    """Ranking loss plus L2 on the tiny problem, dropout off, every array perturbed."""
    examples, params, cfg = tiny_problem(variant, seed)
    train_cfg = TrainConfig(dropout_embed=0.0, dropout_hidden=0.0, dropout_final=0.0)
    loss_cfg = LossConfig()

    def loss():
        total, _ = batch_loss(examples, params, cfg, train_cfg, loss_cfg, None)
        return total

    return ad.grad_check(loss, dict(params.items()), eps=eps, tol=tol)
