"""Ranking loss, L2 penalty, AdaDelta, and the batch training loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Value
from .corpus import LABELS, TokenizedExample
from .errors import ContractError, NumericError
from .net import DropoutConfig, ModelConfig, ModelParams, apply_dropout, forward, predict  # noqa: F401

log = logging.getLogger(__name__)


@dataclass
class LossConfig:
    m_plus: float = 2.5
    m_minus: float = 0.5
    gamma: float = 2.0

    def __post_init__(self):
        if self.gamma <= 0 or self.m_plus < 0 or self.m_minus < 0:
            raise ContractError("gamma must be positive and margins non-negative")


@dataclass
class TrainConfig:
    batch_size: int = 10
    epochs: int = 100
    dropout_embed: float = 0.3
    dropout_hidden: float = 0.3
    dropout_final: float = 0.7
    l2_coeff: float = 1e-5
    l2_embeddings: bool = False
    l2_bias: bool = False
    rho: float = 0.95
    eps: float = 1e-6
    lr_scale: float = 1.0

    def __post_init__(self):
        for rate in (self.dropout_embed, self.dropout_hidden, self.dropout_final):
            if not 0.0 <= rate < 1.0:
                raise ContractError(f"dropout rate {rate} not in [0, 1)")
        if self.batch_size < 1:
            raise ContractError("batch_size must be at least 1")

    @property
    def dropout(self) -> DropoutConfig:
        return DropoutConfig(self.dropout_embed, self.dropout_hidden, self.dropout_final)


def ranking_loss(s_c: Value, gold: int, cfg: LossConfig = LossConfig()) -> Value:
    """Pairwise margin loss on the class scores.

    softplus(gamma * (m_plus - s_gold)) + softplus(gamma * (m_minus + s_competitor)),
    where the competitor is the best-scoring row other than the gold one.
    Other has no score row, so for Other examples only the second term is
    kept and the competitor is the best of all rows.
    """
    n = s_c.data.size
    if gold == LABELS.other_id:
        neg = ad.max_over(s_c, range(n))
        return ad.softplus(ad.scale(ad.shift(neg, cfg.m_minus), cfg.gamma))
    if not 0 <= gold < n:
        raise ContractError(f"ranking_loss: gold label {gold} out of range")
    pos = ad.pick(s_c, gold)
    neg = ad.max_over(s_c, [i for i in range(n) if i != gold])
    pos_term = ad.softplus(ad.scale(ad.shift(ad.scale(pos, -1.0), cfg.m_plus), cfg.gamma))
    neg_term = ad.softplus(ad.scale(ad.shift(neg, cfg.m_minus), cfg.gamma))
    return ad.add(pos_term, neg_term)


def regularized_names(params: ModelParams, embeddings: bool = False, bias: bool = False) -> list[str]:
    names = []
    for name in params:
        if name == "embeddings" and not embeddings:
            continue
        if name == "b_c" and not bias:
            continue
        names.append(name)
    return names


def l2_penalty(params, coeff: float, names: Sequence[str] | None = None) -> Value:
    """coeff * sum of squared entries over ``names`` (default: all but embeddings and b_c)."""
    if coeff < 0:
        raise ContractError("l2_penalty: coeff must be non-negative")
    if names is None:
        names = regularized_names(params)
    terms = [ad.sum_all(ad.square(params[n])) for n in names]
    return ad.scale(ad.add_scalars(terms), coeff)


@dataclass
class AdaDeltaState:
    sq_grad: dict[str, np.ndarray]
    sq_delta: dict[str, np.ndarray]
    rho: float = 0.95
    eps: float = 1e-6
    lr_scale: float = 1.0

    @classmethod
    def for_params(cls, params, rho=0.95, eps=1e-6, lr_scale=1.0) -> "AdaDeltaState":
        sq_grad = {name: np.zeros_like(params[name].data) for name in params}
        sq_delta = {name: np.zeros_like(params[name].data) for name in params}
        return cls(sq_grad, sq_delta, rho, eps, lr_scale)


def adadelta_step(params, state: AdaDeltaState) -> None:
    """One AdaDelta update from the current grads, which are then zeroed."""
    rho, eps = state.rho, state.eps
    for name in params:
        if not np.isfinite(params[name].grad).all():
            raise NumericError(f"non-finite gradient in {name}")
    for name in params:
        p = params[name]
        g = p.grad
        acc_g, acc_dx = state.sq_grad[name], state.sq_delta[name]
        acc_g *= rho
        acc_g += (1.0 - rho) * g * g
        delta = -np.sqrt(acc_dx + eps) / np.sqrt(acc_g + eps) * g
        acc_dx *= rho
        acc_dx += (1.0 - rho) * delta * delta
        p.data += state.lr_scale * delta
        p.zero_grad()


@dataclass
class EpochReport:
    epoch: int
    mean_loss: float
    train_accuracy: float
    valid_f1: float | None = None


def batch_loss(
    batch: Sequence[TokenizedExample],
    params: ModelParams,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    loss_cfg: LossConfig,
    rng: np.random.Generator | None,
) -> tuple[Value, list[float]]:
    """Sum of per-example ranking losses plus the L2 penalty.

    Pass ``rng=None`` to disable dropout.
    """
    losses = []
    for ex in batch:
        trace = forward(ex, params, model_cfg, train_cfg.dropout, rng)
        losses.append(ranking_loss(trace.s_c, ex.label_id, loss_cfg))
    names = regularized_names(params, train_cfg.l2_embeddings, train_cfg.l2_bias)
    total = ad.add(ad.add_scalars(losses), l2_penalty(params, train_cfg.l2_coeff, names))
    return total, [float(l.data) for l in losses]


def accuracy(examples: Sequence[TokenizedExample], params: ModelParams, cfg: ModelConfig) -> float:
    if not examples:
        return 0.0
    hits = sum(predict(forward(ex, params, cfg).s_c) == ex.label_id for ex in examples)
    return hits / len(examples)


def train_epoch(
    data: Sequence[TokenizedExample],
    params: ModelParams,
    state: AdaDeltaState,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    loss_cfg: LossConfig,
    shuffle_rng: np.random.Generator,
    dropout_rng: np.random.Generator | None,
    epoch: int = 0,
) -> EpochReport:
    """One pass of shuffled mini-batches, one AdaDelta step per batch.

    The reported accuracy is measured after the epoch with dropout off.
    """
    if not data:
        raise ContractError("train_epoch: no training data")
    order = shuffle_rng.permutation(len(data))
    example_losses: list[float] = []
    for b, start in enumerate(range(0, len(order), train_cfg.batch_size)):
        batch = [data[i] for i in order[start : start + train_cfg.batch_size]]
        with ad.Graph() as graph:
            loss, per_example = batch_loss(batch, params, model_cfg, train_cfg, loss_cfg, dropout_rng)
        if not np.isfinite(loss.data):
            raise NumericError(f"loss diverged at epoch {epoch}, batch {b}")
        ad.backward(loss, graph)
        try:
            adadelta_step(params, state)
        except NumericError as err:
            raise NumericError(f"{err} at epoch {epoch}, batch {b}") from None
        example_losses.extend(per_example)
    return EpochReport(epoch, float(np.mean(example_losses)), accuracy(data, params, model_cfg))


@dataclass
class FitResult:
    params: ModelParams
    best_params: ModelParams
    history: list[EpochReport] = field(default_factory=list)
    best_epoch: int = 0
    best_f1: float | None = None


def fit(
    train: Sequence[TokenizedExample],
    params: ModelParams,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    loss_cfg: LossConfig,
    shuffle_rng: np.random.Generator,
    dropout_rng: np.random.Generator | None,
    valid: Sequence[TokenizedExample] = (),
    on_epoch: Callable[[EpochReport], None] | None = None,
) -> FitResult:
    """Train for ``train_cfg.epochs`` epochs, keeping the best-validation-F1 weights.

    Without validation data the final weights are kept. Epoch 0 of the
    history is never recorded; with zero epochs the initial weights are
    returned untouched.
    """
    from .metrics import macro_f1

    state = AdaDeltaState.for_params(params, train_cfg.rho, train_cfg.eps, train_cfg.lr_scale)
    result = FitResult(params, params.copy())
    best = -1.0
    for epoch in range(1, train_cfg.epochs + 1):
        report = train_epoch(
            train, params, state, model_cfg, train_cfg, loss_cfg, shuffle_rng, dropout_rng, epoch
        )
        if valid:
            preds = [predict(forward(ex, params, model_cfg).s_c) for ex in valid]
            report.valid_f1 = macro_f1([ex.label_id for ex in valid], preds).macro_f1
            if report.valid_f1 > best:
                best = report.valid_f1
                result.best_params = params.copy()
                result.best_epoch, result.best_f1 = epoch, best
        else:
            result.best_params = params.copy()
            result.best_epoch = epoch
        result.history.append(report)
        log.info(
            "epoch %d loss %.4f train_acc %.4f valid_f1 %s",
            epoch, report.mean_loss, report.train_accuracy,
            "-" if report.valid_f1 is None else f"{report.valid_f1:.4f}",
        )
        if on_epoch is not None:
            on_epoch(report)
    return result
