"""Range-restricted bidirectional GRUs with attention, and the class scorer.

Three bidirectional GRU layers read the same embedded sentence but each is
masked to its own inclusive token interval: a +/-k window around each
nominal and the span between the nominals. The nominal layers contribute
the hidden states at the nominal position; the relation layer is pooled by
attention, separately per direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Value
from .corpus import LABELS, TokenizedExample
from .errors import ContractError, ShapeError

VARIANTS = ("full", "relation_only", "nominals_only", "att_bgru")
GATES = ("W_r", "U_r", "W_z", "U_z", "W", "U")
DIRECTIONS = ("fwd", "bwd")

# recurrent layers and attention usage per variant
_LAYERS = {
    "full": ("e1", "e2", "rel"),
    "relation_only": ("rel",),
    "nominals_only": ("e1", "e2"),
    "att_bgru": ("sent",),
}


@dataclass
class ModelConfig:
    d_e: int = 100
    d_h: int = 100
    k: int = 3
    variant: str = "full"
    n_relations: int = 9
    n_directional: int = 18

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ContractError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if min(self.d_e, self.d_h) <= 0 or self.k < 0:
            raise ContractError("d_e and d_h must be positive and k non-negative")

    @property
    def layers(self) -> tuple[str, ...]:
        return _LAYERS[self.variant]

    @property
    def uses_attention(self) -> bool:
        return self.variant in ("full", "relation_only", "att_bgru")

    @property
    def final_dim(self) -> int:
        return {"full": 3, "relation_only": 1, "nominals_only": 2, "att_bgru": 1}[self.variant] * self.d_h


@dataclass(frozen=True)
class RangeSet:
    e1: tuple[int, int]
    e2: tuple[int, int]
    rel: tuple[int, int]
    n: int

    @property
    def sent(self) -> tuple[int, int]:
        return (0, self.n - 1)

    def get(self, layer: str) -> tuple[int, int]:
        return getattr(self, layer)

    def covered(self) -> set[int]:
        out: set[int] = set()
        for lo, hi in (self.e1, self.e2, self.rel):
            out.update(range(lo, hi + 1))
        return out


def compute_ranges(ex: TokenizedExample, cfg: ModelConfig) -> RangeSet:
    n, k = len(ex.token_ids), cfg.k

    def window(p):
        return (max(0, p - k), min(n - 1, p + k))

    lo, hi = sorted((ex.p_e1, ex.p_e2))
    return RangeSet(window(ex.p_e1), window(ex.p_e2), (lo, hi), n)


def glorot(rng: np.random.Generator, shape) -> np.ndarray:
    bound = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-bound, bound, size=shape)


class ModelParams:
    """All trainable arrays, keyed by dotted names (``gru.e1.fwd.W_r`` ...).

    Iteration order is fixed, which keeps checkpoints and optimizer state
    reproducible.
    """

    def __init__(self, arrays: Mapping[str, np.ndarray]):
        self.values: dict[str, Value] = {name: Value(arr, name=name) for name, arr in arrays.items()}

    @classmethod
    def init(cls, cfg: ModelConfig, embeddings: np.ndarray, rng: np.random.Generator) -> "ModelParams":
        if embeddings.shape[0] != cfg.d_e:
            raise ShapeError(f"embeddings have {embeddings.shape[0]} rows, config says d_e={cfg.d_e}")
        arrays: dict[str, np.ndarray] = {"embeddings": np.array(embeddings, dtype=np.float64)}
        for layer in cfg.layers:
            for d in DIRECTIONS:
                for gate in GATES:
                    cols = cfg.d_e if gate.startswith("W") else cfg.d_h
                    arrays[f"gru.{layer}.{d}.{gate}"] = glorot(rng, (cfg.d_h, cols))
        if cfg.uses_attention:
            for d in DIRECTIONS:
                arrays[f"att.{d}"] = rng.uniform(-0.01, 0.01, size=(cfg.d_h, 1))
        arrays["W_c"] = glorot(rng, (cfg.n_directional, cfg.final_dim))
        arrays["b_c"] = np.zeros((cfg.n_directional, 1))
        return cls(arrays)

    @staticmethod
    def expected_shapes(cfg: ModelConfig, vocab_size: int) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {"embeddings": (cfg.d_e, vocab_size)}
        for layer in cfg.layers:
            for d in DIRECTIONS:
                for gate in GATES:
                    shapes[f"gru.{layer}.{d}.{gate}"] = (cfg.d_h, cfg.d_e if gate.startswith("W") else cfg.d_h)
        if cfg.uses_attention:
            for d in DIRECTIONS:
                shapes[f"att.{d}"] = (cfg.d_h, 1)
        shapes["W_c"] = (cfg.n_directional, cfg.final_dim)
        shapes["b_c"] = (cfg.n_directional, 1)
        return shapes

    def __getitem__(self, name: str) -> Value:
        return self.values[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def items(self):
        return self.values.items()

    def gru(self, layer: str, direction: str) -> dict[str, Value]:
        return {g: self.values[f"gru.{layer}.{direction}.{g}"] for g in GATES}

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: v.data for name, v in self.values.items()}

    def copy(self) -> "ModelParams":
        return ModelParams({name: v.data.copy() for name, v in self.values.items()})

    def zero_grad(self) -> None:
        for v in self.values.values():
            v.zero_grad()

    def check(self, cfg: ModelConfig) -> None:
        vocab_size = self.values["embeddings"].shape[1]
        expected = self.expected_shapes(cfg, vocab_size)
        if list(expected) != list(self.values):
            raise ShapeError(f"parameter names {list(self.values)} do not match variant {cfg.variant!r}")
        for name, shape in expected.items():
            if self.values[name].shape != shape:
                raise ShapeError(f"{name}: expected shape {shape}, got {self.values[name].shape}")


@dataclass
class DropoutConfig:
    embed: float = 0.0
    hidden: float = 0.0
    final: float = 0.0


@dataclass
class ForwardTrace:
    ranges: RangeSet
    hidden: dict[tuple[str, str], list[Value]] = field(default_factory=dict)
    alpha: dict[str, Value] = field(default_factory=dict)
    v_e1: Value | None = None
    v_e2: Value | None = None
    v_rel: Value | None = None
    v_fin: Value | None = None
    s_c: Value | None = None


def gru_run(inputs: Value, params: Mapping[str, Value], direction: str) -> list[Value]:
    """Run one GRU direction over the columns of ``inputs`` (shape ``(d_e, T)``).

    Returns the hidden states in position order (index 0 is the range's
    low end) whichever direction was run. The state entering the first step
    is zero.
    """
    if inputs.data.ndim != 2 or inputs.shape[1] < 1:
        raise ContractError(f"gru_run: need a non-empty (d_e, T) input, got {inputs.shape}")
    if direction not in DIRECTIONS:
        raise ContractError(f"gru_run: unknown direction {direction!r}")
    T = inputs.shape[1]
    d_h = params["U"].shape[0]
    # input projections for the whole range at once
    x_r = ad.matmul(params["W_r"], inputs)
    x_z = ad.matmul(params["W_z"], inputs)
    x_h = ad.matmul(params["W"], inputs)
    steps = range(T) if direction == "fwd" else range(T - 1, -1, -1)
    h = Value(np.zeros((d_h, 1)))
    out: list[Value | None] = [None] * T
    for t in steps:
        r = ad.sigmoid(ad.add(ad.column(x_r, t), ad.matmul(params["U_r"], h)))
        z = ad.sigmoid(ad.add(ad.column(x_z, t), ad.matmul(params["U_z"], h)))
        h_tilde = ad.tanh(ad.add(ad.column(x_h, t), ad.matmul(params["U"], ad.mul(r, h))))
        h = ad.add(ad.mul(z, h), ad.mul(ad.one_minus(z), h_tilde))
        out[t] = h
    return out  # type: ignore[return-value]


def nominal_vector(fwd: Sequence[Value], bwd: Sequence[Value], offset: int) -> Value:
    """Sum of forward and backward hidden states at the nominal's slot."""
    return ad.add(fwd[offset], bwd[offset])


def attention_pool(H: Value, w_att: Value) -> tuple[Value, Value]:
    """softmax(w_att^T tanh(H)) weighted sum of H's columns.

    Returns the pooled ``(d_h, 1)`` vector and the ``(1, T)`` weights.
    """
    scores = ad.matmul(ad.transpose(w_att), ad.tanh(H))
    alpha = ad.softmax_rowvec(scores)
    v = ad.matmul(H, ad.transpose(alpha))
    return v, alpha


def apply_dropout(v: Value, rate: float, mode: str, rng: np.random.Generator | None) -> Value:
    """Inverted dropout: zero each entry with probability ``rate``, scale survivors.

    Identity in ``infer`` mode or at rate 0.
    """
    if not 0.0 <= rate < 1.0:
        raise ContractError(f"dropout rate {rate} not in [0, 1)")
    if mode not in ("train", "infer"):
        raise ContractError(f"unknown dropout mode {mode!r}")
    if mode == "infer" or rate == 0.0:
        return v
    keep = (rng.random(v.shape) >= rate) / (1.0 - rate)
    return ad.mask(v, keep)


def forward(
    ex: TokenizedExample,
    params: ModelParams,
    cfg: ModelConfig,
    dropout: DropoutConfig | None = None,
    rng: np.random.Generator | None = None,
) -> ForwardTrace:
    """Score one example. Dropout is active only when both ``dropout`` and ``rng`` are given."""
    drop = dropout if (dropout is not None and rng is not None) else DropoutConfig()
    mode = "train" if rng is not None else "infer"
    ranges = compute_ranges(ex, cfg)
    trace = ForwardTrace(ranges)
    emb = params["embeddings"]
    if emb.shape[0] != cfg.d_e:
        raise ShapeError(f"embeddings have {emb.shape[0]} rows, config says d_e={cfg.d_e}")

    E = apply_dropout(ad.take_columns(emb, ex.token_ids), drop.embed, mode, rng)

    def run_layer(layer):
        lo, hi = ranges.get(layer)
        E_range = ad.take_columns(E, range(lo, hi + 1)) if (lo, hi) != (0, E.shape[1] - 1) else E
        for d in DIRECTIONS:
            hs = gru_run(E_range, params.gru(layer, d), d)
            trace.hidden[(layer, d)] = [apply_dropout(h, drop.hidden, mode, rng) for h in hs]
        return lo

    def nominal(layer, p):
        lo = run_layer(layer)
        return nominal_vector(trace.hidden[(layer, "fwd")], trace.hidden[(layer, "bwd")], p - lo)

    def pooled(layer):
        run_layer(layer)
        parts = []
        for d in DIRECTIONS:
            v, alpha = attention_pool(ad.hstack(trace.hidden[(layer, d)]), params[f"att.{d}"])
            trace.alpha[d] = alpha
            parts.append(v)
        return ad.add(*parts)

    pieces = []
    if cfg.variant in ("full", "nominals_only"):
        trace.v_e1 = nominal("e1", ex.p_e1)
        trace.v_e2 = nominal("e2", ex.p_e2)
    if cfg.variant in ("full", "relation_only"):
        trace.v_rel = pooled("rel")
    if cfg.variant == "att_bgru":
        trace.v_rel = pooled("sent")

    if cfg.variant == "full":
        pieces = [trace.v_e1, trace.v_rel, trace.v_e2]
    elif cfg.variant == "nominals_only":
        pieces = [trace.v_e1, trace.v_e2]
    else:
        pieces = [trace.v_rel]
    v_fin = ad.concat(pieces) if len(pieces) > 1 else pieces[0]
    trace.v_fin = v_fin
    W_c = params["W_c"]
    if W_c.shape[1] != v_fin.shape[0]:
        raise ShapeError(f"W_c has {W_c.shape[1]} columns but v_fin has length {v_fin.shape[0]}")
    v_fin = apply_dropout(v_fin, drop.final, mode, rng)
    trace.s_c = ad.add(ad.matmul(W_c, v_fin), params["b_c"])
    return trace


def predict(s_c) -> int:
    """Arg-max directional label, or Other when every score is negative."""
    scores = np.asarray(s_c.data if isinstance(s_c, Value) else s_c, dtype=np.float64).reshape(-1)
    if scores.size != LABELS.n_directional:
        raise ShapeError(f"predict: expected {LABELS.n_directional} scores, got {scores.size}")
    if scores.max() < 0.0:
        return LABELS.other_id
    return int(np.argmax(scores))


def predict_examples(examples: Sequence[TokenizedExample], params: ModelParams, cfg: ModelConfig) -> list[int]:
    return [predict(forward(ex, params, cfg).s_c) for ex in examples]
