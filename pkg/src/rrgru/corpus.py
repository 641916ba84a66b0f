"""SemEval-2010 Task 8 ingestion: parsing, tokenizing, vocabulary, labels, embeddings."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, FormatError, LabelError, ParseError

RELATIONS = (
    "Cause-Effect",
    "Component-Whole",
    "Content-Container",
    "Entity-Destination",
    "Entity-Origin",
    "Instrument-Agency",
    "Member-Collection",
    "Message-Topic",
    "Product-Producer",
)
OTHER = "Other"

E1_OPEN, E1_CLOSE, E2_OPEN, E2_CLOSE = "<e1>", "</e1>", "<e2>", "</e2>"
INDICATORS = (E1_OPEN, E1_CLOSE, E2_OPEN, E2_CLOSE)
UNK = "<unk>"

_PUNCT_RE = re.compile(r"""([.,!?;:'"()])""")
_MARKUP_RE = re.compile(r"(</?e[12]>)")
_SENTENCE_RE = re.compile(r'^(\d+)\t"(.*)"\s*$')
_LABEL_RE = re.compile(r"^([A-Za-z]+-[A-Za-z]+)\((e[12]),(e[12])\)$")


class LabelSet:
    """The 19 labels: 18 directional ones (ids 0..17) then Other (id 18).

    Relation ``i`` owns ids ``2i`` for (e1,e2) and ``2i+1`` for (e2,e1), so
    the first 18 ids double as classifier row indices.
    """

    def __init__(self, relations: Sequence[str] = RELATIONS):
        self.relations = tuple(relations)
        self.labels: list[str] = []
        self._dir: list[tuple[str, str] | None] = []
        for rel in self.relations:
            for direction in ("(e1,e2)", "(e2,e1)"):
                self.labels.append(rel + direction)
                self._dir.append((rel, direction))
        self.labels.append(OTHER)
        self._dir.append(None)
        self._ids = {lab: i for i, lab in enumerate(self.labels)}
        self.other_id = len(self.labels) - 1

    def __len__(self):
        return len(self.labels)

    @property
    def n_directional(self) -> int:
        return len(self.labels) - 1

    def encode(self, label: str) -> int:
        try:
            return self._ids[label.strip()]
        except KeyError:
            raise LabelError(f"unknown relation label {label!r}") from None

    def decode(self, label_id: int) -> str:
        if not 0 <= label_id < len(self.labels):
            raise LabelError(f"label id {label_id} out of range")
        return self.labels[label_id]

    def relation_of(self, label_id: int) -> int | None:
        """Index of the undirected relation, or None for Other."""
        if label_id == self.other_id:
            return None
        return label_id // 2

    def direction_of(self, label_id: int) -> tuple[str, str] | None:
        return self._dir[label_id]


LABELS = LabelSet()


@dataclass(frozen=True)
class RawExample:
    id: int
    text: str
    label: str | None


@dataclass(frozen=True)
class TokenizedExample:
    id: int
    token_ids: tuple[int, ...]
    p_e1: int
    p_e2: int
    label_id: int

    def __len__(self):
        return len(self.token_ids)


class Vocabulary:
    """Token to id map. Id 0 is UNK, ids 1..4 are the position indicators."""

    def __init__(self, tokens: Iterable[str] = ()):
        self.itos: list[str] = []
        self.stoi: dict[str, int] = {}
        for tok in (UNK, *INDICATORS):
            self.add(tok)
        for tok in tokens:
            self.add(tok)

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def add(self, token: str) -> int:
        idx = self.stoi.get(token)
        if idx is None:
            idx = len(self.itos)
            self.itos.append(token)
            self.stoi[token] = idx
        return idx

    def lookup(self, token: str, frozen: bool = True) -> int:
        if frozen:
            return self.stoi.get(token, self.stoi[UNK])
        return self.add(token)

    @property
    def unk_id(self) -> int:
        return self.stoi[UNK]

    def sha256(self) -> str:
        return hashlib.sha256("\n".join(self.itos).encode("utf-8")).hexdigest()

    def save(self, path) -> None:
        Path(path).write_text("".join(tok + "\n" for tok in self.itos), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        vocab = cls()
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        head = [UNK, *INDICATORS]
        if lines[: len(head)] != head:
            raise FormatError("vocabulary must start with the reserved tokens", path=path)
        for tok in lines[len(head) :]:
            vocab.add(tok)
        if len(vocab) != len(lines):
            raise FormatError("vocabulary contains duplicate tokens", path=path)
        return vocab


def parse_semeval(path, labeled: bool = True) -> list[RawExample]:
    """Read a file in the official task format.

    Labeled blocks are: ``<id>\\t"<sentence>"``, the relation line, an
    optional ``Comment:`` line, then blank lines. Unlabeled files (the bare
    official test file) hold only sentence lines.
    """
    text = Path(path).read_text(encoding="utf-8-sig")
    lines = text.splitlines()
    examples: list[RawExample] = []
    i = 0
    while i < len(lines):
        line = lines[i].strip("\r")
        if not line.strip():
            i += 1
            continue
        m = _SENTENCE_RE.match(line)
        if not m:
            raise ParseError(f"expected '<id>\\t\"sentence\"', got {line[:60]!r}", path=path, line=i + 1)
        ex_id, sentence = int(m.group(1)), m.group(2)
        _check_markup(sentence, path, i + 1)
        i += 1
        label = None
        if labeled:
            rel_line = lines[i].strip() if i < len(lines) else ""
            if not rel_line or rel_line.startswith("Comment") or _SENTENCE_RE.match(rel_line):
                raise ParseError("missing relation line", path=path, line=i + 1)
            try:
                LABELS.encode(rel_line)
            except LabelError:
                raise LabelError(f"unknown relation label {rel_line!r}", path=path, line=i + 1) from None
            label = rel_line
            i += 1
            if i < len(lines) and lines[i].startswith("Comment"):
                i += 1
        examples.append(RawExample(ex_id, sentence, label))
    return examples


def _check_markup(sentence: str, path, lineno):
    tags = _MARKUP_RE.findall(sentence)
    if sorted(tags) != sorted(INDICATORS) or len(tags) != 4:
        raise ParseError("sentence must contain exactly one <e1>..</e1> and one <e2>..</e2>", path=path, line=lineno)
    pos = {t: sentence.index(t) for t in INDICATORS}
    if not (pos[E1_OPEN] < pos[E1_CLOSE] and pos[E2_OPEN] < pos[E2_CLOSE]):
        raise ParseError("nominal markup is not properly nested", path=path, line=lineno)
    if pos[E1_CLOSE] > pos[E2_OPEN] and pos[E2_CLOSE] > pos[E1_OPEN]:
        raise ParseError("nominal spans overlap", path=path, line=lineno)


def split_tokens(text: str) -> list[str]:
    """Lowercase, isolate the markup tags, split on whitespace, detach punctuation."""
    spaced = _MARKUP_RE.sub(r" \1 ", text.lower())
    tokens: list[str] = []
    for chunk in spaced.split():
        if chunk in INDICATORS:
            tokens.append(chunk)
        else:
            tokens.extend(p for p in _PUNCT_RE.split(chunk) if p)
    return tokens


def tokenize(ex: RawExample, vocab: Vocabulary, frozen: bool = False) -> TokenizedExample:
    tokens = split_tokens(ex.text)
    p = {}
    for tag in (E1_OPEN, E2_OPEN):
        at = tokens.index(tag)
        if at + 1 >= len(tokens) or tokens[at + 1] in INDICATORS:
            raise ParseError(f"empty nominal span in example {ex.id}")
        p[tag] = at + 1
    ids = tuple(vocab.lookup(t, frozen) for t in tokens)
    label_id = LABELS.encode(ex.label) if ex.label is not None else -1
    return TokenizedExample(ex.id, ids, p[E1_OPEN], p[E2_OPEN], label_id)


def tokenize_all(examples: Iterable[RawExample], vocab: Vocabulary, frozen: bool = False) -> list[TokenizedExample]:
    return [tokenize(ex, vocab, frozen) for ex in examples]


@dataclass
class EmbeddingMatrix:
    """Word vectors as columns: shape ``(d_e, |V|)``."""

    matrix: np.ndarray
    found: int = 0
    coverage: dict = field(default_factory=dict)

    @property
    def d_e(self) -> int:
        return self.matrix.shape[0]


def random_embeddings(vocab: Vocabulary, d_e: int, seed: int) -> EmbeddingMatrix:
    rng = np.random.default_rng(seed)
    mat = rng.uniform(-0.25, 0.25, size=(d_e, len(vocab)))
    return EmbeddingMatrix(mat, 0, {"vocab": len(vocab), "found": 0, "coverage": 0.0})


def load_embeddings(path, vocab: Vocabulary, seed: int) -> EmbeddingMatrix:
    """Load GloVe text vectors for the tokens in ``vocab``.

    Tokens missing from the file (indicators and UNK included) keep
    uniform random values in [-0.25, 0.25] drawn from ``seed``.
    """
    vectors: dict[int, np.ndarray] = {}
    d_e = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if len(parts) < 2:
                if not line.strip():
                    continue
                raise FormatError("expected a token followed by values", path=path, line=lineno)
            if d_e is None:
                d_e = len(parts) - 1
            elif len(parts) - 1 != d_e:
                raise FormatError(f"expected {d_e} values, found {len(parts) - 1}", path=path, line=lineno)
            idx = vocab.stoi.get(parts[0])
            if idx is None or idx in vectors:
                continue
            try:
                vectors[idx] = np.array(parts[1:], dtype=np.float64)
            except ValueError:
                raise FormatError("non-numeric embedding value", path=path, line=lineno) from None
    if d_e is None:
        raise FormatError("embedding file is empty", path=path)
    emb = random_embeddings(vocab, d_e, seed)
    for idx, vec in vectors.items():
        emb.matrix[:, idx] = vec
    emb.found = len(vectors)
    emb.coverage = {"vocab": len(vocab), "found": len(vectors), "coverage": len(vectors) / len(vocab)}
    return emb


def kfold_split(examples: Sequence, k: int, seed: int) -> list[tuple[list, list]]:
    """Seeded shuffle into ``k`` near-equal folds; returns (train, valid) per fold."""
    if k < 2:
        raise ContractError("kfold_split: k must be at least 2")
    if k > len(examples):
        raise ContractError(f"kfold_split: k={k} exceeds {len(examples)} examples")
    order = np.random.default_rng(seed).permutation(len(examples))
    folds = np.array_split(order, k)
    splits = []
    for f in range(k):
        valid_idx = set(folds[f].tolist())
        valid = [examples[i] for i in folds[f]]
        train = [examples[i] for i in order if i not in valid_idx]
        splits.append((train, valid))
    return splits


def write_cache(examples: Iterable[TokenizedExample], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ex in examples:
            ids = " ".join(map(str, ex.token_ids))
            fh.write(f"{ex.id}\t{ids}\t{ex.p_e1}\t{ex.p_e2}\t{ex.label_id}\n")


def read_cache(path) -> list[TokenizedExample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 5:
                raise FormatError("expected 5 tab-separated fields", path=path, line=lineno)
            try:
                ids = tuple(int(t) for t in fields[1].split())
                out.append(TokenizedExample(int(fields[0]), ids, int(fields[2]), int(fields[3]), int(fields[4])))
            except ValueError:
                raise FormatError("non-integer field", path=path, line=lineno) from None
    return out
