"""Direction-aware macro-F1 over the nine relations, plus scorer-format I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import LABELS
from .errors import ContractError, FormatError


@dataclass(frozen=True)
class PredictionRecord:
    id: int
    label: str


@dataclass
class RelationScore:
    tp: int
    pred_count: int
    gold_count: int
    precision: float
    recall: float
    f1: float


@dataclass
class MetricReport:
    per_relation: dict[str, RelationScore]
    macro_f1: float
    accuracy: float
    confusion: np.ndarray
    scored_relations: list[str] = field(default_factory=list)

    def to_tsv(self) -> str:
        rows = ["relation\ttp\tpredicted\tgold\tprecision\trecall\tf1"]
        for rel, s in self.per_relation.items():
            rows.append(
                f"{rel}\t{s.tp}\t{s.pred_count}\t{s.gold_count}\t{s.precision:.6f}\t{s.recall:.6f}\t{s.f1:.6f}"
            )
        rows.append(f"macro_f1\t\t\t\t\t\t{self.macro_f1:.6f}")
        rows.append(f"accuracy\t\t\t\t\t\t{self.accuracy:.6f}")
        return "\n".join(rows) + "\n"

    def to_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
            "scored_relations": self.scored_relations,
            "per_relation": {
                rel: {
                    "tp": s.tp, "predicted": s.pred_count, "gold": s.gold_count,
                    "precision": s.precision, "recall": s.recall, "f1": s.f1,
                }
                for rel, s in self.per_relation.items()
            },
            "labels": LABELS.labels,
            "confusion": self.confusion.tolist(),
        }


def confusion_matrix(gold: Sequence[int], pred: Sequence[int], n: int = len(LABELS)) -> np.ndarray:
    """Rows are gold labels, columns are predictions."""
    m = np.zeros((n, n), dtype=np.int64)
    np.add.at(m, (np.asarray(gold, dtype=np.int64), np.asarray(pred, dtype=np.int64)), 1)
    return m


def macro_f1(gold: Sequence[int], pred: Sequence[int]) -> MetricReport:
    """Unweighted mean of per-relation F1, Other excluded.

    A hit requires both relation and direction to match, while the predicted
    and gold counts of a relation pool both of its directions. Relations that
    never occur in either gold or predictions are left out of the mean.
    """
    if len(gold) != len(pred):
        raise ContractError(f"macro_f1: {len(gold)} gold labels vs {len(pred)} predictions")
    n = len(LABELS)
    for lab in (*gold, *pred):
        if not 0 <= lab < n:
            raise ContractError(f"macro_f1: invalid label id {lab}")
    conf = confusion_matrix(gold, pred)
    per_rel: dict[str, RelationScore] = {}
    scored = []
    for r, rel in enumerate(LABELS.relations):
        ids = [2 * r, 2 * r + 1]
        tp = int(conf[ids[0], ids[0]] + conf[ids[1], ids[1]])
        pred_count = int(conf[:, ids].sum())
        gold_count = int(conf[ids, :].sum())
        p = tp / pred_count if pred_count else 0.0
        rc = tp / gold_count if gold_count else 0.0
        f1 = 2 * p * rc / (p + rc) if p + rc > 0 else 0.0
        per_rel[rel] = RelationScore(tp, pred_count, gold_count, p, rc, f1)
        if pred_count or gold_count:
            scored.append(rel)
    macro = float(np.mean([per_rel[r].f1 for r in scored])) if scored else 0.0
    acc = float(np.trace(conf) / len(gold)) if len(gold) else 0.0
    return MetricReport(per_rel, macro, acc, conf, scored)


def emit_scorer_file(preds: Iterable[PredictionRecord], path) -> None:
    """Write ``<id>\\t<label>`` lines sorted by id, as the official scorer reads them."""
    preds = list(preds)
    ids = [p.id for p in preds]
    if len(set(ids)) != len(ids):
        raise ContractError("emit_scorer_file: duplicate example ids")
    for p in preds:
        LABELS.encode(p.label)
    lines = [f"{p.id}\t{p.label}\n" for p in sorted(preds, key=lambda p: p.id)]
    Path(path).write_text("".join(lines), encoding="utf-8", newline="\n")


def parse_scorer_file(path) -> list[PredictionRecord]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise FormatError("expected '<id>\\t<label>'", path=path, line=lineno)
        try:
            ex_id = int(fields[0])
        except ValueError:
            raise FormatError("non-integer id", path=path, line=lineno) from None
        LABELS.encode(fields[1])
        out.append(PredictionRecord(ex_id, fields[1].strip()))
    return out


def score_files(key_path, answer_path) -> MetricReport:
    """Score an answer file against a key file, matching lines by id."""
    key = {r.id: r.label for r in parse_scorer_file(key_path)}
    ans = {r.id: r.label for r in parse_scorer_file(answer_path)}
    if set(key) != set(ans):
        raise ContractError("answer and key files cover different example ids")
    ids = sorted(key)
    return macro_f1([LABELS.encode(key[i]) for i in ids], [LABELS.encode(ans[i]) for i in ids])


def write_report(report: MetricReport, out_dir, stem: str = "metrics") -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    tsv, js = out_dir / f"{stem}.tsv", out_dir / f"{stem}.json"
    tsv.write_text(report.to_tsv(), encoding="utf-8")
    js.write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return tsv, js
