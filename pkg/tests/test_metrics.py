from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracle
from rrgru.corpus import LABELS
from rrgru.errors import ContractError, FormatError, LabelError
from rrgru.metrics import (
    PredictionRecord,
    confusion_matrix,
    emit_scorer_file,
    macro_f1,
    parse_scorer_file,
    score_files,
    write_report,
)

SCORER = Path(__file__).parent / "data" / "scorer"
CE12, CE21 = LABELS.encode("Cause-Effect(e1,e2)"), LABELS.encode("Cause-Effect(e2,e1)")
OTHER = LABELS.other_id

labels = st.integers(0, len(LABELS) - 1)


def test_perfect_predictions():
    gold = list(range(len(LABELS))) * 2
    report = macro_f1(gold, gold)
    assert report.macro_f1 == 1.0 and report.accuracy == 1.0
    assert len(report.scored_relations) == 9


def test_perfect_on_subset_scores_present_relations_only():
    gold = [CE12, CE21, OTHER]
    report = macro_f1(gold, gold)
    assert report.macro_f1 == 1.0
    assert report.scored_relations == ["Cause-Effect"]


def test_direction_must_match():
    report = macro_f1([CE12], [CE21])
    s = report.per_relation["Cause-Effect"]
    assert (s.tp, s.precision, s.recall, s.f1) == (0, 0.0, 0.0, 0.0)
    assert (s.pred_count, s.gold_count) == (1, 1)


def test_all_other_predictions_score_zero():
    gold = list(range(18))
    assert macro_f1(gold, [OTHER] * 18).macro_f1 == 0.0


def test_other_only_counts_as_error_source():
    report = macro_f1([OTHER, CE12], [CE12, CE12])
    s = report.per_relation["Cause-Effect"]
    assert (s.precision, s.recall) == (0.5, 1.0)
    assert report.macro_f1 == pytest.approx(2 / 3)


def test_length_mismatch():
    with pytest.raises(ContractError):
        macro_f1([0, 1], [0])


def test_invalid_label_id():
    with pytest.raises(ContractError):
        macro_f1([19], [0])


@given(st.lists(st.tuples(labels, labels), min_size=1, max_size=60))
def test_swap_exchanges_precision_and_recall(pairs):
    gold, pred = [g for g, _ in pairs], [p for _, p in pairs]
    a, b = macro_f1(gold, pred), macro_f1(pred, gold)
    for rel in LABELS.relations:
        assert a.per_relation[rel].precision == b.per_relation[rel].recall
        assert a.per_relation[rel].recall == b.per_relation[rel].precision
    assert a.macro_f1 == pytest.approx(b.macro_f1, abs=1e-15)


@given(st.lists(st.tuples(labels, labels), min_size=1, max_size=60))
def test_confusion_margins_and_rate_bounds(pairs):
    gold, pred = [g for g, _ in pairs], [p for _, p in pairs]
    m = confusion_matrix(gold, pred)
    assert m.shape == (19, 19)
    np.testing.assert_array_equal(m.sum(axis=1), np.bincount(gold, minlength=19))
    np.testing.assert_array_equal(m.sum(axis=0), np.bincount(pred, minlength=19))
    report = macro_f1(gold, pred)
    for s in report.per_relation.values():
        assert 0 <= s.precision <= 1 and 0 <= s.recall <= 1 and 0 <= s.f1 <= 1
    assert 0 <= report.macro_f1 <= 1


@given(st.lists(st.tuples(labels, labels), min_size=1, max_size=60))
def test_agrees_with_reference_scorer(pairs):
    gold, pred = [g for g, _ in pairs], [p for _, p in pairs]
    expected = oracle.official_style_macro_f1([LABELS.decode(g) for g in gold], [LABELS.decode(p) for p in pred])
    assert macro_f1(gold, pred).macro_f1 == pytest.approx(expected, abs=1e-12)


# scorer-format files

def test_emit_line_format(tmp_path):
    path = tmp_path / "a.txt"
    emit_scorer_file([PredictionRecord(8002, "Other"), PredictionRecord(8001, "Entity-Destination(e1,e2)")], path)
    assert path.read_bytes() == b"8001\tEntity-Destination(e1,e2)\n8002\tOther\n"


def test_emit_parse_roundtrip(tmp_path):
    recs = [PredictionRecord(8000 + i, LABELS.decode(i % 19)) for i in range(1, 40)]
    emit_scorer_file(recs, tmp_path / "a.txt")
    assert parse_scorer_file(tmp_path / "a.txt") == recs


def test_emit_duplicate_ids(tmp_path):
    with pytest.raises(ContractError):
        emit_scorer_file([PredictionRecord(1, "Other"), PredictionRecord(1, "Other")], tmp_path / "a.txt")


def test_emit_rejects_unknown_label(tmp_path):
    with pytest.raises(LabelError):
        emit_scorer_file([PredictionRecord(1, "Cause-Effect")], tmp_path / "a.txt")


def test_parse_malformed_line(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("8001\tOther\n8002 Other\n")
    with pytest.raises(FormatError) as err:
        parse_scorer_file(p)
    assert err.value.line == 2


@pytest.mark.parametrize("name", ["perfect", "all_other", "random", "direction_flipped", "partial"])
def test_fixture_files_match_reference(name):
    key = oracle.read_answers(SCORER / "key.txt")
    ans = oracle.read_answers(SCORER / f"{name}.txt")
    ids = sorted(key)
    expected = oracle.official_style_macro_f1([key[i] for i in ids], [ans[i] for i in ids])
    assert score_files(SCORER / "key.txt", SCORER / f"{name}.txt").macro_f1 == pytest.approx(expected, abs=1e-12)


def test_fixture_extremes():
    assert score_files(SCORER / "key.txt", SCORER / "perfect.txt").macro_f1 == 1.0
    assert score_files(SCORER / "key.txt", SCORER / "all_other.txt").macro_f1 == 0.0


def test_score_files_id_mismatch(tmp_path):
    (tmp_path / "a.txt").write_text("1\tOther\n")
    (tmp_path / "b.txt").write_text("2\tOther\n")
    with pytest.raises(ContractError):
        score_files(tmp_path / "a.txt", tmp_path / "b.txt")


def test_report_files(tmp_path):
    import json

    report = score_files(SCORER / "key.txt", SCORER / "partial.txt")
    tsv, js = write_report(report, tmp_path)
    lines = tsv.read_text().splitlines()
    assert lines[0].split("\t")[0] == "relation" and len(lines) == 1 + 9 + 2
    data = json.loads(js.read_text())
    assert data["macro_f1"] == pytest.approx(report.macro_f1)
    assert np.array(data["confusion"]).sum() == 100
