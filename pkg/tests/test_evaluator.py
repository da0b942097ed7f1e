import math
import random

import numpy as np
import pytest

from _factories import make_corpus, make_sentence
from picospan.corpus import Corpus, Document, Entity
from picospan.errors import EvaluationError
from picospan.evaluator import (
    Counts,
    MatchCounts,
    evaluate,
    evaluate_grouped,
    length_bucket,
    match,
    metrics,
    paired_test,
    per_document_micro_f1,
)
from picospan.spanclass import LabeledSpan


def t3_sf_two_sided(t):
    """Oracle: closed-form two-sided tail of Student's t with 3 degrees of
    freedom, via the arctangent antiderivative."""
    x = abs(t)
    cdf = 0.5 + ((x / math.sqrt(3.0)) / (1.0 + x * x / 3.0)
                 + math.atan(x / math.sqrt(3.0))) / math.pi
    return 2.0 * (1.0 - cdf)


class TestLengthBucket:
    def test_edges(self):
        assert length_bucket(1) == "1"
        assert length_bucket(2) == "2-5"
        assert length_bucket(5) == "2-5"
        assert length_bucket(6) == ">5"
        assert length_bucket(40) == ">5"


class TestMatch:
    def test_exact_match_needs_extent_and_category(self):
        pred = [(0, 4, "P"), (3, 4, "P")]
        gold = [Entity(0, 4, "P"), Entity(3, 4, "I")]
        counts = match(pred, gold)
        assert counts.per_category["P"] == Counts(tp=1, fp=1, fn=0)
        assert counts.per_category["I"] == Counts(tp=0, fp=0, fn=1)

    def test_accepts_labeled_spans_and_entities(self):
        pred = [LabeledSpan(0, 4, (0.9, 0.8, 0.1), ("P", "I"))]
        gold = [Entity(0, 4, "P")]
        counts = match(pred, gold)
        assert counts.pooled() == Counts(tp=1, fp=1, fn=0)

    def test_empty_sides(self):
        assert match([], []).pooled() == Counts()
        assert match([], [Entity(0, 0, "P")]).pooled() == Counts(fn=1)
        assert match([(0, 0, "P")], []).pooled() == Counts(fp=1)


class TestMetrics:
    def _counts(self, tp, fp, fn, cat="P"):
        mc = MatchCounts()
        mc.per_category[cat] = Counts(tp=tp, fp=fp, fn=fn)
        return mc

    def test_known_micro_fixture(self):
        # pred {(0,4,P),(3,4,I),(0,4,I)} vs gold {(0,4,P),(3,4,I)}
        pred = [(0, 4, "P"), (3, 4, "I"), (0, 4, "I")]
        gold = [Entity(0, 4, "P"), Entity(3, 4, "I")]
        report = metrics(match(pred, gold))
        assert report.micro.precision == pytest.approx(2 / 3, abs=0)
        assert report.micro.recall == 1.0
        assert report.micro.f1 == pytest.approx(0.8, abs=1e-15)

    def test_zero_denominators_score_zero(self):
        report = metrics(self._counts(0, 0, 0))
        assert report.micro == report.micro.__class__(0.0, 0.0, 0.0)

    def test_macro_is_unweighted_mean(self):
        mc = MatchCounts()
        mc.per_category["P"] = Counts(tp=3, fp=1, fn=0)  # P=0.75 R=1
        mc.per_category["I"] = Counts(tp=1, fp=0, fn=1)  # P=1   R=0.5
        mc.per_category["O"] = Counts(tp=0, fp=2, fn=1)  # P=0   R=0
        report = metrics(mc)
        per = report.per_category
        for field in ("precision", "recall", "f1"):
            expected = np.mean([getattr(per[c], field) for c in ("P", "I", "O")])
            assert getattr(report.macro, field) == pytest.approx(expected, abs=1e-15)

    def test_macro_mean_consistency_constant(self):
        # frozen consistency fixture: averaging per-category F1 percentages
        # 60.85 / 54.68 / 42.77 must land on 52.77 to within a cent
        assert np.mean([60.85, 54.68, 42.77]) == pytest.approx(52.77, abs=0.01)

    def test_swap_pred_gold_swaps_precision_recall(self):
        rng = random.Random(23)
        for _ in range(50):
            pred = {
                (s := rng.randrange(8), rng.randrange(s, 8), rng.choice("PIO"))
                for _ in range(rng.randint(0, 5))
            }
            gold_t = {
                (s := rng.randrange(8), rng.randrange(s, 8), rng.choice("PIO"))
                for _ in range(rng.randint(0, 5))
            }
            fwd = metrics(match(pred, [Entity(*g) for g in gold_t]))
            rev = metrics(match(gold_t, [Entity(*p) for p in pred]))
            assert fwd.micro.precision == pytest.approx(rev.micro.recall, abs=1e-12)
            assert fwd.micro.recall == pytest.approx(rev.micro.precision, abs=1e-12)
            assert fwd.micro.f1 == pytest.approx(rev.micro.f1, abs=1e-12)


class TestEvaluate:
    def _corpus(self):
        s1 = make_sentence("a-0", [f"t{i}" for i in range(6)],
                           [(0, 4, "P"), (3, 4, "I")])
        s2 = make_sentence("b-0", [f"t{i}" for i in range(6)],
                           [(0, 0, "I"), (2, 5, "O")])
        return Corpus((Document("a", (s1,)), Document("b", (s2,))))

    def test_pools_across_sentences(self):
        corpus = self._corpus()
        preds = {"a-0": [(0, 4, "P")], "b-0": [(0, 0, "I"), (2, 5, "O")]}
        report = evaluate(preds, corpus)
        assert report.counts.pooled() == Counts(tp=3, fp=0, fn=1)

    def test_missing_uid_counts_as_empty_prediction(self):
        report = evaluate({}, self._corpus())
        assert report.counts.pooled() == Counts(fn=4)

    def test_unknown_uid_rejected(self):
        with pytest.raises(EvaluationError, match="unknown"):
            evaluate({"ghost-0": []}, self._corpus())

    def test_grouped_by_overlap(self):
        corpus = self._corpus()
        preds = {"a-0": [(0, 4, "P"), (3, 4, "I")], "b-0": [(0, 0, "I")]}
        report = evaluate_grouped(preds, corpus, "overlap")
        assert set(report.groups) == {"overlapped", "non_overlapped"}
        assert report.groups["overlapped"].micro.f1 == 1.0
        assert report.groups["non_overlapped"].micro.recall == 0.5

    def test_grouped_by_length(self):
        corpus = self._corpus()
        preds = {
            "a-0": [(0, 4, "P")],           # tp in 2-5
            "b-0": [(0, 0, "I"), (0, 5, "O")],  # tp in 1, fp (6 tokens) in >5, fn in 2-5
        }
        report = evaluate_grouped(preds, corpus, "length")
        assert report.groups["1"].counts.pooled() == Counts(tp=1)
        assert report.groups["2-5"].counts.pooled() == Counts(tp=1, fn=2)
        assert report.groups[">5"].counts.pooled() == Counts(fp=1)

    def test_unknown_grouping_rejected(self):
        with pytest.raises(EvaluationError):
            evaluate_grouped({}, self._corpus(), "color")

    def test_report_dict_and_csv_shapes(self):
        report = evaluate_grouped({}, self._corpus(), "length")
        d = report.to_dict()
        assert set(d) >= {"per_category", "micro", "macro", "groups"}
        rows = report.csv_rows()
        assert all({"group", "category", "precision", "recall", "f1"} <= set(r) for r in rows)


class TestPerDocumentScores:
    def test_one_score_per_document_in_order(self):
        s1 = make_sentence("a-0", ["x"], [(0, 0, "P")])
        s2 = make_sentence("b-0", ["x"], [(0, 0, "I")])
        corpus = Corpus((Document("a", (s1,)), Document("b", (s2,))))
        scores = per_document_micro_f1({"a-0": [(0, 0, "P")], "b-0": []}, corpus)
        assert scores == [1.0, 0.0]


class TestPairedTest:
    def test_unit_t_fixture(self):
        # differences (0.1, -0.1, 0.1, 0.1): mean .05, sd .1, t = 1 exactly
        result = paired_test([0.6, 0.4, 0.7, 0.8], [0.5, 0.5, 0.6, 0.7])
        assert result.t_statistic == pytest.approx(1.0, abs=1e-9)
        assert result.p_value == pytest.approx(t3_sf_two_sided(1.0), abs=1e-12)
        assert not result.zero_variance

    def test_frozen_p_value(self):
        result = paired_test([0.6, 0.4, 0.7, 0.8], [0.5, 0.5, 0.6, 0.7])
        assert result.p_value == pytest.approx(0.3910022189557705, abs=1e-12)

    def test_identical_lists_convention(self):
        result = paired_test([0.5, 0.7, 0.9], [0.5, 0.7, 0.9])
        assert result.t_statistic == 0.0
        assert result.p_value == 1.0
        assert not result.zero_variance

    def test_zero_variance_nonzero_mean_flagged(self):
        result = paired_test([0.6, 0.6], [0.5, 0.5])
        assert result.zero_variance
        assert result.p_value == 0.0
        assert result.t_statistic == math.inf
        down = paired_test([0.5, 0.5], [0.6, 0.6])
        assert down.t_statistic == -math.inf

    def test_sign_follows_direction(self):
        up = paired_test([0.9, 0.8, 0.7, 0.9], [0.5, 0.5, 0.5, 0.5])
        assert up.t_statistic > 0
        down = paired_test([0.5, 0.5, 0.5, 0.5], [0.9, 0.8, 0.7, 0.9])
        assert down.t_statistic == pytest.approx(-up.t_statistic, abs=1e-12)
        assert down.p_value == pytest.approx(up.p_value, abs=1e-12)

    def test_matches_closed_form_df3(self):
        rng = random.Random(5)
        for _ in range(25):
            a = [rng.random() for _ in range(4)]
            b = [rng.random() for _ in range(4)]
            result = paired_test(a, b)
            if not result.zero_variance and result.p_value != 1.0:
                assert result.p_value == pytest.approx(
                    t3_sf_two_sided(result.t_statistic), abs=1e-12
                )

    def test_length_mismatch_rejected(self):
        with pytest.raises(EvaluationError):
            paired_test([0.1], [0.1, 0.2])

    def test_too_short_rejected(self):
        with pytest.raises(EvaluationError):
            paired_test([0.1], [0.2])
