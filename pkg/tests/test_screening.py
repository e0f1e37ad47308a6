import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hipmetrics import EvaluationError
from hipmetrics.screening import ConfusionCounts, confusion, display_percent, rates


class TestConfusion:
    def test_all_true_positive(self):
        c = confusion([True] * 5, [True] * 5)
        assert (c.tp, c.fp, c.tn, c.fn) == (5, 0, 0, 0)

    def test_all_missed(self):
        c = confusion([False] * 3, [True] * 3)
        assert (c.tp, c.fp, c.tn, c.fn) == (0, 0, 0, 3)

    def test_length_mismatch(self):
        with pytest.raises(EvaluationError):
            confusion([True], [True, False])

    def test_empty_rejected(self):
        with pytest.raises(EvaluationError):
            confusion([], [])

    @given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=50))
    def test_counts_partition_the_cohort(self, pairs):
        pred = [p for p, _ in pairs]
        gt = [g for _, g in pairs]
        c = confusion(pred, gt)
        assert c.total == len(pairs)


class TestRates:
    def test_reference_cohort_counts(self):
        rep = rates(ConfusionCounts(tp=6, fp=0, tn=29, fn=5))
        assert display_percent(rep.accuracy) == "87.50"
        assert display_percent(rep.sensitivity) == "54.55"
        assert display_percent(rep.specificity) == "100.00"
        assert display_percent(rep.ppv) == "100.00"
        assert display_percent(rep.npv) == "85.29"

    def test_perfect_two_subject_cohort(self):
        rep = rates(ConfusionCounts(tp=1, fp=0, tn=1, fn=0))
        assert rep.accuracy == rep.sensitivity == rep.specificity == 100.0
        assert rep.ppv == rep.npv == 100.0

    def test_zero_denominators_are_absent(self):
        rep = rates(ConfusionCounts(tp=0, fp=0, tn=3, fn=0))
        assert rep.sensitivity is None
        assert rep.ppv is None
        assert rep.specificity == 100.0
        assert rep.npv == 100.0
        assert rep.accuracy == 100.0

    @given(
        tp=st.integers(min_value=0, max_value=40),
        fp=st.integers(min_value=0, max_value=40),
        tn=st.integers(min_value=0, max_value=40),
        fn=st.integers(min_value=0, max_value=40),
    )
    def test_label_swap_symmetry(self, tp, fp, tn, fn):
        if tp + fp + tn + fn == 0:
            return
        rep = rates(ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn))
        # swapping the positive/negative convention: tp<->tn, fp<->fn
        swapped = rates(ConfusionCounts(tp=tn, fp=fn, tn=tp, fn=fp))
        assert swapped.accuracy == pytest.approx(rep.accuracy)
        assert swapped.sensitivity == (rep.specificity if rep.specificity is None
                                       else pytest.approx(rep.specificity))
        assert swapped.specificity == (rep.sensitivity if rep.sensitivity is None
                                       else pytest.approx(rep.sensitivity))
        assert swapped.ppv == (rep.npv if rep.npv is None else pytest.approx(rep.npv))
        assert swapped.npv == (rep.ppv if rep.ppv is None else pytest.approx(rep.ppv))

    @given(
        tp=st.integers(min_value=1, max_value=40),
        fp=st.integers(min_value=1, max_value=40),
        tn=st.integers(min_value=1, max_value=40),
        fn=st.integers(min_value=1, max_value=40),
    )
    def test_accuracy_decomposes_by_prevalence(self, tp, fp, tn, fn):
        rep = rates(ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn))
        p, n = tp + fn, tn + fp
        expected = (rep.sensitivity * p + rep.specificity * n) / (p + n)
        assert rep.accuracy == pytest.approx(expected, abs=1e-12)

    def test_negative_counts_rejected(self):
        with pytest.raises(EvaluationError):
            ConfusionCounts(tp=-1, fp=0, tn=0, fn=0)


class TestDisplayRounding:
    @pytest.mark.parametrize(
        "value,expected",
        [(54.545454, "54.55"), (87.5, "87.50"), (85.294117, "85.29"),
         (2.675, "2.68"), (2.665, "2.67"), (0.005, "0.01")],
    )
    def test_half_up_two_decimals(self, value, expected):
        assert display_percent(value) == expected

    def test_none_stays_absent(self):
        assert display_percent(None) is None
