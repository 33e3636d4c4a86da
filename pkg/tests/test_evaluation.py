import math

import mpmath
import numpy as np
import pytest

from visact.annotation import NOT_VISIBLE_OR_NOT_ACTION, VISIBLE
from visact.errors import DegeneratePairs, LengthMismatch
from visact.evaluation import (
    ambiguous_actions,
    dataset_stats,
    majority_baseline,
    metrics,
    paired_ttest,
    regularized_incomplete_beta,
    results_csv,
    stats_csv,
    stats_markdown,
    student_t_two_tailed,
)

V, N = VISIBLE, NOT_VISIBLE_OR_NOT_ACTION


def oracle_p_two_tailed(t: float, dof: int) -> float:
    """High-precision two-tailed p via mpmath's regularized incomplete beta."""
    mpmath.mp.dps = 50
    x = mpmath.mpf(dof) / (dof + mpmath.mpf(t) ** 2)
    return float(mpmath.betainc(dof / mpmath.mpf(2), mpmath.mpf(1) / 2, 0, x, regularized=True))


class TestMetrics:
    def test_all_correct(self):
        m = metrics([V, N, V], [V, N, V])
        assert (m.accuracy, m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0, 1.0)

    def test_majority_row_arithmetic(self):
        gold = [V] * 692 + [N] * 308
        preds = [V] * 1000
        m = metrics(preds, gold)
        assert m.accuracy == pytest.approx(0.692)
        assert m.precision == pytest.approx(0.692)
        assert m.recall == pytest.approx(1.0)
        assert m.f1 == pytest.approx(0.818, abs=1e-3)

    def test_hand_counted(self):
        # tp=2 fp=1 fn=1 tn=6
        preds = [V, V, V, N, N, N, N, N, N, N]
        gold = [V, V, N, V, N, N, N, N, N, N]
        m = metrics(preds, gold)
        assert m.precision == pytest.approx(2 / 3)
        assert m.recall == pytest.approx(2 / 3)
        assert m.f1 == pytest.approx(2 / 3)
        assert m.accuracy == pytest.approx(0.8)

    def test_zero_denominators(self):
        m = metrics([N, N], [N, N])
        assert m.precision == 0.0 and m.recall == 0.0 and m.f1 == 0.0
        assert m.accuracy == 1.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            metrics([V], [V, N])

    def test_constant_positive_identities_fuzz(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            n = int(rng.integers(1, 200))
            gold = [V if rng.random() < 0.7 else N for _ in range(n)]
            m = metrics([V] * n, gold)
            pos_rate = gold.count(V) / n
            if gold.count(V):
                assert m.recall == 1.0
            assert m.precision == pytest.approx(pos_rate)
            # harmonic-mean identity
            assert m.f1 * (m.precision + m.recall) == pytest.approx(
                2 * m.precision * m.recall, abs=1e-12
            )


class TestMajorityBaseline:
    def test_majority_visible(self):
        predict = majority_baseline([V] * 69 + [N] * 31)
        assert predict.label == V
        assert predict(range(5)) == [V] * 5

    def test_tie_goes_visible(self):
        predict = majority_baseline([V, N])
        assert predict.label == V

    def test_composes_with_metrics(self):
        predict = majority_baseline([V] * 69 + [N] * 31)
        gold = [V] * 692 + [N] * 308
        m = metrics(predict(gold), gold)
        assert (round(m.accuracy, 3), round(m.precision, 3), m.recall) == (0.692, 0.692, 1.0)
        assert round(m.f1, 3) == 0.818


class TestIncompleteBeta:
    def test_against_mpmath(self):
        mpmath.mp.dps = 50
        rng = np.random.default_rng(3)
        for _ in range(200):
            a = float(rng.uniform(0.5, 60.0))
            b = float(rng.uniform(0.5, 60.0))
            x = float(rng.uniform(0.0, 1.0))
            expected = float(mpmath.betainc(a, b, 0, x, regularized=True))
            assert regularized_incomplete_beta(a, b, x) == pytest.approx(expected, abs=1e-10)

    def test_edges(self):
        assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
        assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0


class TestPairedTTest:
    def test_identical_scores(self):
        r = paired_ttest([1.0, 0.0, 1.0], [1.0, 0.0, 1.0])
        assert r.t_statistic == 0.0 and r.p_two_tailed == 1.0

    def test_constant_nonzero_difference(self):
        r = paired_ttest([1.0] * 5, [0.0] * 5)
        assert math.isinf(r.t_statistic) and r.t_statistic > 0
        assert r.p_two_tailed == 0.0
        assert r.infinite_t

    def test_against_oracle(self):
        rng = np.random.default_rng(100)
        d = rng.normal(0.5, 1.0, 100)
        a = list(d)
        b = [0.0] * 100
        r = paired_ttest(a, b)
        mean = d.mean()
        sd = d.std(ddof=1)
        t_expected = mean / (sd / math.sqrt(100))
        assert r.t_statistic == pytest.approx(t_expected, rel=1e-12)
        assert r.dof == 99
        assert r.p_two_tailed == pytest.approx(oracle_p_two_tailed(t_expected, 99), abs=1e-6)

    def test_oracle_sweep(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            n = int(rng.integers(2, 40))
            a = list(rng.normal(0.0, 1.0, n))
            b = list(rng.normal(0.1, 1.0, n))
            r = paired_ttest(a, b)
            assert r.p_two_tailed == pytest.approx(
                oracle_p_two_tailed(r.t_statistic, r.dof), abs=1e-6
            )

    def test_antisymmetry(self):
        rng = np.random.default_rng(5)
        a = list(rng.normal(size=30))
        b = list(rng.normal(size=30))
        fwd = paired_ttest(a, b)
        rev = paired_ttest(b, a)
        assert fwd.t_statistic == pytest.approx(-rev.t_statistic)
        assert fwd.p_two_tailed == pytest.approx(rev.p_two_tailed)

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            paired_ttest([1.0, 2.0], [1.0])
        with pytest.raises(DegeneratePairs):
            paired_ttest([1.0], [0.0])


class TestReports:
    def test_empty_corpus(self):
        stats = dataset_stats({}, {}, {}, [])
        assert stats.videos == 0 and stats.actions == 0 and stats.hours == 0.0

    def test_synthetic_fixture_counts(self):
        durations = {f"v{i}": 120.0 for i in range(4)}
        words = {f"v{i}": 100 + i for i in range(4)}
        clip_actions = {f"v{i}:{j}": 3 for i in range(4) for j in range(2)}
        labels = [V] * 10 + [N] * 14
        split = {cid: ("train" if cid < "v2" else "test") for cid in clip_actions}
        stats = dataset_stats(durations, words, clip_actions, labels, split)
        assert stats.videos == 4
        assert stats.hours == pytest.approx(480 / 3600)
        assert stats.transcript_words == sum(words.values())
        assert stats.miniclips == 8
        assert stats.actions == 24
        assert stats.visible == 10 and stats.non_visible == 14
        assert stats.splits["train"]["miniclips"] == 4
        assert stats.splits["train"]["actions_per_miniclip"] == pytest.approx(3.0)
        assert "Miniclips | 8" in stats_markdown(stats)
        assert "miniclips,8" in stats_csv(stats)

    def test_ambiguous_actions(self):
        rows = [
            ("Cook it", V),
            ("cook  it", N),  # same action, other label, spacing/case noise
            ("wipe down", V),
            ("wipe down", V),
        ]
        count, texts = ambiguous_actions(rows)
        assert count == 1
        assert texts == ["cook it"]

    def test_no_repeats_zero(self):
        assert ambiguous_actions([("a", V), ("b", N)]) == (0, [])

    def test_results_csv_shape(self):
        rows = [
            {"method": "Majority", "input": "Action", "accuracy": 0.692,
             "precision": 0.692, "recall": 1.0, "f1": 0.818},
        ]
        out = results_csv(rows)
        assert out.splitlines()[0] == "method,input,accuracy,precision,recall,f1"
        assert "Majority,Action,0.692,0.692,1.000,0.818" in out
