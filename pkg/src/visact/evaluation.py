"""Metrics, the majority baseline, the paired t-test, and corpus reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .annotation import NOT_VISIBLE_OR_NOT_ACTION, VISIBLE
from .errors import DegeneratePairs, LengthMismatch


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    counts: ConfusionCounts


def confusion(predictions: list[str], gold: list[str]) -> ConfusionCounts:
    if len(predictions) != len(gold):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(gold)} gold")
    tp = fp = tn = fn = 0
    for p, g in zip(predictions, gold):
        if p == VISIBLE and g == VISIBLE:
            tp += 1
        elif p == VISIBLE:
            fp += 1
        elif g == VISIBLE:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def metrics(predictions: list[str], gold: list[str]) -> Metrics:
    """Accuracy/precision/recall/F1 with Visible as the positive class.

    Precision and recall are defined as 0 on an empty denominator, and F1
    as 0 when precision + recall is 0.
    """
    c = confusion(predictions, gold)
    if c.total == 0:
        raise LengthMismatch("no evaluated items")
    accuracy = (c.tp + c.tn) / c.total
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(accuracy=accuracy, precision=precision, recall=recall, f1=f1, counts=c)


def majority_baseline(train_labels: list[str]):
    """Constant predictor of the most frequent training label; ties -> Visible."""
    if not train_labels:
        raise ValueError("empty training labels")
    visible = sum(1 for y in train_labels if y == VISIBLE)
    label = VISIBLE if visible * 2 >= len(train_labels) else NOT_VISIBLE_OR_NOT_ACTION

    def predict(items) -> list[str]:
        return [label] * len(items)

    predict.label = label
    return predict


# -- paired t-test ------------------------------------------------------------


def _betacf(a: float, b: float, x: float, tol: float = 1e-12, max_iter: int = 500) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) to ~1e-12, via the continued fraction on the stable side."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_tailed(t: float, dof: int) -> float:
    """P(|T| >= |t|) for Student's t with ``dof`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    x = dof / (dof + t * t)
    return regularized_incomplete_beta(dof / 2.0, 0.5, x)


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    dof: int
    p_two_tailed: float

    @property
    def infinite_t(self) -> bool:
        return math.isinf(self.t_statistic)


def paired_ttest(scores_a: list[float], scores_b: list[float]) -> TTestResult:
    """Two-tailed paired t-test on per-item scores (0/1 correctness usually).

    Zero-variance differences give t = 0, p = 1 when the mean is also zero,
    and an infinite-t result with p = 0 otherwise.
    """
    if len(scores_a) != len(scores_b):
        raise LengthMismatch(f"{len(scores_a)} vs {len(scores_b)} paired scores")
    n = len(scores_a)
    if n < 2:
        raise DegeneratePairs(f"need at least 2 pairs, got {n}")
    d = [a - b for a, b in zip(scores_a, scores_b)]
    mean = sum(d) / n
    var = sum((x - mean) ** 2 for x in d) / (n - 1)
    dof = n - 1
    if var == 0.0:
        if mean == 0.0:
            return TTestResult(t_statistic=0.0, dof=dof, p_two_tailed=1.0)
        return TTestResult(
            t_statistic=math.copysign(math.inf, mean), dof=dof, p_two_tailed=0.0
        )
    t = mean / math.sqrt(var / n)
    return TTestResult(t_statistic=t, dof=dof, p_two_tailed=student_t_two_tailed(t, dof))


# -- corpus reports ------------------------------------------------------------


@dataclass
class DatasetStats:
    videos: int = 0
    hours: float = 0.0
    transcript_words: int = 0
    miniclips: int = 0
    actions: int = 0
    visible: int = 0
    non_visible: int = 0
    splits: dict = field(default_factory=dict)  # name -> {actions, miniclips, actions_per_miniclip}


def dataset_stats(
    video_durations: dict[str, float],
    word_counts: dict[str, int],
    miniclip_actions: dict[str, int],
    labels: list[str],
    split_of_miniclip: dict[str, str] | None = None,
) -> DatasetStats:
    """Aggregate corpus counts; all inputs keyed consistently by id."""
    stats = DatasetStats(
        videos=len(video_durations),
        hours=sum(video_durations.values()) / 3600.0,
        transcript_words=sum(word_counts.values()),
        miniclips=len(miniclip_actions),
        actions=sum(miniclip_actions.values()),
        visible=sum(1 for y in labels if y == VISIBLE),
        non_visible=sum(1 for y in labels if y != VISIBLE),
    )
    if split_of_miniclip:
        for name in sorted(set(split_of_miniclip.values())):
            clips = [m for m, s in split_of_miniclip.items() if s == name]
            n_actions = sum(miniclip_actions.get(m, 0) for m in clips)
            stats.splits[name] = {
                "miniclips": len(clips),
                "actions": n_actions,
                "actions_per_miniclip": n_actions / len(clips) if clips else 0.0,
            }
    return stats


def stats_markdown(stats: DatasetStats) -> str:
    lines = [
        "| statistic | value |",
        "| --- | --- |",
        f"| Videos | {stats.videos} |",
        f"| Video hours | {stats.hours:.2f} |",
        f"| Transcript words | {stats.transcript_words} |",
        f"| Miniclips | {stats.miniclips} |",
        f"| Actions | {stats.actions} |",
        f"| Visible actions | {stats.visible} |",
        f"| Non-visible actions | {stats.non_visible} |",
    ]
    for name, row in stats.splits.items():
        lines.append(
            f"| {name}: miniclips / actions / actions-per-clip |"
            f" {row['miniclips']} / {row['actions']} / {row['actions_per_miniclip']:.1f} |"
        )
    return "\n".join(lines) + "\n"


def stats_csv(stats: DatasetStats) -> str:
    rows = [
        ("videos", stats.videos),
        ("hours", round(stats.hours, 4)),
        ("transcript_words", stats.transcript_words),
        ("miniclips", stats.miniclips),
        ("actions", stats.actions),
        ("visible", stats.visible),
        ("non_visible", stats.non_visible),
    ]
    for name, row in stats.splits.items():
        rows.append((f"{name}_miniclips", row["miniclips"]))
        rows.append((f"{name}_actions", row["actions"]))
        rows.append((f"{name}_actions_per_miniclip", round(row["actions_per_miniclip"], 4)))
    return "statistic,value\n" + "\n".join(f"{k},{v}" for k, v in rows) + "\n"


def normalize_action_text(text: str) -> str:
    return " ".join(text.casefold().split())


def ambiguous_actions(labeled_actions: list[tuple[str, str]]) -> tuple[int, list[str]]:
    """Count action strings labeled both visible and not, across miniclips.

    ``labeled_actions`` is (action text, aggregated label) per occurrence;
    texts are case-folded and whitespace-normalized before comparison.
    """
    seen: dict[str, set[str]] = {}
    for text, label in labeled_actions:
        seen.setdefault(normalize_action_text(text), set()).add(label)
    both = sorted(t for t, labs in seen.items() if len(labs) > 1)
    return len(both), both


def results_csv(rows: list[dict]) -> str:
    """Results CSV: one row per (method, input features) pair."""
    header = "method,input,accuracy,precision,recall,f1"
    body = [
        f"{r['method']},{r['input']},{r['accuracy']:.3f},{r['precision']:.3f},"
        f"{r['recall']:.3f},{r['f1']:.3f}"
        for r in rows
    ]
    return "\n".join([header] + body) + "\n"
