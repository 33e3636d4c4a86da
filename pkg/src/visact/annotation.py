"""HIT composition, spam detection, majority aggregation, and agreement.

Label vocabulary: workers choose among three raw labels; the two negative
ones are merged before any accuracy or majority computation because they
are hard to separate reliably.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

from .errors import (
    DegenerateAgreement,
    IncompleteSubmission,
    InsufficientGroundTruth,
    RowSumMismatch,
    UnknownChannel,
    WrongAnnotatorCount,
)

VISIBLE = "Visible"
NOT_VISIBLE = "NotVisible"
NOT_AN_ACTION = "NotAnAction"
NOT_VISIBLE_OR_NOT_ACTION = "NotVisibleOrNotAction"

RAW_LABELS = (VISIBLE, NOT_VISIBLE, NOT_AN_ACTION)


def binarize(raw_label: str) -> str:
    """Collapse the two negative raw labels into one class."""
    if raw_label == VISIBLE:
        return VISIBLE
    if raw_label in (NOT_VISIBLE, NOT_AN_ACTION, NOT_VISIBLE_OR_NOT_ACTION):
        return NOT_VISIBLE_OR_NOT_ACTION
    raise ValueError(f"unknown raw label {raw_label!r}")


class Verdict(Enum):
    ACCEPT = "Accept"
    REJECT_UNIFORM = "RejectUniform"
    REJECT_LOW_ACCURACY = "RejectLowAccuracy"


@dataclass(frozen=True)
class HitClip:
    miniclip_id: str
    action_ids: tuple[str, ...]
    is_ground_truth: bool = False


@dataclass(frozen=True)
class Hit:
    hit_id: str
    miniclips: tuple[HitClip, ...]

    def __post_init__(self):
        object.__setattr__(self, "miniclips", tuple(self.miniclips))
        gt = [c for c in self.miniclips if c.is_ground_truth]
        if len(gt) != 1:
            raise ValueError(f"{self.hit_id}: expected exactly one ground-truth miniclip")

    @property
    def ground_truth(self) -> HitClip:
        return next(c for c in self.miniclips if c.is_ground_truth)

    @property
    def action_keys(self) -> set[tuple[str, str]]:
        return {(c.miniclip_id, a) for c in self.miniclips for a in c.action_ids}


@dataclass(frozen=True)
class AnnotationRecord:
    worker_id: str
    hit_id: str
    miniclip_id: str
    action_id: str
    raw_label: str
    submitted_at: float = 0.0

    def __post_init__(self):
        if self.raw_label not in RAW_LABELS:
            raise ValueError(f"unknown raw label {self.raw_label!r}")


@dataclass(frozen=True)
class AggregatedLabel:
    miniclip_id: str
    action_id: str
    label: str
    votes: dict = field(default_factory=dict)


def build_hits(
    miniclips: list[tuple[str, list[str]]],
    gt_pool: list[tuple[str, list[str]]],
    per_hit: int = 5,
    max_actions: int = 7,
    seed: int = 0,
) -> list[Hit]:
    """Compose HITs of ``per_hit`` miniclips, one of them ground truth.

    ``miniclips``/``gt_pool`` are (miniclip_id, action_ids-in-time-order)
    pairs; action lists are truncated to the first ``max_actions``. Only
    ground-truth miniclips with more than four pre-agreed actions qualify.
    Regular miniclips left over after the last full HIT stay unassigned.
    """
    regular_per_hit = per_hit - 1
    usable_gt = [(mid, acts) for mid, acts in gt_pool if len(acts) > 4]
    if not usable_gt:
        raise InsufficientGroundTruth(
            "need at least one ground-truth miniclip with >4 agreed actions"
        )
    regular = [(mid, acts) for mid, acts in miniclips if acts]

    rng = random.Random(seed)
    regular = sorted(regular)
    usable_gt = sorted(usable_gt)
    rng.shuffle(regular)
    rng.shuffle(usable_gt)

    hits: list[Hit] = []
    for start in range(0, len(regular) - regular_per_hit + 1, regular_per_hit):
        batch = regular[start : start + regular_per_hit]
        gt_id, gt_actions = usable_gt[len(hits) % len(usable_gt)]
        clips = [
            HitClip(miniclip_id=mid, action_ids=tuple(acts[:max_actions]))
            for mid, acts in batch
        ]
        clips.append(
            HitClip(
                miniclip_id=gt_id,
                action_ids=tuple(gt_actions[:max_actions]),
                is_ground_truth=True,
            )
        )
        rng.shuffle(clips)
        hits.append(Hit(hit_id=f"hit-{len(hits):04d}", miniclips=tuple(clips)))
    return hits


def detect_spam(
    hit: Hit,
    responses: dict[tuple[str, str], str],
    gt_labels: dict[tuple[str, str], str],
) -> Verdict:
    """Judge one worker's full submission for a HIT.

    ``responses`` maps (miniclip_id, action_id) to a raw label for every
    action in the HIT; ``gt_labels`` holds the pre-agreed labels of the
    ground-truth miniclip. Uniform answers across all miniclips are spam;
    otherwise binarized accuracy on the ground-truth actions below 20%
    rejects the HIT (exactly 20% is accepted).
    """
    expected = hit.action_keys
    if set(responses) != expected:
        missing = expected - set(responses)
        raise IncompleteSubmission(f"{hit.hit_id}: {len(missing)} unanswered actions")

    if len({label for label in responses.values()}) == 1:
        return Verdict.REJECT_UNIFORM

    gt = hit.ground_truth
    keys = [(gt.miniclip_id, a) for a in gt.action_ids]
    hits_on_gt = sum(
        1 for k in keys if binarize(responses[k]) == binarize(gt_labels[k])
    )
    accuracy = hits_on_gt / len(keys)
    if accuracy < 0.20:
        return Verdict.REJECT_LOW_ACCURACY
    return Verdict.ACCEPT


def aggregate(records: list[AnnotationRecord]) -> list[AggregatedLabel]:
    """Majority vote over exactly three accepted annotations per action.

    Votes are binarized first, so a 3-rater majority can never tie. Output
    is sorted by (miniclip_id, action_id) and independent of record order.
    """
    groups: dict[tuple[str, str], list[str]] = {}
    for r in records:
        groups.setdefault((r.miniclip_id, r.action_id), []).append(binarize(r.raw_label))
    out = []
    for (mid, aid) in sorted(groups):
        votes = groups[(mid, aid)]
        if len(votes) != 3:
            raise WrongAnnotatorCount(f"{mid}/{aid}: {len(votes)} annotations, need 3")
        visible = votes.count(VISIBLE)
        label = VISIBLE if visible >= 2 else NOT_VISIBLE_OR_NOT_ACTION
        out.append(
            AggregatedLabel(
                miniclip_id=mid,
                action_id=aid,
                label=label,
                votes={VISIBLE: visible, NOT_VISIBLE_OR_NOT_ACTION: 3 - visible},
            )
        )
    return out


def fleiss_kappa(counts, n_raters: int | None = None) -> float:
    """Fleiss' kappa for an N-items x k-categories count matrix.

    Every row must sum to the per-item rater count n. Raises
    DegenerateAgreement when all mass sits in a single category (expected
    agreement 1, kappa undefined).
    """
    rows = [list(map(int, row)) for row in counts]
    if not rows or len(rows[0]) < 2:
        raise RowSumMismatch("need at least one row and two categories")
    n = n_raters if n_raters is not None else sum(rows[0])
    if n < 2:
        raise RowSumMismatch(f"need at least 2 raters per item, got {n}")
    for i, row in enumerate(rows):
        if sum(row) != n:
            raise RowSumMismatch(f"row {i} sums to {sum(row)}, expected {n}")

    big_n = len(rows)
    k = len(rows[0])
    p_j = [sum(row[j] for row in rows) / (big_n * n) for j in range(k)]
    p_bar_e = sum(p * p for p in p_j)
    if any(p == 1.0 for p in p_j):
        raise DegenerateAgreement("all ratings in one category")
    p_i = [(sum(c * c for c in row) - n) / (n * (n - 1)) for row in rows]
    p_bar = sum(p_i) / big_n
    return (p_bar - p_bar_e) / (1.0 - p_bar_e)


def split_by_channel(
    items: list,
    channel_of,
    channels: list[str] | None = None,
    train_count: int = 8,
    val_count: int = 1,
    test_count: int = 1,
):
    """Partition items into (train, val, test) by their channel's position.

    ``channels`` fixes the channel order (default: first appearance in
    ``items``). The first ``train_count`` channels train, the next
    ``val_count`` validate, the next ``test_count`` test; an item whose
    channel falls outside those slots raises UnknownChannel. Empty splits
    are valid.
    """
    if channels is None:
        channels = []
        for item in items:
            ch = channel_of(item)
            if ch not in channels:
                channels.append(ch)
    slots = {}
    for i, ch in enumerate(channels):
        if i < train_count:
            slots[ch] = 0
        elif i < train_count + val_count:
            slots[ch] = 1
        elif i < train_count + val_count + test_count:
            slots[ch] = 2
    parts: tuple[list, list, list] = ([], [], [])
    for item in items:
        ch = channel_of(item)
        if ch not in slots:
            raise UnknownChannel(f"channel {ch!r} not in the first "
                                 f"{train_count + val_count + test_count} channels")
        parts[slots[ch]].append(item)
    return parts
