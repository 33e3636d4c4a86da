#!/usr/bin/env python3
"""Inter-annotator agreement and the two spam rules, on small tables."""

from visact.annotation import (
    NOT_AN_ACTION,
    NOT_VISIBLE,
    VISIBLE,
    Hit,
    HitClip,
    detect_spam,
    fleiss_kappa,
)
from visact.synthetic import WORKED_KAPPA_EXAMPLE

print("== Fleiss kappa ==")
print(f"perfect agreement, two categories: {fleiss_kappa([[3, 0], [0, 3]], 3):.3f}")
print(f"classic 10x5 worked example (14 raters): {fleiss_kappa(WORKED_KAPPA_EXAMPLE, 14):.3f}")

mixed = [[2, 1], [1, 2], [3, 0], [0, 3], [2, 1]]
print(f"mixed 3-rater table: {fleiss_kappa(mixed, 3):.3f}")

print("\n== spam rules ==")
clips = [HitClip(f"m{i}", (f"m{i}a0", f"m{i}a1")) for i in range(4)]
clips.append(HitClip("gt", tuple(f"g{i}" for i in range(5)), is_ground_truth=True))
hit = Hit("demo-hit", tuple(clips))
gt = {("gt", f"g{i}"): VISIBLE if i % 2 else NOT_VISIBLE for i in range(5)}

uniform = {key: VISIBLE for key in hit.action_keys}
print(f"same label on all 13 actions -> {detect_spam(hit, uniform, gt).value}")


def submission(n_right):
    labels = {}
    for clip in hit.miniclips:
        for i, a in enumerate(clip.action_ids):
            key = (clip.miniclip_id, a)
            if clip.is_ground_truth:
                right = gt[key]
                labels[key] = right if i < n_right else (
                    NOT_AN_ACTION if right == VISIBLE else VISIBLE)
            else:
                labels[key] = VISIBLE if i % 2 else NOT_VISIBLE
    return labels


for n_right in (0, 1, 4):
    verdict = detect_spam(hit, submission(n_right), gt)
    print(f"{n_right}/5 ground-truth actions matched -> {verdict.value}"
          f"  (accuracy {n_right / 5:.0%}; below 20% rejects, exactly 20% passes)")
