#!/usr/bin/env python3
"""Word-level features and the non-neural baselines.

Shows the concreteness scoring that separates visible from non-visible
actions, taxonomy/embedding similarity, threshold tuning, and the
cross-validated linear margin classifier on separable synthetic data.
"""

from pathlib import Path

import numpy as np

from visact.annotation import NOT_VISIBLE_OR_NOT_ACTION, VISIBLE
from visact.baselines import object_match_score, train_linear, tune_threshold
from visact.features import (
    ConcretenessLexicon,
    Taxonomy,
    concreteness_score,
    cosine,
    wup_similarity,
)
from visact.synthetic import make_blob_data

FIXTURES = Path(__file__).parent.parent / "tests" / "fixtures"

print("== concreteness: max over the action's verbs and nouns ==")
lexicon = ConcretenessLexicon.load(FIXTURES / "concreteness.tsv")
actions = [
    (["cook", "things", "in", "water"], ["VB", "NNS", "IN", "NN"]),
    (["head", "right", "into", "my", "kitchen"], ["VB", "RB", "IN", "PRP$", "NN"]),
    (["told", "you", "what"], ["VBD", "PRP", "WP"]),
    (["prefer", "them"], ["VBP", "PRP"]),
]
for tokens, tags in actions:
    print(f"   {' '.join(tokens):32s} -> {concreteness_score(tokens, tags, lexicon)}")

print("\n== similarity ==")
tax = Taxonomy.load(FIXTURES / "toy_taxonomy.tsv")
print(f"wup(B, B)    = {wup_similarity(tax, 'B', 'B'):.3f}")
print(f"wup(B, C)    = {wup_similarity(tax, 'B', 'C'):.3f}   (siblings)")
print(f"wup(root, B) = {wup_similarity(tax, 'root', 'B'):.3f}")
print(f"cosine((1,0), (1,1)) = {cosine(np.array([1.0, 0]), np.array([1.0, 1])):.5f}")
print(f"object match, nouns {{B}} vs detections {{C}}: "
      f"{object_match_score(['B'], ['C'], tax=tax, mode='wup'):.3f}")

print("\n== threshold baseline: tuned on a validation grid ==")
scores = [3.2, 3.9, 4.1, 4.6, None]
labels = [NOT_VISIBLE_OR_NOT_ACTION, NOT_VISIBLE_OR_NOT_ACTION, VISIBLE, VISIBLE,
          NOT_VISIBLE_OR_NOT_ACTION]
grid = [round(3.0 + 0.05 * k, 2) for k in range(41)]
theta = tune_threshold(scores, labels, grid)
print(f"   best threshold on the grid 3.00..5.00 step 0.05: {theta}")

print("\n== linear margin classifier, five-fold CV over C ==")
X, y = make_blob_data(seed=0, n=200, margin=1.0)
model, report = train_linear(X, y, c_grid=[0.01, 0.1, 1.0, 10.0], seed=0)
for c, acc in sorted(report.accuracies.items()):
    marker = " <- selected" if c == report.best_c else ""
    print(f"   C={c:<6g} cv accuracy {acc:.3f}{marker}")
