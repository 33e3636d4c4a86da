#!/usr/bin/env python3
"""Walk the corpus pipeline end to end on a synthesized mini-corpus.

Builds a small set of fake vlogs (timed transcripts + grayscale frame
dumps), then runs every preprocessing stage the way the CLI composes
them: density filter, candidate-action chunking, miniclip segmentation,
motion filtering, and HIT composition.
"""

import sys
import tempfile
from pathlib import Path

from visact.cli import main as cli
from visact.demo_corpus import write_corpus, write_gt_labels
from visact.io import read_jsonl

workdir = Path(tempfile.mkdtemp(prefix="visact-demo-"))
print(f"working in {workdir}\n")

manifest = write_corpus(workdir / "data", seed=0)
tables = workdir / "data" / "tables"
out = workdir / "out"
base = [
    "--manifest", str(manifest), "--out-dir", str(out),
    "--tag-lexicon", str(tables / "tags.tsv"),
    "--frame-rate", "2.0",   # demo corpus is rendered at 2 fps
    "--motion-stride", "4",  # stride 100 would skip past these short clips
    "--seed", "0",
]

print("== ingest: parse transcripts, drop low-density videos ==")
cli(["ingest", *base])
for row in read_jsonl(out / "dropped.jsonl"):
    print(f"   dropped {row['video_id']}: {row['reason']}")

print("\n== extract: verb-phrase candidate actions ==")
cli(["extract", *base])
actions = list(read_jsonl(out / "actions.jsonl"))
for row in actions[:5]:
    print(f"   {row['action_id']}  t={row['time_s']:7.2f}s  {row['text']!r}")
print(f"   ... {len(actions)} candidates total")

print("\n== segment: miniclips with a 60 s action-span cap, padded 15 s ==")
cli(["segment", *base])
for row in list(read_jsonl(out / "miniclips.jsonl"))[:4]:
    print(f"   {row['video_id']}:{row['index']}  [{row['start_s']:.1f}, {row['end_s']:.1f}]s"
          f"  {len(row['action_ids'])} actions")

print("\n== motion-filter: drop clips whose sampled frames barely change ==")
cli(["motion-filter", *base])
dropped = list(read_jsonl(out / "miniclips_dropped.jsonl"))
print(f"   dropped {len(dropped)} static miniclips"
      f" (all from {sorted({d['video_id'] for d in dropped})})")

print("\n== hits: 4 regular + 1 pre-labeled ground-truth miniclip each ==")
write_gt_labels(out / "miniclips_kept.jsonl", out / "actions.jsonl", workdir / "gt.jsonl")
cli(["hits", *base, "--gt-labels", str(workdir / "gt.jsonl")])
for row in read_jsonl(out / "hits.jsonl"):
    flags = ["GT" if c["is_ground_truth"] else "  " for c in row["miniclips"]]
    print(f"   {row['hit_id']}: {' '.join(flags)}")

print(f"\nartifacts left in {out}")
sys.exit(0)
