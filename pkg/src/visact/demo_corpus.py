"""Synthesize a tiny end-to-end corpus: manifest, WebVTT transcripts,
PGM frame directories, and all lookup tables the pipeline needs.

Run as a module to build one in a directory:

    python3 -m visact.demo_corpus OUTDIR [--seed N]

The corpus is deliberately small (seconds to generate, kilobytes on disk)
but exercises every pipeline stage: one video fails the density filter,
one is static enough to be motion-filtered, and the rest flow through
extraction, segmentation, HIT composition, and training.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .io import read_jsonl, write_jsonl
from .miniclips import write_pgm
from .synthetic import moving_frames, static_frames

DEMO_FPS = 2.0

CUE_TEMPLATES = (
    "you're gonna actually cook it",
    "and you're going to take it out",
    "put it on to some parchment paper",
    "pull it right off the baking sheet",
    "so nice today",
    "keep in mind that",
    "throw it into the washer",
    "head right into my kitchen",
    "share my thoughts",
    "prefer them",
    "cook things in water",
    "told you what",
    "start cooking dinner",
    "just basically dehydrating it",
)

DEMO_LEXICON = {
    "you": "PRP", "'re": "VBP", "'s": "VBZ", "gonna": "VBG", "actually": "RB",
    "cook": "VB", "it": "PRP", "and": "CC", "bake": "VB", "for": "IN",
    "about": "IN", "six": "CD", "hours": "NNS", "definitely": "RB", "a": "DT",
    "long": "JJ", "time": "NN", "so": "RB", "keep": "VB", "in": "IN",
    "mind": "NN", "that": "IN", "basically": "RB", "just": "RB",
    "dehydrating": "VBG", "after": "IN", "what": "WP", "seems": "VBZ",
    "like": "IN", "an": "DT", "eternity": "NN", "the": "DT", "oven": "NN",
    "going": "VBG", "to": "TO", "take": "VB", "out": "RP", "pull": "VB",
    "right": "RB", "off": "RP", "baking": "NN", "sheet": "NN", "put": "VB",
    "on": "IN", "some": "DT", "parchment": "NN", "paper": "NN", "then": "RB",
    "i": "PRP", "did": "VBD", "left": "VBD", "nice": "JJ", "today": "NN",
    "things": "NNS", "water": "NN", "head": "VB", "into": "IN", "my": "PRP$",
    "kitchen": "NN", "throw": "VB", "washer": "NN", "told": "VBD",
    "share": "VB", "thoughts": "NNS", "prefer": "VBP", "them": "PRP",
    "start": "VB", "cooking": "VBG", "dinner": "NN",
}

DEMO_CONCRETENESS = {
    "water": 5.00, "kitchen": 4.97, "washer": 4.70, "told": 2.31,
    "share": 2.96, "prefer": 1.62, "cook": 4.44, "head": 4.96, "throw": 4.11,
    "thing": 3.67, "thought": 2.83, "oven": 4.89, "sheet": 4.76,
    "paper": 4.93, "time": 3.28, "mind": 3.04, "eternity": 1.87,
    "dinner": 4.36, "take": 3.07, "put": 3.21, "pull": 3.96, "keep": 2.54,
    "start": 2.68, "bake": 4.50, "today": 3.30,
}

DEMO_TAXONOMY = (
    ("entity", "entity"),
    ("object", "entity"),
    ("abstraction", "entity"),
    ("kitchenware", "object"),
    ("material", "object"),
    ("appliance", "object"),
    ("pan", "kitchenware"),
    ("sheet", "kitchenware"),
    ("bowl", "kitchenware"),
    ("paper", "material"),
    ("water", "material"),
    ("oven", "appliance"),
    ("washer", "appliance"),
    ("kitchen", "object"),
    ("dinner", "object"),
    ("time", "abstraction"),
    ("mind", "abstraction"),
)


def _write_tables(tables_dir: Path, rng) -> None:
    tables_dir.mkdir(parents=True, exist_ok=True)
    (tables_dir / "tags.tsv").write_text(
        "".join(f"{w}\t{t}\n" for w, t in DEMO_LEXICON.items()), encoding="utf-8"
    )
    (tables_dir / "concreteness.tsv").write_text(
        "".join(f"{w}\t{s:.2f}\n" for w, s in DEMO_CONCRETENESS.items()), encoding="utf-8"
    )
    (tables_dir / "taxonomy.tsv").write_text(
        "".join(f"{c}\t{p}\n" for c, p in DEMO_TAXONOMY), encoding="utf-8"
    )
    words = sorted(set(DEMO_LEXICON))
    lines = [
        w + " " + " ".join(f"{x:.5f}" for x in rng.normal(0.0, 0.5, 8))
        for w in words
    ]
    (tables_dir / "embeddings.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    tags = sorted(set(DEMO_LEXICON.values()))
    pos_lines = [
        t + " " + " ".join(f"{x:.5f}" for x in rng.normal(0.0, 0.5, 4))
        for t in tags
    ]
    (tables_dir / "pos_embeddings.txt").write_text("\n".join(pos_lines) + "\n", encoding="utf-8")


def _vtt(cues: list[tuple[float, float, str]]) -> str:
    from .transcripts import format_timestamp

    blocks = [
        f"{format_timestamp(s)} --> {format_timestamp(e)}\n{text}"
        for s, e, text in cues
    ]
    return "WEBVTT\n\n" + "\n\n".join(blocks) + "\n"


def _video_cues(rng, n_cues: int, sparse: bool = False) -> list[tuple[float, float, str]]:
    cues = []
    t = float(rng.uniform(0.0, 2.0))
    for i in range(n_cues):
        text = CUE_TEMPLATES[int(rng.integers(0, len(CUE_TEMPLATES)))]
        dur = 3.0
        cues.append((round(t, 3), round(t + dur, 3), text))
        gap = 20.0 if sparse else (7.0 if i % 8 == 7 else 0.5)
        t += dur + gap
    return cues


def write_corpus(outdir: str | Path, seed: int = 0, n_channels: int = 10) -> Path:
    """Build the corpus; returns the manifest path."""
    outdir = Path(outdir)
    rng = np.random.default_rng(seed)
    _write_tables(outdir / "tables", rng)
    (outdir / "transcripts").mkdir(parents=True, exist_ok=True)

    manifest_rows = []

    def add_video(video_id, channel, cues, duration, frames):
        vtt_path = outdir / "transcripts" / f"{video_id}.vtt"
        vtt_path.write_text(_vtt(cues), encoding="utf-8")
        frames_dir = outdir / "frames" / video_id
        frames_dir.mkdir(parents=True, exist_ok=True)
        for i, frame in enumerate(frames):
            write_pgm(frames_dir / f"frame_{i:06d}.pgm", frame)
        manifest_rows.append({
            "video_id": video_id,
            "channel": channel,
            "duration_s": duration,
            "transcript_path": f"transcripts/{video_id}.vtt",
            "frames_dir": f"frames/{video_id}",
        })

    for ch in range(n_channels):
        video_id = f"vid{ch:02d}"
        cues = _video_cues(rng, n_cues=24)
        duration = round(cues[-1][1] + 4.0, 3)
        n_frames = int(duration * DEMO_FPS) + 1
        add_video(video_id, f"channel{ch:02d}", cues, duration,
                  moving_frames(seed * 100 + ch, n_frames, size=8))

    # one transcript too sparse for the density filter
    cues = _video_cues(rng, n_cues=3, sparse=True)
    duration = round(cues[-1][1] + 30.0, 3)
    add_video("sparse00", "channel00", cues, duration,
              moving_frames(seed * 100 + 90, int(duration * DEMO_FPS) + 1, size=8))

    # one camera-on-tripod video for the motion filter
    cues = _video_cues(rng, n_cues=24)
    duration = round(cues[-1][1] + 4.0, 3)
    add_video("static00", "channel01", cues, duration,
              static_frames(seed * 100 + 91, int(duration * DEMO_FPS) + 1, size=8, jitter=0))

    manifest_path = outdir / "manifest.jsonl"
    write_jsonl(manifest_path, manifest_rows)
    return manifest_path


def write_gt_labels(miniclips_file: str | Path, actions_file: str | Path,
                    out_file: str | Path, n_gt: int = 2) -> int:
    """Fabricate the two-reliable-annotator labels for HIT ground truth.

    Picks the first miniclips (by id) with more than four actions and
    labels each action by a fixed rule so reruns are byte-identical.
    """
    texts = {row["action_id"]: row["text"] for row in read_jsonl(actions_file)}
    rows = []
    chosen = 0
    for row in sorted(read_jsonl(miniclips_file),
                      key=lambda r: (r["video_id"], r["index"])):
        if chosen >= n_gt:
            break
        if len(row["action_ids"]) <= 4:
            continue
        cid = f"{row['video_id']}:{row['index']}"
        for aid in row["action_ids"][:7]:
            visible = any(w in texts.get(aid, "") for w in
                          ("cook", "take", "put", "pull", "throw", "head"))
            rows.append({
                "miniclip_id": cid,
                "action_id": aid,
                "label": "Visible" if visible else "NotVisibleOrNotAction",
            })
        chosen += 1
    write_jsonl(out_file, rows)
    return chosen


def write_detections(miniclips_file: str | Path, actions_file: str | Path,
                     out_file: str | Path, seed: int = 0) -> int:
    """Plausible object detections: nouns from each clip's actions plus noise."""
    rng = np.random.default_rng(seed)
    nouns = [c for c, _ in DEMO_TAXONOMY if c not in ("entity", "object", "abstraction")]
    texts = {row["action_id"]: row["text"] for row in read_jsonl(actions_file)}
    rows = []
    for row in read_jsonl(miniclips_file):
        cid = f"{row['video_id']}:{row['index']}"
        mentioned = [n for n in nouns
                     if any(n in texts.get(a, "") for a in row["action_ids"])]
        labels = mentioned[:2] + [nouns[int(rng.integers(0, len(nouns)))]]
        for frame, label in enumerate(labels):
            rows.append({
                "miniclip_id": cid,
                "frame": frame,
                "label": label,
                "confidence": round(float(rng.uniform(0.5, 0.99)), 3),
            })
    write_jsonl(out_file, rows)
    return len(rows)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("outdir")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--channels", type=int, default=10)
    args = parser.parse_args(argv)
    manifest = write_corpus(args.outdir, seed=args.seed, n_channels=args.channels)
    print(f"wrote {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
