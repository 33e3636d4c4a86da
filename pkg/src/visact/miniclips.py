"""Miniclip segmentation and the low-motion filter.

Videos are cut into clips whose action span never exceeds the core cap
(60 s), then padded by 15 s on each side; clips whose sampled frames barely
change (median 2-D correlation above 0.8) are discarded as static.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyActionList,
    FormatError,
    TooFewFrames,
    ZeroVariance,
)


@dataclass(frozen=True)
class Miniclip:
    video_id: str
    index: int
    start_s: float
    end_s: float
    action_ids: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "action_ids", tuple(self.action_ids))
        if not (0 <= self.start_s < self.end_s):
            raise ValueError(f"bad miniclip window [{self.start_s}, {self.end_s}]")

    @property
    def clip_id(self) -> str:
        return f"{self.video_id}:{self.index}"

    def to_json(self) -> dict:
        return {
            "video_id": self.video_id,
            "index": self.index,
            "start_s": self.start_s,
            "end_s": self.end_s,
            "action_ids": list(self.action_ids),
        }

    @classmethod
    def from_json(cls, row: dict) -> "Miniclip":
        return cls(
            video_id=row["video_id"],
            index=int(row["index"]),
            start_s=float(row["start_s"]),
            end_s=float(row["end_s"]),
            action_ids=tuple(row["action_ids"]),
        )


@dataclass(frozen=True)
class Frame:
    """8-bit grayscale frame, row-major."""

    width: int
    height: int
    pixels: np.ndarray  # shape (height, width), dtype uint8

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise ValueError("frame must be at least 2x2")
        px = np.asarray(self.pixels, dtype=np.uint8).reshape(self.height, self.width)
        object.__setattr__(self, "pixels", px)


def segment(
    video_id: str,
    duration_s: float,
    actions: list[tuple[str, float]],
    max_core_s: float = 60.0,
    pad_s: float = 15.0,
) -> list[Miniclip]:
    """Greedily group timestamped actions into padded miniclips.

    Consecutive actions accumulate while the group's first-to-last span
    stays within ``max_core_s``; each group is padded by ``pad_s`` on both
    sides and clamped to the video bounds. Every action lands in exactly
    one miniclip.
    """
    if not actions:
        raise EmptyActionList(video_id)
    ordered = sorted(actions, key=lambda a: a[1])
    clips: list[Miniclip] = []
    group: list[tuple[str, float]] = []

    def close():
        first_t = group[0][1]
        last_t = group[-1][1]
        clips.append(
            Miniclip(
                video_id=video_id,
                index=len(clips),
                start_s=max(0.0, first_t - pad_s),
                end_s=min(duration_s, last_t + pad_s),
                action_ids=tuple(a for a, _ in group),
            )
        )
        group.clear()

    for action_id, t in ordered:
        if group and t - group[0][1] > max_core_s:
            close()
        group.append((action_id, t))
    close()
    return clips


def _flat_deviations(frame: Frame | np.ndarray) -> np.ndarray:
    px = frame.pixels if isinstance(frame, Frame) else np.asarray(frame)
    flat = px.astype(np.float64).ravel()
    return flat - flat.mean()


def pearson_2d(a: Frame | np.ndarray, b: Frame | np.ndarray) -> float:
    """2-D correlation coefficient over all pixels, flattened."""
    da = _flat_deviations(a)
    db = _flat_deviations(b)
    if da.shape != db.shape:
        raise DimensionMismatch(f"{da.shape} vs {db.shape}")
    ssa = float(np.dot(da, da))
    ssb = float(np.dot(db, db))
    if ssa == 0.0 or ssb == 0.0:
        raise ZeroVariance("constant frame has no defined correlation")
    return float(np.dot(da, db) / np.sqrt(ssa * ssb))


def motion_score(frames: list[Frame | np.ndarray], stride: int = 100) -> float:
    """Median correlation between consecutive frames sampled every ``stride``.

    Constant-frame pairs (camera artifacts) are skipped rather than scored.
    """
    sampled = frames[::stride]
    if len(sampled) < 2:
        raise TooFewFrames(f"{len(sampled)} sampled frames from {len(frames)}")
    scores = []
    for a, b in zip(sampled, sampled[1:]):
        try:
            scores.append(pearson_2d(a, b))
        except ZeroVariance:
            continue
    if not scores:
        raise TooFewFrames("all sampled pairs had zero variance")
    return float(np.median(scores))


def filter_static(
    miniclips: list[Miniclip], scores: list[float], threshold: float = 0.8
) -> tuple[list[Miniclip], list[Miniclip]]:
    """Partition miniclips into (kept, dropped) by motion score.

    A clip is dropped only when its score is strictly greater than the
    threshold; a score exactly at the threshold is kept.
    """
    if len(miniclips) != len(scores):
        raise ValueError("one score per miniclip required")
    kept, dropped = [], []
    for clip, score in zip(miniclips, scores):
        (dropped if score > threshold else kept).append(clip)
    return kept, dropped


# -- PGM (P5) frame files -----------------------------------------------------

_FRAME_NAME_RE = re.compile(r"^frame_(\d{6})\.pgm$")


def read_pgm(path: str | Path) -> Frame:
    """Binary PGM (P5, maxval 255) -> Frame."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise FormatError(f"{path}: not a P5 PGM file")
    # header: magic, width, height, maxval; '#' comments allowed
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header")
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise FormatError(f"{path}: expected maxval 255, got {maxval}")
    body = data[pos : pos + width * height]
    if len(body) != width * height:
        raise FormatError(f"{path}: expected {width * height} pixels, got {len(body)}")
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(height, width)
    return Frame(width=width, height=height, pixels=pixels)


def write_pgm(path: str | Path, frame: Frame) -> None:
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + frame.pixels.tobytes())


def frame_path(frames_dir: str | Path, index: int) -> Path:
    return Path(frames_dir) / f"frame_{index:06d}.pgm"


def count_frames(frames_dir: str | Path) -> int:
    d = Path(frames_dir)
    if not d.is_dir():
        return 0
    return sum(1 for p in d.iterdir() if _FRAME_NAME_RE.match(p.name))


def load_sampled_frames(
    frames_dir: str | Path, clip: Miniclip, fps: float, stride: int = 100
) -> list[Frame]:
    """Every ``stride``-th frame of one miniclip, decoded from disk.

    Striding happens here so only the sampled frames are read; feed the
    result to ``motion_score(frames, stride=1)``. Missing files at the tail
    are tolerated.
    """
    first = int(round(clip.start_s * fps))
    last = int(round(clip.end_s * fps))
    frames = []
    for idx in range(first, last + 1, stride):
        p = frame_path(frames_dir, idx)
        if p.exists():
            frames.append(read_pgm(p))
    return frames
