"""Timed transcript parsing and the speech-density filter.

Accepts the WebVTT subset used by auto-generated captions: an optional
``WEBVTT`` header, then blank-line separated cue blocks of the form::

    HH:MM:SS.mmm --> HH:MM:SS.mmm
    one or more text lines

Anything outside a cue block is ignored; bad timing tokens inside one are
an error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import EmptyTranscript, MalformedTimestamp, ZeroDuration

_TIMESTAMP_RE = re.compile(r"^(\d{2,}):([0-5]\d):([0-5]\d)\.(\d{3})$")


def parse_timestamp(token: str) -> float:
    """HH:MM:SS.mmm -> seconds. Raises MalformedTimestamp otherwise."""
    m = _TIMESTAMP_RE.match(token.strip())
    if m is None:
        raise MalformedTimestamp(f"bad cue timestamp: {token!r}")
    h, mi, s, ms = (int(g) for g in m.groups())
    return h * 3600 + mi * 60 + s + ms / 1000.0


def format_timestamp(seconds: float) -> str:
    total_ms = round(seconds * 1000)
    h, rem = divmod(total_ms, 3_600_000)
    mi, rem = divmod(rem, 60_000)
    s, ms = divmod(rem, 1000)
    return f"{h:02d}:{mi:02d}:{s:02d}.{ms:03d}"


@dataclass(frozen=True)
class CaptionCue:
    """One timed caption line."""

    start_s: float
    end_s: float
    text: str

    def __post_init__(self):
        if self.start_s < 0 or self.start_s > self.end_s:
            raise ValueError(f"cue times out of order: {self.start_s} > {self.end_s}")
        if not self.text.strip():
            raise ValueError("cue text is empty")

    @property
    def words(self) -> list[str]:
        """Whitespace-separated tokens, punctuation still attached."""
        return self.text.split()


@dataclass(frozen=True)
class Transcript:
    """All cues of one video, sorted by start time."""

    video_id: str
    duration_s: float
    cues: tuple[CaptionCue, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "cues", tuple(self.cues))
        for a, b in zip(self.cues, self.cues[1:]):
            if b.start_s < a.start_s:
                raise ValueError("cues not sorted by start time")
        # +1.0s tolerance for caption-provider rounding at the video tail
        for cue in self.cues:
            if cue.end_s > self.duration_s + 1.0:
                raise ValueError(
                    f"cue ending at {cue.end_s}s exceeds video duration {self.duration_s}s"
                )

    @property
    def word_count(self) -> int:
        return sum(len(c.words) for c in self.cues)


def parse_transcript(raw: bytes | str, video_id: str, duration_s: float) -> Transcript:
    """Parse a WebVTT-subset byte stream into a Transcript.

    Cues are returned sorted by start time; overlapping cues are kept as-is.
    Raises EmptyTranscript when no cue block is found and MalformedTimestamp
    when a timing line carries a bad token.
    """
    if isinstance(raw, bytes):
        text = raw.decode("utf-8-sig")
    else:
        text = raw.lstrip("﻿")

    cues: list[CaptionCue] = []
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i]
        if "-->" not in line:
            i += 1
            continue
        left, _, right = line.partition("-->")
        # ignore trailing cue settings after the end timestamp
        end_token = right.strip().split()[0] if right.strip() else right
        start = parse_timestamp(left)
        end = parse_timestamp(end_token)
        i += 1
        body: list[str] = []
        while i < len(lines) and lines[i].strip():
            body.append(lines[i].strip())
            i += 1
        joined = " ".join(body).strip()
        if joined:
            cues.append(CaptionCue(start_s=start, end_s=end, text=joined))

    if not cues:
        raise EmptyTranscript(f"{video_id}: no cues found")
    cues.sort(key=lambda c: (c.start_s, c.end_s))
    return Transcript(video_id=video_id, duration_s=duration_s, cues=tuple(cues))


def serialize_transcript(t: Transcript) -> str:
    """Render back to the WebVTT subset; inverse of parse_transcript up to 1 ms."""
    blocks = [
        f"{format_timestamp(c.start_s)} --> {format_timestamp(c.end_s)}\n{c.text}"
        for c in t.cues
    ]
    return "WEBVTT\n\n" + "\n\n".join(blocks) + "\n"


def words_per_second(t: Transcript) -> float:
    """Average speech density over the whole video duration."""
    if t.duration_s <= 0:
        raise ZeroDuration(f"{t.video_id}: duration {t.duration_s}s")
    return t.word_count / t.duration_s


def filter_by_density(
    transcripts: list[Transcript], min_rate: float = 0.5
) -> tuple[list[Transcript], list[Transcript]]:
    """Partition transcripts into (kept, dropped) by words-per-second.

    A rate exactly equal to ``min_rate`` is kept: the filter discards only
    videos speaking strictly less than the minimum.
    """
    kept, dropped = [], []
    for t in transcripts:
        (kept if words_per_second(t) >= min_rate else dropped).append(t)
    return kept, dropped
