"""Shared file helpers: JSON-lines, atomic writes, the video manifest."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import FormatError


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    """Write ``data`` to ``path`` via a temp file + rename in the same dir."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def dump_json_line(obj: Any) -> str:
    """Canonical single-line JSON: sorted keys, no trailing whitespace."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(", ", ": "))


def write_jsonl(path: str | Path, rows: Iterable[Any]) -> None:
    atomic_write_text(path, "".join(dump_json_line(r) + "\n" for r in rows))


def read_jsonl(path: str | Path) -> Iterator[Any]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: bad JSON line: {exc}") from exc


@dataclass(frozen=True)
class VideoEntry:
    """One manifest row describing a source video and its sidecar files."""

    video_id: str
    channel: str
    duration_s: float
    transcript_path: str
    frames_dir: str

    def resolve(self, base: Path) -> "VideoEntry":
        """Return a copy with file paths resolved relative to ``base``."""
        return VideoEntry(
            video_id=self.video_id,
            channel=self.channel,
            duration_s=self.duration_s,
            transcript_path=str((base / self.transcript_path)),
            frames_dir=str((base / self.frames_dir)),
        )


def load_manifest(path: str | Path) -> list[VideoEntry]:
    """Read the JSON-lines video manifest; paths resolve against its directory."""
    path = Path(path)
    entries = []
    for row in read_jsonl(path):
        try:
            entry = VideoEntry(
                video_id=str(row["video_id"]),
                channel=str(row["channel"]),
                duration_s=float(row["duration_s"]),
                transcript_path=str(row["transcript_path"]),
                frames_dir=str(row["frames_dir"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: bad manifest row {row!r}: {exc}") from exc
        entries.append(entry.resolve(path.parent))
    return entries
