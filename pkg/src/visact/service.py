"""HTTP annotation service: serves HITs, collects labels, reports agreement.

Built on the stdlib threading HTTP server. The store is single-writer:
every mutation happens under one lock, readers work on snapshots, and
submissions append to a JSON-lines log that fully reconstructs the state
on restart.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .annotation import (
    RAW_LABELS,
    AggregatedLabel,
    AnnotationRecord,
    Hit,
    Verdict,
    aggregate,
    binarize,
    detect_spam,
    fleiss_kappa,
)
from .errors import DegenerateAgreement, IncompleteSubmission, VisactError
from .miniclips import Miniclip, frame_path

REQUIRED_ANNOTATORS = 3


class DuplicateSubmission(VisactError):
    """The worker already submitted this HIT."""


class UnknownHit(VisactError):
    """No HIT with that id."""


@dataclass
class AnnotationStore:
    """All annotation state for one labeling run."""

    hits: list[Hit]
    gt_labels: dict  # (miniclip_id, action_id) -> raw or binarized label
    log_path: Path | None = None
    required: int = REQUIRED_ANNOTATORS

    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _records: list[AnnotationRecord] = field(default_factory=list, repr=False)
    _verdicts: dict = field(default_factory=dict, repr=False)  # (worker, hit) -> Verdict

    def __post_init__(self):
        self.hits_by_id = {h.hit_id: h for h in self.hits}
        self.gt_clip_ids = {h.ground_truth.miniclip_id for h in self.hits}
        if self.log_path is not None:
            self.log_path = Path(self.log_path)
            if self.log_path.exists():
                self._replay()

    def _replay(self):
        groups: dict = {}
        order: list = []
        with open(self.log_path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                rec = AnnotationRecord(
                    worker_id=row["worker_id"],
                    hit_id=row["hit_id"],
                    miniclip_id=row["miniclip_id"],
                    action_id=row["action_id"],
                    raw_label=row["raw_label"],
                    submitted_at=float(row.get("submitted_at", 0.0)),
                )
                key = (rec.worker_id, rec.hit_id)
                if key not in groups:
                    groups[key] = []
                    order.append(key)
                groups[key].append(rec)
        for worker_id, hit_id in order:
            recs = groups[(worker_id, hit_id)]
            labels = {(r.miniclip_id, r.action_id): r.raw_label for r in recs}
            self._apply(worker_id, hit_id, labels, recs[0].submitted_at, log=False)

    def _apply(self, worker_id, hit_id, labels, submitted_at, log: bool) -> Verdict:
        hit = self.hits_by_id.get(hit_id)
        if hit is None:
            raise UnknownHit(hit_id)
        if (worker_id, hit_id) in self._verdicts:
            raise DuplicateSubmission(f"{worker_id} already submitted {hit_id}")
        for label in labels.values():
            if label not in RAW_LABELS:
                raise IncompleteSubmission(f"unknown label {label!r}")
        verdict = detect_spam(hit, labels, self.gt_labels)
        records = [
            AnnotationRecord(
                worker_id=worker_id,
                hit_id=hit_id,
                miniclip_id=mid,
                action_id=aid,
                raw_label=labels[(mid, aid)],
                submitted_at=submitted_at,
            )
            for clip in hit.miniclips
            for mid, aid in ((clip.miniclip_id, a) for a in clip.action_ids)
        ]
        self._verdicts[(worker_id, hit_id)] = verdict
        if verdict == Verdict.ACCEPT:
            self._records.extend(records)
        if log and self.log_path is not None:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                for r in records:
                    fh.write(json.dumps({
                        "worker_id": r.worker_id,
                        "hit_id": r.hit_id,
                        "miniclip_id": r.miniclip_id,
                        "action_id": r.action_id,
                        "raw_label": r.raw_label,
                        "submitted_at": r.submitted_at,
                    }, sort_keys=True) + "\n")
        return verdict

    def submit(self, worker_id: str, hit_id: str, labels: dict,
               submitted_at: float | None = None) -> Verdict:
        """Record one worker's full submission; returns the spam verdict."""
        with self._lock:
            return self._apply(
                worker_id, hit_id, labels,
                time.time() if submitted_at is None else submitted_at,
                log=True,
            )

    def accepted_count(self, hit_id: str) -> int:
        return sum(
            1 for (_, h), v in self._verdicts.items()
            if h == hit_id and v == Verdict.ACCEPT
        )

    def next_hit(self, worker_id: str) -> Hit | None:
        """First HIT (FIFO) still needing annotators that this worker hasn't done."""
        with self._lock:
            for hit in self.hits:
                if (worker_id, hit.hit_id) in self._verdicts:
                    continue
                if self.accepted_count(hit.hit_id) < self.required:
                    return hit
            return None

    def progress(self) -> dict:
        with self._lock:
            accepted = sum(1 for v in self._verdicts.values() if v == Verdict.ACCEPT)
            rejected = len(self._verdicts) - accepted
            complete = sum(
                1 for h in self.hits if self.accepted_count(h.hit_id) >= self.required
            )
            return {
                "hits": len(self.hits),
                "required_submissions": len(self.hits) * self.required,
                "accepted_submissions": accepted,
                "rejected_submissions": rejected,
                "complete_hits": complete,
                "records": len(self._records),
            }

    def _agreement_counts(self):
        per_item: dict = {}
        for r in self._records:
            per_item.setdefault((r.miniclip_id, r.action_id), []).append(binarize(r.raw_label))
        rows = []
        from .annotation import VISIBLE

        for key in sorted(per_item):
            votes = per_item[key][: self.required]
            if len(votes) < self.required:
                continue
            visible = votes.count(VISIBLE)
            rows.append((visible, self.required - visible))
        return rows

    def agreement(self) -> tuple[float | None, int]:
        """Fleiss kappa over fully annotated items (binarized); None if undefined."""
        with self._lock:
            rows = self._agreement_counts()
        if not rows:
            return None, 0
        try:
            return fleiss_kappa(rows, self.required), len(rows)
        except DegenerateAgreement:
            return None, len(rows)

    def aggregated(self) -> list[AggregatedLabel]:
        """Majority labels for regular miniclips with a full set of annotations."""
        with self._lock:
            per_item: dict = {}
            for r in self._records:
                if r.miniclip_id in self.gt_clip_ids:
                    continue
                per_item.setdefault((r.miniclip_id, r.action_id), []).append(r)
        usable = [recs[: self.required] for recs in per_item.values()
                  if len(recs) >= self.required]
        return aggregate([r for recs in usable for r in recs])


@dataclass
class FrameCatalog:
    """Resolves miniclip thumbnails to PGM files sampled at 1 fps."""

    miniclips: dict  # miniclip_id -> Miniclip
    frames_dirs: dict  # video_id -> directory
    fps: float = 30.0

    def thumbnail_count(self, miniclip_id: str) -> int:
        clip = self.miniclips.get(miniclip_id)
        if clip is None:
            return 0
        return max(1, int(clip.end_s - clip.start_s))

    def resolve(self, miniclip_id: str, second: int) -> Path | None:
        clip = self.miniclips.get(miniclip_id)
        if clip is None or second < 0 or clip.start_s + second > clip.end_s:
            return None
        frames_dir = self.frames_dirs.get(clip.video_id)
        if frames_dir is None:
            return None
        path = frame_path(frames_dir, int(round((clip.start_s + second) * self.fps)))
        return path if path.exists() else None


def hit_view(hit: Hit, catalog: FrameCatalog | None, action_texts: dict) -> dict:
    """Worker-facing JSON for one HIT; the ground-truth flag never leaves."""
    clips = []
    for clip in hit.miniclips:
        n = catalog.thumbnail_count(clip.miniclip_id) if catalog else 0
        clips.append({
            "miniclip_id": clip.miniclip_id,
            "frame_urls": [f"/frames/{clip.miniclip_id}/{i}.pgm" for i in range(n)],
            "actions": [
                {"action_id": a, "text": action_texts.get(a, a)}
                for a in clip.action_ids
            ],
        })
    return {"hit_id": hit.hit_id, "miniclips": clips}


class AnnotationService:
    """Bundles the store, frame catalog, and action texts behind HTTP."""

    def __init__(self, store: AnnotationStore, catalog: FrameCatalog | None = None,
                 action_texts: dict | None = None, static_dir: str | Path | None = None):
        self.store = store
        self.catalog = catalog
        self.action_texts = action_texts or {}
        self.static_dir = Path(static_dir) if static_dir else None
        self._server: ThreadingHTTPServer | None = None

    # -- request handling -----------------------------------------------------

    def handle_get(self, path: str, query: dict):
        if path == "/api/hits/next":
            worker = (query.get("worker_id") or [""])[0]
            if not worker:
                return 400, {"error": "worker_id required"}
            hit = self.store.next_hit(worker)
            if hit is None:
                return 204, None
            return 200, hit_view(hit, self.catalog, self.action_texts)
        if path == "/api/progress":
            return 200, self.store.progress()
        if path == "/api/agreement":
            kappa, items = self.store.agreement()
            return 200, {"kappa": kappa, "items": items}
        if path.startswith("/frames/"):
            return self._frame_response(path)
        return self._static_response(path)

    def handle_post(self, path: str, body: dict):
        parts = path.strip("/").split("/")
        if len(parts) == 4 and parts[0] == "api" and parts[1] == "hits" and parts[3] == "labels":
            hit_id = parts[2]
            worker = body.get("worker_id", "")
            raw = body.get("labels")
            if not worker or not isinstance(raw, list):
                return 400, {"error": "worker_id and labels required"}
            labels = {}
            for item in raw:
                try:
                    labels[(item["miniclip_id"], item["action_id"])] = item["raw_label"]
                except (KeyError, TypeError):
                    return 400, {"error": f"bad label entry {item!r}"}
            try:
                verdict = self.store.submit(worker, hit_id, labels)
            except DuplicateSubmission as exc:
                return 409, {"error": str(exc)}
            except UnknownHit as exc:
                return 404, {"error": str(exc)}
            except IncompleteSubmission as exc:
                return 400, {"error": str(exc)}
            return 200, {"verdict": verdict.value,
                         "accepted": self.store.accepted_count(hit_id)}
        return 404, {"error": "no such endpoint"}

    def _frame_response(self, path: str):
        parts = path.strip("/").split("/")
        if len(parts) != 3 or not parts[2].endswith(".pgm") or self.catalog is None:
            return 404, {"error": "no such frame"}
        try:
            second = int(parts[2][: -len(".pgm")])
        except ValueError:
            return 404, {"error": "bad frame index"}
        file = self.catalog.resolve(parts[1], second)
        if file is None:
            return 404, {"error": "no such frame"}
        return 200, ("image/x-portable-graymap", file.read_bytes())

    def _static_response(self, path: str):
        if self.static_dir is None:
            return 404, {"error": "not found"}
        rel = path.lstrip("/") or "index.html"
        file = (self.static_dir / rel).resolve()
        if not str(file).startswith(str(self.static_dir.resolve())) or not file.is_file():
            return 404, {"error": "not found"}
        types = {".html": "text/html", ".js": "text/javascript",
                 ".css": "text/css", ".map": "application/json"}
        ctype = types.get(file.suffix, "application/octet-stream")
        return 200, (ctype, file.read_bytes())

    # -- server lifecycle -------------------------------------------------------

    def make_server(self, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
        service = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _send(self, status, payload):
                if status == 204 or payload is None:
                    self.send_response(status)
                    self.send_header("Access-Control-Allow-Origin", "*")
                    self.end_headers()
                    return
                if isinstance(payload, tuple):
                    ctype, data = payload
                else:
                    ctype = "application/json"
                    data = json.dumps(payload, sort_keys=True).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(data)))
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                self.wfile.write(data)

            def do_GET(self):
                url = urlparse(self.path)
                status, payload = service.handle_get(url.path, parse_qs(url.query))
                self._send(status, payload)

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                try:
                    body = json.loads(self.rfile.read(length) or b"{}")
                except json.JSONDecodeError:
                    self._send(400, {"error": "bad JSON body"})
                    return
                url = urlparse(self.path)
                status, payload = service.handle_post(url.path, body)
                self._send(status, payload)

            def do_OPTIONS(self):
                self.send_response(204)
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
                self.end_headers()

        self._server = ThreadingHTTPServer((host, port), Handler)
        return self._server

    def serve_forever(self, host: str = "127.0.0.1", port: int = 0,
                      announce=print) -> None:
        server = self.make_server(host, port)
        announce(f"listening on http://{server.server_address[0]}:{server.server_address[1]}")
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()


def load_hits_file(path: str | Path) -> list[Hit]:
    from .annotation import HitClip
    from .io import read_jsonl

    hits = []
    for row in read_jsonl(path):
        clips = tuple(
            HitClip(
                miniclip_id=c["miniclip_id"],
                action_ids=tuple(c["action_ids"]),
                is_ground_truth=bool(c.get("is_ground_truth", False)),
            )
            for c in row["miniclips"]
        )
        hits.append(Hit(hit_id=row["hit_id"], miniclips=clips))
    return hits


def dump_hits_file(path: str | Path, hits: list[Hit]) -> None:
    from .io import write_jsonl

    write_jsonl(path, [
        {
            "hit_id": h.hit_id,
            "miniclips": [
                {
                    "miniclip_id": c.miniclip_id,
                    "action_ids": list(c.action_ids),
                    "is_ground_truth": c.is_ground_truth,
                }
                for c in h.miniclips
            ],
        }
        for h in hits
    ])
