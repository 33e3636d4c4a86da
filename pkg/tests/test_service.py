import json
import threading
import urllib.error
import urllib.request

import numpy as np
import pytest

from visact.annotation import (
    NOT_AN_ACTION,
    NOT_VISIBLE,
    VISIBLE,
    Hit,
    HitClip,
    Verdict,
)
from visact.miniclips import Frame, Miniclip, write_pgm
from visact.service import (
    AnnotationService,
    AnnotationStore,
    DuplicateSubmission,
    FrameCatalog,
    dump_hits_file,
    load_hits_file,
)


def two_hits():
    def clip(mid, n=2, gt=False):
        return HitClip(miniclip_id=mid, action_ids=tuple(f"{mid}a{i}" for i in range(n)),
                       is_ground_truth=gt)

    h0 = Hit("h0", (clip("m0"), clip("m1"), clip("m2"), clip("m3"), clip("gt", 5, gt=True)))
    h1 = Hit("h1", (clip("m4"), clip("m5"), clip("m6"), clip("m7"), clip("gt", 5, gt=True)))
    gt_labels = {("gt", f"gta{i}"): VISIBLE if i % 2 else NOT_VISIBLE for i in range(5)}
    return [h0, h1], gt_labels


def good_labels(hit, flip=False):
    """A non-uniform submission matching the gt labels (accuracy 1.0)."""
    labels = {}
    for clip in hit.miniclips:
        for i, a in enumerate(clip.action_ids):
            if clip.miniclip_id == "gt":
                labels[(clip.miniclip_id, a)] = VISIBLE if i % 2 else NOT_VISIBLE
            else:
                pick = VISIBLE if (i + flip) % 2 else NOT_AN_ACTION
                labels[(clip.miniclip_id, a)] = pick
    return labels


class TestStore:
    def test_fifo_and_requeue(self):
        hits, gt = two_hits()
        store = AnnotationStore(hits=hits, gt_labels=gt)
        assert store.next_hit("w1").hit_id == "h0"
        store.submit("w1", "h0", {k: VISIBLE for k in hits[0].action_keys})  # uniform spam
        # rejected: h0 still needs annotators, but not from w1
        assert store.next_hit("w1").hit_id == "h1"
        assert store.next_hit("w2").hit_id == "h0"

    def test_hit_leaves_queue_after_three_accepts(self):
        hits, gt = two_hits()
        store = AnnotationStore(hits=hits, gt_labels=gt)
        for w in ("w1", "w2", "w3"):
            assert store.submit(w, "h0", good_labels(hits[0])) == Verdict.ACCEPT
        assert store.accepted_count("h0") == 3
        assert store.next_hit("w9").hit_id == "h1"

    def test_duplicate_submission(self):
        hits, gt = two_hits()
        store = AnnotationStore(hits=hits, gt_labels=gt)
        store.submit("w1", "h0", good_labels(hits[0]))
        with pytest.raises(DuplicateSubmission):
            store.submit("w1", "h0", good_labels(hits[0]))

    def test_replay_from_log(self, tmp_path):
        hits, gt = two_hits()
        log = tmp_path / "records.jsonl"
        store = AnnotationStore(hits=hits, gt_labels=gt, log_path=log)
        store.submit("w1", "h0", good_labels(hits[0]))
        store.submit("w2", "h0", {k: VISIBLE for k in hits[0].action_keys})  # spam
        again = AnnotationStore(hits=hits, gt_labels=gt, log_path=log)
        assert again.progress() == store.progress()
        assert again.accepted_count("h0") == 1
        with pytest.raises(DuplicateSubmission):
            again.submit("w1", "h0", good_labels(hits[0]))

    def test_aggregated_excludes_gt_and_needs_three(self):
        hits, gt = two_hits()
        store = AnnotationStore(hits=hits, gt_labels=gt)
        for i, w in enumerate(("w1", "w2", "w3")):
            store.submit(w, "h0", good_labels(hits[0], flip=i == 2))
        agg = store.aggregated()
        ids = {a.miniclip_id for a in agg}
        assert "gt" not in ids
        assert ids == {"m0", "m1", "m2", "m3"}
        # 2-of-3 majority with one flipped worker
        for a in agg:
            assert a.votes[VISIBLE] in (1, 2)

    def test_agreement_perfect_is_one(self):
        hits, gt = two_hits()
        store = AnnotationStore(hits=hits, gt_labels=gt)
        for w in ("w1", "w2", "w3"):
            store.submit(w, "h0", good_labels(hits[0]))
        kappa, items = store.agreement()
        assert kappa == pytest.approx(1.0)
        assert items == 13  # 4 clips x 2 actions + 5 gt actions

    def test_agreement_empty_store(self):
        hits, gt = two_hits()
        store = AnnotationStore(hits=hits, gt_labels=gt)
        assert store.agreement() == (None, 0)


@pytest.fixture()
def live_service(tmp_path):
    hits, gt = two_hits()
    frames_dir = tmp_path / "frames" / "v"
    frames_dir.mkdir(parents=True)
    rng = np.random.default_rng(0)
    for i in range(0, 400):
        write_pgm(frames_dir / f"frame_{i:06d}.pgm",
                  Frame(4, 4, rng.integers(0, 256, (4, 4), dtype=np.uint8)))
    clips = {}
    for mid in ("m0", "m1", "m2", "m3", "m4", "m5", "m6", "m7", "gt"):
        idx = int(mid[1:]) if mid != "gt" else 8
        clips[mid] = Miniclip("v", idx, idx * 4.0, idx * 4.0 + 3.0, (f"{mid}a0",))
    catalog = FrameCatalog(miniclips=clips, frames_dirs={"v": frames_dir}, fps=10.0)
    store = AnnotationStore(hits=hits, gt_labels=gt, log_path=tmp_path / "log.jsonl")
    service = AnnotationService(store, catalog, {"m0a0": "cook it"})
    server = service.make_server(port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    yield base, hits
    server.shutdown()
    server.server_close()


def get(url):
    with urllib.request.urlopen(url, timeout=5) as resp:
        body = resp.read()
        return resp.status, json.loads(body) if body else None


def post(url, payload):
    req = urllib.request.Request(
        url, data=json.dumps(payload).encode(), method="POST",
        headers={"Content-Type": "application/json"},
    )
    try:
        with urllib.request.urlopen(req, timeout=5) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read() or b"{}")


class TestHttpApi:
    def test_next_hit_hides_ground_truth(self, live_service):
        base, _ = live_service
        status, view = get(f"{base}/api/hits/next?worker_id=w1")
        assert status == 200
        assert view["hit_id"] == "h0"
        assert len(view["miniclips"]) == 5
        for clip in view["miniclips"]:
            assert "is_ground_truth" not in clip
            assert clip["frame_urls"]
            assert all(u.startswith("/frames/") for u in clip["frame_urls"])
        named = [a for c in view["miniclips"] for a in c["actions"] if a["action_id"] == "m0a0"]
        assert named and named[0]["text"] == "cook it"

    def test_submit_roundtrip_and_duplicate(self, live_service):
        base, hits = live_service
        labels = [
            {"miniclip_id": mid, "action_id": aid,
             "raw_label": VISIBLE if aid.endswith("1") or aid.endswith("3") else NOT_VISIBLE}
            for (mid, aid) in sorted(hits[0].action_keys)
        ]
        status, out = post(f"{base}/api/hits/h0/labels",
                           {"worker_id": "w1", "labels": labels})
        assert status == 200
        assert out["verdict"] == "Accept"
        status2, out2 = post(f"{base}/api/hits/h0/labels",
                             {"worker_id": "w1", "labels": labels})
        assert status2 == 409

    def test_uniform_submission_verdict(self, live_service):
        base, hits = live_service
        labels = [
            {"miniclip_id": mid, "action_id": aid, "raw_label": VISIBLE}
            for (mid, aid) in sorted(hits[0].action_keys)
        ]
        status, out = post(f"{base}/api/hits/h0/labels",
                           {"worker_id": "spammer", "labels": labels})
        assert status == 200
        assert out["verdict"] == "RejectUniform"

    def test_incomplete_submission_400(self, live_service):
        base, hits = live_service
        labels = [
            {"miniclip_id": mid, "action_id": aid, "raw_label": VISIBLE}
            for (mid, aid) in sorted(hits[0].action_keys)
        ][:-1]
        status, _ = post(f"{base}/api/hits/h0/labels",
                         {"worker_id": "w1", "labels": labels})
        assert status == 400

    def test_progress_and_agreement_endpoints(self, live_service):
        base, hits = live_service
        status, prog = get(f"{base}/api/progress")
        assert status == 200
        assert prog["hits"] == 2 and prog["required_submissions"] == 6
        status, agr = get(f"{base}/api/agreement")
        assert status == 200
        assert agr["kappa"] is None and agr["items"] == 0

    def test_frame_endpoint_serves_pgm(self, live_service):
        base, _ = live_service
        with urllib.request.urlopen(f"{base}/frames/m0/0.pgm", timeout=5) as resp:
            assert resp.status == 200
            assert resp.headers["Content-Type"] == "image/x-portable-graymap"
            assert resp.read().startswith(b"P5")

    def test_frame_out_of_range_404(self, live_service):
        base, _ = live_service
        with pytest.raises(urllib.error.HTTPError) as err:
            urllib.request.urlopen(f"{base}/frames/m0/999.pgm", timeout=5)
        assert err.value.code == 404

    def test_empty_queue_after_all_hits_done(self, live_service):
        base, hits = live_service
        for hit in hits:
            for w in ("w1", "w2", "w3"):
                mapping = good_labels(hit)
                labels = [
                    {"miniclip_id": mid, "action_id": aid, "raw_label": mapping[(mid, aid)]}
                    for (mid, aid) in sorted(hit.action_keys)
                ]
                status, out = post(f"{base}/api/hits/{hit.hit_id}/labels",
                                   {"worker_id": w, "labels": labels})
                assert status == 200 and out["verdict"] == "Accept"
        req = urllib.request.Request(f"{base}/api/hits/next?worker_id=w9")
        with urllib.request.urlopen(req, timeout=5) as resp:
            assert resp.status == 204


class TestHitsFile:
    def test_roundtrip(self, tmp_path):
        hits, _ = two_hits()
        path = tmp_path / "hits.jsonl"
        dump_hits_file(path, hits)
        again = load_hits_file(path)
        assert again == hits
