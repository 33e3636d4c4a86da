#!/usr/bin/env python3
"""Run the annotation HTTP service against fixture data and act as a worker.

Fetches a HIT, answers every action, submits, and polls the progress and
agreement endpoints, i.e. exactly what the browser UI does.
"""

import json
import tempfile
import threading
import urllib.request
from pathlib import Path

from visact.annotation import NOT_VISIBLE, VISIBLE, Hit, HitClip
from visact.service import AnnotationService, AnnotationStore

clips = [HitClip(f"m{i}", (f"m{i}a0", f"m{i}a1")) for i in range(4)]
clips.append(HitClip("gt", tuple(f"g{i}" for i in range(5)), is_ground_truth=True))
hits = [Hit("hit-0000", tuple(clips))]
gt = {("gt", f"g{i}"): VISIBLE if i % 2 else NOT_VISIBLE for i in range(5)}

log = Path(tempfile.mkdtemp(prefix="visact-serve-")) / "records.jsonl"
store = AnnotationStore(hits=hits, gt_labels=gt, log_path=log)
service = AnnotationService(store, action_texts={"m0a0": "actually cook it"})
server = service.make_server(port=0)
threading.Thread(target=server.serve_forever, daemon=True).start()
base = f"http://127.0.0.1:{server.server_address[1]}"
print(f"service listening on {base}")


def get(path):
    with urllib.request.urlopen(base + path, timeout=5) as resp:
        return json.loads(resp.read()) if resp.status == 200 else None


for worker in ("w1", "w2", "w3"):
    view = get("/api/hits/next?worker_id=" + worker)
    labels = []
    for clip in view["miniclips"]:
        for i, action in enumerate(clip["actions"]):
            if (clip["miniclip_id"], action["action_id"]) in gt:
                raw = gt[(clip["miniclip_id"], action["action_id"])]
            else:
                raw = VISIBLE if i % 2 == 0 else NOT_VISIBLE
            labels.append({"miniclip_id": clip["miniclip_id"],
                           "action_id": action["action_id"], "raw_label": raw})
    body = json.dumps({"worker_id": worker, "labels": labels}).encode()
    req = urllib.request.Request(f"{base}/api/hits/{view['hit_id']}/labels",
                                 data=body, method="POST",
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req, timeout=5) as resp:
        print(f"{worker}: verdict {json.loads(resp.read())['verdict']}")

print("\nprogress: ", json.dumps(get("/api/progress")))
print("agreement:", json.dumps(get("/api/agreement")))
print("aggregated majority labels:")
for agg in store.aggregated()[:6]:
    print(f"   {agg.miniclip_id}/{agg.action_id}: {agg.label} {agg.votes}")
print(f"\nappend-only record log: {log}")
server.shutdown()
