"""Command-line pipeline: each subcommand reads declared inputs and writes
its artifacts atomically under --out-dir, so stages compose by default.

Exit codes: 1 bad configuration, 2 malformed input file, 3 runtime
failure. With --json-errors the failure is also printed as one JSON object
on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from .annotation import (
    NOT_VISIBLE_OR_NOT_ACTION,
    VISIBLE,
    build_hits,
    fleiss_kappa,
)
from .baselines import (
    ThresholdModel,
    object_match_score,
    save_model,
    train_linear,
    tune_threshold,
)
from .chunking import (
    NOUN_TAGS,
    ChunkRules,
    extract_candidates,
    load_tag_lexicon,
    read_pos_sidecar,
    split_sentences,
    tag_from_sidecar,
    tag_with_lexicon,
    timestamp_action,
    tokenize_transcript,
)
from .config import (
    PipelineConfig,
    apply_overrides,
    load_config,
    parse_grid,
    parse_int_tuple,
    stage_seed,
)
from .errors import ConfigError, DegenerateAgreement, FormatError, VisactError
from .evaluation import (
    ambiguous_actions,
    dataset_stats,
    majority_baseline,
    metrics,
    paired_ttest,
    results_csv,
    stats_csv,
    stats_markdown,
)
from .features import (
    ConcretenessLexicon,
    EmbeddingTable,
    Taxonomy,
    action_embedding,
    concreteness_score,
    context_features,
    load_detections,
    load_feature_bank,
    pos_embedding,
)
from .io import atomic_write_text, load_manifest, read_jsonl, write_jsonl
from .miniclips import Miniclip, filter_static, load_sampled_frames, motion_score, segment
from .nn import (
    FusionSample,
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    train_multimodal,
    train_text_model,
    train_video_model,
)
from .nn.models import history_csv
from .service import (
    AnnotationService,
    AnnotationStore,
    FrameCatalog,
    dump_hits_file,
    load_hits_file,
)
from .transcripts import Transcript, CaptionCue, parse_transcript, words_per_second
from .errors import TooFewFrames

SUBCOMMANDS = (
    "ingest", "extract", "segment", "motion-filter", "hits", "serve",
    "aggregate", "kappa", "features", "train", "evaluate", "stats",
)


# -- shared helpers ---------------------------------------------------------------


def out_path(cfg: PipelineConfig, name: str) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def default_in(cfg: PipelineConfig, flag_value: str | None, name: str) -> Path:
    path = Path(flag_value) if flag_value else Path(cfg.out_dir) / name
    if not path.exists():
        raise ConfigError(f"input not found: {path}")
    return path


def transcript_from_row(row: dict) -> Transcript:
    return Transcript(
        video_id=row["video_id"],
        duration_s=float(row["duration_s"]),
        cues=tuple(
            CaptionCue(start_s=float(c["start_s"]), end_s=float(c["end_s"]), text=c["text"])
            for c in row["cues"]
        ),
    )


def load_labels_file(path: Path) -> dict:
    """labels JSONL -> {(miniclip_id, action_id): label}."""
    out = {}
    for row in read_jsonl(path):
        out[(row["miniclip_id"], row["action_id"])] = row["label"]
    return out


def chunk_rules_for(cfg: PipelineConfig) -> ChunkRules:
    if cfg.chunk_rules:
        return ChunkRules.from_file(cfg.chunk_rules)
    base = ChunkRules()
    return ChunkRules(
        verb_tags=base.verb_tags,
        extend_tags=base.extend_tags,
        aux_stoplist=base.aux_stoplist,
        max_len=cfg.max_len,
        gap_s=cfg.gap_s,
        include_preceding_rb=base.include_preceding_rb,
    )


def csv_text(rows: list[list]) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


# -- subcommands --------------------------------------------------------------------


def cmd_ingest(args, cfg: PipelineConfig) -> int:
    if not cfg.manifest:
        raise ConfigError("ingest requires --manifest")
    entries = load_manifest(cfg.manifest)

    def one(entry):
        path = Path(entry.transcript_path)
        if not path.is_file():
            return entry, None, None
        transcript = parse_transcript(path.read_bytes(), entry.video_id, entry.duration_s)
        return entry, transcript, words_per_second(transcript)

    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        results = list(pool.map(one, entries))
    results.sort(key=lambda r: r[0].video_id)

    kept_rows, dropped_rows = [], []
    for entry, transcript, rate in results:
        if transcript is None or rate < cfg.density_min:
            dropped_rows.append({
                "video_id": entry.video_id,
                "channel": entry.channel,
                "words_per_second": rate,
                "reason": "no_transcript" if transcript is None else "low_density",
            })
            continue
        kept_rows.append({
            "video_id": entry.video_id,
            "channel": entry.channel,
            "duration_s": entry.duration_s,
            "words_per_second": rate,
            "cues": [
                {"start_s": c.start_s, "end_s": c.end_s, "text": c.text}
                for c in transcript.cues
            ],
        })
    write_jsonl(out_path(cfg, "transcripts.jsonl"), kept_rows)
    write_jsonl(out_path(cfg, "dropped.jsonl"), dropped_rows)
    print(f"ingest: kept {len(kept_rows)}, dropped {len(dropped_rows)}")
    return 0


def cmd_extract(args, cfg: PipelineConfig) -> int:
    if not cfg.tag_lexicon:
        raise ConfigError("extract requires --tag-lexicon")
    lexicon = load_tag_lexicon(cfg.tag_lexicon)
    rules = chunk_rules_for(cfg)
    transcripts_path = default_in(cfg, args.transcripts, "transcripts.jsonl")
    rows = []
    for trow in read_jsonl(transcripts_path):
        transcript = transcript_from_row(trow)
        sidecar = None
        if args.pos_dir:
            sidecar_path = Path(args.pos_dir) / f"{transcript.video_id}.tsv"
            if sidecar_path.is_file():
                sidecar = read_pos_sidecar(sidecar_path)
        if sidecar is not None:
            tags = tag_from_sidecar(transcript, sidecar)
        else:
            tags = tag_with_lexicon(tokenize_transcript(transcript), lexicon)
        i = 0
        for sentence in split_sentences(transcript, tags, gap_s=rules.gap_s):
            sentence_surfaces = [t.surface for t in sentence.tokens]
            for action in extract_candidates(sentence, rules):
                action.time_s = timestamp_action(action, transcript)
                rows.append({
                    "action_id": f"{transcript.video_id}:a{i:04d}",
                    "video_id": transcript.video_id,
                    "sentence_index": action.sentence_index,
                    "span": list(action.span),
                    "text": action.text,
                    "tokens": [t.surface for t in action.tokens],
                    "tags": [t.pos for t in action.tokens],
                    "sentence": sentence_surfaces,
                    "time_s": action.time_s,
                })
                i += 1
    write_jsonl(out_path(cfg, "actions.jsonl"), rows)
    print(f"extract: {len(rows)} candidate actions")
    return 0


def cmd_segment(args, cfg: PipelineConfig) -> int:
    actions_path = default_in(cfg, args.actions, "actions.jsonl")
    transcripts_path = default_in(cfg, args.transcripts, "transcripts.jsonl")
    durations = {row["video_id"]: float(row["duration_s"]) for row in read_jsonl(transcripts_path)}
    per_video: dict[str, list] = {}
    for row in read_jsonl(actions_path):
        per_video.setdefault(row["video_id"], []).append((row["action_id"], float(row["time_s"])))
    rows = []
    for video_id in sorted(per_video):
        if video_id not in durations:
            raise FormatError(f"actions reference unknown video {video_id!r}")
        ordered = sorted(per_video[video_id], key=lambda a: (a[1], a[0]))
        for clip in segment(video_id, durations[video_id], ordered,
                            max_core_s=cfg.max_core_s, pad_s=cfg.pad_s):
            rows.append(clip.to_json())
    write_jsonl(out_path(cfg, "miniclips.jsonl"), rows)
    print(f"segment: {len(rows)} miniclips")
    return 0


def cmd_motion_filter(args, cfg: PipelineConfig) -> int:
    if not cfg.manifest:
        raise ConfigError("motion-filter requires --manifest")
    frames_dirs = {e.video_id: e.frames_dir for e in load_manifest(cfg.manifest)}
    clips_path = default_in(cfg, args.miniclips, "miniclips.jsonl")
    clips = [Miniclip.from_json(row) for row in read_jsonl(clips_path)]

    def score(clip):
        frames_dir = frames_dirs.get(clip.video_id)
        if frames_dir is None:
            return clip, None
        frames = load_sampled_frames(frames_dir, clip, cfg.frame_rate, cfg.motion_stride)
        try:
            return clip, motion_score(frames, stride=1)
        except TooFewFrames:
            return clip, None

    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        scored = list(pool.map(score, clips))
    scored.sort(key=lambda cs: (cs[0].video_id, cs[0].index))

    judged = [(c, s) for c, s in scored if s is not None]
    unjudged = [c for c, s in scored if s is None]
    kept, dropped = filter_static([c for c, _ in judged], [s for _, s in judged],
                                  threshold=cfg.motion_threshold)
    kept = sorted(kept + unjudged, key=lambda c: (c.video_id, c.index))
    write_jsonl(out_path(cfg, "miniclips_kept.jsonl"), [c.to_json() for c in kept])
    write_jsonl(out_path(cfg, "miniclips_dropped.jsonl"), [c.to_json() for c in dropped])
    score_rows = [["miniclip_id", "median_correlation"]]
    for clip, s in scored:
        score_rows.append([clip.clip_id, "" if s is None else f"{s:.6f}"])
    atomic_write_text(out_path(cfg, "motion_scores.csv"), csv_text(score_rows))
    print(f"motion-filter: kept {len(kept)}, dropped {len(dropped)}")
    return 0


def _clip_actions_in_time_order(clips_path: Path, actions_path: Path):
    time_of = {row["action_id"]: float(row["time_s"]) for row in read_jsonl(actions_path)}
    out = []
    for row in read_jsonl(clips_path):
        clip = Miniclip.from_json(row)
        ordered = sorted(clip.action_ids, key=lambda a: (time_of.get(a, 0.0), a))
        out.append((clip, ordered))
    return out


def cmd_hits(args, cfg: PipelineConfig) -> int:
    if not cfg.gt_labels:
        raise ConfigError("hits requires --gt-labels")
    gt = load_labels_file(Path(cfg.gt_labels))
    gt_clip_ids = {mid for mid, _ in gt}
    clips_path = default_in(cfg, args.miniclips, "miniclips_kept.jsonl")
    actions_path = default_in(cfg, args.actions, "actions.jsonl")
    regular, gt_pool = [], []
    for clip, ordered in _clip_actions_in_time_order(clips_path, actions_path):
        if clip.clip_id in gt_clip_ids:
            labeled = [a for a in ordered if (clip.clip_id, a) in gt]
            gt_pool.append((clip.clip_id, labeled))
        else:
            regular.append((clip.clip_id, ordered))
    hits = build_hits(regular, gt_pool, per_hit=cfg.per_hit, max_actions=cfg.max_actions,
                      seed=stage_seed(cfg.seed, "hits"))
    dump_hits_file(out_path(cfg, "hits.jsonl"), hits)
    print(f"hits: {len(hits)} HITs from {len(regular)} regular + {len(gt_pool)} gt miniclips")
    return 0


def _build_service(args, cfg: PipelineConfig) -> AnnotationService:
    hits = load_hits_file(default_in(cfg, args.hits, "hits.jsonl"))
    gt = load_labels_file(Path(cfg.gt_labels)) if cfg.gt_labels else {}
    log_path = Path(cfg.records_log)
    if not log_path.is_absolute():
        log_path = Path(cfg.out_dir) / log_path
    store = AnnotationStore(hits=hits, gt_labels=gt, log_path=log_path)

    catalog = None
    if cfg.manifest:
        frames_dirs = {e.video_id: e.frames_dir for e in load_manifest(cfg.manifest)}
        clips_file = Path(args.miniclips) if args.miniclips else Path(cfg.out_dir) / "miniclips_kept.jsonl"
        if not clips_file.exists():
            clips_file = Path(cfg.out_dir) / "miniclips.jsonl"
        clips = {}
        if clips_file.exists():
            for row in read_jsonl(clips_file):
                clip = Miniclip.from_json(row)
                clips[clip.clip_id] = clip
        catalog = FrameCatalog(miniclips=clips, frames_dirs=frames_dirs, fps=cfg.frame_rate)

    texts = {}
    actions_file = Path(args.actions) if args.actions else Path(cfg.out_dir) / "actions.jsonl"
    if actions_file.exists():
        texts = {row["action_id"]: row["text"] for row in read_jsonl(actions_file)}
    return AnnotationService(store, catalog, texts,
                             static_dir=cfg.static_dir or None)


def cmd_serve(args, cfg: PipelineConfig) -> int:
    service = _build_service(args, cfg)
    service.serve_forever(host=args.host, port=args.port)
    return 0


def cmd_aggregate(args, cfg: PipelineConfig) -> int:
    service = _build_service(args, cfg)
    labels = service.store.aggregated()
    write_jsonl(out_path(cfg, "labels.jsonl"), [
        {"miniclip_id": a.miniclip_id, "action_id": a.action_id, "label": a.label}
        for a in labels
    ])
    progress = service.store.progress()
    print(f"aggregate: {len(labels)} labeled actions "
          f"({progress['accepted_submissions']} accepted submissions)")
    return 0


def cmd_kappa(args, cfg: PipelineConfig) -> int:
    if args.counts:
        rows = []
        for line in Path(args.counts).read_text(encoding="utf-8").splitlines():
            if line.strip():
                rows.append([int(v) for v in line.replace(",", " ").split()])
        try:
            print(round(fleiss_kappa(rows), 6))
        except DegenerateAgreement:
            print("undefined")
        return 0
    service = _build_service(args, cfg)
    kappa, items = service.store.agreement()
    print("undefined" if kappa is None else round(kappa, 6))
    return 0


def _embedding_tables(cfg: PipelineConfig):
    if not cfg.embeddings:
        raise ConfigError("features requires --embeddings")
    table = EmbeddingTable.load(cfg.embeddings)
    pos_table = EmbeddingTable.load(cfg.pos_embeddings) if cfg.pos_embeddings else None
    lexicon = ConcretenessLexicon.load(cfg.concreteness) if cfg.concreteness else None
    return table, pos_table, lexicon


def _detection_index(cfg: PipelineConfig):
    """(taxonomy, detections-by-miniclip) when both inputs are configured."""
    if not cfg.detections or not cfg.taxonomy:
        return None, None
    tax = Taxonomy.load(cfg.taxonomy)
    by_clip: dict[str, list[str]] = {}
    for det in load_detections(cfg.detections):
        by_clip.setdefault(det.miniclip_id, []).append(det.label)
    return tax, by_clip


def cmd_features(args, cfg: PipelineConfig) -> int:
    table, pos_table, lexicon = _embedding_tables(cfg)
    tax, detections_by_clip = _detection_index(cfg)
    actions_path = default_in(cfg, args.actions, "actions.jsonl")
    labels_path = default_in(cfg, args.labels, "labels.jsonl")
    clips_path = default_in(cfg, args.miniclips, "miniclips_kept.jsonl")
    labels = load_labels_file(labels_path)
    label_of_action = {aid: lab for (_, aid), lab in labels.items()}
    clip_of_action = {}
    for row in read_jsonl(clips_path):
        for aid in row["action_ids"]:
            clip_of_action[aid] = f"{row['video_id']}:{row['index']}"

    per_video: dict[str, list[dict]] = {}
    for row in read_jsonl(actions_path):
        per_video.setdefault(row["video_id"], []).append(row)

    out_rows = []
    for video_id in sorted(per_video):
        rows = per_video[video_id]
        for i, row in enumerate(rows):
            aid = row["action_id"]
            label = label_of_action.get(aid)
            if label is None and not args.all_actions:
                continue
            tokens = row["tokens"]
            prev_tokens = rows[i - 1]["tokens"] if i > 0 else None
            next_tokens = rows[i + 1]["tokens"] if i + 1 < len(rows) else None
            ctx = context_features(
                tuple(row["span"]), row.get("sentence", tokens),
                prev_tokens, next_tokens, table, window=cfg.context_window,
            )
            bundle = {
                "action_id": aid,
                "miniclip_id": clip_of_action.get(aid, ""),
                "label": None if label is None else int(label == VISIBLE),
                "tokens": tokens,
                "action": [float(x) for x in action_embedding(tokens, table).vector],
                "context_s": [float(x) for x in
                              np.concatenate([ctx["context_s_before"], ctx["context_s_after"]])],
                "context_a": [float(x) for x in
                              np.concatenate([ctx["context_a_prev"], ctx["context_a_next"]])],
            }
            if pos_table is not None:
                bundle["pos"] = [float(x) for x in pos_embedding(row["tags"], pos_table).vector]
            if lexicon is not None:
                score = concreteness_score(tokens, row["tags"], lexicon)
                bundle["concreteness"] = None if score is None else [score]
            if tax is not None:
                nouns = [t for t, g in zip(tokens, row["tags"]) if g in NOUN_TAGS]
                detected = detections_by_clip.get(bundle["miniclip_id"], [])
                sim = object_match_score(nouns, detected, tax=tax, mode="wup")
                bundle["similarity"] = None if sim is None else [sim]
            out_rows.append(bundle)
    write_jsonl(out_path(cfg, "features.jsonl"), out_rows)
    print(f"features: {len(out_rows)} rows")
    return 0


def _load_bundles(path: Path):
    return list(read_jsonl(path))


def _bundle_matrix(rows: list[dict], extras: tuple) -> tuple[np.ndarray, np.ndarray]:
    X, y = [], []
    for row in rows:
        if "features" in row:
            X.append(row["features"])
        else:
            parts = [row["action"]]
            for name in extras:
                value = row.get(name)
                if name == "concreteness":
                    value = value if value else [0.0]
                if value is None:
                    raise FormatError(f"{row.get('action_id')}: missing feature {name!r}")
                parts.append(value)
            X.append([v for part in parts for v in part])
        y.append(int(row["label"]))
    return np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.int64)


def _fusion_samples(rows: list[dict], bank) -> tuple[list[FusionSample], np.ndarray]:
    samples, labels = [], []
    for row in rows:
        video_rows = bank.rows(row["miniclip_id"])
        if video_rows is None:
            raise VisactError(f"feature bank has no rows for {row['miniclip_id']!r}")
        features = {"action": np.asarray(row["action"], dtype=np.float64)}
        for name in ("pos", "context_s", "context_a"):
            if row.get(name) is not None:
                features[name] = np.asarray(row[name], dtype=np.float64)
        conc = row.get("concreteness")
        features["concreteness"] = np.asarray(conc if conc else [0.0], dtype=np.float64)
        samples.append(FusionSample(
            video_rows=np.asarray(video_rows, dtype=np.float64),
            features=features,
            action_id=row["action_id"],
            miniclip_id=row["miniclip_id"],
        ))
        labels.append(int(row["label"]))
    return samples, np.asarray(labels, dtype=np.float64)


def _train_config(cfg: PipelineConfig, seed: int) -> TrainConfig:
    return TrainConfig(
        learning_rate=cfg.learning_rate,
        rms_decay=cfg.rms_decay,
        epsilon=cfg.epsilon,
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        seed=seed,
        hidden_dim=cfg.hidden_dim,
        fc_sizes=parse_int_tuple(cfg.fc_sizes),
        dropout=cfg.dropout,
    )


def _write_predictions(cfg: PipelineConfig, name: str, rows, probs) -> list[str]:
    preds = [VISIBLE if p >= 0.5 else NOT_VISIBLE_OR_NOT_ACTION for p in probs]
    write_jsonl(out_path(cfg, name), [
        {
            "action_id": row["action_id"],
            "miniclip_id": row.get("miniclip_id", ""),
            "p_visible": float(p),
            "label": label,
        }
        for row, p, label in zip(rows, probs, preds)
    ])
    return preds


def _eval_row(cfg: PipelineConfig, method: str, inputs: str, preds, gold_rows) -> None:
    gold = [VISIBLE if int(r["label"]) == 1 else NOT_VISIBLE_OR_NOT_ACTION for r in gold_rows]
    m = metrics(preds, gold)
    text = results_csv([{
        "method": method, "input": inputs, "accuracy": m.accuracy,
        "precision": m.precision, "recall": m.recall, "f1": m.f1,
    }])
    atomic_write_text(out_path(cfg, "eval.csv"), text)
    print(text.splitlines()[1])


def cmd_train(args, cfg: PipelineConfig) -> int:
    train_rows = _load_bundles(default_in(cfg, args.train, "features.jsonl"))
    if not train_rows:
        raise FormatError("empty training set")
    val_rows = _load_bundles(Path(args.val)) if args.val else []
    extras = tuple(e.strip() for e in (args.extras or "").split(",") if e.strip())
    seed = stage_seed(cfg.seed, f"train:{args.model}")

    if args.model == "threshold":
        if not val_rows:
            raise ConfigError("train --model threshold requires --val")
        def scores_of(rows):
            return [r.get(args.scores_key)[0] if r.get(args.scores_key) else None for r in rows]
        def labels_of(rows):
            return [VISIBLE if int(r["label"]) == 1 else NOT_VISIBLE_OR_NOT_ACTION for r in rows]
        theta = tune_threshold(scores_of(val_rows), labels_of(val_rows),
                               parse_grid(cfg.concreteness_grid))
        model = ThresholdModel(theta=theta)
        save_model(out_path(cfg, "model.json"), model)
        preds = [model.predict(s) for s in scores_of(val_rows)]
        _eval_row(cfg, "Threshold", args.scores_key, preds, val_rows)
        return 0

    if args.model == "linear":
        X, y = _bundle_matrix(train_rows, extras)
        model, report = train_linear(X, y, parse_grid(cfg.c_grid),
                                     folds=cfg.folds, seed=seed, epochs=cfg.linear_epochs)
        save_model(out_path(cfg, "model.json"), model)
        cv_rows = [["C", "cv_accuracy"]] + [
            [c, f"{acc:.6f}"] for c, acc in sorted(report.accuracies.items())
        ]
        atomic_write_text(out_path(cfg, "cv_report.csv"), csv_text(cv_rows))
        eval_rows = val_rows or train_rows
        Xe, _ = _bundle_matrix(eval_rows, extras)
        preds = model.predict_batch(Xe)
        _eval_row(cfg, "Linear", "+".join(("action",) + extras), preds, eval_rows)
        return 0

    if args.model == "lstm":
        sequences = [r["tokens"] for r in train_rows]
        labels = np.array([float(r["label"]) for r in train_rows])
        table = EmbeddingTable.load(cfg.embeddings) if cfg.embeddings else None
        model = train_text_model(sequences, labels, table, _train_config(cfg, seed))
        save_checkpoint(out_path(cfg, "model.vnf1"), model)
        atomic_write_text(out_path(cfg, "history.csv"), history_csv(model.history))
        eval_rows = val_rows or train_rows
        probs = model.predict_proba([r["tokens"] for r in eval_rows])
        preds = _write_predictions(cfg, "predictions.jsonl", eval_rows, probs)
        _eval_row(cfg, "LSTM", "action_tokens", preds, eval_rows)
        return 0

    if args.model in ("video", "multimodal"):
        if not cfg.feature_bank:
            raise ConfigError(f"train --model {args.model} requires --feature-bank")
        bank = load_feature_bank(cfg.feature_bank)
        samples, labels = _fusion_samples(train_rows, bank)
        tcfg = _train_config(cfg, seed)
        if args.model == "video":
            model = train_video_model([s.video_rows for s in samples], labels, tcfg)
        else:
            model = train_multimodal(samples, labels, tcfg, extras=extras)
        save_checkpoint(out_path(cfg, "model.vnf1"), model)
        atomic_write_text(out_path(cfg, "history.csv"), history_csv(model.history))
        eval_rows = val_rows or train_rows
        eval_samples, _ = _fusion_samples(eval_rows, bank)
        if args.model == "video":
            probs = model.predict_proba([s.video_rows for s in eval_samples])
            inputs = "inception,c3d"
        else:
            probs = model.predict_proba(eval_samples)
            inputs = "+".join(("action",) + model.extras + ("inception", "c3d"))
        preds = _write_predictions(cfg, "predictions.jsonl", eval_rows, probs)
        _eval_row(cfg, args.model.capitalize(), inputs, preds, eval_rows)
        return 0

    raise ConfigError(f"unknown model {args.model!r}")


def cmd_evaluate(args, cfg: PipelineConfig) -> int:
    gold_map = load_labels_file(default_in(cfg, args.gold, "labels.jsonl"))
    gold_of_action = {aid: lab for (_, aid), lab in gold_map.items()}

    def read_predictions(path):
        rows = list(read_jsonl(Path(path)))
        preds, gold = {}, {}
        for row in rows:
            aid = row["action_id"]
            if aid not in gold_of_action:
                continue
            preds[aid] = row["label"]
            gold[aid] = gold_of_action[aid]
        return preds, gold

    if args.majority_baseline:
        if args.train_labels:
            source = load_labels_file(Path(args.train_labels))
            train_labels = list(source.values())
        else:
            train_labels = [lab for lab in gold_of_action.values()]
        predict = majority_baseline(train_labels)
        ids = sorted(gold_of_action)
        preds = dict(zip(ids, predict(ids)))
        gold = {aid: gold_of_action[aid] for aid in ids}
    else:
        if not args.predictions:
            raise ConfigError("evaluate requires --predictions or --majority-baseline")
        preds, gold = read_predictions(args.predictions)
    if not preds:
        raise FormatError("no predictions matched the gold labels")
    ids = sorted(preds)
    m = metrics([preds[a] for a in ids], [gold[a] for a in ids])
    text = results_csv([{
        "method": args.method, "input": args.inputs, "accuracy": m.accuracy,
        "precision": m.precision, "recall": m.recall, "f1": m.f1,
    }])
    atomic_write_text(out_path(cfg, "eval.csv"), text)
    print(text, end="")

    if args.compare:
        other, _ = read_predictions(args.compare)
        shared = sorted(set(ids) & set(other))
        if len(shared) < 2:
            raise VisactError("need at least two shared predictions for the t-test")
        correct_a = [float(preds[a] == gold[a]) for a in shared]
        correct_b = [float(other[a] == gold[a]) for a in shared]
        result = paired_ttest(correct_a, correct_b)
        print(json.dumps({
            "t": result.t_statistic, "dof": result.dof,
            "p_two_tailed": result.p_two_tailed, "items": len(shared),
        }, sort_keys=True))
    return 0


def cmd_stats(args, cfg: PipelineConfig) -> int:
    transcripts_path = default_in(cfg, args.transcripts, "transcripts.jsonl")
    durations, word_counts, channels = {}, {}, {}
    for row in read_jsonl(transcripts_path):
        vid = row["video_id"]
        durations[vid] = float(row["duration_s"])
        word_counts[vid] = sum(len(c["text"].split()) for c in row["cues"])
        channels[vid] = row.get("channel", "")

    clips_path = default_in(cfg, args.miniclips, "miniclips_kept.jsonl")
    miniclip_actions, clip_video = {}, {}
    for row in read_jsonl(clips_path):
        cid = f"{row['video_id']}:{row['index']}"
        miniclip_actions[cid] = len(row["action_ids"])
        clip_video[cid] = row["video_id"]

    labels, texts = [], []
    labels_path = Path(args.labels) if args.labels else Path(cfg.out_dir) / "labels.jsonl"
    if labels_path.exists():
        action_text = {}
        actions_path = Path(args.actions) if args.actions else Path(cfg.out_dir) / "actions.jsonl"
        if actions_path.exists():
            action_text = {row["action_id"]: row["text"] for row in read_jsonl(actions_path)}
        for row in read_jsonl(labels_path):
            labels.append(row["label"])
            if row["action_id"] in action_text:
                texts.append((action_text[row["action_id"]], row["label"]))

    split_of = None
    channel_order = []
    for vid in durations:
        ch = channels[vid]
        if ch not in channel_order:
            channel_order.append(ch)
    if channel_order:
        names = {}
        for i, ch in enumerate(channel_order):
            if i < cfg.train_channels:
                names[ch] = "train"
            elif i < cfg.train_channels + cfg.val_channels:
                names[ch] = "val"
            else:
                names[ch] = "test"
        split_of = {
            cid: names.get(channels.get(clip_video[cid], ""), "test")
            for cid in miniclip_actions
        }

    stats = dataset_stats(durations, word_counts, miniclip_actions, labels, split_of)
    md = stats_markdown(stats)
    if texts:
        count, _ = ambiguous_actions(texts)
        md += f"\nAmbiguous actions (labeled both ways): {count}\n"
    atomic_write_text(out_path(cfg, "report.md"), md)
    atomic_write_text(out_path(cfg, "report.csv"), stats_csv(stats))
    print(md)
    return 0


# -- parser / entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key-value config file")
    common.add_argument("--json-errors", action="store_true",
                        help="emit machine-readable error JSON on stderr")
    for f in fields(PipelineConfig):
        flag = "--" + f.name.replace("_", "-")
        common.add_argument(flag, dest=f.name, default=None, metavar=f.type.upper()
                            if f.type in ("int", "float") else "PATH_OR_VALUE")

    parser = argparse.ArgumentParser(
        prog="visact",
        description="Pipeline for deciding whether transcript actions are visible on screen.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common],
                       help="parse transcripts from the manifest and apply the density filter")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract", parents=[common],
                       help="chunk candidate actions out of ingested transcripts")
    p.add_argument("--transcripts")
    p.add_argument("--pos-dir", help="directory of per-video CoNLL tag sidecars")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("segment", parents=[common],
                       help="group actions into padded miniclips")
    p.add_argument("--actions")
    p.add_argument("--transcripts")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("motion-filter", parents=[common],
                       help="drop miniclips whose sampled frames barely change")
    p.add_argument("--miniclips")
    p.set_defaults(func=cmd_motion_filter)

    p = sub.add_parser("hits", parents=[common],
                       help="compose annotation HITs with one ground-truth miniclip each")
    p.add_argument("--miniclips")
    p.add_argument("--actions")
    p.set_defaults(func=cmd_hits)

    p = sub.add_parser("serve", parents=[common], help="start the annotation HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--hits")
    p.add_argument("--miniclips")
    p.add_argument("--actions")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("aggregate", parents=[common],
                       help="majority-vote accepted annotations into final labels")
    p.add_argument("--hits")
    p.add_argument("--miniclips")
    p.add_argument("--actions")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("kappa", parents=[common], help="print Fleiss kappa")
    p.add_argument("--counts", help="CSV/whitespace matrix of per-item category counts")
    p.add_argument("--hits")
    p.add_argument("--miniclips")
    p.add_argument("--actions")
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("features", parents=[common],
                       help="build per-action feature bundles from the tables")
    p.add_argument("--actions")
    p.add_argument("--labels")
    p.add_argument("--miniclips")
    p.add_argument("--all-actions", action="store_true",
                   help="emit rows for unlabeled actions too")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", parents=[common], help="train a classifier")
    p.add_argument("--model", required=True,
                   choices=["threshold", "linear", "lstm", "video", "multimodal"])
    p.add_argument("--train", help="training bundle JSONL (default out/features.jsonl)")
    p.add_argument("--val", help="validation bundle JSONL")
    p.add_argument("--extras", help="comma list from pos,context_s,context_a,concreteness")
    p.add_argument("--scores-key", default="concreteness")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common],
                       help="score predictions against gold labels")
    p.add_argument("--predictions")
    p.add_argument("--gold")
    p.add_argument("--compare", help="second predictions file for a paired t-test")
    p.add_argument("--majority-baseline", action="store_true")
    p.add_argument("--train-labels",
                   help="labels the majority baseline trains on (default: the gold file)")
    p.add_argument("--method", default="Model")
    p.add_argument("--inputs", default="features")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", parents=[common], help="dataset statistics report")
    p.add_argument("--transcripts")
    p.add_argument("--miniclips")
    p.add_argument("--labels")
    p.add_argument("--actions")
    p.set_defaults(func=cmd_stats)

    return parser


def resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {
        f.name: getattr(args, f.name)
        for f in fields(PipelineConfig)
        if getattr(args, f.name, None) is not None
    }
    return apply_overrides(cfg, overrides)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    def fail(code, exc):
        if getattr(args, "json_errors", False):
            print(json.dumps({"error": type(exc).__name__, "message": str(exc)},
                             sort_keys=True), file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return code

    try:
        cfg = resolve_config(args)
        return args.func(args, cfg) or 0
    except ConfigError as exc:
        return fail(1, exc)
    except FormatError as exc:
        return fail(2, exc)
    except (VisactError, OSError) as exc:
        return fail(3, exc)


if __name__ == "__main__":
    sys.exit(main())
