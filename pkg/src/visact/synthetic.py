"""Deterministic synthetic fixtures for tests, demos, and calibration runs.

Every generator is seeded and records its own ground truth, so expected
values in tests come from the construction, never from the code under
test.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import EmbeddingTable
from .io import write_jsonl
from .miniclips import Frame
from .nn.models import FusionSample

# Classic 10-item, 14-rater, 5-category agreement table; its kappa is the
# standard worked example (~0.210).
WORKED_KAPPA_EXAMPLE = (
    (0, 0, 0, 0, 14),
    (0, 2, 6, 4, 2),
    (0, 0, 3, 5, 6),
    (0, 3, 9, 2, 0),
    (2, 2, 8, 1, 1),
    (7, 7, 0, 0, 0),
    (3, 2, 6, 3, 0),
    (2, 5, 3, 2, 2),
    (6, 5, 2, 1, 0),
    (0, 2, 2, 3, 7),
)

XOR_FILLERS = ("stir", "bowl", "pan", "then", "little", "bit", "some", "here", "really")
XOR_MARKER = "whisk"
XOR_VIDEO_DIMS = (6, 4)  # (frame features, sequence features)
XOR_TEXT_DIM = 8


def xor_embedding_table(seed: int = 7) -> EmbeddingTable:
    """Small GloVe-like table; the marker token sticks out along axis 0."""
    rng = np.random.default_rng(seed)
    entries = {}
    for word in XOR_FILLERS:
        entries[word] = rng.normal(0.0, 0.5, XOR_TEXT_DIM)
    marker = rng.normal(0.0, 0.5, XOR_TEXT_DIM)
    marker[0] += 3.0
    entries[XOR_MARKER] = marker
    return EmbeddingTable(dim=XOR_TEXT_DIM, entries={k: v for k, v in entries.items()})


@dataclass
class XorSplit:
    sequences: list = field(default_factory=list)  # token lists (text modality)
    samples: list = field(default_factory=list)    # FusionSample (video + side features)
    labels: np.ndarray = field(default_factory=lambda: np.zeros(0))
    text_bits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    video_bits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


@dataclass
class XorDataset:
    """Planted dataset where label = XOR(text marker, video marker).

    Neither modality alone carries the label: the bits are independent
    fair coins, so any single-modality predictor tops out near chance
    while a fused model can reach ~1.0.
    """

    table: EmbeddingTable
    train: XorSplit
    test: XorSplit


def _xor_split(rng, table: EmbeddingTable, n: int, id_prefix: str) -> XorSplit:
    split = XorSplit()
    labels = np.zeros(n)
    text_bits = rng.integers(0, 2, size=n)
    video_bits = rng.integers(0, 2, size=n)
    d_frame, d_seq = XOR_VIDEO_DIMS
    for i in range(n):
        n_tok = int(rng.integers(3, 6))
        tokens = [XOR_FILLERS[int(k)] for k in rng.integers(0, len(XOR_FILLERS), n_tok)]
        if text_bits[i]:
            tokens.insert(int(rng.integers(0, len(tokens) + 1)), XOR_MARKER)
        steps = int(rng.integers(4, 7))
        rows = rng.normal(0.0, 0.5, (steps, d_frame + d_seq))
        if video_bits[i]:
            rows[1:3, 0:3] += 2.0
        vecs = [table.get(t) for t in tokens]
        action_vec = np.mean([v for v in vecs if v is not None], axis=0)
        features = {
            "action": action_vec,
            "pos": rng.normal(0.0, 0.3, 4),
            "context_s": rng.normal(0.0, 0.3, 6),
            "context_a": rng.normal(0.0, 0.3, 6),
            "concreteness": np.array([rng.uniform(1.0, 5.0)]),
        }
        labels[i] = float(text_bits[i] ^ video_bits[i])
        split.sequences.append(tokens)
        split.samples.append(
            FusionSample(
                video_rows=rows,
                features=features,
                action_id=f"{id_prefix}-a{i:04d}",
                miniclip_id=f"{id_prefix}:c{i:04d}",
            )
        )
    split.labels = labels
    split.text_bits = np.asarray(text_bits)
    split.video_bits = np.asarray(video_bits)
    return split


def make_xor_dataset(seed: int = 0, n_train: int = 2000, n_test: int = 500) -> XorDataset:
    rng = np.random.default_rng(seed)
    table = xor_embedding_table()
    return XorDataset(
        table=table,
        train=_xor_split(rng, table, n_train, "train"),
        test=_xor_split(rng, table, n_test, "test"),
    )


def write_fusion_dataset(path: str | Path, split: XorSplit, bank_dir: str | Path) -> None:
    """Write one split as a fusion-dataset JSONL plus a VFB1 bank directory."""
    from .features import bank_file_name, write_vfb1

    bank_dir = Path(bank_dir)
    bank_dir.mkdir(parents=True, exist_ok=True)
    d_frame, _ = XOR_VIDEO_DIMS
    rows = []
    for sample, label in zip(split.samples, split.labels):
        rows.append(
            {
                "action_id": sample.action_id,
                "miniclip_id": sample.miniclip_id,
                "label": int(label),
                "action": [float(x) for x in sample.features["action"]],
                "pos": [float(x) for x in sample.features["pos"]],
                "context_s": [float(x) for x in sample.features["context_s"]],
                "context_a": [float(x) for x in sample.features["context_a"]],
                "concreteness": [float(sample.features["concreteness"][0])],
            }
        )
        video = np.asarray(sample.video_rows, dtype=np.float32)
        write_vfb1(bank_dir / bank_file_name(sample.miniclip_id), video[:, :d_frame], video[:, d_frame:])
    write_jsonl(path, rows)


def make_marker_text_dataset(seed: int = 0, n: int = 200):
    """Token sequences where the label is simply 'marker token present'."""
    rng = np.random.default_rng(seed)
    table = xor_embedding_table()
    sequences, labels = [], np.zeros(n)
    for i in range(n):
        n_tok = int(rng.integers(3, 6))
        tokens = [XOR_FILLERS[int(k)] for k in rng.integers(0, len(XOR_FILLERS), n_tok)]
        if rng.random() < 0.5:
            tokens.insert(int(rng.integers(0, len(tokens) + 1)), XOR_MARKER)
            labels[i] = 1.0
        sequences.append(tokens)
    return sequences, labels, table


def make_blob_data(seed: int = 0, n: int = 200, dim: int = 2, margin: float = 1.0):
    """Two linearly separable Gaussian blobs with the stated margin."""
    rng = np.random.default_rng(seed)
    half = n // 2
    centre = np.zeros(dim)
    centre[0] = 1.0 + margin
    pos = rng.normal(0.0, 0.3, (half, dim)) + centre
    neg = rng.normal(0.0, 0.3, (n - half, dim)) - centre
    X = np.vstack([pos, neg])
    y = np.concatenate([np.ones(half, dtype=np.int64), np.zeros(n - half, dtype=np.int64)])
    order = rng.permutation(n)
    return X[order], y[order]


def moving_frames(seed: int, count: int, size: int = 8) -> list[Frame]:
    """Frames of drifting noise: consecutive samples decorrelate quickly."""
    rng = np.random.default_rng(seed)
    return [
        Frame(width=size, height=size, pixels=rng.integers(0, 256, (size, size), dtype=np.uint8))
        for _ in range(count)
    ]


def static_frames(seed: int, count: int, size: int = 8, jitter: int = 1) -> list[Frame]:
    """Nearly identical frames: correlation between samples stays near 1."""
    rng = np.random.default_rng(seed)
    base = rng.integers(60, 196, (size, size)).astype(np.int64)
    frames = []
    for _ in range(count):
        noise = rng.integers(-jitter, jitter + 1, (size, size))
        frames.append(Frame(width=size, height=size,
                            pixels=np.clip(base + noise, 0, 255).astype(np.uint8)))
    return frames
