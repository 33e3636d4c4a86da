"""Flat key-value pipeline configuration with CLI overrides.

The config file is ``key = value`` per line (# comments); every key can
also be passed as ``--key value`` on the command line, and the command
line wins. All randomness flows from one root seed, split per stage by a
stable hash of the stage name.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError


@dataclass
class PipelineConfig:
    # input / output paths
    manifest: str = ""
    tag_lexicon: str = ""
    chunk_rules: str = ""
    embeddings: str = ""
    pos_embeddings: str = ""
    concreteness: str = ""
    taxonomy: str = ""
    detections: str = ""
    feature_bank: str = ""
    gt_labels: str = ""
    records_log: str = "records.jsonl"
    out_dir: str = "out"
    static_dir: str = ""

    # pipeline thresholds (paper defaults)
    density_min: float = 0.5
    motion_threshold: float = 0.8
    motion_stride: int = 100
    pad_s: float = 15.0
    max_core_s: float = 60.0
    gap_s: float = 5.0
    max_len: int = 7
    per_hit: int = 5
    max_actions: int = 7
    context_window: int = 5
    frame_rate: float = 30.0

    # splits
    train_channels: int = 8
    val_channels: int = 1
    test_channels: int = 1

    # randomness and training
    seed: int = 0
    jobs: int = 1
    folds: int = 5
    linear_epochs: int = 20
    c_grid: str = "0.01,0.1,1,10"
    concreteness_grid: str = "3.0:5.0:0.05"
    similarity_grid: str = "0.0:1.0:0.05"
    learning_rate: float = 0.01
    rms_decay: float = 0.9
    epsilon: float = 1e-8
    epochs: int = 20
    batch_size: int = 32
    hidden_dim: int = 16
    fc_sizes: str = "16,8"
    dropout: float = 0.5

    def validate(self) -> None:
        checks = [
            (self.density_min >= 0, "density_min must be non-negative"),
            (0.0 <= self.motion_threshold <= 1.0, "motion_threshold must be in [0, 1]"),
            (self.motion_stride >= 1, "motion_stride must be >= 1"),
            (self.pad_s >= 0, "pad_s must be non-negative"),
            (self.max_core_s > 0, "max_core_s must be positive"),
            (self.per_hit >= 2, "per_hit must be at least 2"),
            (self.frame_rate > 0, "frame_rate must be positive"),
            (0.0 <= self.dropout < 1.0, "dropout must be in [0, 1)"),
            (self.jobs >= 1, "jobs must be >= 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _convert(key: str, value: str):
    kind = _FIELD_TYPES.get(key)
    if kind is None:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def load_config(path: str | Path) -> PipelineConfig:
    cfg = PipelineConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        setattr(cfg, key, _convert(key, value.strip()))
    cfg.validate()
    return cfg


def apply_overrides(cfg: PipelineConfig, overrides: dict) -> PipelineConfig:
    """Command-line values (already typed or strings) win over the file."""
    for key, value in overrides.items():
        if value is None:
            continue
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, key, _convert(key, str(value)))
    cfg.validate()
    return cfg


def parse_grid(spec: str) -> list[float]:
    """Grid syntax: 'lo:hi:step' (inclusive) or a comma list of values."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"bad grid {spec!r}, expected lo:hi:step")
        lo, hi, step = (float(p) for p in parts)
        if step <= 0 or hi < lo:
            raise ConfigError(f"bad grid bounds {spec!r}")
        n = int(round((hi - lo) / step))
        return [round(lo + i * step, 10) for i in range(n + 1)]
    try:
        return [float(v) for v in spec.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid {spec!r}") from exc


def parse_int_tuple(spec: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in spec.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad integer list {spec!r}") from exc


def stage_seed(root_seed: int, stage: str) -> int:
    """Stable per-stage seed: hash of the root seed and the stage name."""
    digest = hashlib.sha256(f"{root_seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")
