"""Trainable models over the primitives: text LSTM, video LSTM, fusion.

All three share the same skeleton: encoder -> feed-forward head ->
sigmoid -> binary cross-entropy, optimized with mini-batch RMSprop.
Training is single-threaded and bit-deterministic for a fixed seed.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from ..errors import (
    BadMagic,
    DimMismatch,
    EmptyDataset,
    ExtrasDimMismatch,
    FormatError,
    MissingFeatureBank,
    TruncatedFile,
)
from .core import (
    LstmParams,
    MlpParams,
    RmsProp,
    bce_loss,
    embedding_backward,
    embedding_forward,
    lstm_backward,
    lstm_forward,
    mlp_backward,
    mlp_forward,
)

PAD_ID = 0
UNK_ID = 1

EXTRAS_ORDER = ("pos", "context_s", "context_a", "concreteness")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    rms_decay: float = 0.9
    epsilon: float = 1e-8
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    hidden_dim: int = 16
    fc_sizes: tuple = (16, 8)
    dropout: float = 0.5

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.rms_decay < 1.0:
            raise ValueError("rms_decay must be in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "fc_sizes", tuple(self.fc_sizes))


@dataclass(frozen=True)
class Prediction:
    action_id: str
    miniclip_id: str
    p_visible: float

    def __post_init__(self):
        if not 0.0 <= self.p_visible <= 1.0:
            raise ValueError(f"probability {self.p_visible} outside [0, 1]")

    @property
    def label(self) -> bool:
        return self.p_visible >= 0.5


def config_grid(base: TrainConfig, grid: dict) -> list[TrainConfig]:
    """Expand a {field: [values]} grid into configs, deterministic order."""
    if not grid:
        return [base]
    keys = sorted(grid)
    out = []
    for combo in product(*(grid[k] for k in keys)):
        out.append(TrainConfig(**{**asdict(base), **dict(zip(keys, combo))}))
    return out


def pad_id_sequences(seqs: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    longest = max(len(s) for s in seqs)
    ids = np.full((len(seqs), longest), PAD_ID, dtype=np.int64)
    lengths = np.zeros(len(seqs), dtype=np.int64)
    for i, s in enumerate(seqs):
        ids[i, : len(s)] = s
        lengths[i] = len(s)
    return ids, lengths


def pad_row_sequences(rows: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    longest = max(len(r) for r in rows)
    dim = rows[0].shape[1]
    xs = np.zeros((len(rows), longest, dim))
    lengths = np.zeros(len(rows), dtype=np.int64)
    for i, r in enumerate(rows):
        xs[i, : len(r)] = r
        lengths[i] = len(r)
    return xs, lengths


# -- text model ---------------------------------------------------------------


@dataclass
class TextModel:
    vocab: dict
    emb: np.ndarray  # (V, D); row 0 frozen zero pad, row 1 unknown
    lstm: LstmParams
    mlp: MlpParams
    cfg: TrainConfig
    history: list = field(default_factory=list)

    def encode(self, sequences: list[list[str]]) -> tuple[np.ndarray, np.ndarray]:
        ids = [
            [self.vocab.get(tok.casefold(), UNK_ID) for tok in seq] or [UNK_ID]
            for seq in sequences
        ]
        return pad_id_sequences(ids)

    def predict_proba(self, sequences: list[list[str]]) -> np.ndarray:
        ids, lengths = self.encode(sequences)
        xs = embedding_forward(self.emb, ids)
        h, _ = lstm_forward(self.lstm, xs, lengths)
        p, _ = mlp_forward(self.mlp, h, mode="eval")
        return np.atleast_1d(p)


def build_vocab(sequences: list[list[str]]) -> dict:
    vocab = {"<pad>": PAD_ID, "<unk>": UNK_ID}
    for seq in sequences:
        for tok in seq:
            vocab.setdefault(tok.casefold(), len(vocab))
    return vocab


def init_embeddings(vocab: dict, dim: int, rng, table=None) -> np.ndarray:
    """GloVe-style rows where available, small random otherwise; pad row zero."""
    emb = rng.uniform(-0.1, 0.1, size=(len(vocab), dim))
    emb[PAD_ID] = 0.0
    if table is not None:
        if table.dim != dim:
            raise DimMismatch(f"embedding table dim {table.dim}, expected {dim}")
        for word, idx in vocab.items():
            vec = table.get(word)
            if vec is not None and idx != PAD_ID:
                emb[idx] = vec
    return emb


def _epoch_metrics(p: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    losses, _ = bce_loss(p, y)
    acc = float(np.mean((p >= 0.5) == (y == 1)))
    return float(np.mean(losses)), acc


def train_text_model(
    sequences: list[list[str]],
    labels,
    table,
    cfg: TrainConfig,
) -> TextModel:
    """Trainable embeddings -> LSTM -> feed-forward head, on token sequences."""
    if not sequences:
        raise EmptyDataset("no training sequences")
    y = np.asarray(labels, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    vocab = build_vocab(sequences)
    dim = table.dim if table is not None else cfg.hidden_dim
    emb = init_embeddings(vocab, dim, rng, table)
    model = TextModel(
        vocab=vocab,
        emb=emb,
        lstm=LstmParams.init(dim, cfg.hidden_dim, rng),
        mlp=MlpParams.init(cfg.hidden_dim, cfg.fc_sizes, rng, cfg.dropout),
        cfg=cfg,
    )
    ids, lengths = model.encode(sequences)
    opt = RmsProp(lr=cfg.learning_rate, rho=cfg.rms_decay, eps=cfg.epsilon)
    n = len(sequences)
    order = np.arange(n)
    for epoch in range(cfg.epochs):
        rng.shuffle(order)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            xs = embedding_forward(model.emb, ids[batch])
            h, lstm_cache = lstm_forward(model.lstm, xs, lengths[batch])
            p, mlp_cache = mlp_forward(model.mlp, h, mode="train", rng=rng)
            _, dp = bce_loss(p, y[batch])
            dp = dp / len(batch)
            mlp_grads, dh = mlp_backward(model.mlp, mlp_cache, dp)
            lstm_grads, dxs = lstm_backward(model.lstm, lstm_cache, dh)
            demb = embedding_backward(model.emb.shape, ids[batch], dxs)
            model.emb = opt.update("emb", model.emb, demb)
            _apply_lstm(opt, "lstm", model.lstm, lstm_grads)
            _apply_mlp(opt, "mlp", model.mlp, mlp_grads)
        p_all = model.predict_proba(sequences)
        loss, acc = _epoch_metrics(p_all, y)
        model.history.append({"epoch": epoch, "split": "train", "loss": loss, "accuracy": acc})
    return model


def _apply_lstm(opt: RmsProp, prefix: str, params: LstmParams, grads: LstmParams):
    params.wx = opt.update(f"{prefix}.wx", params.wx, grads.wx)
    params.wh = opt.update(f"{prefix}.wh", params.wh, grads.wh)
    params.b = opt.update(f"{prefix}.b", params.b, grads.b)


def _apply_mlp(opt: RmsProp, prefix: str, params: MlpParams, grads: MlpParams):
    for i, ((w, b), (dw, db)) in enumerate(zip(params.layers, grads.layers)):
        params.layers[i] = (
            opt.update(f"{prefix}.w{i}", w, dw),
            opt.update(f"{prefix}.b{i}", b, db),
        )


# -- video model ----------------------------------------------------------------


@dataclass
class VideoModel:
    lstm: LstmParams
    mlp: MlpParams
    cfg: TrainConfig
    history: list = field(default_factory=list)

    def predict_proba(self, rows_list: list[np.ndarray]) -> np.ndarray:
        xs, lengths = pad_row_sequences([np.asarray(r, dtype=np.float64) for r in rows_list])
        h, _ = lstm_forward(self.lstm, xs, lengths)
        p, _ = mlp_forward(self.mlp, h, mode="eval")
        return np.atleast_1d(p)


def train_video_model(rows_list: list[np.ndarray], labels, cfg: TrainConfig) -> VideoModel:
    """LSTM over per-second video feature rows, no text input."""
    if not rows_list:
        raise EmptyDataset("no training examples")
    rows_list = [np.asarray(r, dtype=np.float64) for r in rows_list]
    for i, r in enumerate(rows_list):
        if len(r) == 0:
            raise MissingFeatureBank(f"example {i} has no video feature rows")
    y = np.asarray(labels, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    dim = rows_list[0].shape[1]
    model = VideoModel(
        lstm=LstmParams.init(dim, cfg.hidden_dim, rng),
        mlp=MlpParams.init(cfg.hidden_dim, cfg.fc_sizes, rng, cfg.dropout),
        cfg=cfg,
    )
    xs_all, lengths = pad_row_sequences(rows_list)
    opt = RmsProp(lr=cfg.learning_rate, rho=cfg.rms_decay, eps=cfg.epsilon)
    n = len(rows_list)
    order = np.arange(n)
    for epoch in range(cfg.epochs):
        rng.shuffle(order)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            h, lstm_cache = lstm_forward(model.lstm, xs_all[batch], lengths[batch])
            p, mlp_cache = mlp_forward(model.mlp, h, mode="train", rng=rng)
            _, dp = bce_loss(p, y[batch])
            dp = dp / len(batch)
            mlp_grads, dh = mlp_backward(model.mlp, mlp_cache, dp)
            lstm_grads, _ = lstm_backward(model.lstm, lstm_cache, dh)
            _apply_lstm(opt, "lstm", model.lstm, lstm_grads)
            _apply_mlp(opt, "mlp", model.mlp, mlp_grads)
        p_all = model.predict_proba(rows_list)
        loss, acc = _epoch_metrics(p_all, y)
        model.history.append({"epoch": epoch, "split": "train", "loss": loss, "accuracy": acc})
    return model


# -- multimodal model --------------------------------------------------------------


@dataclass
class FusionSample:
    """One (miniclip, action) pair ready for the fusion model."""

    video_rows: np.ndarray  # (T, dim_frame + dim_seq), 1 fps order
    features: dict  # "action" vector plus any of EXTRAS_ORDER
    action_id: str = ""
    miniclip_id: str = ""


@dataclass
class MultimodalModel:
    lstm: LstmParams
    mlp: MlpParams
    cfg: TrainConfig
    extras: tuple
    feature_dims: dict
    video_dim: int
    history: list = field(default_factory=list)

    def fuse(self, samples: list[FusionSample]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(video xs, lengths, side-feature matrix) for a batch of samples."""
        rows = []
        for s in samples:
            r = np.asarray(s.video_rows, dtype=np.float64)
            if len(r) == 0:
                raise MissingFeatureBank(f"{s.miniclip_id or 'sample'} has no video rows")
            if r.shape[1] != self.video_dim:
                raise DimMismatch(f"video rows dim {r.shape[1]}, expected {self.video_dim}")
            rows.append(r)
        xs, lengths = pad_row_sequences(rows)
        side = np.empty((len(samples), sum(self.feature_dims.values())))
        for i, s in enumerate(samples):
            side[i] = self._side_vector(s)
        return xs, lengths, side

    def _side_vector(self, s: FusionSample) -> np.ndarray:
        parts = []
        for name in ("action", *self.extras):
            vec = np.atleast_1d(np.asarray(s.features.get(name), dtype=np.float64))
            if vec.shape != (self.feature_dims[name],):
                raise ExtrasDimMismatch(
                    f"{name}: got {vec.shape}, expected ({self.feature_dims[name]},)"
                )
            parts.append(vec)
        return np.concatenate(parts)

    def predict_proba(self, samples: list[FusionSample]) -> np.ndarray:
        xs, lengths, side = self.fuse(samples)
        h, _ = lstm_forward(self.lstm, xs, lengths)
        fused = np.concatenate([h, side], axis=1)
        p, _ = mlp_forward(self.mlp, fused, mode="eval")
        return np.atleast_1d(p)


def train_multimodal(
    samples: list[FusionSample],
    labels,
    cfg: TrainConfig,
    extras: tuple = (),
) -> MultimodalModel:
    """Video LSTM fused with the action vector and selected extra features.

    ``extras`` picks which side features join the action embedding before
    the head; the selected keys must be present with a fixed dimension in
    every sample.
    """
    if not samples:
        raise EmptyDataset("no training examples")
    extras = tuple(e for e in EXTRAS_ORDER if e in extras)
    first = samples[0]
    if len(np.asarray(first.video_rows)) == 0:
        raise MissingFeatureBank("first sample has no video rows")
    video_dim = np.asarray(first.video_rows).shape[1]
    feature_dims = {}
    for name in ("action", *extras):
        if name not in first.features:
            raise ExtrasDimMismatch(f"samples lack feature {name!r}")
        feature_dims[name] = np.atleast_1d(np.asarray(first.features[name])).shape[0]

    y = np.asarray(labels, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    fused_dim = cfg.hidden_dim + sum(feature_dims.values())
    model = MultimodalModel(
        lstm=LstmParams.init(video_dim, cfg.hidden_dim, rng),
        mlp=MlpParams.init(fused_dim, cfg.fc_sizes, rng, cfg.dropout),
        cfg=cfg,
        extras=extras,
        feature_dims=feature_dims,
        video_dim=video_dim,
    )
    xs_all, lengths, side_all = model.fuse(samples)
    opt = RmsProp(lr=cfg.learning_rate, rho=cfg.rms_decay, eps=cfg.epsilon)
    n = len(samples)
    h_dim = cfg.hidden_dim
    order = np.arange(n)
    for epoch in range(cfg.epochs):
        rng.shuffle(order)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            h, lstm_cache = lstm_forward(model.lstm, xs_all[batch], lengths[batch])
            fused = np.concatenate([h, side_all[batch]], axis=1)
            p, mlp_cache = mlp_forward(model.mlp, fused, mode="train", rng=rng)
            _, dp = bce_loss(p, y[batch])
            dp = dp / len(batch)
            mlp_grads, dfused = mlp_backward(model.mlp, mlp_cache, dp)
            lstm_grads, _ = lstm_backward(model.lstm, lstm_cache, dfused[:, :h_dim])
            _apply_lstm(opt, "lstm", model.lstm, lstm_grads)
            _apply_mlp(opt, "mlp", model.mlp, mlp_grads)
        p_all = model.predict_proba(samples)
        loss, acc = _epoch_metrics(p_all, y)
        model.history.append({"epoch": epoch, "split": "train", "loss": loss, "accuracy": acc})
    return model


def predict_visibility(model: MultimodalModel, sample: FusionSample) -> Prediction:
    """Eval-mode probability that the action is visible in the miniclip."""
    p = float(model.predict_proba([sample])[0])
    return Prediction(action_id=sample.action_id, miniclip_id=sample.miniclip_id, p_visible=p)


# -- checkpoints ---------------------------------------------------------------------

VNF1_MAGIC = b"VNF1"


def _model_arrays(model) -> list[tuple[str, np.ndarray]]:
    out = []
    if isinstance(model, TextModel):
        out.append(("emb", model.emb))
    for name, arr in model.lstm.arrays():
        out.append((f"lstm.{name}", arr))
    for name, arr in model.mlp.arrays():
        out.append((f"mlp.{name}", arr))
    return out


def save_checkpoint(path: str | Path, model) -> None:
    """Single binary file: magic, length-prefixed JSON header, float64 blobs."""
    header: dict = {"cfg": asdict(model.cfg)}
    if isinstance(model, TextModel):
        header["kind"] = "text"
        header["vocab"] = model.vocab
    elif isinstance(model, VideoModel):
        header["kind"] = "video"
    elif isinstance(model, MultimodalModel):
        header["kind"] = "multimodal"
        header["extras"] = list(model.extras)
        header["feature_dims"] = model.feature_dims
        header["video_dim"] = model.video_dim
    else:
        raise TypeError(f"cannot checkpoint {type(model).__name__}")
    arrays = _model_arrays(model)
    header["arrays"] = [[name, list(arr.shape)] for name, arr in arrays]
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [VNF1_MAGIC, struct.pack("<I", len(blob)), blob]
    parts.extend(np.asarray(arr, dtype="<f8").tobytes() for _, arr in arrays)
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path: str | Path):
    data = Path(path).read_bytes()
    if data[:4] != VNF1_MAGIC:
        raise BadMagic(f"{path}: expected VNF1 magic")
    if len(data) < 8:
        raise TruncatedFile(f"{path}: missing header length")
    (hlen,) = struct.unpack("<I", data[4:8])
    if len(data) < 8 + hlen:
        raise TruncatedFile(f"{path}: header short")
    header = json.loads(data[8 : 8 + hlen].decode("utf-8"))
    pos = 8 + hlen
    arrays = {}
    for name, shape in header["arrays"]:
        count = int(np.prod(shape)) if shape else 1
        end = pos + 8 * count
        if len(data) < end:
            raise TruncatedFile(f"{path}: array {name} truncated")
        arrays[name] = np.frombuffer(data[pos:end], dtype="<f8").reshape(shape).copy()
        pos = end
    cfg = TrainConfig(**{**header["cfg"], "fc_sizes": tuple(header["cfg"]["fc_sizes"])})
    lstm = LstmParams(wx=arrays["lstm.wx"], wh=arrays["lstm.wh"], b=arrays["lstm.b"])
    n_layers = sum(1 for n in arrays if n.startswith("mlp.w"))
    mlp = MlpParams(
        layers=[(arrays[f"mlp.w{i}"], arrays[f"mlp.b{i}"]) for i in range(n_layers)],
        dropout=cfg.dropout,
    )
    kind = header["kind"]
    if kind == "text":
        return TextModel(vocab=header["vocab"], emb=arrays["emb"], lstm=lstm, mlp=mlp, cfg=cfg)
    if kind == "video":
        return VideoModel(lstm=lstm, mlp=mlp, cfg=cfg)
    if kind == "multimodal":
        return MultimodalModel(
            lstm=lstm,
            mlp=mlp,
            cfg=cfg,
            extras=tuple(header["extras"]),
            feature_dims=dict(header["feature_dims"]),
            video_dim=int(header["video_dim"]),
        )
    raise FormatError(f"{path}: unknown checkpoint kind {kind!r}")


def history_csv(history: list[dict]) -> str:
    lines = ["epoch,split,loss,accuracy"]
    for row in history:
        lines.append(f"{row['epoch']},{row['split']},{row['loss']:.6f},{row['accuracy']:.6f}")
    return "\n".join(lines) + "\n"
