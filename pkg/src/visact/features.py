"""Data representations: pooled embeddings, concreteness, similarity, banks.

Pretrained encoders are out of scope; their outputs arrive as files (text
embedding tables, the VFB1 binary feature bank, JSON-lines detections) and
everything here is deterministic arithmetic over those tables.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chunking import NOUN_TAGS, VERB_TAGS
from .errors import (
    BadMagic,
    DimMismatch,
    FormatError,
    TruncatedFile,
    UnknownLabel,
    ZeroVector,
)

# Minimal irregular-verb map for lexicon lookups; the concreteness lexicon
# is lemma-keyed while transcripts use inflected forms.
IRREGULAR_LEMMAS = {
    "told": "tell", "said": "say", "made": "make", "took": "take",
    "taken": "take", "went": "go", "gone": "go", "got": "get",
    "gotten": "get", "came": "come", "put": "put", "threw": "throw",
    "thrown": "throw", "ate": "eat", "eaten": "eat", "saw": "see",
    "seen": "see", "did": "do", "done": "do", "bought": "buy",
    "brought": "bring", "found": "find", "gave": "give", "given": "give",
    "held": "hold", "kept": "keep", "left": "leave", "ran": "run",
    "wore": "wear", "worn": "wear", "wrote": "write", "written": "write",
    "cut": "cut", "set": "set", "slept": "sleep", "stood": "stand",
}


def lemma_candidates(word: str) -> list[str]:
    """Lookup forms for one word: irregular lemma, suffix-stripped, surface."""
    w = word.casefold()
    out = []
    if w in IRREGULAR_LEMMAS:
        out.append(IRREGULAR_LEMMAS[w])
    if w.endswith("ies") and len(w) > 4:
        out.append(w[:-3] + "y")
    if w.endswith("es") and len(w) > 3:
        out.append(w[:-2])
    if w.endswith("s") and len(w) > 2 and not w.endswith("ss"):
        out.append(w[:-1])
    if w.endswith("ing") and len(w) > 4:
        out.extend([w[:-3], w[:-3] + "e"])
    if w.endswith("ed") and len(w) > 3:
        out.extend([w[:-2], w[:-1]])
    out.append(w)
    seen, uniq = set(), []
    for c in out:
        if c not in seen:
            seen.add(c)
            uniq.append(c)
    return uniq


@dataclass
class EmbeddingTable:
    """word -> vector table; lookups are case-folded."""

    dim: int
    entries: dict[str, np.ndarray]

    def get(self, word: str) -> np.ndarray | None:
        return self.entries.get(word.casefold())

    def __contains__(self, word: str) -> bool:
        return word.casefold() in self.entries

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingTable":
        """Text format: ``word v1 v2 ... vD`` per line."""
        entries: dict[str, np.ndarray] = {}
        dim = None
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split()
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
            if len(values) != dim or dim == 0:
                raise FormatError(f"{path}:{lineno}: expected {dim} values")
            entries[word.casefold()] = np.array([float(v) for v in values], dtype=np.float64)
        if dim is None:
            raise FormatError(f"{path}: empty embedding table")
        return cls(dim=dim, entries=entries)

    def save(self, path: str | Path) -> None:
        lines = [
            w + " " + " ".join(repr(float(x)) for x in vec)
            for w, vec in self.entries.items()
        ]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class ConcretenessLexicon:
    """word -> human concreteness rating in [1, 5]."""

    entries: dict[str, float]

    @classmethod
    def load(cls, path: str | Path) -> "ConcretenessLexicon":
        entries: dict[str, float] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'word<TAB>score'")
            score = float(parts[1])
            if not 1.0 <= score <= 5.0:
                raise FormatError(f"{path}:{lineno}: score {score} outside [1, 5]")
            entries[parts[0].casefold()] = score
        return cls(entries=entries)

    def lookup(self, word: str) -> float | None:
        for form in lemma_candidates(word):
            if form in self.entries:
                return self.entries[form]
        return None


@dataclass
class Taxonomy:
    """Single-rooted tree of labels; depth of the root is 1."""

    parent: dict[str, str]
    root: str

    @classmethod
    def load(cls, path: str | Path) -> "Taxonomy":
        """TSV ``child<TAB>parent``; the root row has parent = itself."""
        parent: dict[str, str] = {}
        root = None
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'child<TAB>parent'")
            child, par = parts[0].strip(), parts[1].strip()
            if child == par:
                if root is not None and root != child:
                    raise FormatError(f"{path}: two roots: {root!r} and {child!r}")
                root = child
            parent[child] = par
        if root is None:
            raise FormatError(f"{path}: no root row (child == parent)")
        tax = cls(parent=parent, root=root)
        for node in parent:
            tax.path_to_root(node)  # raises on cycles / dangling parents
        return tax

    def __contains__(self, label: str) -> bool:
        return label in self.parent

    def path_to_root(self, label: str) -> list[str]:
        """Ancestor chain from ``label`` up to and including the root."""
        if label not in self.parent:
            raise UnknownLabel(label)
        path = [label]
        node = label
        while node != self.root:
            node = self.parent.get(node)
            if node is None or node in path:
                raise FormatError(f"taxonomy broken at {label!r}")
            path.append(node)
        return path

    def depth(self, label: str) -> int:
        return len(self.path_to_root(label))


def wup_similarity(tax: Taxonomy, a: str, b: str) -> float:
    """Wu-Palmer similarity: 2*depth(lcs) / (depth(a) + depth(b))."""
    path_a = tax.path_to_root(a)
    path_b = set(tax.path_to_root(b))
    lcs = next(node for node in path_a if node in path_b)
    return 2.0 * tax.depth(lcs) / (tax.depth(a) + tax.depth(b))


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine undefined for zero vector")
    return float(np.dot(u, v) / (nu * nv))


@dataclass(frozen=True)
class PooledVector:
    """Mean-pooled embedding plus how many tokens were in vocabulary."""

    vector: np.ndarray
    used: int

    @property
    def all_oov(self) -> bool:
        return self.used == 0


def _pool(keys: list[str], table: EmbeddingTable) -> PooledVector:
    vecs = [table.get(k) for k in keys]
    vecs = [v for v in vecs if v is not None]
    if not vecs:
        return PooledVector(vector=np.zeros(table.dim), used=0)
    return PooledVector(vector=np.mean(vecs, axis=0), used=len(vecs))


def action_embedding(tokens: list[str], table: EmbeddingTable) -> PooledVector:
    """Mean of the in-vocabulary word embeddings; zero vector if all OOV."""
    return _pool(tokens, table)


def pos_embedding(tags: list[str], pos_table: EmbeddingTable) -> PooledVector:
    """Mean of the POS-tag embeddings; unknown tags are excluded."""
    return _pool(tags, pos_table)


def context_features(
    action_span: tuple[int, int],
    sentence_tokens: list[str],
    prev_action_tokens: list[str] | None,
    next_action_tokens: list[str] | None,
    table: EmbeddingTable,
    window: int = 5,
) -> dict[str, np.ndarray]:
    """Sentence- and action-level context vectors around one action.

    Sentence context pools up to ``window`` same-sentence words on each
    side of the span; action context embeds the neighboring actions. All
    four default to the zero vector at a boundary.
    """
    start, end = action_span
    before = sentence_tokens[max(0, start - window) : start]
    after = sentence_tokens[end : end + window]
    return {
        "context_s_before": _pool(before, table).vector,
        "context_s_after": _pool(after, table).vector,
        "context_a_prev": (
            _pool(prev_action_tokens, table).vector
            if prev_action_tokens
            else np.zeros(table.dim)
        ),
        "context_a_next": (
            _pool(next_action_tokens, table).vector
            if next_action_tokens
            else np.zeros(table.dim)
        ),
    }


def concreteness_score(
    tokens: list[str], tags: list[str], lexicon: ConcretenessLexicon
) -> float | None:
    """Highest concreteness rating among the action's verbs and nouns.

    Returns None when no verb or noun of the action is in the lexicon.
    """
    scores = []
    for tok, tag in zip(tokens, tags):
        if tag in VERB_TAGS or tag in NOUN_TAGS:
            score = lexicon.lookup(tok)
            if score is not None:
                scores.append(score)
    return max(scores) if scores else None


# -- VFB1 video feature bank ----------------------------------------------------

VFB1_MAGIC = b"VFB1"


def write_vfb1(path: str | Path, frame_rows: np.ndarray, seq_rows: np.ndarray) -> None:
    """Write one miniclip's per-second feature rows as a VFB1 file."""
    frame_rows = np.asarray(frame_rows, dtype=np.float32)
    seq_rows = np.asarray(seq_rows, dtype=np.float32)
    if frame_rows.ndim != 2 or seq_rows.ndim != 2 or len(frame_rows) != len(seq_rows):
        raise DimMismatch("frame and sequence rows must be 2-D with equal row counts")
    n, d_frame = frame_rows.shape
    d_seq = seq_rows.shape[1]
    header = VFB1_MAGIC + struct.pack("<III", d_frame, d_seq, n)
    body = np.concatenate([frame_rows, seq_rows], axis=1).astype("<f4").tobytes()
    Path(path).write_bytes(header + body)


def read_vfb1(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read one VFB1 file back into (frame_rows, seq_rows)."""
    data = Path(path).read_bytes()
    if data[:4] != VFB1_MAGIC:
        raise BadMagic(f"{path}: expected VFB1 magic")
    if len(data) < 16:
        raise TruncatedFile(f"{path}: header short")
    d_frame, d_seq, n = struct.unpack("<III", data[4:16])
    expected = 16 + 4 * n * (d_frame + d_seq)
    if len(data) < expected:
        raise TruncatedFile(f"{path}: {len(data)} bytes, expected {expected}")
    rows = np.frombuffer(data[16:expected], dtype="<f4").reshape(n, d_frame + d_seq)
    return rows[:, :d_frame].copy(), rows[:, d_frame:].copy()


@dataclass
class VideoFeatureBank:
    """miniclip_id -> 1 fps rows of (frame features, sequence features)."""

    dim_frame: int
    dim_seq: int
    clips: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def rows(self, miniclip_id: str) -> np.ndarray | None:
        """Concatenated (frame, sequence) rows for one miniclip, or None."""
        pair = self.clips.get(miniclip_id)
        if pair is None:
            return None
        return np.concatenate(pair, axis=1)


def load_feature_bank(path: str | Path) -> VideoFeatureBank:
    """Load a bank from one ``.vfb1`` file or a directory of them.

    File stems are the miniclip ids (':' may be spelled '__' on disk).
    All files in a bank must agree on both feature dimensions.
    """
    path = Path(path)
    files = sorted(path.glob("*.vfb1")) if path.is_dir() else [path]
    bank: VideoFeatureBank | None = None
    for f in files:
        frame_rows, seq_rows = read_vfb1(f)
        if bank is None:
            bank = VideoFeatureBank(dim_frame=frame_rows.shape[1], dim_seq=seq_rows.shape[1])
        if (frame_rows.shape[1], seq_rows.shape[1]) != (bank.dim_frame, bank.dim_seq):
            raise DimMismatch(
                f"{f}: dims ({frame_rows.shape[1]}, {seq_rows.shape[1]}) differ from "
                f"bank ({bank.dim_frame}, {bank.dim_seq})"
            )
        bank.clips[f.stem.replace("__", ":")] = (frame_rows, seq_rows)
    if bank is None:
        bank = VideoFeatureBank(dim_frame=0, dim_seq=0)
    return bank


def bank_file_name(miniclip_id: str) -> str:
    return miniclip_id.replace(":", "__") + ".vfb1"


@dataclass(frozen=True)
class Detection:
    miniclip_id: str
    frame: int
    label: str
    confidence: float


def load_detections(path: str | Path) -> list[Detection]:
    """JSON-lines object detections keyed by miniclip and frame."""
    from .io import read_jsonl

    out = []
    for row in read_jsonl(path):
        try:
            out.append(
                Detection(
                    miniclip_id=str(row["miniclip_id"]),
                    frame=int(row["frame"]),
                    label=str(row["label"]),
                    confidence=float(row["confidence"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: bad detection row {row!r}: {exc}") from exc
    return out
