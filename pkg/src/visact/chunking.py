"""Candidate-action extraction: tokenization, POS tags, and the rule chunker.

The constituency parser the corpus was originally built with is replaced by
a POS-pattern chunker over Penn Treebank tags; the output is deliberately
noisy. Chunk rules and the auxiliary stoplist live in a key-value config
file so they are data, not code.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DanglingCueIndex, FormatError, TagTokenMismatch
from .transcripts import Transcript

PENN_TAGS = frozenset(
    """CC CD DT EX FW IN JJ JJR JJS LS MD NN NNS NNP NNPS PDT POS PRP PRP$
    RB RBR RBS RP SYM TO UH VB VBD VBG VBN VBP VBZ WDT WP WP$ WRB
    . , : ( ) `` '' $ #""".split()
)

VERB_TAGS = frozenset({"VB", "VBD", "VBG", "VBN", "VBP", "VBZ"})
NOUN_TAGS = frozenset({"NN", "NNS", "NNP", "NNPS"})

SENTENCE_FINAL = frozenset({".", "!", "?"})

# Words that never head a candidate action. The contraction fragments are
# auxiliaries by construction ("you're" -> "you" + "'re").
DEFAULT_AUX_STOPLIST = frozenset(
    """be is are was were am been being do does did have has had will would
    can could should may might must gonna 're 's 'm 've 'll 'd n't""".split()
)

DEFAULT_EXTEND_TAGS = frozenset(
    {"RB", "RP", "DT", "PRP", "PRP$", "JJ", "NN", "NNS", "NNP", "IN", "TO", "CD", "POS"}
)

_CONTRACTION_RE = re.compile(r"^(.+?)('(?:re|s|ve|ll|d|m))$", re.IGNORECASE)
_STRIP_PUNCT = ",;:\"()[]{}<>*~"


@dataclass(frozen=True)
class TaggedToken:
    surface: str
    pos: str
    cue_index: int

    def __post_init__(self):
        if self.pos not in PENN_TAGS:
            raise ValueError(f"not a Penn Treebank tag: {self.pos!r}")
        if self.cue_index < 0:
            raise ValueError("negative cue index")

    @property
    def is_verb(self) -> bool:
        return self.pos in VERB_TAGS

    @property
    def is_noun(self) -> bool:
        return self.pos in NOUN_TAGS


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[TaggedToken, ...]
    index: int

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValueError("empty sentence")


@dataclass
class ActionCandidate:
    """A verb-phrase chunk: the head verb plus its rightward extension.

    ``tokens`` may start with a single adverb directly before the head; the
    head itself is always a non-auxiliary verb.
    """

    tokens: tuple[TaggedToken, ...]
    sentence_index: int
    span: tuple[int, int]  # half-open token offsets within the sentence
    time_s: float | None = None

    def __post_init__(self):
        self.tokens = tuple(self.tokens)
        if not self.tokens:
            raise ValueError("empty candidate span")
        if self.span[0] >= self.span[1]:
            raise ValueError(f"bad span {self.span}")
        head = self.tokens[1] if self.tokens[0].pos == "RB" and len(self.tokens) > 1 else self.tokens[0]
        if not head.is_verb:
            raise ValueError(f"candidate head {head.surface!r} is not a verb")

    @property
    def text(self) -> str:
        return " ".join(t.surface for t in self.tokens)


@dataclass(frozen=True)
class ChunkRules:
    """Data-driven chunker configuration."""

    verb_tags: frozenset[str] = VERB_TAGS
    extend_tags: frozenset[str] = DEFAULT_EXTEND_TAGS
    aux_stoplist: frozenset[str] = DEFAULT_AUX_STOPLIST
    max_len: int = 7
    gap_s: float = 5.0
    include_preceding_rb: bool = True

    @classmethod
    def from_file(cls, path: str | Path) -> "ChunkRules":
        """Load rules from a ``key = value`` file; missing keys keep defaults."""
        kv: dict[str, str] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            kv[key.strip()] = value.strip()

        def words(key, default):
            return frozenset(kv[key].split()) if key in kv else default

        return cls(
            verb_tags=words("verb_tags", VERB_TAGS),
            extend_tags=words("extend_tags", DEFAULT_EXTEND_TAGS),
            aux_stoplist=frozenset(w.lower() for w in words("aux_stoplist", DEFAULT_AUX_STOPLIST)),
            max_len=int(kv.get("max_len", 7)),
            gap_s=float(kv.get("gap_s", 5.0)),
            include_preceding_rb=kv.get("include_preceding_rb", "true").lower() in ("true", "1", "yes"),
        )


def tokenize_text(text: str) -> list[str]:
    """Split cue text into chunker tokens.

    Sentence-final punctuation becomes its own token, other punctuation is
    stripped, and contractions split into base + apostrophe fragment
    ("you're" -> "you", "'re"; "don't" -> "do", "n't").
    """
    out: list[str] = []
    for raw in text.split():
        final = ""
        word = raw.strip(_STRIP_PUNCT)
        while word and word[-1] in SENTENCE_FINAL:
            final = word[-1]
            word = word[:-1].rstrip(_STRIP_PUNCT)
        word = word.strip(_STRIP_PUNCT)
        if word:
            lower = word.lower()
            if lower.endswith("n't") and len(word) > 3:
                out.extend([word[:-3], word[-3:]])
            else:
                m = _CONTRACTION_RE.match(word)
                if m:
                    out.extend([m.group(1), m.group(2)])
                else:
                    out.append(word)
        if final:
            out.append(final)
    return out


def tokenize_transcript(t: Transcript) -> list[tuple[str, int]]:
    """All chunker tokens of a transcript as (surface, cue_index) pairs."""
    pairs = []
    for i, cue in enumerate(t.cues):
        pairs.extend((tok, i) for tok in tokenize_text(cue.text))
    return pairs


def load_tag_lexicon(path: str | Path) -> dict[str, str]:
    """TSV ``word<TAB>tag`` -> case-folded lookup table."""
    table: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected 'word<TAB>tag'")
        word, tag = parts[0].strip(), parts[1].strip()
        if tag not in PENN_TAGS:
            raise FormatError(f"{path}:{lineno}: unknown tag {tag!r}")
        table[word.casefold()] = tag
    return table


def tag_with_lexicon(
    tokens: list[tuple[str, int]] | list[str], lexicon: dict[str, str]
) -> list[TaggedToken]:
    """Assign each token its lexicon tag; out-of-vocabulary tokens get NN.

    Sentence punctuation is tagged '.' regardless of the lexicon.
    """
    tagged = []
    for item in tokens:
        surface, cue_index = item if isinstance(item, tuple) else (item, 0)
        if surface in SENTENCE_FINAL:
            tag = "."
        else:
            tag = lexicon.get(surface.casefold(), "NN")
        tagged.append(TaggedToken(surface=surface, pos=tag, cue_index=cue_index))
    return tagged


def read_pos_sidecar(path: str | Path) -> list[tuple[str, str]]:
    """CoNLL-style TSV ``surface<TAB>tag`` rows; blank lines are separators."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected 'surface<TAB>tag'")
        rows.append((parts[0], parts[1]))
    return rows


def tag_from_sidecar(t: Transcript, rows: list[tuple[str, str]]) -> list[TaggedToken]:
    """Join sidecar tags onto the transcript's own tokenization."""
    pairs = tokenize_transcript(t)
    if len(rows) != len(pairs):
        raise TagTokenMismatch(
            f"{t.video_id}: sidecar has {len(rows)} tags for {len(pairs)} tokens"
        )
    return [
        TaggedToken(surface=surface, pos=tag, cue_index=cue_index)
        for (surface, cue_index), (_, tag) in zip(pairs, rows)
    ]


def split_sentences(
    t: Transcript, tags: list[TaggedToken], gap_s: float = 5.0
) -> list[Sentence]:
    """Group tagged tokens into sentences.

    Boundaries fall after sentence-final punctuation and at silences longer
    than ``gap_s`` between consecutive cues (auto-captions rarely carry
    punctuation, so the pause is often the only signal).
    """
    expected = len(tokenize_transcript(t))
    if len(tags) != expected:
        raise TagTokenMismatch(f"{t.video_id}: {len(tags)} tags for {expected} tokens")

    sentences: list[Sentence] = []
    current: list[TaggedToken] = []

    def flush():
        if current:
            sentences.append(Sentence(tokens=tuple(current), index=len(sentences)))
            current.clear()

    prev: TaggedToken | None = None
    for tok in tags:
        if prev is not None and tok.cue_index != prev.cue_index:
            gap = t.cues[tok.cue_index].start_s - t.cues[prev.cue_index].end_s
            if gap > gap_s:
                flush()
        current.append(tok)
        if tok.surface in SENTENCE_FINAL:
            flush()
        prev = tok
    flush()
    return sentences


def extract_candidates(sentence: Sentence, rules: ChunkRules | None = None) -> list[ActionCandidate]:
    """Chunk one tagged sentence into candidate actions.

    Scans left to right: each non-auxiliary verb heads a chunk, optionally
    pulling in one adverb directly before it, then extends rightward over
    the allowed tags (gerunds included) until a new non-gerund verb, the
    sentence end, or the length cap. Chunks never overlap.
    """
    rules = rules or ChunkRules()
    toks = sentence.tokens
    out: list[ActionCandidate] = []
    cursor = 0
    while cursor < len(toks):
        tok = toks[cursor]
        if tok.pos not in rules.verb_tags or tok.surface.lower() in rules.aux_stoplist:
            cursor += 1
            continue
        head = cursor
        start = head
        if (
            rules.include_preceding_rb
            and head > 0
            and toks[head - 1].pos == "RB"
            and (not out or out[-1].span[1] <= head - 1)
        ):
            start = head - 1
        end = head + 1
        while end < len(toks) and end - start < rules.max_len:
            nxt = toks[end]
            if nxt.pos in rules.verb_tags:
                if nxt.pos != "VBG":
                    break
            elif nxt.pos not in rules.extend_tags:
                break
            end += 1
        out.append(
            ActionCandidate(
                tokens=toks[start:end],
                sentence_index=sentence.index,
                span=(start, end),
            )
        )
        cursor = end
    return out


def timestamp_action(action: ActionCandidate, t: Transcript) -> float:
    """Start time of the cue containing the candidate's first token."""
    cue_index = action.tokens[0].cue_index
    if cue_index >= len(t.cues):
        raise DanglingCueIndex(f"cue {cue_index} not in transcript of {len(t.cues)} cues")
    return t.cues[cue_index].start_s


def extract_transcript_actions(
    t: Transcript,
    lexicon: dict[str, str],
    rules: ChunkRules | None = None,
    sidecar_rows: list[tuple[str, str]] | None = None,
) -> list[ActionCandidate]:
    """Full per-video pipeline: tokenize, tag, split, chunk, timestamp."""
    rules = rules or ChunkRules()
    if sidecar_rows is not None:
        tags = tag_from_sidecar(t, sidecar_rows)
    else:
        tags = tag_with_lexicon(tokenize_transcript(t), lexicon)
    actions: list[ActionCandidate] = []
    for sentence in split_sentences(t, tags, gap_s=rules.gap_s):
        for cand in extract_candidates(sentence, rules):
            cand.time_s = timestamp_action(cand, t)
            actions.append(cand)
    return actions
