from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def excerpt_transcript():
    from visact.transcripts import parse_transcript

    raw = (FIXTURES / "vlog_excerpt.vtt").read_bytes()
    return parse_transcript(raw, video_id="excerpt", duration_s=240.0)


@pytest.fixture(scope="session")
def tag_lexicon():
    from visact.chunking import load_tag_lexicon

    return load_tag_lexicon(FIXTURES / "tags.tsv")


@pytest.fixture(scope="session")
def concreteness_lexicon():
    from visact.features import ConcretenessLexicon

    return ConcretenessLexicon.load(FIXTURES / "concreteness.tsv")


@pytest.fixture(scope="session")
def toy_taxonomy():
    from visact.features import Taxonomy

    return Taxonomy.load(FIXTURES / "toy_taxonomy.tsv")
