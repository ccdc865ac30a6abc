from __future__ import annotations

import pytest

from falsesum.corpus import load_corpus

from fixture_corpus import write_corpus


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    write_corpus(root)
    return root


@pytest.fixture(scope="session")
def corpus(corpus_dir):
    units, skips = load_corpus(
        corpus_dir / "documents.jsonl",
        corpus_dir / "summaries.jsonl",
        corpus_dir / "parses",
    )
    return units, skips


@pytest.fixture(scope="session")
def units(corpus):
    return corpus[0]
