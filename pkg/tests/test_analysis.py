"""Ingestion, tokenization, term vectors, dependency graph, size metrics."""

from __future__ import annotations

import math
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from codemap.analysis import (
    ConfigError,
    Corpus,
    DEFAULT_STOPWORDS,
    Document,
    IngestConfig,
    build_term_vectors,
    extract_dependencies,
    ingest,
    size_metric,
    tokenize,
)


def _write(root: Path, name: str, text: str) -> Path:
    path = root / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _corpus_from_tokens(token_sets: list[dict[str, int]]) -> Corpus:
    docs = [Document(id=i, path=f"f{i}.py", tokens=Counter(t), kloc=0.001)
            for i, t in enumerate(token_sets)]
    corpus = Corpus(root=".", documents=docs)
    build_term_vectors(corpus)
    return corpus


# ---------------------------------------------------------------- tokenize --

def test_tokenize_camelcase_split():
    assert tokenize("getSettingOrDefault", DEFAULT_STOPWORDS) == Counter(
        {"get": 1, "setting": 1, "or": 1, "default": 1})


def test_tokenize_drops_short_terms():
    assert tokenize("x = 1;", DEFAULT_STOPWORDS) == Counter()


def test_tokenize_underscore_and_camel_agree():
    assert tokenize("MenuAction menu_action", DEFAULT_STOPWORDS) == Counter(
        {"menu": 2, "action": 2})


def test_tokenize_empty_text():
    assert tokenize("", DEFAULT_STOPWORDS) == Counter()


def test_tokenize_digits_split_and_lowercase():
    counts = tokenize("HTTPServer2Handler", DEFAULT_STOPWORDS)
    assert counts == Counter({"http": 1, "server": 1, "handler": 1})


def test_tokenize_never_emits_stopwords_or_short_terms():
    rng = np.random.default_rng(7)
    pieces = ["for", "if", "x1", "fooBar", "baz_qux", "the", "a", "Widget"]
    for _ in range(50):
        text = " ".join(rng.choice(pieces, size=rng.integers(0, 12)))
        for term in tokenize(text, DEFAULT_STOPWORDS):
            assert len(term) >= 2
            assert term not in DEFAULT_STOPWORDS


def test_tokenize_concatenation_is_additive():
    rng = np.random.default_rng(11)
    words = ["parseTree", "menu_action", "x", "HttpClient", "do_it_now"]
    for _ in range(50):
        a = " ".join(rng.choice(words, size=rng.integers(0, 6))) + "\n"
        b = " ".join(rng.choice(words, size=rng.integers(0, 6)))
        combined = tokenize(a + b, DEFAULT_STOPWORDS)
        assert combined == tokenize(a, DEFAULT_STOPWORDS) + tokenize(b, DEFAULT_STOPWORDS)


# ------------------------------------------------------------------ ingest --

def test_ingest_orders_documents_by_path(tmp_path):
    _write(tmp_path, "b.x", "beta\n")
    _write(tmp_path, "a.x", "alpha\n")
    corpus = ingest(tmp_path, IngestConfig(extensions=[".x"]))
    assert [d.path for d in corpus.documents] == ["a.x", "b.x"]
    assert [d.id for d in corpus.documents] == [0, 1]


def test_ingest_empty_directory(tmp_path):
    corpus = ingest(tmp_path, IngestConfig(extensions=[".x"]))
    assert corpus.documents == []


def test_ingest_kloc_counts_newlines(tmp_path):
    _write(tmp_path, "big.py", "line\n" * 1500)
    corpus = ingest(tmp_path, IngestConfig())
    assert corpus.documents[0].kloc == pytest.approx(1.5)


def test_ingest_respects_exclude_globs(tmp_path):
    _write(tmp_path, "keep.py", "x\n")
    _write(tmp_path, "test/skip.py", "x\n")
    corpus = ingest(tmp_path, IngestConfig(exclude=["**/test/**"]))
    assert [d.path for d in corpus.documents] == ["keep.py"]


def test_ingest_missing_root_is_fatal(tmp_path):
    with pytest.raises(Exception):
        ingest(tmp_path / "nope", IngestConfig())


def test_ingest_deterministic_serialization(tmp_path):
    for name in ["m/a.py", "m/b.py", "z.py"]:
        _write(tmp_path, name, f"def {name.split('/')[-1][0]}Handler(): pass\n")
    first = ingest(tmp_path, IngestConfig())
    second = ingest(tmp_path, IngestConfig())
    build_term_vectors(first)
    build_term_vectors(second)
    assert first.serialize() == second.serialize()


def test_ingest_roundtrip_through_jsonable(tmp_path):
    _write(tmp_path, "a.py", "import os\nclass WidgetMaker: pass\n")
    _write(tmp_path, "b.py", "from a import WidgetMaker\n")
    corpus = ingest(tmp_path, IngestConfig())
    build_term_vectors(corpus)
    again = Corpus.from_jsonable(corpus.to_jsonable())
    assert again.serialize() == corpus.serialize()


# ------------------------------------------------------------ term vectors --

def test_identical_token_multisets_get_identical_vectors():
    corpus = _corpus_from_tokens([
        {"alpha": 2, "beta": 1},
        {"alpha": 2, "beta": 1},
        {"gamma": 3},
    ])
    assert corpus.term_vectors[0] == corpus.term_vectors[1]


def test_term_in_every_document_has_zero_weight():
    corpus = _corpus_from_tokens([
        {"shared": 1, "one": 1},
        {"shared": 4, "two": 1},
        {"shared": 2, "three": 1},
    ])
    col = corpus.vocabulary["shared"]
    assert corpus.idf[col] == pytest.approx(math.log(3 / 3))
    for vec in corpus.term_vectors:
        assert vec.get(col, 0.0) == 0.0


def test_single_document_vector_is_unit_norm():
    corpus = _corpus_from_tokens([{"aa": 2, "bb": 1}])
    vec = corpus.term_vectors[0]
    norm = math.sqrt(sum(w * w for w in vec.values()))
    assert norm == pytest.approx(1.0, abs=1e-9)


def test_idf_formula():
    corpus = _corpus_from_tokens([
        {"rare": 1, "common": 1},
        {"common": 1},
        {"common": 1},
        {"other": 1},
    ])
    assert corpus.idf[corpus.vocabulary["rare"]] == pytest.approx(math.log(4 / 1))
    assert corpus.idf[corpus.vocabulary["common"]] == pytest.approx(math.log(4 / 3))


def test_all_vector_norms_zero_or_one():
    rng = np.random.default_rng(23)
    vocab = [f"term{i}" for i in range(20)]
    token_sets = []
    for _ in range(30):
        k = int(rng.integers(0, 6))
        chosen = rng.choice(vocab, size=k, replace=False) if k else []
        token_sets.append({t: int(rng.integers(1, 9)) for t in chosen})
    corpus = _corpus_from_tokens(token_sets)
    for vec in corpus.term_vectors:
        norm = math.sqrt(sum(w * w for w in vec.values()))
        assert norm == pytest.approx(0.0, abs=1e-12) or norm == pytest.approx(1.0, abs=1e-9)
    for vec in corpus.term_vectors:
        for col in vec:
            assert 0 <= col < len(corpus.vocabulary)


# ------------------------------------------------------------ dependencies --

def test_name_reference_creates_edge(tmp_path):
    _write(tmp_path, "A.x", "uses B here\n")
    _write(tmp_path, "B.x", "nothing\n")
    corpus = ingest(tmp_path, IngestConfig(extensions=[".x"]))
    graph = extract_dependencies(corpus, IngestConfig(extensions=[".x"]))
    a = corpus.doc_by_path("A.x").id
    b = corpus.doc_by_path("B.x").id
    assert (a, b) in graph.edges


def test_self_reference_is_not_an_edge(tmp_path):
    _write(tmp_path, "Solo.x", "Solo calls Solo\n")
    corpus = ingest(tmp_path, IngestConfig(extensions=[".x"]))
    graph = extract_dependencies(corpus, IngestConfig(extensions=[".x"]))
    assert graph.edges == {}


def test_single_file_graph_empty(tmp_path):
    _write(tmp_path, "only.py", "import os\n")
    corpus = ingest(tmp_path, IngestConfig())
    graph = extract_dependencies(corpus, IngestConfig())
    assert graph.n == 1
    assert graph.edges == {}


def test_import_edge_resolution(tmp_path):
    _write(tmp_path, "pkg/db.py", "def connect(): pass\n")
    _write(tmp_path, "app.py", "import pkg.db\n")
    corpus = ingest(tmp_path, IngestConfig())
    graph = extract_dependencies(corpus, IngestConfig())
    src = corpus.doc_by_path("app.py").id
    dst = corpus.doc_by_path("pkg/db.py").id
    assert graph.edges.get((src, dst)) == "import"


def test_graph_invariants_on_random_corpora(tmp_path):
    rng = np.random.default_rng(41)
    names = [f"Mod{i}" for i in range(12)]
    for trial in range(5):
        root = tmp_path / f"t{trial}"
        for i, name in enumerate(names):
            refs = rng.choice(names, size=rng.integers(0, 4))
            _write(root, f"{name}.py", " ".join(refs) + f"\nvalue{i} = 0\n")
        corpus = ingest(root, IngestConfig())
        graph = extract_dependencies(corpus, IngestConfig())
        assert graph.n == len(corpus.documents)
        for (s, t) in graph.edges:
            assert s != t
            assert 0 <= s < graph.n
            assert 0 <= t < graph.n


# ------------------------------------------------------------ size metrics --

def test_size_metric_kloc(tmp_path):
    _write(tmp_path, "big.py", "x = 0\n" * 1500)
    corpus = ingest(tmp_path, IngestConfig())
    graph = extract_dependencies(corpus, IngestConfig())
    sizes = size_metric(corpus, graph, "kloc")
    assert sizes[0] == pytest.approx(1.5)
    assert corpus.documents[0].size == pytest.approx(1.5)


def test_size_metric_fanin_isolated_file(tmp_path):
    _write(tmp_path, "loner.py", "quiet = 1\n")
    corpus = ingest(tmp_path, IngestConfig())
    graph = extract_dependencies(corpus, IngestConfig())
    assert size_metric(corpus, graph, "fanin")[0] == pytest.approx(1.0)


def test_size_metric_fanin_counts_incoming(tmp_path):
    _write(tmp_path, "Hub.x", "core\n")
    for i in range(3):
        _write(tmp_path, f"u{i}.x", "Hub\n")
    corpus = ingest(tmp_path, IngestConfig(extensions=[".x"]))
    graph = extract_dependencies(corpus, IngestConfig(extensions=[".x"]))
    hub = corpus.doc_by_path("Hub.x").id
    sizes = size_metric(corpus, graph, "fanin")
    assert sizes[hub] == pytest.approx(4.0)


def test_size_metric_tokens(tmp_path):
    _write(tmp_path, "w.py", "widget gadget widget\n")
    corpus = ingest(tmp_path, IngestConfig())
    graph = extract_dependencies(corpus, IngestConfig())
    assert size_metric(corpus, graph, "tokens")[0] == pytest.approx(3 / 1000)


def test_size_metric_unknown_name(tmp_path):
    _write(tmp_path, "w.py", "x\n")
    corpus = ingest(tmp_path, IngestConfig())
    graph = extract_dependencies(corpus, IngestConfig())
    with pytest.raises(ConfigError):
        size_metric(corpus, graph, "sloc")


# ------------------------------------------------------------------ config --

def test_config_from_toml(tmp_path):
    cfg_file = _write(tmp_path, "map.toml",
                      'extensions = [".java", ".rs"]\n'
                      'exclude = ["**/test/**"]\n'
                      'metric = "fanin"\n')
    cfg = IngestConfig.from_file(cfg_file)
    assert cfg.extensions == [".java", ".rs"]
    assert cfg.exclude == ["**/test/**"]
    assert cfg.metric == "fanin"


def test_config_from_json(tmp_path):
    cfg_file = _write(tmp_path, "map.json",
                      '{"extensions": [".py"], "metric": "tokens"}')
    cfg = IngestConfig.from_file(cfg_file)
    assert cfg.metric == "tokens"


def test_config_rejects_unknown_metric():
    with pytest.raises(ConfigError):
        IngestConfig.from_dict({"metric": "bogus"})


def test_config_stopword_file_override(tmp_path):
    stop = _write(tmp_path, "stop.txt", "widget\ngadget\n")
    cfg_file = _write(tmp_path, "map.toml", f'stopwords = "{stop}"\n')
    cfg = IngestConfig.from_file(cfg_file)
    assert "widget" in cfg.stopwords
    assert tokenize("widget frobnicator", cfg.stopwords) == Counter({"frobnicator": 1})
