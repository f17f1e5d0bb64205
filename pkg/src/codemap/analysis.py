"""Source-tree ingestion: documents, term vectors, dependency graph, size metrics.

Everything here is deterministic: files are processed in bytewise path order
and all derived structures (vocabulary, vectors, edges) are built from sorted
inputs, so two runs over the same tree serialize identically.
"""

from __future__ import annotations

import fnmatch
import json
import logging
import math
import os
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

# Programming keywords shared across the usual suspects (Python, Java, JS/TS,
# C-family, Go, Rust), plus English function words that dominate comments.
# Overridable via IngestConfig.stopwords.
# Kept deliberately small so identifier fragments like "or", "default",
# "get" stay available as map vocabulary.
DEFAULT_STOPWORDS = frozenset({
    # keywords
    "break", "case", "catch", "class", "const", "continue", "def", "elif",
    "else", "enum", "false", "finally", "for", "func", "function", "goto",
    "import", "include", "lambda", "new", "null", "private", "public",
    "return", "self", "static", "struct", "switch", "this", "throw", "true",
    "try", "var", "void", "while",
    # English function words
    "an", "and", "are", "at", "be", "by", "is", "it", "of", "on", "that",
    "the", "to", "was",
})

LANGUAGE_BY_EXTENSION = {
    ".py": "python", ".java": "java", ".js": "javascript", ".jsx": "javascript",
    ".ts": "typescript", ".tsx": "typescript", ".c": "c", ".h": "c",
    ".cpp": "cpp", ".cc": "cpp", ".hpp": "cpp", ".cs": "csharp", ".go": "go",
    ".rs": "rust", ".rb": "ruby", ".php": "php", ".swift": "swift",
    ".kt": "kotlin", ".scala": "scala", ".m": "objective-c", ".lua": "lua",
    ".pl": "perl", ".sh": "shell",
}

_ALPHA_RUN = re.compile(r"[A-Za-z]+")
_CAMEL_PIECE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+")
_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

# Lexical import/include recognizers; group 1 captures the module string.
_IMPORT_PATTERNS = [
    re.compile(r"^\s*import\s+([\w./]+)"),                       # python/java/go
    re.compile(r"^\s*from\s+([\w./]+)\s+import\b"),              # python
    re.compile(r"^\s*#\s*include\s*[\"<]([^\">]+)[\">]"),        # c/c++
    re.compile(r"^\s*(?:import|export)\b[^'\"]*['\"]([^'\"]+)['\"]"),  # js/ts
    re.compile(r"\brequire\s*\(\s*['\"]([^'\"]+)['\"]\s*\)"),    # node
    re.compile(r"^\s*use\s+([\w:]+)"),                           # rust
]


class ConfigError(ValueError):
    """Invalid ingest or pipeline configuration."""


class IngestError(RuntimeError):
    """Source tree cannot be read at all."""


@dataclass
class IngestConfig:
    extensions: list[str] = field(default_factory=lambda: [".py"])
    exclude: list[str] = field(default_factory=list)
    stopwords: frozenset[str] = DEFAULT_STOPWORDS
    metric: str = "kloc"

    @classmethod
    def from_file(cls, path: str | Path) -> "IngestConfig":
        """Load from a TOML or JSON config file."""
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix == ".json":
            raw = json.loads(text)
        else:
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            raw = tomllib.loads(text)
        return cls.from_dict(raw, base_dir=path.parent)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> "IngestConfig":
        cfg = cls()
        if "extensions" in raw:
            cfg.extensions = list(raw["extensions"])
        if "exclude" in raw:
            cfg.exclude = list(raw["exclude"])
        if "metric" in raw:
            cfg.metric = str(raw["metric"])
        if "stopwords" in raw and raw["stopwords"]:
            stop_path = Path(raw["stopwords"])
            if base_dir is not None and not stop_path.is_absolute():
                stop_path = base_dir / stop_path
            words = stop_path.read_text(encoding="utf-8").split()
            cfg.stopwords = frozenset(w.lower() for w in words)
        if cfg.metric not in ("kloc", "tokens", "fanin"):
            raise ConfigError(f"unknown size metric: {cfg.metric!r}")
        return cfg


@dataclass
class Document:
    id: int
    path: str                      # repo-relative, posix separators
    tokens: Counter                # lowercase split terms
    kloc: float
    size: float = 0.0
    language: str = "unknown"
    idents: frozenset[str] = frozenset()  # raw identifiers, camelCase intact
    imports: tuple[str, ...] = ()  # raw import/include module strings


@dataclass
class Corpus:
    root: str
    documents: list[Document] = field(default_factory=list)
    vocabulary: dict[str, int] = field(default_factory=dict)
    idf: list[float] = field(default_factory=list)
    term_vectors: list[dict[int, float]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.documents)

    def doc_by_path(self, path: str) -> Document | None:
        for doc in self.documents:
            if doc.path == path:
                return doc
        return None

    def to_jsonable(self) -> dict:
        """Canonical form; vocabulary/idf/vectors are rebuilt on load."""
        return {
            "root": self.root,
            "documents": [
                {
                    "path": d.path,
                    "tokens": {t: c for t, c in sorted(d.tokens.items())},
                    "kloc": d.kloc,
                    "size": d.size,
                    "language": d.language,
                    "idents": sorted(d.idents),
                    "imports": list(d.imports),
                }
                for d in self.documents
            ],
        }

    def serialize(self) -> bytes:
        return json.dumps(self.to_jsonable(), sort_keys=True,
                          separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_jsonable(cls, raw: dict) -> "Corpus":
        corpus = cls(root=raw["root"])
        for i, d in enumerate(raw["documents"]):
            corpus.documents.append(Document(
                id=i,
                path=d["path"],
                tokens=Counter(d["tokens"]),
                kloc=d["kloc"],
                size=d["size"],
                language=d["language"],
                idents=frozenset(d["idents"]),
                imports=tuple(d["imports"]),
            ))
        build_term_vectors(corpus)
        return corpus


@dataclass
class DependencyGraph:
    n: int
    edges: dict[tuple[int, int], str] = field(default_factory=dict)  # (src, dst) -> kind

    def in_degree(self, doc_id: int) -> int:
        return sum(1 for (_, dst) in self.edges if dst == doc_id)

    def to_jsonable(self) -> dict:
        return {
            "n": self.n,
            "edges": [[s, t, k] for (s, t), k in sorted(self.edges.items())],
        }

    @classmethod
    def from_jsonable(cls, raw: dict) -> "DependencyGraph":
        return cls(n=raw["n"],
                   edges={(s, t): k for s, t, k in raw["edges"]})


def tokenize(text: str, stopwords: frozenset[str] = DEFAULT_STOPWORDS) -> Counter:
    """Split text into lowercase terms.

    Identifiers are split at camelCase boundaries, underscores, and digits;
    anything that is not a letter acts as a separator. Terms shorter than two
    characters and stop-list terms are dropped.
    """
    terms: Counter = Counter()
    for run in _ALPHA_RUN.findall(text):
        for piece in _CAMEL_PIECE.findall(run):
            term = piece.lower()
            if len(term) < 2 or term in stopwords:
                continue
            terms[term] += 1
    return terms


def extract_identifiers(text: str) -> frozenset[str]:
    """Raw identifier tokens with camelCase intact, for name-reference edges."""
    return frozenset(_IDENTIFIER.findall(text))


def ingest(root: str | Path, config: IngestConfig) -> Corpus:
    """Walk a source tree into a Corpus, one Document per accepted file.

    Files are ordered by bytewise-ascending relative path. Unreadable files
    are skipped with a warning; an unreadable root is fatal.
    """
    root = Path(root)
    if not root.is_dir():
        raise IngestError(f"root is not a readable directory: {root}")

    def _excluded(rel: str, patterns: list[str]) -> bool:
        for pat in patterns:
            # a leading **/ also matches at the tree root
            candidates = {pat, pat[3:]} if pat.startswith("**/") else {pat}
            if any(fnmatch.fnmatch(rel, p) for p in candidates):
                return True
        return False

    extensions = set(config.extensions)
    rel_paths = []
    try:
        for dirpath, dirnames, filenames in os.walk(root):
            dirnames.sort()
            for name in sorted(filenames):
                full = Path(dirpath) / name
                if full.suffix not in extensions:
                    continue
                rel = full.relative_to(root).as_posix()
                if _excluded(rel, config.exclude):
                    continue
                rel_paths.append(rel)
    except OSError as exc:
        raise IngestError(f"cannot walk {root}: {exc}") from exc

    rel_paths.sort()
    corpus = Corpus(root=str(root))
    for rel in rel_paths:
        try:
            text = (root / rel).read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            msg = f"skipped unreadable file {rel}: {exc}"
            logger.warning(msg)
            corpus.warnings.append(msg)
            continue
        doc = Document(
            id=len(corpus.documents),
            path=rel,
            tokens=tokenize(text, config.stopwords),
            kloc=text.count("\n") / 1000.0,
            language=LANGUAGE_BY_EXTENSION.get(Path(rel).suffix, "unknown"),
            idents=extract_identifiers(text),
            imports=tuple(sorted(_import_candidates(text))),
        )
        corpus.documents.append(doc)
    build_term_vectors(corpus)
    return corpus


def build_term_vectors(corpus: Corpus) -> Corpus:
    """Fill vocabulary, idf, and L2-normalized tf-idf vectors in place.

    w(d,t) = tf(d,t) * ln(N/df(t)). A single-document corpus would zero out
    under idf, so it falls back to plain normalized tf.
    """
    n_docs = len(corpus.documents)
    vocab_terms = sorted({t for d in corpus.documents for t in d.tokens})
    corpus.vocabulary = {t: i for i, t in enumerate(vocab_terms)}

    df = Counter()
    for doc in corpus.documents:
        for term in doc.tokens:
            df[term] += 1
    corpus.idf = [math.log(n_docs / df[t]) if n_docs > 0 else 0.0
                  for t in vocab_terms]

    corpus.term_vectors = []
    for doc in corpus.documents:
        vec: dict[int, float] = {}
        for term, tf in doc.tokens.items():
            col = corpus.vocabulary[term]
            w = float(tf) if n_docs == 1 else tf * corpus.idf[col]
            if w != 0.0:
                vec[col] = w
        norm = math.sqrt(sum(w * w for w in vec.values()))
        if norm > 0:
            vec = {c: w / norm for c, w in vec.items()}
        corpus.term_vectors.append(vec)
    return corpus


def _import_candidates(text: str) -> set[str]:
    found = set()
    for line in text.splitlines():
        for pat in _IMPORT_PATTERNS:
            m = pat.search(line)
            if m:
                found.add(m.group(1))
    return found


def _normalize_module(module: str) -> str:
    mod = module.replace("::", "/").replace(".", "/").replace("\\", "/")
    return mod.strip("/")


def extract_dependencies(corpus: Corpus, config: IngestConfig) -> DependencyGraph:
    """File-level reference graph from import lines and whole-token name hits.

    Purely lexical: no type resolution. An edge i->j exists when file i
    imports a module resolving to j's path, or mentions j's basename
    (extension stripped, camelCase intact) as a whole identifier token.
    """
    graph = DependencyGraph(n=len(corpus.documents))
    by_noext: dict[str, list[int]] = {}
    by_basename: dict[str, list[int]] = {}
    for doc in corpus.documents:
        noext = doc.path.rsplit(".", 1)[0]
        by_noext.setdefault(noext, []).append(doc.id)
        base = Path(doc.path).stem
        by_basename.setdefault(base, []).append(doc.id)

    # import edges; the module string is resolved against repo-relative paths
    for doc in corpus.documents:
        for module in doc.imports:
            mod = _normalize_module(module)
            if not mod:
                continue
            targets = _resolve_module(mod, by_noext, by_basename)
            for dst in targets:
                if dst != doc.id:
                    graph.edges.setdefault((doc.id, dst), "import")

    # name-reference edges from raw identifier sets
    for doc in corpus.documents:
        for base, ids in by_basename.items():
            if base in doc.idents:
                for dst in ids:
                    if dst != doc.id:
                        graph.edges.setdefault((doc.id, dst), "name-reference")
    return graph


def _resolve_module(mod: str,
                    by_noext: dict[str, list[int]],
                    by_basename: dict[str, list[int]]) -> list[int]:
    # exact or suffix path match first, then bare leaf name
    mod_noext = mod.rsplit(".", 1)[0] if "." in mod.rsplit("/", 1)[-1] else mod
    for candidate in (mod, mod_noext):
        hits = by_noext.get(candidate)
        if hits:
            return sorted(hits)
        suffix = "/" + candidate
        hits = sorted(i for p, ids in by_noext.items() if p.endswith(suffix)
                      for i in ids)
        if hits:
            return hits
    leaf = mod_noext.rsplit("/", 1)[-1]
    return sorted(by_basename.get(leaf, []))


def size_metric(corpus: Corpus, graph: DependencyGraph | None,
                metric: str) -> list[float]:
    """Per-document impact value; also stored into Document.size."""
    if metric == "kloc":
        sizes = [d.kloc for d in corpus.documents]
    elif metric == "tokens":
        sizes = [sum(d.tokens.values()) / 1000.0 for d in corpus.documents]
    elif metric == "fanin":
        if graph is None:
            raise ConfigError("fanin metric requires a dependency graph")
        indeg = Counter(dst for (_, dst) in graph.edges)
        sizes = [float(indeg[d.id] + 1) for d in corpus.documents]
    else:
        raise ConfigError(f"unknown size metric: {metric!r}")
    for doc, s in zip(corpus.documents, sizes):
        doc.size = s
    return sizes
