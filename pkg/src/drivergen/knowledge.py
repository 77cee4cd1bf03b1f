"""Per-API knowledge assembly: declaration, docs, and usage snippets.

The default snippet source is a local corpus (a directory tree of .c/.h
files); an external code-search service can be adapted behind the same
`collect_snippets` contract.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from . import ctext
from .tokens import count_tokens

# files defining any of these symbols are fuzz drivers, never snippets
FUZZ_ENTRYPOINT_SYMBOLS = ("LLVMFuzzerTestOneInput",)

_IDENT_SPLIT_RE = re.compile(r"[^A-Za-z0-9_]+")


class Origin(Enum):
    INTERNAL = "internal"
    EXTERNAL = "external"


class Kind(Enum):
    TEST_EXAMPLE = "test_example"
    OTHER = "other"


@dataclass(frozen=True)
class Snippet:
    text: str
    source_path: str
    origin: Origin
    kind: Kind


@dataclass(frozen=True)
class ApiKnowledge:
    api_name: str
    header_include: str
    declaration: str
    documentation: Optional[str] = None
    snippets: tuple[Snippet, ...] = ()

    def __post_init__(self):
        if self.api_name not in self.declaration:
            raise ValueError("declaration does not mention the API")
        if not self.header_include:
            raise ValueError("header_include is empty")


def extract_declaration(header_source: str, api_name: str) -> str:
    """Prototype with parameter names, comments stripped, one line."""
    return ctext.extract_declaration(header_source, api_name)


def classify_source(source_path: str, project: str,
                    variants: Sequence[str] = ()) -> tuple[Origin, Kind]:
    """Classify a snippet's file path by provenance.

    The first path segment is treated as the repository name; it is
    INTERNAL when it equals the project (or one of the configured variant
    repositories), compared case-insensitively.
    """
    parts = [p for p in Path(source_path).as_posix().split("/") if p]
    repo = parts[0].lower() if parts else ""
    internal_names = {project.lower()} | {v.lower() for v in variants}
    origin = Origin.INTERNAL if repo in internal_names else Origin.EXTERNAL
    kind = Kind.OTHER
    for seg in parts:
        low = seg.lower()
        if "test" in low or "example" in low:
            kind = Kind.TEST_EXAMPLE
            break
    return origin, kind


def collect_snippets(corpus_root, api_name: str, project: str = "",
                     variants: Sequence[str] = (),
                     entrypoint_symbols: Sequence[str] = FUZZ_ENTRYPOINT_SYMBOLS
                     ) -> list[Snippet]:
    """Every function in the corpus that directly calls `api_name`.

    Files defining a fuzz entrypoint are skipped entirely.  Files are
    visited in lexicographic path order so results are deterministic
    regardless of scan parallelism.
    """
    corpus_root = Path(corpus_root)
    snippets: list[Snippet] = []
    for path in sorted(corpus_root.rglob("*.c")):
        try:
            source = path.read_text(errors="replace")
        except OSError:
            continue
        if any(sym in source for sym in entrypoint_symbols):
            continue
        if not ctext.calls_function(source, api_name):
            continue
        rel = path.relative_to(corpus_root).as_posix()
        origin, kind = classify_source(rel, project, variants)
        for fn_name, fn_text in ctext.extract_functions(source):
            if fn_name == api_name:
                continue  # the definition itself, not a usage
            if ctext.calls_function(fn_text, api_name):
                snippets.append(Snippet(fn_text, rel, origin, kind))
    return snippets


def _token_set(text: str) -> frozenset[str]:
    return frozenset(t for t in _IDENT_SPLIT_RE.split(text) if t)


def jaccard(a: str, b: str) -> float:
    """Jaccard similarity over identifier token sets (case-sensitive)."""
    ta, tb = _token_set(a), _token_set(b)
    if not ta and not tb:
        return 1.0
    return len(ta & tb) / len(ta | tb)


def dedup_snippets(snips: Sequence[Snippet], threshold: float = 0.95) -> list[Snippet]:
    """Greedy near-duplicate removal in input order.

    A snippet is dropped iff its similarity with any already-kept snippet
    reaches the threshold; the survivors keep their relative order.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    kept: list[Snippet] = []
    kept_tokens: list[frozenset[str]] = []
    for s in snips:
        ts = _token_set(s.text)
        dup = False
        for other in kept_tokens:
            if not ts and not other:
                sim = 1.0
            else:
                sim = len(ts & other) / len(ts | other)
            if sim >= threshold:
                dup = True
                break
        if not dup:
            kept.append(s)
            kept_tokens.append(ts)
    return kept


def truncate_snippet(snippet: str, token_budget: int) -> str:
    """Drop whole lines from the end until the text fits the budget."""
    if token_budget < 1:
        raise ValueError("token_budget must be >= 1")
    lines = snippet.split("\n")
    while lines:
        text = "\n".join(lines)
        if count_tokens(text) <= token_budget:
            return text
        lines.pop()
    return ""


def assemble(api_name: str, header_source: str, header_include: str,
             documentation: Optional[str] = None,
             snippet_corpus=None, project: str = "",
             variants: Sequence[str] = (),
             declaration_override: Optional[str] = None,
             dedup_threshold: float = 0.95) -> ApiKnowledge:
    """Convenience pipeline: declaration + dedup'd snippets in one step."""
    declaration = declaration_override or extract_declaration(header_source, api_name)
    snippets: tuple[Snippet, ...] = ()
    if snippet_corpus is not None:
        snippets = tuple(
            dedup_snippets(
                collect_snippets(snippet_corpus, api_name, project, variants),
                dedup_threshold,
            )
        )
    return ApiKnowledge(api_name, header_include, declaration, documentation, snippets)
