"""Question corpus loading, validation, and complexity scoring.

Corpus format: a JSON document with a top-level ``questions`` array.
Each entry:

    {
      "id": 1,
      "project": "demo_target",
      "api_name": "demo_parse",
      "header_path": "demo.h",
      "build_script": "build.sh",
      "declaration_override": null,      // optional
      "doc_override": null,              // optional
      "complexity_score": 3,             // optional, >= 1
      "semantic_check_spec": null,       // optional path
      "bug_filter_spec": null            // optional path
    }

Paths are relative to the project workspace (``<workspaces_root>/<project>``).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

from . import ctext
from .errors import NotFound, ParseError, SchemaError

_REQUIRED = ("id", "project", "api_name", "header_path", "build_script")
_OPTIONAL = (
    "declaration_override",
    "doc_override",
    "complexity_score",
    "semantic_check_spec",
    "bug_filter_spec",
)


@dataclass(frozen=True)
class Question:
    id: int
    project: str
    api_name: str
    header_path: str
    build_script: str
    declaration_override: Optional[str] = None
    doc_override: Optional[str] = None
    complexity_score: Optional[int] = None
    semantic_check_spec: Optional[str] = None
    bug_filter_spec: Optional[str] = None


@dataclass(frozen=True)
class QuestionSet:
    questions: tuple[Question, ...]
    corpus_root: Path

    def __post_init__(self):
        if not self.questions:
            raise SchemaError(["question set is empty"])

    def by_id(self, qid: int) -> Question:
        for q in self.questions:
            if q.id == qid:
                return q
        raise NotFound(f"no question with id {qid}")


def load_questions(path) -> QuestionSet:
    """Load and validate a corpus file.

    All violations are collected and reported at once so a corpus can be
    fixed in one pass.
    """
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as e:
        raise ParseError(f"cannot read corpus {path}: {e}") from None
    if not raw.strip():
        raise ParseError(f"corpus {path} is empty")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ParseError(f"corpus {path} is not valid JSON: {e}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("questions"), list):
        raise ParseError(f"corpus {path} must contain a top-level 'questions' array")

    violations = []
    questions = []
    seen_ids = set()
    last_id = None
    for idx, entry in enumerate(doc["questions"]):
        if not isinstance(entry, dict):
            violations.append(f"entry #{idx} is not an object")
            continue
        missing = [k for k in _REQUIRED if k not in entry]
        if missing:
            violations.append(f"entry #{idx} missing fields: {', '.join(missing)}")
            continue
        qid = entry["id"]
        if not isinstance(qid, int):
            violations.append(f"entry #{idx}: id must be an integer")
            continue
        if qid in seen_ids:
            violations.append(f"duplicate question id {qid}")
        seen_ids.add(qid)
        if last_id is not None and qid <= last_id:
            violations.append(f"question ids must be strictly increasing (id {qid})")
        last_id = qid
        if not entry["api_name"]:
            violations.append(f"question {qid}: api_name is empty")
        score = entry.get("complexity_score")
        if score is not None and (not isinstance(score, int) or score < 1):
            violations.append(f"question {qid}: complexity_score must be >= 1")
        unknown = set(entry) - set(_REQUIRED) - set(_OPTIONAL)
        if unknown:
            violations.append(f"question {qid}: unknown fields {sorted(unknown)}")
        questions.append(
            Question(**{k: entry.get(k) for k in _REQUIRED + _OPTIONAL})
        )
    if violations:
        raise SchemaError(violations)
    if not questions:
        raise SchemaError(["question set is empty"])
    return QuestionSet(tuple(questions), path.parent)


def serialize(qs: QuestionSet) -> str:
    """Inverse of load_questions: load_questions(serialize(qs)) == qs."""
    entries = []
    for q in qs.questions:
        d = asdict(q)
        entries.append({k: d[k] for k in _REQUIRED + _OPTIONAL})
    return json.dumps({"questions": entries}, indent=2) + "\n"


# --- complexity scoring -----------------------------------------------------

# Fixed catalog of standard-library usage idioms.  A pattern is "used"
# when any of its trigger functions is called; lines calling trigger or
# companion functions of a used pattern count as common-API usage lines
# and are excluded from the identifier/branch rules.
COMMON_API_PATTERNS = {
    "buffer_copy": {
        "triggers": {"memcpy", "memmove"},
        "companions": {"malloc", "calloc", "realloc", "free", "memset"},
    },
    "temp_file": {
        "triggers": {"mkstemp", "mkostemp", "tmpfile"},
        "companions": {"write", "close", "unlink", "fdopen"},
    },
    "string_dup": {
        "triggers": {"strdup", "strndup"},
        "companions": set(),
    },
    "file_io": {
        "triggers": {"fopen", "fread", "fwrite"},
        "companions": {"fclose", "fseek", "ftell", "rewind", "fflush"},
    },
}

# naive values per the minimal-requirement cases: excluded from counting
_NAIVE_LITERALS = {"0", "NULL", '""'}

_CALL_RE = re.compile(r"\b([A-Za-z_][A-Za-z0-9_]*)\s*\(")
_NUM_RE = re.compile(r"\b(0[xX][0-9a-fA-F]+|\d+(?:\.\d+)?)\b")
_STR_RE = re.compile(r'"(?:[^"\\]|\\.)*"')
_UPPER_RE = re.compile(r"\b[A-Z][A-Z0-9_]+\b")

_CONTROL_EXCLUDE = {"if", "for", "while", "switch", "do", "sizeof", "return"}


def complexity_score(minimal_driver_source: str, project_api_names) -> int:
    """Count-based usage complexity of a minimal driver.

    Four additive rules: unique project APIs called, unique common-API
    usage patterns (catalog above), unique non-zero literals plus
    macro-style globals outside common-usage lines, and condition/loop
    constructs outside common-usage lines (a multi-branch condition
    counts once).
    """
    source = ctext.strip_comments(minimal_driver_source)
    if not source.strip():
        return 0
    if not ctext.brace_balanced(source):
        raise ParseError("cannot establish function boundaries (unbalanced braces)")

    project_apis = set(project_api_names)
    masked = ctext._mask_strings(source)

    called = {m.group(1) for m in _CALL_RE.finditer(masked)}
    api_count = len(called & project_apis)

    used_patterns = {
        name
        for name, pat in COMMON_API_PATTERNS.items()
        if called & pat["triggers"]
    }
    common_fns = set()
    for name in used_patterns:
        pat = COMMON_API_PATTERNS[name]
        common_fns |= pat["triggers"] | pat["companions"]

    plain_lines, masked_lines = source.split("\n"), masked.split("\n")
    counted_lines = []
    for plain, msk in zip(plain_lines, masked_lines):
        line_calls = {m.group(1) for m in _CALL_RE.finditer(msk)}
        if line_calls & common_fns:
            continue
        counted_lines.append((plain, msk))

    identifiers = set()
    for plain, msk in counted_lines:
        for m in _NUM_RE.finditer(msk):
            lit = m.group(1)
            value = float(lit) if "." in lit else int(lit, 0)
            if value != 0:
                identifiers.add(lit)
        for m in _STR_RE.finditer(plain):
            if m.group(0) != '""':
                identifiers.add(m.group(0))
        for m in _UPPER_RE.finditer(msk):
            name = m.group(0)
            if name not in ("NULL",) and name not in project_apis:
                identifiers.add(name)
    identifiers -= _NAIVE_LITERALS

    branches = 0
    for _, msk in counted_lines:
        for m in re.finditer(r"\b(if|switch|for|while)\b", msk):
            kw = m.group(1)
            if kw == "if" and msk[: m.start()].rstrip().endswith("else"):
                continue  # else-if: same condition construct
            branches += 1

    return api_count + len(used_patterns) + len(identifiers) + branches
