"""Lightweight, lexer-level helpers for C source text.

These deliberately stop short of real parsing: a string/comment-aware
brace scanner is enough for snippet extraction, prototype lookup, and
well-formedness checks on generated drivers.
"""

from __future__ import annotations

import re

from .errors import Ambiguous, NotFound

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

C_KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Bool _Complex _Imaginary""".split()
)


def strip_comments(source: str) -> str:
    """Replace comments with spaces, preserving line structure."""
    out = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c == "/" and i + 1 < n and source[i + 1] == "*":
            j = source.find("*/", i + 2)
            if j < 0:
                j = n - 2
            chunk = source[i : j + 2]
            out.append("".join(ch if ch == "\n" else " " for ch in chunk))
            i = j + 2
        elif c == "/" and i + 1 < n and source[i + 1] == "/":
            j = source.find("\n", i)
            if j < 0:
                j = n
            out.append(" " * (j - i))
            i = j
        elif c in "\"'":
            j = _skip_string(source, i)
            out.append(source[i:j])
            i = j
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _skip_string(source: str, i: int) -> int:
    quote = source[i]
    j = i + 1
    n = len(source)
    while j < n:
        if source[j] == "\\":
            j += 2
            continue
        if source[j] == quote or source[j] == "\n":
            return j + 1
        j += 1
    return n


def _mask_strings(source: str) -> str:
    """Replace string/char literal contents with spaces (quotes kept)."""
    out = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c in "\"'":
            j = _skip_string(source, i)
            body = source[i:j]
            out.append(body[0] + " " * max(0, len(body) - 2) + (body[-1] if len(body) > 1 else ""))
            i = j
        else:
            out.append(c)
            i += 1
    return "".join(out)


def brace_balanced(source: str) -> bool:
    """True iff braces balance outside comments and string literals."""
    masked = _mask_strings(strip_comments(source))
    depth = 0
    for c in masked:
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def calls_function(source: str, name: str) -> bool:
    """True if `source` contains a call-shaped use of `name`."""
    masked = _mask_strings(strip_comments(source))
    return re.search(r"\b%s\s*\(" % re.escape(name), masked) is not None


_FUNC_HEAD_RE = re.compile(
    r"(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*\((?P<params>[^;{}()]*(?:\([^()]*\)[^;{}()]*)*)\)\s*\{"
)


def extract_functions(source: str) -> list[tuple[str, str]]:
    """Return (name, full_text) for every top-level function definition.

    Uses a brace-balancing scan over comment-stripped text; the returned
    text is taken from the original source so comments survive.
    """
    masked = _mask_strings(strip_comments(source))
    results = []
    depth = 0
    i = 0
    n = len(masked)
    while i < n:
        c = masked[i]
        if c == "{":
            depth += 1
            i += 1
        elif c == "}":
            depth -= 1
            i += 1
        elif depth == 0 and (c.isalpha() or c == "_"):
            m = _FUNC_HEAD_RE.match(masked, i)
            if m and m.group("name") not in ("if", "for", "while", "switch", "do", "sizeof"):
                start = _statement_start(masked, i)
                open_brace = m.end() - 1
                close = _matching_brace(masked, open_brace)
                if close is None:
                    break
                results.append((m.group("name"), source[start : close + 1]))
                i = close + 1
            else:
                mm = IDENT_RE.match(masked, i)
                i = mm.end() if mm else i + 1
        else:
            i += 1
    return results


def _statement_start(masked: str, pos: int) -> int:
    """Walk back from a function-name match to the start of its declaration."""
    j = pos
    boundary = max(masked.rfind(";", 0, pos), masked.rfind("}", 0, pos), masked.rfind("{", 0, pos))
    j = boundary + 1
    # skip preprocessor lines between the boundary and the function head
    lines = masked[j:pos].split("\n")
    keep_from = j
    acc = j
    for ln in lines[:-1]:
        if ln.lstrip().startswith("#"):
            keep_from = acc + len(ln) + 1
        acc += len(ln) + 1
    while keep_from < pos and masked[keep_from] in " \t\n":
        keep_from += 1
    return keep_from


def _matching_brace(masked: str, open_pos: int):
    depth = 0
    for k in range(open_pos, len(masked)):
        if masked[k] == "{":
            depth += 1
        elif masked[k] == "}":
            depth -= 1
            if depth == 0:
                return k
    return None


_DECL_RE_TMPL = r"(?P<decl>[A-Za-z_][^;{}#]*?\b%s\s*\([^;{}]*\))\s*;"


def extract_declaration(header_source: str, api_name: str) -> str:
    """Return the prototype of `api_name` from a header.

    Comments are stripped and whitespace collapsed to single spaces, so a
    prototype spanning several lines comes back as one line.  Raises
    NotFound when no prototype exists and Ambiguous when several distinct
    ones do.
    """
    text = strip_comments(header_source)
    # drop preprocessor lines so `#define x parse(...)` cannot match
    text = "\n".join(
        ("" if ln.lstrip().startswith("#") else ln) for ln in text.split("\n")
    )
    pattern = re.compile(_DECL_RE_TMPL % re.escape(api_name), re.DOTALL)
    found = []
    for m in pattern.finditer(text):
        decl = normalize_ws(m.group("decl"))
        if re.search(r"\b%s\s*\(" % re.escape(api_name), decl):
            found.append(decl)
    unique = sorted(set(found))
    if not unique:
        raise NotFound(f"no prototype for {api_name}")
    if len(unique) > 1:
        raise Ambiguous(f"{len(unique)} conflicting prototypes for {api_name}")
    return unique[0] + ";"


def normalize_ws(text: str) -> str:
    text = re.sub(r"\s+", " ", text).strip()
    for stmt in ("extern ", "static "):
        if text.startswith(stmt):
            text = text[len(stmt) :]
    return text
