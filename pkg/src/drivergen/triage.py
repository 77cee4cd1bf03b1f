"""Failure classification and fix-template routing.

Build diagnostics map to categories through an ordered pattern table
over compiler message text (clang wording; override `DIAGNOSTIC_RULES`
for other toolchains).  Runtime failures map one-to-one from the fuzzing
exit kind.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from . import ctext
from .errors import NotAFailure
from .knowledge import ApiKnowledge
from .prompting import FixTemplateId
from .sandbox import BuildResult, ExitKind, FuzzResult, DRIVER_FILENAME


class Category(Enum):
    G1_CORRUPTED = "g1_corrupted"
    G2_LANG_BASICS = "g2_lang_basics"
    G3_NONEXIST_ID = "g3_nonexist_id"
    G4_TYPE_ERROR = "g4_type_error"
    LINKAGE = "linkage"
    RT_MEMLEAK = "rt_memleak"
    RT_OOM = "rt_oom"
    RT_TIMEOUT = "rt_timeout"
    RT_CRASH = "rt_crash"
    RT_NONEFF = "rt_noneff"


class SemanticLabel(Enum):
    """Runtime-semantics vocabulary; attached only when a semantic probe
    can witness the cause."""
    S1_INPUT_ARRANGEMENT = "s1"
    S2_MISINIT_ARGS = "s2"
    S3_CTRL_FLOW_DEPS = "s3"
    S4_RESOURCE_CLEANING = "s4"
    S5_COMMON_PRACTICES = "s5"


@dataclass(frozen=True)
class TriageVerdict:
    category: Category
    semantic_label: Optional[SemanticLabel] = None
    err_line_code: Optional[str] = None
    err_description: Optional[str] = None
    err_stack: Optional[str] = None
    crash_symptom: Optional[str] = None
    root_cause_api: Optional[str] = None
    err_line_no: Optional[int] = None


# Ordered (category, message pattern) rules; first match on the first
# diagnostic wins.  G2 is the fallback for anything compiler-reported.
DIAGNOSTIC_RULES: tuple[tuple[Category, str], ...] = (
    (Category.G3_NONEXIST_ID, r"use of undeclared identifier"),
    (Category.G3_NONEXIST_ID, r"unknown type name"),
    (Category.G3_NONEXIST_ID, r"no member named"),
    (Category.G3_NONEXIST_ID, r"file not found"),
    (Category.G3_NONEXIST_ID, r"implicit declaration of function"),
    (Category.G3_NONEXIST_ID, r"undeclared\b"),
    (Category.G4_TYPE_ERROR, r"too (many|few) arguments"),
    (Category.G4_TYPE_ERROR, r"incompatible"),
    (Category.G4_TYPE_ERROR, r"invalid operands"),
    (Category.G4_TYPE_ERROR, r"cannot initialize"),
    (Category.G4_TYPE_ERROR, r"conflicting types"),
    (Category.G4_TYPE_ERROR, r"not assignable"),
    (Category.G4_TYPE_ERROR, r"called object.*is not a function"),
    (Category.G4_TYPE_ERROR, r"incomplete type"),
)

_RUNTIME_MAP = {
    ExitKind.LEAK: Category.RT_MEMLEAK,
    ExitKind.OOM: Category.RT_OOM,
    ExitKind.TIMEOUT: Category.RT_TIMEOUT,
    ExitKind.CRASH: Category.RT_CRASH,
}

FIX_ROUTE: dict[Category, FixTemplateId] = {
    Category.G1_CORRUPTED: FixTemplateId.FIX_PRSE_ERR,
    Category.G2_LANG_BASICS: FixTemplateId.FIX_PRSE_ERR,
    Category.G3_NONEXIST_ID: FixTemplateId.FIX_PRSE_ERR,
    Category.G4_TYPE_ERROR: FixTemplateId.FIX_PRSE_ERR,
    Category.LINKAGE: FixTemplateId.FIX_LINK_ERR,
    Category.RT_MEMLEAK: FixTemplateId.FIX_FUZZ_MEMLEAK,
    Category.RT_OOM: FixTemplateId.FIX_FUZZ_OOM,
    Category.RT_TIMEOUT: FixTemplateId.FIX_FUZZ_TIMEOUT,
    Category.RT_CRASH: FixTemplateId.FIX_FUZZ_CRASH,
    Category.RT_NONEFF: FixTemplateId.FIX_FUZZ_NONEFF,
}


def _source_line(driver_source: str, line_no: int) -> Optional[str]:
    lines = driver_source.splitlines()
    if 1 <= line_no <= len(lines):
        return lines[line_no - 1].strip()
    return None


def classify_build_failure(br: BuildResult, driver_source: str) -> TriageVerdict:
    """Map compiler/linker diagnostics to a grammatical-failure category."""
    assert not br.success
    if not ctext.brace_balanced(driver_source):
        return TriageVerdict(
            Category.G1_CORRUPTED,
            err_description="driver source is truncated or brace-unbalanced",
        )

    link_syms = [
        msg.split()[-1] for _, _, msg in br.error_lines
        if msg.startswith("undefined reference to")
    ]
    if br.error_lines and len(link_syms) == len(br.error_lines):
        return TriageVerdict(
            Category.LINKAGE,
            err_description=br.error_lines[0][2],
            root_cause_api=link_syms[0],
        )

    first = next(((f, l, m) for f, l, m in br.error_lines if l > 0), None)
    message = first[2] if first else (br.error_lines[0][2] if br.error_lines
                                      else br.compiler_output.strip().splitlines()[-1]
                                      if br.compiler_output.strip() else "unknown error")
    category = Category.G2_LANG_BASICS
    for cat, pattern in DIAGNOSTIC_RULES:
        if re.search(pattern, message):
            category = cat
            break
    line_no = first[1] if first else None
    return TriageVerdict(
        category,
        err_line_code=_source_line(driver_source, line_no) if line_no else None,
        err_description=message,
        err_line_no=line_no,
    )


def _driver_frames(fr: FuzzResult):
    return [f for f in fr.crash_stack if f[1].endswith(DRIVER_FILENAME)]


def format_stack(stack: Sequence[tuple[str, str, int]]) -> str:
    return "\n".join(f"#{i} {fn} {file}:{line}" for i, (fn, file, line) in enumerate(stack))


def classify_runtime_failure(fr: FuzzResult,
                             driver_source: Optional[str] = None) -> TriageVerdict:
    """Map a fuzzing outcome to a runtime-failure category.

    Raises NotAFailure for a clean run with coverage progress.
    """
    if fr.exit_kind is ExitKind.CLEAN:
        if fr.coverage_progress:
            raise NotAFailure("clean run with coverage progress")
        return TriageVerdict(Category.RT_NONEFF)

    category = _RUNTIME_MAP[fr.exit_kind]
    stack_text = format_stack(fr.crash_stack) if fr.crash_stack else None
    err_line_code = None
    err_line_no = None
    inner = _driver_frames(fr)
    if inner:
        err_line_no = inner[0][2]
        if driver_source:
            err_line_code = _source_line(driver_source, err_line_no)
    return TriageVerdict(
        category,
        err_line_code=err_line_code,
        err_description=stack_text,
        err_stack=stack_text,
        crash_symptom=fr.sanitizer_summary if category is Category.RT_CRASH else None,
        err_line_no=err_line_no,
    )


def locate_root_cause_api(driver_source: str, error_line: int,
                          project_apis) -> Optional[str]:
    """Last project API called at or above the error line."""
    lines = driver_source.splitlines()
    if not 1 <= error_line <= len(lines):
        raise ValueError(f"error_line {error_line} out of range")
    apis = set(project_apis)
    for idx in range(error_line - 1, -1, -1):
        for m in re.finditer(r"\b([A-Za-z_][A-Za-z0-9_]*)\s*\(", lines[idx]):
            if m.group(1) in apis:
                return m.group(1)
    return None


class FixInfoMode(Enum):
    BASIC = "basic"      # error information only (BA-ITER)
    EXTENDED = "extended"  # plus one randomly chosen knowledge option (ALL-ITER)


def route_fix(verdict: TriageVerdict,
              knowledge_for_root_cause: Optional[ApiKnowledge],
              rng: random.Random,
              mode: FixInfoMode = FixInfoMode.BASIC
              ) -> tuple[FixTemplateId, dict[str, str]]:
    """Pick the fix template for a verdict and build its placeholder map.

    Every placeholder the template requires is populated here; rendering
    cannot end up with a partially-filled prompt.
    """
    template_id = FIX_ROUTE[verdict.category]
    fields: dict[str, str] = {}

    if template_id is FixTemplateId.FIX_PRSE_ERR:
        fields["ERR_LINE_CODE"] = verdict.err_line_code or "(error line not located)"
        fields["ERR_DESCRIPTION"] = verdict.err_description or "(no compiler message)"
    elif template_id is FixTemplateId.FIX_LINK_ERR:
        fields["API_NAME"] = verdict.root_cause_api or "(unknown)"
    elif template_id is FixTemplateId.FIX_FUZZ_TIMEOUT:
        fields["ERR_LINE_CODE"] = verdict.err_line_code or "(stuck line not located)"
        fields["ERR_STACK"] = verdict.err_stack or "(no stack captured)"
    elif template_id is FixTemplateId.FIX_FUZZ_CRASH:
        fields["CRASH_SYMPTOM"] = verdict.crash_symptom or "unknown crash"
        fields["ERR_LINE_CODE"] = verdict.err_line_code or "(crash line not located)"
        fields["ERR_DESCRIPTION"] = verdict.err_stack or "(no stack captured)"

    if (mode is FixInfoMode.EXTENDED
            and template_id is not FixTemplateId.FIX_FUZZ_NONEFF
            and knowledge_for_root_cause is not None):
        options = [
            "The declaration of the API is:\n" + knowledge_for_root_cause.declaration
        ]
        if knowledge_for_root_cause.documentation:
            options.append(
                "The documentation of the API is:\n"
                + knowledge_for_root_cause.documentation
            )
        if knowledge_for_root_cause.snippets:
            snippet = rng.choice(list(knowledge_for_root_cause.snippets))
            options.append("An example usage of the API is:\n" + snippet.text)
        fields["SUPPLEMENTAL_INFO"] = rng.choice(options)

    return template_id, fields
