"""Prompt rendering and driver-code extraction.

The generation templates below are the canonical wording for this
project; golden tests compare against these, not any external text.
The fix templates are frozen verbatim and must not be edited without
updating the golden suite.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

from . import ctext
from .errors import MissingPlaceholder, NoCode
from .knowledge import ApiKnowledge, Snippet, FUZZ_ENTRYPOINT_SYMBOLS

DEFAULT_SYSTEM_ROLE = "You are a security auditor who writes fuzz drivers for library APIs."


class GenerationKind(Enum):
    NAIVE = "naive"
    BACTX = "bactx"
    DOCTX = "doctx"
    UGCTX = "ugctx"


class FixTemplateId(Enum):
    FIX_PRSE_ERR = "FIX_PRSE_ERR"
    FIX_LINK_ERR = "FIX_LINK_ERR"
    FIX_FUZZ_MEMLEAK = "FIX_FUZZ_MEMLEAK"
    FIX_FUZZ_OOM = "FIX_FUZZ_OOM"
    FIX_FUZZ_TIMEOUT = "FIX_FUZZ_TIMEOUT"
    FIX_FUZZ_CRASH = "FIX_FUZZ_CRASH"
    FIX_FUZZ_NONEFF = "FIX_FUZZ_NONEFF"


@dataclass(frozen=True)
class Prompt:
    system_role: str
    user_message: str
    tags: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not self.user_message:
            raise ValueError("user_message is empty")


# --- generation templates ---------------------------------------------------

TASK_REQUEST = (
    "Write a C fuzz driver for the API `{api}`.\n"
    "The driver must implement:\n"
    "int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)\n"
    "Answer with the complete driver source code."
)

BASIC_CONTEXT = (
    "The target library is used via:\n"
    "{include}\n"
    "The declaration of the API is:\n"
    "{declaration}\n"
)

DOC_SECTION = "The documentation of the API is:\n{documentation}\n"

SNIPPET_SECTION = "An example usage of the API is:\n{snippet}\n"


def render_generation_prompt(kind: GenerationKind, k: ApiKnowledge,
                             chosen_snippet: Optional[Snippet] = None,
                             system_role: str = DEFAULT_SYSTEM_ROLE,
                             tags: Optional[dict] = None) -> Prompt:
    """Assemble a deterministic generation prompt.

    DOCTX without documentation and UGCTX without a snippet degrade to
    BACTX, byte for byte.
    """
    if kind is GenerationKind.DOCTX and k.documentation is None:
        kind = GenerationKind.BACTX
    if kind is GenerationKind.UGCTX and chosen_snippet is None:
        kind = GenerationKind.BACTX

    task = TASK_REQUEST.format(api=k.api_name)
    if kind is GenerationKind.NAIVE:
        body = task
    else:
        context = BASIC_CONTEXT.format(include=k.header_include,
                                       declaration=k.declaration)
        if kind is GenerationKind.DOCTX:
            context += DOC_SECTION.format(documentation=k.documentation)
        elif kind is GenerationKind.UGCTX:
            context += SNIPPET_SECTION.format(snippet=chosen_snippet.text)
        body = context + task

    all_tags = {"kind": kind.value, "api": k.api_name}
    if chosen_snippet is not None and kind is GenerationKind.UGCTX:
        all_tags["snippet_origin"] = chosen_snippet.origin.value
        all_tags["snippet_kind"] = chosen_snippet.kind.value
        all_tags["snippet_path"] = chosen_snippet.source_path
    if tags:
        all_tags.update(tags)
    return Prompt(system_role, body, all_tags)


# --- fix templates (frozen verbatim; golden-tested) -------------------------

FIX_TEMPLATES: dict[FixTemplateId, str] = {
    FixTemplateId.FIX_PRSE_ERR: (
        "```\n"
        "${DRIVER_CODE}\n"
        "```\n"
        "The above C code has compilation error.\n"
        "The error line is:\n"
        "${ERR_LINE_CODE}\n"
        "The error description is:\n"
        "${ERR_DESCRIPTION}\n"
        "${SUPPLEMENTAL_INFO}\n"
        "Based on the above information, fix the code."
    ),
    FixTemplateId.FIX_LINK_ERR: (
        "```\n"
        "${DRIVER_CODE}\n"
        "```\n"
        "The above C code calls a non-existing API ${API_NAME}.\n"
        "${SUPPLEMENTAL_INFO}\n"
        "Based on the above information, fix the code."
    ),
    FixTemplateId.FIX_FUZZ_MEMLEAK: (
        "```\n"
        "${DRIVER_CODE}\n"
        "```\n"
        "The above C code can be built successfully but has runtime memory leak.\n"
        "${SUPPLEMENTAL_INFO}\n"
        "Based on the above information, fix the code."
    ),
    FixTemplateId.FIX_FUZZ_OOM: (
        "```\n"
        "${DRIVER_CODE}\n"
        "```\n"
        "The above C code can be built successfully but meet out-of-memory, "
        "perhaps due to memory leak.\n"
        "${SUPPLEMENTAL_INFO}\n"
        "Based on the above information, fix the code."
    ),
    FixTemplateId.FIX_FUZZ_TIMEOUT: (
        "```\n"
        "${DRIVER_CODE}\n"
        "```\n"
        "The above C code can be built successfully but will stuck (timeout).\n"
        "The possible stuck line is:\n"
        "${ERR_LINE_CODE}\n"
        "The frames of the stack are:\n"
        "${ERR_STACK}\n"
        "${SUPPLEMENTAL_INFO}\n"
        "Based on the above information, fix the code."
    ),
    FixTemplateId.FIX_FUZZ_CRASH: (
        "```\n"
        "${DRIVER_CODE}\n"
        "```\n"
        "The above C code can be built successfully but will crash (${CRASH_SYMPTOM}).\n"
        "The crash line is:\n"
        "${ERR_LINE_CODE}\n"
        "The frames of the stack are:\n"
        "${ERR_DESCRIPTION}\n"
        "${SUPPLEMENTAL_INFO}\n"
        "Based on the above information, fix the code."
    ),
    FixTemplateId.FIX_FUZZ_NONEFF: (
        "```\n"
        "${DRIVER_CODE}\n"
        "```\n"
        "The above C code can be built successfully but its fuzzing seems not "
        "effective since the coverage never change.\n"
        "Based on the above information, fix the code if necessary."
    ),
}

_PLACEHOLDER_RE = re.compile(r"\$\{([A-Z_]+)\}")

# SUPPLEMENTAL_INFO is the only optional placeholder: when absent or
# empty, its line disappears from the rendered prompt.
OPTIONAL_PLACEHOLDERS = {"SUPPLEMENTAL_INFO"}


def template_placeholders(template_id: FixTemplateId) -> set[str]:
    return set(_PLACEHOLDER_RE.findall(FIX_TEMPLATES[template_id]))


def render_fix_prompt(template_id: FixTemplateId, driver_code: str,
                      fields: Mapping[str, str],
                      system_role: str = DEFAULT_SYSTEM_ROLE,
                      tags: Optional[dict] = None) -> Prompt:
    """Byte-exact substitution into a fix template.

    Raises MissingPlaceholder for any required placeholder not supplied.
    """
    template = FIX_TEMPLATES[template_id]
    values = dict(fields)
    values["DRIVER_CODE"] = driver_code

    needed = template_placeholders(template_id)
    for name in sorted(needed - OPTIONAL_PLACEHOLDERS):
        if values.get(name) is None:
            raise MissingPlaceholder(name)

    if not values.get("SUPPLEMENTAL_INFO"):
        template = template.replace("${SUPPLEMENTAL_INFO}\n", "")
        values.pop("SUPPLEMENTAL_INFO", None)

    rendered = _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template)
    all_tags = {"template": template_id.value}
    if tags:
        all_tags.update(tags)
    return Prompt(system_role, rendered, all_tags)


# --- response handling ------------------------------------------------------

_FENCE_RE = re.compile(r"```[A-Za-z0-9_+-]*[ \t]*\n(.*?)```", re.DOTALL)


def extract_code(response_text: str,
                 entrypoint_symbols=FUZZ_ENTRYPOINT_SYMBOLS) -> str:
    """Pull driver source out of an LLM reply.

    Preference order: the fenced block containing a fuzz entrypoint, then
    the longest fenced block, then the whole reply if it looks like a
    brace-balanced C fragment.
    """
    blocks = [b.rstrip("\n") for b in _FENCE_RE.findall(response_text)]
    if blocks:
        for b in blocks:
            if any(sym in b for sym in entrypoint_symbols):
                return b
        return max(blocks, key=len)
    stripped = response_text.strip()
    if "{" in stripped and ctext.brace_balanced(stripped):
        return stripped
    raise NoCode("no code block and response is not a C fragment")
