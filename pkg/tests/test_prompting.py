import pytest
from hypothesis import given, strategies as st

from drivergen.errors import MissingPlaceholder, NoCode
from drivergen.knowledge import ApiKnowledge, Kind, Origin, Snippet
from drivergen.prompting import (
    FIX_TEMPLATES,
    FixTemplateId,
    GenerationKind,
    Prompt,
    extract_code,
    render_fix_prompt,
    render_generation_prompt,
    template_placeholders,
)
from tests.conftest import DATA_DIR

KNOW = ApiKnowledge(
    api_name="demo_parse",
    header_include='#include "demo.h"',
    declaration="demo_doc *demo_parse(const unsigned char *buf, size_t len);",
    documentation="Parses a record buffer into a document.",
)

SNIP = Snippet(
    text="demo_doc *d = demo_parse(buf, len);\ndemo_free(d);",
    source_path="demo_target/uses.c",
    origin=Origin.INTERNAL,
    kind=Kind.TEST_EXAMPLE,
)


# --- generation prompts ------------------------------------------------------

def test_naive_contains_only_task():
    p = render_generation_prompt(GenerationKind.NAIVE, KNOW)
    assert p.user_message.startswith("Write a C fuzz driver for the API `demo_parse`")
    assert "declaration" not in p.user_message
    assert p.tags["kind"] == "naive"


def test_bactx_includes_header_and_declaration():
    p = render_generation_prompt(GenerationKind.BACTX, KNOW)
    assert '#include "demo.h"' in p.user_message
    assert KNOW.declaration in p.user_message
    assert p.user_message.endswith("Answer with the complete driver source code.")


def test_doctx_adds_documentation():
    p = render_generation_prompt(GenerationKind.DOCTX, KNOW)
    assert "The documentation of the API is:\n" + KNOW.documentation in p.user_message


def test_ugctx_adds_snippet_and_provenance_tags():
    p = render_generation_prompt(GenerationKind.UGCTX, KNOW, chosen_snippet=SNIP)
    assert "An example usage of the API is:\n" + SNIP.text in p.user_message
    assert p.tags["snippet_origin"] == "internal"
    assert p.tags["snippet_kind"] == "test_example"


def test_doctx_without_docs_degrades_to_bactx_bytes():
    bare = ApiKnowledge(KNOW.api_name, KNOW.header_include, KNOW.declaration)
    degraded = render_generation_prompt(GenerationKind.DOCTX, bare)
    bactx = render_generation_prompt(GenerationKind.BACTX, bare)
    assert degraded.user_message == bactx.user_message
    assert degraded.tags["kind"] == "bactx"


def test_ugctx_without_snippet_degrades_to_bactx_bytes():
    degraded = render_generation_prompt(GenerationKind.UGCTX, KNOW, chosen_snippet=None)
    bactx = render_generation_prompt(GenerationKind.BACTX, KNOW)
    assert degraded.user_message == bactx.user_message
    assert degraded.tags["kind"] == "bactx"


def test_empty_user_message_rejected():
    with pytest.raises(ValueError):
        Prompt("role", "")


# --- fix templates: golden fidelity ------------------------------------------

@pytest.mark.parametrize("template_id", list(FixTemplateId))
def test_fix_template_matches_golden(template_id):
    fields = {name: f"@{name}@" for name in template_placeholders(template_id)}
    driver = fields.pop("DRIVER_CODE")
    p = render_fix_prompt(template_id, driver, fields)
    expected = (DATA_DIR / "fix_prompts" / f"{template_id.value}.txt").read_text()
    assert p.user_message == expected.rstrip("\n")
    assert p.tags["template"] == template_id.value


def test_missing_required_placeholder_raises():
    with pytest.raises(MissingPlaceholder):
        render_fix_prompt(FixTemplateId.FIX_PRSE_ERR, "code",
                          {"ERR_LINE_CODE": "x"})  # no ERR_DESCRIPTION


def test_supplemental_info_line_vanishes_when_empty():
    fields = {"ERR_LINE_CODE": "L", "ERR_DESCRIPTION": "D"}
    without = render_fix_prompt(FixTemplateId.FIX_PRSE_ERR, "code", fields)
    assert "${SUPPLEMENTAL_INFO}" not in without.user_message
    assert "The error description is:\nD\nBased on" in without.user_message
    with_info = render_fix_prompt(
        FixTemplateId.FIX_PRSE_ERR, "code",
        dict(fields, SUPPLEMENTAL_INFO="The declaration of the API is:\nint f(void);"))
    assert "D\nThe declaration of the API is:\nint f(void);\nBased on" in with_info.user_message


def test_noneff_template_has_no_supplemental_slot():
    assert template_placeholders(FixTemplateId.FIX_FUZZ_NONEFF) == {"DRIVER_CODE"}
    assert FIX_TEMPLATES[FixTemplateId.FIX_FUZZ_NONEFF].endswith("fix the code if necessary.")


def test_driver_code_is_verbatim_even_with_dollar_braces():
    tricky = 'printf("${NOT_A_PLACEHOLDER}");'
    p = render_fix_prompt(FixTemplateId.FIX_FUZZ_MEMLEAK, tricky, {})
    assert tricky in p.user_message


# --- code extraction ---------------------------------------------------------

DRIVER = "int LLVMFuzzerTestOneInput(const uint8_t *d, size_t n)\n{ return 0; }"


def test_extract_prefers_entrypoint_block():
    text = f"Here:\n```c\nint helper(void) {{ return 1; }}\n```\nand\n```c\n{DRIVER}\n```\ndone"
    assert extract_code(text) == DRIVER


def test_extract_falls_back_to_longest_block():
    text = "```\nshort();\n```\n```\nconsiderably_longer_block();\nmore();\n```"
    assert extract_code(text) == "considerably_longer_block();\nmore();"


def test_extract_bare_c_fragment():
    assert extract_code("  " + DRIVER + "\n") == DRIVER


def test_extract_prose_raises_nocode():
    with pytest.raises(NoCode):
        extract_code("I am sorry, I cannot write that driver.")


def test_extract_unbalanced_fragment_raises_nocode():
    with pytest.raises(NoCode):
        extract_code("int f(void) {")


@given(st.text(alphabet=st.characters(blacklist_characters="`"), max_size=120))
def test_extract_fenced_round_trip(body):
    body = body.rstrip("\n")
    try:
        out = extract_code(f"```c\n{body}\n```")
    except NoCode:
        pytest.skip("degenerate empty block")
    assert out == body
