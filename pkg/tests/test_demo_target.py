"""Behavioral checks for the bundled demo library and its hook shim."""

import pytest

from drivergen.sandbox import build, run_once
from drivergen.validate import (
    Step,
    ValidationMode,
    VerdictKind,
    load_bug_filters,
    load_semantic_checks,
    parse_hook_events,
    validate,
)
from tests.conftest import DEMO_SOURCE, FUZZ_SECONDS, needs_toolchain

pytestmark = needs_toolchain


def full_validate(driver, workspace, checks_file):
    return validate(driver, workspace, mode=ValidationMode.FULL,
                    fuzz_duration=FUZZ_SECONDS,
                    bug_filters=load_bug_filters(DEMO_SOURCE / "filters.json"),
                    semantic_checks=load_semantic_checks(DEMO_SOURCE / checks_file))


def test_workspace_exports_hook_channel(demo_workspace):
    config = demo_workspace.prepare()
    assert config["HOOK_ENV"] == "DEMO_HOOK_EVENTS"
    assert config["HOOK_ARCHIVE"].endswith("libdemohooks.a")
    assert "--wrap=demo_parse" in config["HOOK_LDFLAGS"]


def test_hook_shim_reports_call_and_arg(demo_workspace, demo_drivers, tmp_path):
    hooked = build(demo_drivers["effective"], demo_workspace,
                   out_dir=tmp_path / "h", with_hooks=True)
    assert hooked.success, hooked.compiler_output
    event_file = tmp_path / "events.log"
    payload = b"\x01\x04abcd"
    run_once(hooked.binary_path, payload,
             env={"DEMO_HOOK_EVENTS": str(event_file)})
    events = parse_hook_events(event_file.read_text())
    assert any(e.kind == "CALL" and e.api == "demo_parse" for e in events)
    arg = next(e for e in events if e.kind == "ARG" and e.api == "demo_parse")
    assert arg.arg_index == 0 and arg.data == payload


def test_leaky_driver_flagged_as_memleak(demo_workspace, demo_drivers):
    report = validate(demo_drivers["leaky"], demo_workspace,
                      fuzz_duration=FUZZ_SECONDS)
    assert report.verdict is VerdictKind.INEFFECTIVE
    assert report.triage.category.value == "rt_memleak"


def test_file_driver_passes_full_mode(demo_workspace, demo_drivers):
    report = full_validate(demo_drivers["effective_file"], demo_workspace,
                           "checks_file.json")
    assert report.verdict is VerdictKind.EFFECTIVE
    assert not report.automated_only


def test_api_less_loop_passes_automated_but_fails_full(demo_workspace,
                                                       demo_drivers):
    automated = validate(demo_drivers["loop_no_api"], demo_workspace,
                         fuzz_duration=FUZZ_SECONDS)
    assert automated.verdict is VerdictKind.EFFECTIVE  # coverage alone fools it
    full = full_validate(demo_drivers["loop_no_api"], demo_workspace,
                         "checks.json")
    assert full.verdict is VerdictKind.INEFFECTIVE
    assert full.failed_step is Step.SEMANTIC
    assert set(full.semantic_failures) == {"API_CALLED", "DATA_REACHES_ARG"}


def test_effective_driver_passes_full_mode(demo_workspace, demo_drivers):
    report = full_validate(demo_drivers["effective"], demo_workspace,
                           "checks.json")
    assert report.verdict is VerdictKind.EFFECTIVE
    assert report.semantic_failures == ()
