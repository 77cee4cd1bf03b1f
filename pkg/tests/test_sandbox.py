import json

import pytest

from drivergen.errors import SandboxError, WorkspaceError
from drivergen.sandbox import (
    ExitKind,
    Workspace,
    build,
    fuzz,
    parse_compiler_diagnostics,
    parse_fuzzer_log,
    run_once,
)
from tests.conftest import DATA_DIR, FUZZ_SECONDS, needs_toolchain

FUZZER_LOGS = {e["name"]: e for e in json.loads((DATA_DIR / "fuzzer_logs.json").read_text())}
COMPILER_LOGS = {e["name"]: e for e in json.loads((DATA_DIR / "compiler_logs.json").read_text())}


# --- log parsing (no toolchain needed) ---------------------------------------

@pytest.mark.parametrize("name,expected_kind", [
    ("memleak", ExitKind.LEAK),
    ("oom", ExitKind.OOM),
    ("timeout", ExitKind.TIMEOUT),
    ("heap-overflow", ExitKind.CRASH),
    ("driver-segv", ExitKind.CRASH),
    ("flat-coverage", ExitKind.CLEAN),
])
def test_exit_kind_classification(name, expected_kind):
    kind, _, _, _ = parse_fuzzer_log(FUZZER_LOGS[name]["log"])
    assert kind is expected_kind


def test_leak_summary_is_memory_leak():
    _, _, summary, _ = parse_fuzzer_log(FUZZER_LOGS["memleak"]["log"])
    assert summary == "memory-leak"


def test_crash_summary_comes_from_sanitizer_summary_line():
    _, _, summary, _ = parse_fuzzer_log(FUZZER_LOGS["heap-overflow"]["log"])
    assert summary == "heap-buffer-overflow"


def test_crash_stack_extraction():
    _, _, _, stack = parse_fuzzer_log(FUZZER_LOGS["heap-overflow"]["log"])
    funcs = [f for f, _, _ in stack]
    assert funcs[0] == "demo_checksum_block"
    assert "demo_parse" in funcs
    # file:line parsed when present
    assert any(line > 0 for _, _, line in stack)


def test_unsymbolized_frames_still_parse():
    log = "    #0 0xdeadbeef in demo_parse ??:?\n    #1 0xfeedface in main\n"
    _, _, _, stack = parse_fuzzer_log(log)
    assert [f for f, _, _ in stack] == ["demo_parse", "main"]
    assert all(line == 0 for _, _, line in stack)


def test_coverage_series_and_progress():
    _, series, _, _ = parse_fuzzer_log(FUZZER_LOGS["flat-coverage"]["log"])
    assert len(series) >= 2
    assert series[0][1] == series[-1][1]  # flat by construction
    _, growing, _, _ = parse_fuzzer_log(FUZZER_LOGS["memleak"]["log"])
    assert growing[-1][1] > growing[0][1]


def test_compiler_diagnostics_extraction():
    out = COMPILER_LOGS["undeclared-identifier"]["output"]
    diags = parse_compiler_diagnostics(out)
    assert diags
    file, line, msg = diags[0]
    assert file.endswith("driver.c") and line > 0
    assert "undeclared identifier" in msg


def test_undefined_reference_deduplicated():
    out = (
        "/usr/bin/ld: driver.o: in function `f':\n"
        "driver.c:(.text+0x1): undefined reference to `demo_init'\n"
        "driver.c:(.text+0x9): undefined reference to `demo_init'\n"
    )
    diags = parse_compiler_diagnostics(out)
    assert diags == (("", 0, "undefined reference to demo_init"),)


def test_missing_binary_raises():
    with pytest.raises(SandboxError):
        fuzz("/nonexistent/driver", duration=1)
    with pytest.raises(SandboxError):
        run_once("/nonexistent/driver", b"x")


# --- workspace contract ------------------------------------------------------

def test_workspace_missing_script(tmp_path):
    with pytest.raises(WorkspaceError):
        Workspace(tmp_path).prepare()


def test_workspace_script_failure(tmp_path):
    (tmp_path / "build.sh").write_text("echo broken >&2\nexit 3\n")
    with pytest.raises(WorkspaceError, match="broken"):
        Workspace(tmp_path).prepare()


def test_workspace_no_archive_line(tmp_path):
    (tmp_path / "build.sh").write_text("echo CFLAGS=-I.\n")
    with pytest.raises(WorkspaceError, match="ARCHIVE"):
        Workspace(tmp_path).prepare()


def test_workspace_archive_file_missing(tmp_path):
    (tmp_path / "build.sh").write_text("echo ARCHIVE=libnope.a\n")
    with pytest.raises(WorkspaceError, match="archive missing"):
        Workspace(tmp_path).prepare()


# --- real toolchain ----------------------------------------------------------

@needs_toolchain
def test_build_success_and_fuzz_clean(demo_workspace, demo_drivers, tmp_path):
    res = build(demo_drivers["effective"], demo_workspace, out_dir=tmp_path / "b")
    assert res.success, res.compiler_output
    fr = fuzz(res.binary_path, duration=FUZZ_SECONDS)
    assert fr.exit_kind is ExitKind.CLEAN
    assert fr.coverage_progress


@needs_toolchain
def test_build_failure_is_data_not_exception(demo_workspace, tmp_path):
    bad = "int LLVMFuzzerTestOneInput(const uint8_t *d, unsigned long n) { return x; }"
    res = build(bad, demo_workspace, out_dir=tmp_path / "b")
    assert not res.success
    assert res.binary_path is None
    assert any("undeclared" in msg for _, _, msg in res.error_lines)


@needs_toolchain
def test_link_error_detected(demo_workspace, demo_drivers, tmp_path):
    src = demo_drivers["effective"].replace("demo_parse(", "demo_parse_v2(")
    res = build(src, demo_workspace, out_dir=tmp_path / "b")
    assert not res.success
    assert res.only_link_errors
    assert ("", 0, "undefined reference to demo_parse_v2") in res.error_lines


@needs_toolchain
def test_run_once_executes_input(demo_workspace, demo_drivers, tmp_path):
    res = build(demo_drivers["effective"], demo_workspace, out_dir=tmp_path / "b")
    rc, log = run_once(res.binary_path, b"\x01\x03abc")
    assert rc == 0
    assert "Running: " in log
