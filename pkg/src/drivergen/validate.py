"""Driver effectiveness validation.

Pipeline: ① compile with sanitizer+fuzzing instrumentation, ② bounded
fuzzing from an empty corpus (behavioral screening), ③ reclassify any
reported bug against known true-bug filters, ④ semantic probing through
the library's hook shim.  AUTOMATED mode stops after ③ and is what the
iterative repair loop uses; FULL mode adds ④.

Bug filters and semantic checks are data, loaded from per-project JSON:

    {"filters": [{"name": "...", "frames": ["frame_a", "frame_b"]}]}

    {"checks": [
      {"id": "API_CALLED", "api": "foo"},
      {"id": "DATA_REACHES_ARG", "api": "foo", "arg": 0},
      {"id": "FILE_CONTENT_NOT_NAME", "api": "foo_file", "arg": 0}
    ]}

A filter matches when its frames occur, in order, as a subsequence of
the crash-stack function names (substring comparison per frame).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .errors import ConfigError, HookChannelError, NotAFailure
from .sandbox import (
    BuildResult,
    DEFAULT_FUZZ_DURATION,
    DEFAULT_FUZZER_FLAGS,
    ExitKind,
    FuzzResult,
    Workspace,
    build,
    fuzz,
    run_once,
)
from .triage import TriageVerdict, classify_build_failure, classify_runtime_failure

# Deterministic probe payload for semantic checks: filename-safe bytes so
# a driver that (mis)uses input as a path still propagates it observably.
DEFAULT_PROBE_INPUT = b"SNTNLPROBE7413"


class ValidationMode(Enum):
    AUTOMATED = "automated"
    FULL = "full"


class Step(Enum):
    COMPILE = "compile"
    FUZZ_BEHAVIOR = "fuzz_behavior"
    SEMANTIC = "semantic"


class VerdictKind(Enum):
    EFFECTIVE = "effective"
    INEFFECTIVE = "ineffective"
    TRUE_BUG = "true_bug"  # effective, and it rediscovered a known real bug


@dataclass(frozen=True)
class BugFilter:
    name: str
    frames: tuple[str, ...]

    def matches(self, crash_stack: Sequence[tuple[str, str, int]]) -> bool:
        names = [fn for fn, _, _ in crash_stack]
        it = iter(names)
        return all(any(frame in name for name in it) for frame in self.frames)


def apply_bug_filters(fr: FuzzResult,
                      filters: Sequence[BugFilter]) -> Optional[str]:
    """Name of the first filter matching the crash evidence, else None
    (the bug is the driver's fault)."""
    assert fr.exit_kind is not ExitKind.CLEAN
    for f in filters:
        if f.matches(fr.crash_stack):
            return f.name
    return None


def load_bug_filters(path) -> tuple[BugFilter, ...]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"bug filter file unreadable: {e}") from None
    filters = []
    for entry in data.get("filters", []):
        frames = tuple(entry.get("frames", ()))
        if not entry.get("name") or not frames:
            raise ConfigError(f"bug filter needs name and frames: {entry}")
        filters.append(BugFilter(entry["name"], frames))
    return tuple(filters)


# --- hook event channel -----------------------------------------------------

@dataclass(frozen=True)
class HookEvent:
    kind: str                 # CALL | ARG | FILE
    api: str
    arg_index: Optional[int] = None
    path: Optional[str] = None
    data: bytes = b""


def _from_hex(field_text: str) -> bytes:
    # "-" marks an empty byte string so every field stays non-blank
    return b"" if field_text == "-" else bytes.fromhex(field_text)


def parse_hook_events(text: str) -> list[HookEvent]:
    """Parse the line-oriented event stream written by a hook shim.

        CALL <api>
        ARG <api> <index> <hex-bytes|->
        FILE <api> <index> <hex-path|-> <hex-bytes|->

    Paths are hex-encoded so whitespace in filenames cannot corrupt the
    stream; byte snapshots are truncated by the shim (first 64 bytes).
    """
    events = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(" ")
        try:
            if parts[0] == "CALL" and len(parts) == 2:
                events.append(HookEvent("CALL", parts[1]))
            elif parts[0] == "ARG" and len(parts) == 4:
                events.append(HookEvent("ARG", parts[1], int(parts[2]),
                                        data=_from_hex(parts[3])))
            elif parts[0] == "FILE" and len(parts) == 5:
                events.append(HookEvent("FILE", parts[1], int(parts[2]),
                                        path=_from_hex(parts[3]).decode("utf-8", "replace"),
                                        data=_from_hex(parts[4])))
            else:
                raise ValueError("unrecognized event shape")
        except ValueError as e:
            raise HookChannelError(f"bad hook event at line {lineno}: {line!r} ({e})") from None
    return events


@dataclass(frozen=True)
class SemanticCheck:
    check_id: str
    api: str
    arg_index: int = 0


_KNOWN_CHECKS = {"API_CALLED", "DATA_REACHES_ARG", "FILE_CONTENT_NOT_NAME"}


def load_semantic_checks(path) -> tuple[SemanticCheck, ...]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"semantic check file unreadable: {e}") from None
    checks = []
    for entry in data.get("checks", []):
        cid = entry.get("id")
        if cid not in _KNOWN_CHECKS:
            raise ConfigError(f"unknown semantic check id: {cid!r}")
        if not entry.get("api"):
            raise ConfigError(f"semantic check needs an api: {entry}")
        checks.append(SemanticCheck(cid, entry["api"], int(entry.get("arg", 0))))
    return tuple(checks)


def evaluate_semantic_checks(checks: Sequence[SemanticCheck],
                             events: Sequence[HookEvent],
                             probe_input: bytes) -> list[str]:
    """Return the ids of failed checks (empty list = all passed).

    DATA_REACHES_ARG and FILE_CONTENT_NOT_NAME look for the probe bytes,
    so callers must have run the driver on `probe_input`.
    """
    failures = []
    for check in checks:
        ok = False
        if check.check_id == "API_CALLED":
            ok = any(e.kind == "CALL" and e.api == check.api for e in events)
        elif check.check_id == "DATA_REACHES_ARG":
            ok = any(
                e.kind == "ARG" and e.api == check.api
                and e.arg_index == check.arg_index and probe_input in e.data
                for e in events
            )
        elif check.check_id == "FILE_CONTENT_NOT_NAME":
            # input must flow into the file's bytes, not its name
            relevant = [e for e in events
                        if e.kind == "FILE" and e.api == check.api
                        and e.arg_index == check.arg_index]
            ok = not relevant or any(
                probe_input in e.data
                and probe_input.decode("ascii", "ignore") not in (e.path or "")
                for e in relevant
            )
        if not ok:
            failures.append(check.check_id)
    return failures


# --- the pipeline -----------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    verdict: VerdictKind
    failed_step: Optional[Step] = None
    build: Optional[BuildResult] = None
    fuzz: Optional[FuzzResult] = None
    triage: Optional[TriageVerdict] = None
    matched_filter: Optional[str] = None
    semantic_failures: tuple[str, ...] = ()
    automated_only: bool = True

    @property
    def effective(self) -> bool:
        return self.verdict in (VerdictKind.EFFECTIVE, VerdictKind.TRUE_BUG)


def validate(driver_source: str, workspace: Workspace,
             mode: ValidationMode = ValidationMode.AUTOMATED,
             fuzz_duration: float = DEFAULT_FUZZ_DURATION,
             fuzzer_flags: Sequence[str] = DEFAULT_FUZZER_FLAGS,
             bug_filters: Sequence[BugFilter] = (),
             semantic_checks: Sequence[SemanticCheck] = (),
             probe_input: bytes = DEFAULT_PROBE_INPUT,
             fuzz_seed: int = 1) -> ValidationReport:
    """Run the validation pipeline on one driver and classify the outcome."""
    automated = mode is ValidationMode.AUTOMATED
    br = build(driver_source, workspace)
    if not br.success:
        verdict = classify_build_failure(br, driver_source)
        return ValidationReport(VerdictKind.INEFFECTIVE, Step.COMPILE,
                                build=br, triage=verdict,
                                automated_only=automated)

    fr = fuzz(br.binary_path, duration=fuzz_duration, flags=fuzzer_flags,
              seed=fuzz_seed)

    matched_filter = None
    if fr.exit_kind is ExitKind.CLEAN:
        if not fr.coverage_progress:
            return ValidationReport(
                VerdictKind.INEFFECTIVE, Step.FUZZ_BEHAVIOR, build=br, fuzz=fr,
                triage=classify_runtime_failure(fr, driver_source),
                automated_only=automated,
            )
    else:
        matched_filter = apply_bug_filters(fr, bug_filters)
        if matched_filter is None:
            return ValidationReport(
                VerdictKind.INEFFECTIVE, Step.FUZZ_BEHAVIOR, build=br, fuzz=fr,
                triage=classify_runtime_failure(fr, driver_source),
                automated_only=automated,
            )

    if automated or not semantic_checks:
        verdict = VerdictKind.TRUE_BUG if matched_filter else VerdictKind.EFFECTIVE
        return ValidationReport(verdict, build=br, fuzz=fr,
                                matched_filter=matched_filter,
                                automated_only=automated)

    failures = run_semantic_probe(driver_source, workspace, semantic_checks,
                                  probe_input)
    if failures:
        return ValidationReport(
            VerdictKind.INEFFECTIVE, Step.SEMANTIC, build=br, fuzz=fr,
            matched_filter=matched_filter, semantic_failures=tuple(failures),
            automated_only=False,
        )
    verdict = VerdictKind.TRUE_BUG if matched_filter else VerdictKind.EFFECTIVE
    return ValidationReport(verdict, build=br, fuzz=fr,
                            matched_filter=matched_filter,
                            automated_only=False)


def run_semantic_probe(driver_source: str, workspace: Workspace,
                       semantic_checks: Sequence[SemanticCheck],
                       probe_input: bytes = DEFAULT_PROBE_INPUT) -> list[str]:
    """Rebuild with the hook shim, run one probe input, judge the events.

    Requires the workspace to provide HOOK_ARCHIVE and HOOK_ENV (the
    environment variable naming the event file).
    """
    config = workspace.prepare()
    if not config.get("HOOK_ARCHIVE"):
        raise HookChannelError("workspace provides no hook shim (HOOK_ARCHIVE)")
    env_var = config.get("HOOK_ENV")
    if not env_var:
        raise HookChannelError("workspace provides no HOOK_ENV variable name")

    hooked = build(driver_source, workspace, with_hooks=True)
    if not hooked.success:
        raise HookChannelError(
            f"driver failed to build against the hook shim:\n{hooked.compiler_output}"
        )

    import tempfile
    with tempfile.TemporaryDirectory(prefix="drv-hook-") as tmp:
        event_file = Path(tmp) / "events.log"
        run_once(hooked.binary_path, probe_input, env={env_var: str(event_file)})
        if not event_file.exists():
            raise HookChannelError("hook shim produced no event file")
        text = event_file.read_text()
    events = parse_hook_events(text)
    return evaluate_semantic_checks(semantic_checks, events, probe_input)
