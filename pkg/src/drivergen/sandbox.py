"""Compile drivers against a project workspace and run bounded fuzzing.

Workspace contract: each project directory contains an executable build
script (default ``build.sh``) that prints ``KEY=VALUE`` lines on stdout:

    ARCHIVE=/abs/path/libfoo.a        (required)
    CFLAGS=-I/abs/include             (optional)
    LDFLAGS=-lm                       (optional)
    HOOK_ARCHIVE=/abs/libhooks.a      (optional; semantic-check shim)
    HOOK_LDFLAGS=-Wl,--wrap=foo ...   (optional; linker interposition)

Each build and fuzz run happens in a fresh directory; artifacts are
copied out before anything is discarded.
"""

from __future__ import annotations

import os
import re
import shlex
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .errors import SandboxError, WorkspaceError

DRIVER_FILENAME = "driver.c"

# libFuzzer invocation used by every bounded session
DEFAULT_FUZZER_FLAGS = ("-close_fd_mask=3", "-rss_limit_mb=2048", "-timeout=30")
DEFAULT_FUZZ_DURATION = 60.0

_CLANG = os.environ.get("DRIVERGEN_CC", "clang")
_COMPILE_FLAGS = ("-g", "-O1", "-fsanitize=fuzzer,address")

_DIAG_RE = re.compile(
    r"^(?P<file>[^:\s][^:]*):(?P<line>\d+):(?:\d+:)?\s*(?:fatal\s+)?error:\s*(?P<msg>.*)$"
)
_UNDEF_REF_RE = re.compile(
    r"undefined reference to [`']?(?P<sym>[A-Za-z_][A-Za-z0-9_]*)'?"
    r"|undefined symbol:\s*(?P<sym2>[A-Za-z_][A-Za-z0-9_]*)"
)


def _symbolizer_env() -> dict[str, str]:
    """Point sanitizers at a symbolizer when llvm-symbolizer is absent."""
    if os.environ.get("ASAN_OPTIONS") or shutil.which("llvm-symbolizer"):
        return {}
    addr2line = shutil.which("addr2line")
    if addr2line:
        return {"ASAN_OPTIONS": f"external_symbolizer_path={addr2line}"}
    return {}


class ExitKind(Enum):
    CLEAN = "clean"
    CRASH = "crash"
    TIMEOUT = "timeout"
    OOM = "oom"
    LEAK = "leak"


# Exit-kind classification markers over the fuzzer log; ordered, first
# match wins.  Extensible via `fuzz(..., markers=...)`.
DEFAULT_EXIT_MARKERS: tuple[tuple[ExitKind, str], ...] = (
    (ExitKind.LEAK, "detected memory leaks"),
    (ExitKind.OOM, "out-of-memory"),
    (ExitKind.TIMEOUT, "ERROR: libFuzzer: timeout"),
    (ExitKind.CRASH, "SUMMARY: AddressSanitizer:"),
    (ExitKind.CRASH, "ERROR: AddressSanitizer:"),
    (ExitKind.CRASH, "deadly signal"),
)


@dataclass(frozen=True)
class BuildResult:
    success: bool
    binary_path: Optional[Path]
    compiler_output: str
    error_lines: tuple[tuple[str, int, str], ...]

    @property
    def only_link_errors(self) -> bool:
        return bool(self.error_lines) and all(
            msg.startswith("undefined reference to")
            for _, _, msg in self.error_lines
        )


@dataclass(frozen=True)
class FuzzResult:
    duration: float
    exit_kind: ExitKind
    coverage_series: tuple[tuple[float, int], ...]  # (exec count, edge count)
    log_text: str
    crash_artifact: Optional[bytes] = None
    sanitizer_summary: Optional[str] = None
    crash_stack: tuple[tuple[str, str, int], ...] = ()

    @property
    def coverage_progress(self) -> bool:
        """Edge counter grew after the startup (INITED) phase."""
        if len(self.coverage_series) < 2:
            return False
        return self.coverage_series[-1][1] > self.coverage_series[0][1]


class Workspace:
    """A prepared project directory; build-script output is cached."""

    def __init__(self, root, build_script: str = "build.sh"):
        self.root = Path(root).resolve()
        self.build_script = build_script
        self._config: Optional[dict[str, str]] = None

    def prepare(self) -> dict[str, str]:
        if self._config is not None:
            return self._config
        script = self.root / self.build_script
        if not script.exists():
            raise WorkspaceError(f"build script missing: {script}")
        proc = subprocess.run(
            ["sh", str(script)], cwd=self.root,
            capture_output=True, text=True,
        )
        if proc.returncode != 0:
            raise WorkspaceError(
                f"build script failed ({proc.returncode}):\n{proc.stdout}{proc.stderr}"
            )
        config = {}
        for line in proc.stdout.splitlines():
            if "=" in line and re.match(r"^[A-Z_]+=", line):
                key, _, value = line.partition("=")
                config[key] = value.strip()
        if "ARCHIVE" not in config:
            raise WorkspaceError(f"build script printed no ARCHIVE= line:\n{proc.stdout}")
        archive = self.root / config["ARCHIVE"]
        if not archive.exists():
            raise WorkspaceError(f"library archive missing: {archive}")
        config["ARCHIVE"] = str(archive)
        for key in ("HOOK_ARCHIVE",):
            if config.get(key):
                config[key] = str(self.root / config[key])
        self._config = config
        return config


def build(driver_source: str, workspace: Workspace,
          out_dir=None, with_hooks: bool = False) -> BuildResult:
    """Compile a driver with fuzzing+sanitizer instrumentation.

    Driver compile failures are data (success=False), not exceptions;
    only a broken workspace raises.
    """
    config = workspace.prepare()
    out = Path(out_dir) if out_dir else Path(tempfile.mkdtemp(prefix="drv-build-"))
    out.mkdir(parents=True, exist_ok=True)
    src = out / DRIVER_FILENAME
    src.write_text(driver_source)
    binary = out / "driver"

    cmd = [_CLANG, *_COMPILE_FLAGS, *shlex.split(config.get("CFLAGS", ""))]
    cmd += [str(src)]
    if with_hooks and config.get("HOOK_ARCHIVE"):
        # whole-archive so shim constructors link even when the driver
        # references none of the wrapped symbols
        cmd += ["-Wl,--whole-archive", config["HOOK_ARCHIVE"],
                "-Wl,--no-whole-archive",
                *shlex.split(config.get("HOOK_LDFLAGS", ""))]
    cmd += [config["ARCHIVE"], *shlex.split(config.get("LDFLAGS", "")), "-o", str(binary)]

    proc = subprocess.run(cmd, capture_output=True, text=True)
    output = proc.stdout + proc.stderr
    if proc.returncode == 0 and binary.exists():
        return BuildResult(True, binary, output, ())
    return BuildResult(False, None, output, parse_compiler_diagnostics(output))


def parse_compiler_diagnostics(output: str) -> tuple[tuple[str, int, str], ...]:
    """Extract (file, line, message) error diagnostics from build output.

    Undefined-reference linker errors are normalized to
    ("", 0, "undefined reference to SYM") and deduplicated (linkers
    repeat them per call site).
    """
    error_lines = []
    for line in output.splitlines():
        m = _DIAG_RE.match(line)
        if m:
            error_lines.append((m.group("file"), int(m.group("line")), m.group("msg")))
            continue
        m = _UNDEF_REF_RE.search(line)
        if m:
            sym = m.group("sym") or m.group("sym2")
            error_lines.append(("", 0, f"undefined reference to {sym}"))
    seen = set()
    unique = []
    for item in error_lines:
        if item not in seen:
            seen.add(item)
            unique.append(item)
    return tuple(unique)


def parse_fuzzer_log(log_text: str, markers=DEFAULT_EXIT_MARKERS):
    """Classify a libFuzzer log; returns (exit_kind, coverage_series,
    sanitizer_summary, crash_stack)."""
    exit_kind = ExitKind.CLEAN
    for kind, marker in markers:
        if marker in log_text:
            exit_kind = kind
            break

    series = []
    for m in re.finditer(r"^#(\d+)\s+(?:INITED|NEW|REDUCE|pulse|DONE)\s+cov:\s+(\d+)",
                         log_text, re.MULTILINE):
        series.append((float(m.group(1)), int(m.group(2))))

    summary = None
    if exit_kind is ExitKind.LEAK:
        summary = "memory-leak"
    elif exit_kind is ExitKind.CRASH:
        sm = re.search(r"^SUMMARY: \w+Sanitizer: (\S+)", log_text, re.MULTILINE)
        summary = sm.group(1) if sm else "deadly-signal"

    stack = []
    for m in re.finditer(
        r"^\s*#\d+\s+0x[0-9a-f]+\s+in\s+(\S+)(?:\s+(\S+))?",
        log_text, re.MULTILINE,
    ):
        func, loc = m.group(1), m.group(2) or ""
        file, line = "", 0
        lm = re.match(r"(.+):(\d+)(?::\d+)?$", loc)
        if lm:
            file, line = lm.group(1), int(lm.group(2))
        stack.append((func, file, line))
    return exit_kind, tuple(series), summary, tuple(stack)


def fuzz(binary, duration: float = DEFAULT_FUZZ_DURATION,
         flags: Sequence[str] = DEFAULT_FUZZER_FLAGS,
         seed: int = 1, env: Optional[dict] = None,
         markers=DEFAULT_EXIT_MARKERS) -> FuzzResult:
    """Run a bounded, empty-corpus fuzzing session in an isolated directory.

    A crashing target is a result, never an exception; only launch
    failures raise SandboxError.
    """
    binary = Path(binary)
    if not binary.exists():
        raise SandboxError(f"fuzz binary missing: {binary}")
    run_env = dict(os.environ)
    run_env.update(_symbolizer_env())
    if env:
        run_env.update(env)
    with tempfile.TemporaryDirectory(prefix="drv-fuzz-") as tmp:
        cmd = [str(binary.resolve()), f"-max_total_time={max(1, int(duration))}",
               f"-seed={seed}", *flags]
        try:
            proc = subprocess.run(
                cmd, cwd=tmp, env=run_env, capture_output=True, text=True,
                errors="replace", timeout=duration + 120,
            )
            log = proc.stdout + proc.stderr
        except subprocess.TimeoutExpired as e:
            log = ((e.stdout or b"").decode(errors="replace") if isinstance(e.stdout, bytes)
                   else (e.stdout or ""))
            log += ((e.stderr or b"").decode(errors="replace") if isinstance(e.stderr, bytes)
                    else (e.stderr or ""))
            log += "\nERROR: libFuzzer: timeout"
        except OSError as e:
            raise SandboxError(f"could not launch {binary}: {e}") from None

        artifact = None
        for pattern in ("crash-*", "leak-*", "oom-*", "timeout-*"):
            hits = sorted(Path(tmp).glob(pattern))
            if hits:
                artifact = hits[0].read_bytes()
                break

    exit_kind, series, summary, stack = parse_fuzzer_log(log, markers)
    return FuzzResult(
        duration=duration,
        exit_kind=exit_kind,
        coverage_series=series,
        log_text=log,
        crash_artifact=artifact,
        sanitizer_summary=summary,
        crash_stack=stack,
    )


def run_once(binary, input_bytes: bytes, env: Optional[dict] = None,
             timeout: float = 30.0) -> tuple[int, str]:
    """Execute a fuzz binary on a single input (libFuzzer file mode)."""
    binary = Path(binary)
    if not binary.exists():
        raise SandboxError(f"binary missing: {binary}")
    run_env = dict(os.environ)
    run_env.update(_symbolizer_env())
    if env:
        run_env.update(env)
    with tempfile.TemporaryDirectory(prefix="drv-once-") as tmp:
        infile = Path(tmp) / "input"
        infile.write_bytes(input_bytes)
        try:
            proc = subprocess.run(
                [str(binary.resolve()), str(infile)], cwd=tmp, env=run_env,
                capture_output=True, text=True, errors="replace", timeout=timeout,
            )
        except subprocess.TimeoutExpired:
            return (-1, "single-run timeout")
        except OSError as e:
            raise SandboxError(f"could not launch {binary}: {e}") from None
        return proc.returncode, proc.stdout + proc.stderr
