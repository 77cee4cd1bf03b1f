import os
import shutil
import subprocess
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
DEMO_SOURCE = REPO_ROOT / "demo_target"
DATA_DIR = Path(__file__).resolve().parent / "data"

# Short-fuzz budget for CI; raise via env for longer soak runs.
FUZZ_SECONDS = float(os.environ.get("DRIVERGEN_TEST_FUZZ_SECONDS", "8"))

_CLANG = os.environ.get("DRIVERGEN_CC", "clang")


def _toolchain_available() -> bool:
    if shutil.which(_CLANG) is None:
        return False
    probe = "int LLVMFuzzerTestOneInput(const unsigned char *d, unsigned long s)" \
            "{ (void)d; (void)s; return 0; }"
    try:
        proc = subprocess.run(
            [_CLANG, "-fsanitize=fuzzer,address", "-x", "c", "-", "-o", os.devnull],
            input=probe, capture_output=True, text=True, timeout=60,
        )
    except (OSError, subprocess.TimeoutExpired):
        return False
    return proc.returncode == 0


HAS_TOOLCHAIN = _toolchain_available()

needs_toolchain = pytest.mark.skipif(
    not HAS_TOOLCHAIN, reason="C toolchain with fuzzing sanitizers unavailable"
)


@pytest.fixture(scope="session")
def demo_workspace(tmp_path_factory):
    """A built copy of the demo project, shared across the session."""
    from drivergen.sandbox import Workspace

    if not HAS_TOOLCHAIN:
        pytest.skip("C toolchain with fuzzing sanitizers unavailable")
    root = tmp_path_factory.mktemp("demo") / "demo_target"
    shutil.copytree(DEMO_SOURCE, root,
                    ignore=shutil.ignore_patterns("*.o", "*.a"))
    ws = Workspace(root)
    ws.prepare()
    return ws


@pytest.fixture(scope="session")
def demo_drivers():
    drivers = DEMO_SOURCE / "drivers"
    return {p.stem: p.read_text() for p in drivers.glob("*.c")}
