"""Combine several effective drivers into one dispatching binary.

The merged driver renames each input's fuzz entrypoint and routes to it
by the first input byte modulo the driver count; that byte is consumed
so each sub-driver still sees an arbitrary payload.  Inputs must not
define colliding non-entrypoint symbols (rename helpers or mark them
static before merging).
"""

from __future__ import annotations

import re
from typing import Sequence

from .errors import EmptyList
from .knowledge import FUZZ_ENTRYPOINT_SYMBOLS

SUB_DRIVER_PREFIX = "fuzz_sub_driver_"


def sub_driver_name(index: int) -> str:
    return f"{SUB_DRIVER_PREFIX}{index}"


def dispatch_index(first_byte: int, driver_count: int) -> int:
    return first_byte % driver_count


def merge_drivers(sources: Sequence[str],
                  entrypoint: str = FUZZ_ENTRYPOINT_SYMBOLS[0]) -> str:
    """Produce one C source whose entrypoint dispatches over `sources`."""
    if not sources:
        raise EmptyList("no drivers to merge")
    symbol_re = re.compile(rf"\b{re.escape(entrypoint)}\b")
    parts = []
    for i, src in enumerate(sources):
        if not symbol_re.search(src):
            raise ValueError(f"driver {i} does not define {entrypoint}")
        renamed = symbol_re.sub(sub_driver_name(i), src)
        parts.append(f"/* --- merged driver {i} --- */\n{renamed.rstrip()}\n")

    n = len(sources)
    cases = "\n".join(
        f"    case {i}: return {sub_driver_name(i)}(data + 1, size - 1);"
        for i in range(n)
    )
    dispatcher = (
        "#include <stdint.h>\n"
        "#include <stddef.h>\n\n"
        f"int {entrypoint}(const uint8_t *data, size_t size) {{\n"
        "  if (size == 0) return 0;\n"
        f"  switch (data[0] % {n}) {{\n"
        f"{cases}\n"
        "  }\n"
        "  return 0;\n"
        "}\n"
    )
    return "\n".join(parts) + "\n" + dispatcher
