"""Deterministic approximate token counting.

This is *not* a provider tokenizer.  The rule is fixed and documented so
budgets and cost accounting are reproducible:

- a run of identifier/number characters counts ceil(len / 8) tokens
  (the sub-word cap: long identifiers count more than one token);
- a run of consecutive punctuation characters counts 1 token;
- whitespace counts nothing.

Exact provider tokenizers can be plugged in where precision matters; all
in-repo budgets use this rule.
"""

import re

_WORD_RE = re.compile(r"[A-Za-z0-9_]+|[^A-Za-z0-9_\s]+")

SUBWORD_CAP = 8


def count_tokens(text: str) -> int:
    total = 0
    for m in _WORD_RE.finditer(text):
        piece = m.group(0)
        if piece[0].isalnum() or piece[0] == "_":
            total += -(-len(piece) // SUBWORD_CAP)
        else:
            total += 1
    return total
