"""Metrics and tables over persisted session logs.

Cost is measured in LLM queries per produced solution; per-round gain
normalizes each extra repetition's contribution by the first round's
result so strategies with different baselines stay comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .errors import DegenerateBaseline, EmptyList
from .orchestrator import SessionLog


def question_cost(queries: int, solutions: int) -> float:
    """Average queries spent per solution; infinite when nothing solved."""
    if queries < 0 or solutions < 0:
        raise ValueError("counts must be non-negative")
    if solutions == 0:
        return math.inf
    return queries / solutions


def round_gain(prev: float, curr: float, first: Optional[float] = None) -> float:
    """Marginal result of one more round, normalized by the first round.

    `first` defaults to `prev`, which is exact when prev is round 1.
    """
    baseline = prev if first is None else first
    if baseline == 0:
        raise DegenerateBaseline("first-round result is zero")
    return (curr - prev) / baseline


def round_gains(results_by_round: Sequence[float]) -> list[float]:
    """Gains for rounds 2..N given cumulative results for rounds 1..N."""
    if not results_by_round:
        raise EmptyList("no rounds")
    first = results_by_round[0]
    if first == 0:
        raise DegenerateBaseline("first-round result is zero")
    return [
        (results_by_round[i] - results_by_round[i - 1]) / first
        for i in range(1, len(results_by_round))
    ]


def solve_cell(solved: Optional[int], repetitions: Optional[int]) -> str:
    """Render one solve-table cell; a missing measurement renders as '-'."""
    if solved is None or repetitions is None:
        return "-"
    if not 0 <= solved <= repetitions:
        raise ValueError(f"solved {solved} out of range for {repetitions} repetitions")
    return f"{solved}/{repetitions}"


def solve_table(cells: Mapping[tuple[str, str], tuple[int, int]],
                rows: Sequence[str], cols: Sequence[str]) -> list[list[str]]:
    """Grid of 'solved/repetitions' strings with a header row."""
    table = [["", *cols]]
    for row in rows:
        line = [row]
        for col in cols:
            entry = cells.get((row, col))
            line.append(solve_cell(*entry) if entry else solve_cell(None, None))
        table.append(line)
    return table


def render_csv(table: Sequence[Sequence[str]]) -> str:
    import csv
    import io
    buf = io.StringIO()
    csv.writer(buf).writerows(table)
    return buf.getvalue()


def render_table(table: Sequence[Sequence[str]]) -> str:
    widths = [max(len(row[i]) for row in table) for i in range(len(table[0]))]
    return "\n".join(
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in table
    )


@dataclass(frozen=True)
class StrategySummary:
    strategy: str
    sessions: int
    questions_solved: int
    total_queries: int
    total_solved_repetitions: int
    cost: float  # queries per solved repetition


def load_logs(log_dir) -> list[SessionLog]:
    return [SessionLog.from_json(p.read_text())
            for p in sorted(Path(log_dir).glob("*.json"))]


def summarize_by_strategy(logs: Sequence[SessionLog]) -> list[StrategySummary]:
    if not logs:
        raise EmptyList("no session logs")
    by_strategy: dict[str, list[SessionLog]] = {}
    for log in logs:
        by_strategy.setdefault(log.strategy, []).append(log)
    summaries = []
    for strategy in sorted(by_strategy):
        group = by_strategy[strategy]
        queries = sum(l.total_queries for l in group)
        solved_reps = sum(l.solved_repetitions for l in group)
        summaries.append(StrategySummary(
            strategy=strategy,
            sessions=len(group),
            questions_solved=sum(1 for l in group if l.solved_repetitions > 0),
            total_queries=queries,
            total_solved_repetitions=solved_reps,
            cost=question_cost(queries, solved_reps),
        ))
    return summaries


def snippet_source_breakdown(logs: Sequence[SessionLog]
                             ) -> dict[tuple[str, str], float]:
    """Query success rate per snippet (origin, kind) provenance class.

    Only queries that carried a snippet count; no such queries gives an
    empty breakdown.
    """
    queries: dict[tuple[str, str], int] = {}
    successes: dict[tuple[str, str], int] = {}
    for log in logs:
        for rep in log.repetitions:
            for q in rep.records:
                if q.snippet_origin is None or q.snippet_kind is None:
                    continue
                key = (q.snippet_origin, q.snippet_kind)
                queries[key] = queries.get(key, 0) + 1
                if q.verdict in ("effective", "true_bug"):
                    successes[key] = successes.get(key, 0) + 1
    return {key: successes.get(key, 0) / n for key, n in queries.items()}


def solve_table_from_logs(logs: Sequence[SessionLog]) -> list[list[str]]:
    """Question-by-strategy solve table straight from session logs."""
    cells: dict[tuple[str, str], tuple[int, int]] = {}
    for log in logs:
        key = (f"q{log.question_id:03d}", log.strategy)
        prev = cells.get(key, (0, 0))
        cells[key] = (prev[0] + log.solved_repetitions,
                      prev[1] + len(log.repetitions))
    rows = sorted({r for r, _ in cells})
    cols = sorted({c for _, c in cells})
    return solve_table(cells, rows, cols)
