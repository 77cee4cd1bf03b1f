"""Query strategies and the generate → validate → repair loop.

A *session* runs one strategy on one API question for K independent
repetitions.  Non-iterative strategies spend exactly one query per
repetition; iterative ones spend at most 1 + max_fix_iterations.

Everything persisted in a SessionLog is deterministic for a fixed
(question, strategy, model, seed, scripted backend): no latencies, no
raw fuzzer logs, no absolute paths.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence

from .backends import BackendRegistry, DEFAULT_REGISTRY, ModelConfig, RetryPolicy, complete
from .dataset import Question
from .errors import BackendUnavailable, NoCode
from .knowledge import ApiKnowledge
from .prompting import (
    DEFAULT_SYSTEM_ROLE,
    GenerationKind,
    Prompt,
    extract_code,
    render_fix_prompt,
    render_generation_prompt,
)
from .triage import FixInfoMode, route_fix
from .validate import ValidationMode, ValidationReport, VerdictKind, validate

DEFAULT_MAX_FIX_ITERATIONS = 5

# Repetition presets: quick probe, the recommended budget, and the
# saturation budget used for strategy comparisons.
REPETITION_PRESETS = {"probe": 1, "recommended": 6, "saturation": 40}
RECOMMENDED_MAX_REPETITIONS = 6


class Strategy(Enum):
    NAIVE_K = "naive_k"
    BACTX_K = "bactx_k"
    DOCTX_K = "doctx_k"
    UGCTX_K = "ugctx_k"
    BA_ITER_K = "ba_iter_k"
    ALL_ITER_K = "all_iter_k"

    @property
    def iterative(self) -> bool:
        return self in (Strategy.BA_ITER_K, Strategy.ALL_ITER_K)

    @property
    def fix_mode(self) -> FixInfoMode:
        return FixInfoMode.EXTENDED if self is Strategy.ALL_ITER_K else FixInfoMode.BASIC


# initial-prompt pool for the mixed iterative strategy; the bare task
# prompt is deliberately excluded because it carries no API knowledge
_ALL_ITER_POOL = (GenerationKind.BACTX, GenerationKind.DOCTX, GenerationKind.UGCTX)

_GENERATION_KIND = {
    Strategy.NAIVE_K: GenerationKind.NAIVE,
    Strategy.BACTX_K: GenerationKind.BACTX,
    Strategy.DOCTX_K: GenerationKind.DOCTX,
    Strategy.UGCTX_K: GenerationKind.UGCTX,
    Strategy.BA_ITER_K: GenerationKind.BACTX,
}


@dataclass(frozen=True)
class QueryRecord:
    """One LLM round trip plus what validation said about its output."""
    kind: str                      # "generate" | "fix"
    template: Optional[str]        # fix-template id for fix queries
    system_role: str
    user_message: str
    response_text: str
    prompt_tokens: int
    response_tokens: int
    extracted: bool
    verdict: Optional[str]         # VerdictKind value; None when no code came back
    failed_step: Optional[str]
    triage_category: Optional[str]
    snippet_origin: Optional[str] = None  # provenance of the UGCTX snippet, if any
    snippet_kind: Optional[str] = None


@dataclass(frozen=True)
class RepetitionResult:
    index: int
    solved: bool
    queries: int
    solved_at_query: Optional[int]
    final_driver: Optional[str]
    records: tuple[QueryRecord, ...]
    aborted: bool = False  # backend gave out mid-repetition


@dataclass(frozen=True)
class SessionLog:
    question_id: int
    project: str
    api_name: str
    strategy: str
    model_name: str
    temperature: float
    seed: int
    repetitions: tuple[RepetitionResult, ...]

    @property
    def total_queries(self) -> int:
        return sum(r.queries for r in self.repetitions)

    @property
    def solved_repetitions(self) -> int:
        """Solution count: repetitions that produced an effective driver."""
        return sum(1 for r in self.repetitions if r.solved)

    @property
    def solved(self) -> bool:
        return self.solved_repetitions >= 1

    @property
    def tokens_total(self) -> tuple[int, int]:
        prompt = sum(q.prompt_tokens for r in self.repetitions for q in r.records)
        response = sum(q.response_tokens for r in self.repetitions for q in r.records)
        return prompt, response

    def to_json(self) -> str:
        payload = {
            "question_id": self.question_id,
            "project": self.project,
            "api_name": self.api_name,
            "strategy": self.strategy,
            "model_name": self.model_name,
            "temperature": self.temperature,
            "seed": self.seed,
            "total_queries": self.total_queries,
            "solved_repetitions": self.solved_repetitions,
            "repetitions": [
                {
                    "index": r.index,
                    "solved": r.solved,
                    "queries": r.queries,
                    "solved_at_query": r.solved_at_query,
                    "final_driver": r.final_driver,
                    "aborted": r.aborted,
                    "records": [vars(q) for q in r.records],
                }
                for r in self.repetitions
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SessionLog":
        data = json.loads(text)
        reps = tuple(
            RepetitionResult(
                index=r["index"],
                solved=r["solved"],
                queries=r["queries"],
                solved_at_query=r["solved_at_query"],
                final_driver=r["final_driver"],
                records=tuple(QueryRecord(**q) for q in r["records"]),
                aborted=r.get("aborted", False),
            )
            for r in data["repetitions"]
        )
        return cls(
            question_id=data["question_id"],
            project=data["project"],
            api_name=data["api_name"],
            strategy=data["strategy"],
            model_name=data["model_name"],
            temperature=data["temperature"],
            seed=data["seed"],
            repetitions=reps,
        )


def log_filename(log: SessionLog) -> str:
    model = log.model_name.replace("/", "-")
    return (f"q{log.question_id:03d}__{log.strategy}__{model}"
            f"__t{log.temperature:g}__s{log.seed}.json")


Validator = Callable[[str], ValidationReport]


def make_validator(workspace, mode: ValidationMode = ValidationMode.AUTOMATED,
                   **kwargs) -> Validator:
    """Bind the validation pipeline to a workspace for orchestration use."""
    def _validator(driver_source: str) -> ValidationReport:
        return validate(driver_source, workspace, mode=mode, **kwargs)
    return _validator


def _record(kind: str, template: Optional[str], exchange,
            extracted: bool, report: Optional[ValidationReport]) -> QueryRecord:
    return QueryRecord(
        kind=kind,
        template=template,
        system_role=exchange.prompt.system_role,
        user_message=exchange.prompt.user_message,
        response_text=exchange.response_text,
        prompt_tokens=exchange.prompt_tokens,
        response_tokens=exchange.response_tokens,
        extracted=extracted,
        verdict=report.verdict.value if report else None,
        failed_step=report.failed_step.value if report and report.failed_step else None,
        triage_category=report.triage.category.value if report and report.triage else None,
        snippet_origin=exchange.prompt.tags.get("snippet_origin"),
        snippet_kind=exchange.prompt.tags.get("snippet_kind"),
    )


def _initial_prompt(strategy: Strategy, knowledge: ApiKnowledge,
                    rng: random.Random, system_role: str) -> Prompt:
    if strategy is Strategy.ALL_ITER_K:
        kind = rng.choice(_ALL_ITER_POOL)
    else:
        kind = _GENERATION_KIND[strategy]
    snippet = None
    if kind is GenerationKind.UGCTX and knowledge.snippets:
        snippet = rng.choice(list(knowledge.snippets))
    return render_generation_prompt(kind, knowledge, chosen_snippet=snippet,
                                    system_role=system_role)


def run_repetition(rep_index: int, strategy: Strategy, knowledge: ApiKnowledge,
                   model: ModelConfig, validator: Validator, rng: random.Random,
                   registry: BackendRegistry = DEFAULT_REGISTRY,
                   retry: RetryPolicy = RetryPolicy(),
                   max_fix_iterations: int = DEFAULT_MAX_FIX_ITERATIONS,
                   system_role: str = DEFAULT_SYSTEM_ROLE) -> RepetitionResult:
    """One generate(+repair) pass; every LLM round trip counts as a query."""
    records: list[QueryRecord] = []
    prompt = _initial_prompt(strategy, knowledge, rng, system_role)
    kind, template = "generate", None
    driver: Optional[str] = None
    budget = 1 + max_fix_iterations if strategy.iterative else 1

    while len(records) < budget:
        try:
            exchange = complete(prompt, model, registry, retry)
        except BackendUnavailable:
            # abort this repetition only; the session carries on
            return RepetitionResult(rep_index, False, len(records), None,
                                    driver, tuple(records), aborted=True)
        try:
            driver = extract_code(exchange.response_text)
        except NoCode:
            # the query is spent; with no code there is nothing to repair
            records.append(_record(kind, template, exchange, False, None))
            break
        report = validator(driver)
        records.append(_record(kind, template, exchange, True, report))
        if report.effective:
            return RepetitionResult(rep_index, True, len(records), len(records),
                                    driver, tuple(records))
        if not strategy.iterative or len(records) >= budget or report.triage is None:
            break
        template_id, fields = route_fix(report.triage, knowledge, rng,
                                        strategy.fix_mode)
        prompt = render_fix_prompt(template_id, driver, fields,
                                   system_role=system_role)
        kind, template = "fix", template_id.value

    return RepetitionResult(rep_index, False, len(records), None,
                            driver, tuple(records))


def run_question(question: Question, knowledge: ApiKnowledge, strategy: Strategy,
                 repetitions: int, model: ModelConfig, validator: Validator,
                 seed: int = 0,
                 registry: BackendRegistry = DEFAULT_REGISTRY,
                 retry: RetryPolicy = RetryPolicy(),
                 max_fix_iterations: int = DEFAULT_MAX_FIX_ITERATIONS,
                 system_role: str = DEFAULT_SYSTEM_ROLE) -> SessionLog:
    """Run a full session: K independent repetitions of one strategy.

    Each repetition derives its own RNG from (seed, repetition index), so
    repetition outcomes do not depend on how many repetitions run.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    reps = []
    for rep in range(repetitions):
        rng = random.Random(f"{seed}:{rep}")
        reps.append(run_repetition(rep, strategy, knowledge, model, validator,
                                   rng, registry, retry, max_fix_iterations,
                                   system_role))
    return SessionLog(
        question_id=question.id,
        project=question.project,
        api_name=question.api_name,
        strategy=strategy.value,
        model_name=model.model_name,
        temperature=model.temperature,
        seed=seed,
        repetitions=tuple(reps),
    )


def persist(log: SessionLog, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / log_filename(log)
    path.write_text(log.to_json())
    return path


def run_sweep(jobs: Sequence[tuple[Question, ApiKnowledge, Strategy, int]],
              model: ModelConfig, validator: Validator, out_dir,
              seed: int = 0, resume: bool = True,
              registry: BackendRegistry = DEFAULT_REGISTRY,
              **kwargs) -> list[Path]:
    """Run many sessions, skipping logs that already exist when resuming."""
    paths = []
    for question, knowledge, strategy, repetitions in jobs:
        probe = SessionLog(question.id, question.project, question.api_name,
                           strategy.value, model.model_name, model.temperature,
                           seed, ())
        target = Path(out_dir) / log_filename(probe)
        if resume and target.exists():
            paths.append(target)
            continue
        log = run_question(question, knowledge, strategy, repetitions, model,
                           validator, seed=seed, registry=registry, **kwargs)
        paths.append(persist(log, out_dir))
    return paths
