"""Command-line entry points.

Exit codes: 0 success, 1 ineffective/unsolved result, 2 configuration
problem, 3 workspace problem, 4 backend problem.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import __version__
from .backends import BackendRegistry, MockBackend, ModelConfig, OpenAiCompatBackend
from .dataset import complexity_score, load_questions
from .errors import (
    BackendError,
    ConfigError,
    DriverGenError,
    NotFound,
    ParseError,
    SchemaError,
    WorkspaceError,
)
from .knowledge import assemble
from .merge import merge_drivers
from .orchestrator import (
    DEFAULT_MAX_FIX_ITERATIONS,
    Strategy,
    make_validator,
    persist,
    run_question,
)
from .report import (
    load_logs,
    render_csv,
    render_table,
    solve_table_from_logs,
    summarize_by_strategy,
)
from .sandbox import DEFAULT_FUZZ_DURATION, Workspace
from .validate import (
    ValidationMode,
    load_bug_filters,
    load_semantic_checks,
    validate as validate_driver,
)


def _fail(exc: Exception) -> "click.exceptions.Exit":
    click.echo(f"error: {exc}", err=True)
    if isinstance(exc, (ConfigError, NotFound, ParseError, SchemaError, ValueError)):
        return click.exceptions.Exit(2)
    if isinstance(exc, WorkspaceError):
        return click.exceptions.Exit(3)
    if isinstance(exc, BackendError):
        return click.exceptions.Exit(4)
    return click.exceptions.Exit(1)


@click.group()
@click.version_option(__version__)
def main():
    """Generate, validate, and evaluate fuzz drivers for C library APIs."""


@main.command("validate")
@click.argument("driver", type=click.Path(exists=True, path_type=Path))
@click.argument("project_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--mode", type=click.Choice([m.value for m in ValidationMode]),
              default=ValidationMode.AUTOMATED.value, show_default=True)
@click.option("--duration", type=float, default=DEFAULT_FUZZ_DURATION,
              show_default=True, help="Fuzzing budget in seconds.")
@click.option("--filters", type=click.Path(exists=True, path_type=Path),
              help="True-bug filter JSON.")
@click.option("--checks", type=click.Path(exists=True, path_type=Path),
              help="Semantic check JSON (full mode).")
def validate_cmd(driver, project_dir, mode, duration, filters, checks):
    """Run the effectiveness pipeline on one driver source file."""
    try:
        report = validate_driver(
            driver.read_text(),
            Workspace(project_dir),
            mode=ValidationMode(mode),
            fuzz_duration=duration,
            bug_filters=load_bug_filters(filters) if filters else (),
            semantic_checks=load_semantic_checks(checks) if checks else (),
        )
    except DriverGenError as e:
        raise _fail(e)
    click.echo(f"verdict: {report.verdict.value}")
    if report.failed_step:
        click.echo(f"failed step: {report.failed_step.value}")
    if report.triage:
        click.echo(f"failure category: {report.triage.category.value}")
    if report.matched_filter:
        click.echo(f"matched known bug: {report.matched_filter}")
    for failure in report.semantic_failures:
        click.echo(f"semantic check failed: {failure}")
    if not report.effective:
        raise click.exceptions.Exit(1)


@main.command("run")
@click.option("--questions", "questions_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--question-id", type=int, required=True)
@click.option("--strategy", type=click.Choice([s.value for s in Strategy]),
              required=True)
@click.option("-k", "--repetitions", type=int, default=1, show_default=True)
@click.option("--scenario", type=click.Path(exists=True, path_type=Path),
              help="Scripted-response file; enables the mock backend.")
@click.option("--model-name", default="mock", show_default=True)
@click.option("--temperature", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--duration", type=float, default=DEFAULT_FUZZ_DURATION,
              show_default=True, help="Fuzzing budget per validation, seconds.")
@click.option("--max-fix-iterations", type=int, default=DEFAULT_MAX_FIX_ITERATIONS,
              show_default=True)
@click.option("--snippet-corpus", type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), default=Path("logs"),
              show_default=True)
def run_cmd(questions_path, question_id, strategy, repetitions, scenario,
            model_name, temperature, seed, duration, max_fix_iterations,
            snippet_corpus, out):
    """Run one strategy session for one API question and persist its log."""
    try:
        qs = load_questions(questions_path)
        question = qs.by_id(question_id)
        project_dir = qs.corpus_root / question.project
        if not project_dir.is_dir():
            raise WorkspaceError(f"workspace missing: {project_dir}")
        workspace = Workspace(project_dir, question.build_script)

        header = (project_dir / question.header_path).read_text()
        knowledge = assemble(
            question.api_name,
            header,
            f'#include "{Path(question.header_path).name}"',
            documentation=question.doc_override,
            snippet_corpus=snippet_corpus,
            project=question.project,
            declaration_override=question.declaration_override,
        )

        registry = BackendRegistry()
        if scenario:
            registry.register("mock", MockBackend.from_file(scenario))
            backend_id = "mock"
        else:
            registry.register("openai", OpenAiCompatBackend())
            backend_id = "openai"
        model = ModelConfig(backend_id, model_name, temperature=temperature)

        filters = (load_bug_filters(project_dir / question.bug_filter_spec)
                   if question.bug_filter_spec else ())
        validator = make_validator(workspace, fuzz_duration=duration,
                                   bug_filters=filters)
        log = run_question(question, knowledge, Strategy(strategy), repetitions,
                           model, validator, seed=seed, registry=registry,
                           max_fix_iterations=max_fix_iterations)
        path = persist(log, out)
    except (DriverGenError, KeyError, OSError) as e:
        raise _fail(e if isinstance(e, Exception) else RuntimeError(str(e)))
    click.echo(f"log: {path}")
    click.echo(f"solved repetitions: {log.solved_repetitions}/{len(log.repetitions)}")
    click.echo(f"total queries: {log.total_queries}")
    if log.solved_repetitions == 0:
        raise click.exceptions.Exit(1)


@main.command("sweep")
@click.argument("manifest", type=click.Path(exists=True, path_type=Path))
@click.option("--no-resume", is_flag=True, help="Re-run completed sessions.")
def sweep_cmd(manifest, no_resume):
    """Run a grid of sessions described by a JSON manifest.

    Manifest keys: questions (corpus path), out (log dir), grid (list of
    {question_id, strategy, k, temperature?, seed?}), and optionally
    scenario (mock script), model_name, duration, snippet_corpus,
    max_fix_iterations.  Relative paths resolve against the manifest.
    """
    import json

    try:
        base = manifest.parent
        spec = json.loads(manifest.read_text())
        if not isinstance(spec.get("grid"), list) or not spec["grid"]:
            raise ConfigError("manifest needs a non-empty 'grid' array")
        qs = load_questions(base / spec["questions"])
        out = base / spec.get("out", "logs")
        registry = BackendRegistry()
        if spec.get("scenario"):
            backend = MockBackend.from_file(base / spec["scenario"])
            registry.register("mock", backend)
            backend_id = "mock"
        else:
            registry.register("openai", OpenAiCompatBackend())
            backend_id = "openai"

        for i, cell in enumerate(spec["grid"]):
            for key in ("question_id", "strategy", "k"):
                if key not in cell:
                    raise ConfigError(f"grid entry #{i} missing '{key}'")
            question = qs.by_id(cell["question_id"])
            seed = cell.get("seed", spec.get("seed", 0))
            model = ModelConfig(backend_id, spec.get("model_name", "mock"),
                                temperature=cell.get("temperature",
                                                     spec.get("temperature", 0.5)))
            strategy = Strategy(cell["strategy"])
            probe = None
            from .orchestrator import SessionLog, log_filename
            probe = SessionLog(question.id, question.project, question.api_name,
                               strategy.value, model.model_name,
                               model.temperature, seed, ())
            target = out / log_filename(probe)
            if not no_resume and target.exists():
                click.echo(f"session q{question.id} {strategy.value}: "
                           f"already done ({target.name})")
                continue

            project_dir = qs.corpus_root / question.project
            if not project_dir.is_dir():
                raise WorkspaceError(f"workspace missing: {project_dir}")
            workspace = Workspace(project_dir, question.build_script)
            header = (project_dir / question.header_path).read_text()
            knowledge = assemble(
                question.api_name, header,
                f'#include "{Path(question.header_path).name}"',
                documentation=question.doc_override,
                snippet_corpus=(base / spec["snippet_corpus"]
                                if spec.get("snippet_corpus") else None),
                project=question.project,
                declaration_override=question.declaration_override,
            )
            filters = (load_bug_filters(project_dir / question.bug_filter_spec)
                       if question.bug_filter_spec else ())
            validator = make_validator(
                workspace, bug_filters=filters,
                fuzz_duration=spec.get("duration", DEFAULT_FUZZ_DURATION),
            )
            if spec.get("scenario"):
                backend.reset()
            log = run_question(
                question, knowledge, strategy, cell["k"], model, validator,
                seed=seed, registry=registry,
                max_fix_iterations=spec.get("max_fix_iterations",
                                            DEFAULT_MAX_FIX_ITERATIONS),
            )
            path = persist(log, out)
            click.echo(f"session q{question.id} {strategy.value}: "
                       f"solved {log.solved_repetitions}/{len(log.repetitions)} "
                       f"queries {log.total_queries} -> {path.name}")
    except (DriverGenError, KeyError, OSError, ValueError) as e:
        raise _fail(e)


@main.group("report")
def report_group():
    """Aggregate persisted session logs."""


@report_group.command("costs")
@click.argument("log_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--csv", "as_csv", is_flag=True, help="Emit CSV instead of a grid.")
def report_costs_cmd(log_dir, as_csv):
    """Per-strategy query and cost summary."""
    try:
        summaries = summarize_by_strategy(load_logs(log_dir))
    except DriverGenError as e:
        raise _fail(e)
    rows = [["strategy", "sessions", "solved questions", "queries", "solved reps", "cost"]]
    for s in summaries:
        cost = "inf" if s.cost == float("inf") else f"{s.cost:.2f}"
        rows.append([s.strategy, str(s.sessions), str(s.questions_solved),
                     str(s.total_queries), str(s.total_solved_repetitions), cost])
    click.echo(render_csv(rows).rstrip("\n") if as_csv else render_table(rows))


@report_group.command("solve-table")
@click.argument("log_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--csv", "as_csv", is_flag=True, help="Emit CSV instead of a grid.")
def report_solve_table_cmd(log_dir, as_csv):
    """Question-by-strategy solved/repetitions table."""
    try:
        logs = load_logs(log_dir)
        if not logs:
            raise ConfigError("no session logs found")
        table = solve_table_from_logs(logs)
    except DriverGenError as e:
        raise _fail(e)
    click.echo(render_csv(table).rstrip("\n") if as_csv else render_table(table))


@main.command("merge")
@click.argument("output", type=click.Path(path_type=Path))
@click.argument("drivers", nargs=-1, required=True,
                type=click.Path(exists=True, path_type=Path))
def merge_cmd(output, drivers):
    """Merge driver sources into one dispatching driver."""
    try:
        merged = merge_drivers([p.read_text() for p in drivers])
    except (DriverGenError, ValueError) as e:
        raise _fail(e)
    output.write_text(merged)
    click.echo(f"merged {len(drivers)} drivers into {output}")


@main.command("complexity")
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@click.option("--api", "apis", multiple=True, required=True,
              help="Project API name (repeatable).")
def complexity_cmd(source, apis):
    """Score the usage complexity of a minimal driver."""
    try:
        score = complexity_score(source.read_text(), apis)
    except DriverGenError as e:
        raise _fail(e)
    click.echo(str(score))


if __name__ == "__main__":
    sys.exit(main())
