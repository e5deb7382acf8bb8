"""Command-line entry point: plan, answer, report and eval."""
import argparse
import asyncio
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from src.cli.render import render_plan, render_report
from src.cli.trace import (
    TraceSink,
    aborted_events,
    deliberation_events,
    make_run_id,
    pipeline_events,
    write_trace,
)
from src.config import RunConfig, Settings, load_run_config
from src.deliberation import DeliberationResult, Deliberator
from src.dependencies import build_providers, get_providers, reset_providers, set_providers
from src.errors import DeliberationAborted, EmptyInputError, ResearchError, UsageError
from src.evalharness import (
    BenchmarkItem,
    BenchmarkRunner,
    load_dataset,
    plot_reliability,
    summarize_metrics,
    write_metrics,
    write_records,
)
from src.models import TopicRequest
from src.pipeline import PipelineConfig, Planner, ResearchPipeline, Researcher, Writer
from src.prompts import PromptPack

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected an integer, got {value!r}") from e
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {number}")
    return number


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--out", type=Path, help="primary output file")
    common.add_argument("--trace", type=Path, help="JSONL trace file")
    common.add_argument("--seed", type=int, default=0, help="offline script variant selector")
    common.add_argument("--offline", action="store_true", help="use fixture providers only")
    common.add_argument("--prompt-pack", dest="prompt_pack", help="prompt pack version")

    parser = argparse.ArgumentParser(
        prog="deliberative-research",
        description="Confidence-aware deep research: plan, research and write reports; evaluate calibration.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    plan = commands.add_parser("plan", parents=[common], help="decompose a topic into report sections")
    plan.add_argument("topic")
    plan.add_argument("--language", default="en")
    plan.add_argument("--constraints")

    answer = commands.add_parser("answer", parents=[common], help="answer one question by deliberative search")
    answer.add_argument("question")

    report = commands.add_parser("report", parents=[common], help="write a claim-annotated report")
    report.add_argument("topic")
    report.add_argument("--language", default="en")
    report.add_argument("--constraints")
    report.add_argument("--parallelism", type=_positive_int, help="sections researched at once")

    evaluate = commands.add_parser("eval", parents=[common], help="score accuracy and calibration on a benchmark")
    evaluate.add_argument("--dataset", type=Path, required=True)
    evaluate.add_argument("--bins", type=_positive_int, default=10)
    evaluate.add_argument("--records", type=Path, help="per-record JSONL dump")
    evaluate.add_argument("--plot", type=Path, help="reliability diagram PNG")
    evaluate.add_argument("--parallelism", type=_positive_int, default=1, help="items deliberated at once")
    return parser


@dataclass(frozen=True)
class _Context:
    args: argparse.Namespace
    settings: Settings
    run_config: RunConfig
    prompts: PromptPack

    @property
    def pipeline_config(self) -> PipelineConfig:
        config = self.run_config.pipeline
        parallelism = getattr(self.args, "parallelism", None)
        if self.args.command == "report" and parallelism:
            config = config.model_copy(update={"section_parallelism": parallelism})
        return config

    def output_path(self, explicit: Optional[Path], name: str) -> Path:
        return explicit if explicit is not None else Path(self.settings.output_dir) / name

    def deliberator(self) -> Deliberator:
        providers = get_providers()
        return Deliberator(
            providers.researcher,
            providers.searcher,
            providers.fetcher,
            self.pipeline_config.deliberation,
            self.prompts,
        )

    def run_echo(self, **extra: object) -> dict:
        return {
            **self.run_config.echo(),
            "offline": self.args.offline,
            "seed": self.args.seed,
            "prompt_pack": self.prompts.version,
            **extra,
        }


def _require_text(value: str, name: str) -> str:
    if not value.strip():
        raise UsageError(f"{name} must be non-empty")
    return value


def _topic_request(args: argparse.Namespace) -> TopicRequest:
    return TopicRequest(
        topic=_require_text(args.topic, "topic"),
        language=args.language,
        constraints=args.constraints,
    )


async def _plan(ctx: _Context) -> int:
    planner = Planner(get_providers().planner, ctx.prompts)
    plan = await planner.plan_topic(_topic_request(ctx.args))
    path = ctx.output_path(ctx.args.out, ctx.run_config.output.plan)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(plan.model_dump(mode="json"), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(render_plan(plan), end="")
    print(f"Plan written to {path}")
    return EXIT_OK


async def _answer(ctx: _Context) -> int:
    question = _require_text(ctx.args.question, "question")
    run_id = make_run_id("answer", question, ctx.args.seed)
    trace_target = ctx.output_path(ctx.args.trace, ctx.run_config.output.trace)
    try:
        result = await ctx.deliberator().run_deliberation(question)
    except DeliberationAborted as e:
        write_trace(aborted_events(run_id, e), trace_target)
        print(f"Partial trace written to {trace_target}", file=sys.stderr)
        raise
    trace_path = write_trace(deliberation_events(run_id, (result,)), trace_target)
    if ctx.args.out is not None:
        ctx.args.out.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "question": question,
            "answer": result.answer,
            "confidence": result.confidence.model_dump(mode="json"),
            "terminated_by": result.terminated_by.value,
            "rounds": result.state.rounds_used,
            "run_id": run_id,
        }
        ctx.args.out.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(result.answer)
    print(
        f"confidence: {result.confidence.norm:.2f} ({result.confidence.provenance.value}), "
        f"terminated_by: {result.terminated_by.value}, rounds: {result.state.rounds_used}"
    )
    print(f"Trace written to {trace_path}")
    return EXIT_OK


async def _report(ctx: _Context) -> int:
    providers = get_providers()
    config = ctx.pipeline_config
    pipeline = ResearchPipeline(
        Planner(providers.planner, ctx.prompts),
        Researcher(providers.researcher, ctx.deliberator(), providers.reflector, config, ctx.prompts),
        Writer(providers.writer, ctx.prompts),
        config,
    )
    request = _topic_request(ctx.args)
    run = await pipeline.run(request)

    report_path = ctx.output_path(ctx.args.out, ctx.run_config.output.report)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(render_report(run.report), encoding="utf-8")

    sink = TraceSink()
    run_id = make_run_id("report", request.topic, ctx.args.seed)
    for stream, events in pipeline_events(run_id, run).items():
        await sink.emit(stream, events)
    trace_path = write_trace(sink.events(), ctx.output_path(ctx.args.trace, ctx.run_config.output.trace))

    print(f"Report written to {report_path}")
    print(f"Trace written to {trace_path}")
    return EXIT_OK


async def _eval(ctx: _Context) -> int:
    args = ctx.args
    items = load_dataset(args.dataset)
    if not items:
        raise EmptyInputError(f"dataset {args.dataset} has no items")

    sink = TraceSink()
    run_id = make_run_id("eval", str(args.dataset), args.seed)
    positions = {item.item_id: i for i, item in enumerate(items, start=1)}

    async def on_result(item: BenchmarkItem, result: DeliberationResult) -> None:
        events = deliberation_events(run_id, (result,), positions[item.item_id], item.item_id)
        await sink.emit(positions[item.item_id], events)

    async def on_failure(item: BenchmarkItem, error: Exception) -> None:
        events = aborted_events(run_id, error, positions[item.item_id], item.item_id)
        await sink.emit(positions[item.item_id], events)

    runner = BenchmarkRunner(ctx.deliberator())
    records = await runner.run_benchmark(items, args.parallelism, on_result=on_result, on_failure=on_failure)
    summary = summarize_metrics(
        records,
        args.bins,
        run_config=ctx.run_echo(dataset=str(args.dataset), parallelism=args.parallelism),
    )

    metrics_path = write_metrics(summary, ctx.output_path(args.out, ctx.run_config.output.metrics))
    records_path = args.records or (
        Path(ctx.settings.output_dir) / ctx.run_config.output.records if ctx.run_config.output.records else None
    )
    if records_path is not None:
        write_records(records, records_path)
    if args.plot is not None:
        plot_reliability(summary, args.plot)
    trace_path = write_trace(sink.events(), ctx.output_path(args.trace, ctx.run_config.output.trace))

    print(
        f"n={summary.n} accuracy={summary.accuracy:.4f} ece={summary.ece:.4f} "
        f"mce={summary.mce:.4f} overconfidence={summary.overconfidence:+.4f}"
    )
    print(f"Metrics written to {metrics_path}")
    print(f"Trace written to {trace_path}")
    return EXIT_OK


_COMMANDS = {"plan": _plan, "answer": _answer, "report": _report, "eval": _eval}


async def _dispatch(args: argparse.Namespace) -> int:
    settings = Settings()
    run_config = load_run_config(args.config, settings)
    prompts = PromptPack.load(args.prompt_pack or run_config.prompt_pack_version)
    bundle = build_providers(run_config, args.offline, args.seed, settings)
    set_providers(bundle)
    ctx = _Context(args=args, settings=settings, run_config=run_config, prompts=prompts)
    try:
        return await _COMMANDS[args.command](ctx)
    finally:
        await bundle.aclose()


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit status (0 ok, 1 failure, 2 usage)."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        return asyncio.run(_dispatch(args))
    except UsageError as e:
        logger.error("Usage error: %s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ResearchError as e:
        logger.error("Command %s failed: %s", args.command, e, exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as e:
        logger.error("Command %s failed on I/O: %s", args.command, e, exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:
        logger.error("Command %s failed unexpectedly: %s", args.command, e, exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    finally:
        reset_providers()


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
