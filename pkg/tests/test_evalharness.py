"""Benchmark loading, running and metric summaries."""
import json

import pytest

from src.deliberation import DeliberationPolicy, Deliberator
from src.errors import (
    DatasetError,
    DatasetParseError,
    DeliberationAborted,
    DuplicateIdError,
    EmptyInputError,
    MalformedResponseError,
)
from src.evalharness import (
    ECE_NOTE,
    BenchmarkItem,
    BenchmarkRunner,
    load_dataset,
    plot_reliability,
    summarize_metrics,
    write_metrics,
    write_records,
)
from src.models import GradingMode
from src.providers import FixtureCorpus, FixtureFetcher, FixtureSearchProvider, OfflineCompletionProvider, ScriptBook


class FailingOn(OfflineCompletionProvider):
    """Offline provider that fails every prompt containing ``needle``."""

    def __init__(self, book, needle):
        super().__init__(book)
        self.needle = needle

    def _respond(self, request):
        if self.needle in request.prompt:
            raise MalformedResponseError("injected failure")
        return super()._respond(request)


@pytest.fixture
def synth20(repo_fixtures):
    return load_dataset(repo_fixtures / "synth20.jsonl")


@pytest.fixture
def offline_runner(repo_fixtures, prompts):
    def factory(llm=None):
        corpus = FixtureCorpus.load(repo_fixtures / "corpus")
        llm = llm or OfflineCompletionProvider(ScriptBook.load(repo_fixtures / "offline_script.yaml"))
        deliberator = Deliberator(
            llm, FixtureSearchProvider(corpus), FixtureFetcher(corpus), DeliberationPolicy(), prompts
        )
        return BenchmarkRunner(deliberator)

    return factory


class TestBenchmarkItem:
    def test_choice_prompt_lists_options(self):
        item = BenchmarkItem.model_validate(
            {"id": "q", "question": "Pick one", "choices": {"b": "Two", "a": "One"}, "gold": "a",
             "grading_mode": "choice-letter"}
        )
        assert item.choices == {"A": "One", "B": "Two"}
        assert item.prompt.startswith("Pick one\n\nOptions:\nA. One\nB. Two")

    def test_choice_mode_requires_gold_among_choices(self):
        with pytest.raises(ValueError):
            BenchmarkItem.model_validate(
                {"id": "q", "question": "Pick", "choices": {"A": "x"}, "gold": "C", "grading_mode": "choice-letter"}
            )

    def test_exact_item_prompt_is_question(self):
        item = BenchmarkItem(item_id="q", question="Why?", gold="Because")
        assert item.prompt == "Why?"
        assert item.grading_mode == GradingMode.EXACT


class TestLoadDataset:
    def test_synthetic_benchmark(self, synth20):
        assert len(synth20) == 20
        assert synth20[0].item_id == "synth-01"
        assert sum(item.grading_mode == GradingMode.CHOICE_LETTER for item in synth20) == 8

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text('\n{"id": "a", "question": "q", "gold": "g"}\n\n', encoding="utf-8")
        assert [item.item_id for item in load_dataset(path)] == ["a"]

    @pytest.mark.parametrize(
        "second_line",
        ["{not json", "[1, 2]", '{"id": "b", "question": "q"}', '{"id": "b", "question": " ", "gold": "g"}'],
    )
    def test_bad_line_reports_line_number(self, tmp_path, second_line):
        path = tmp_path / "d.jsonl"
        path.write_text('{"id": "a", "question": "q", "gold": "g"}\n' + second_line + "\n", encoding="utf-8")
        with pytest.raises(DatasetParseError) as info:
            load_dataset(path)
        assert info.value.line == 2

    def test_duplicate_ids(self, tmp_path):
        path = tmp_path / "d.jsonl"
        line = '{"id": "a", "question": "q", "gold": "g"}\n'
        path.write_text(line * 2, encoding="utf-8")
        with pytest.raises(DuplicateIdError) as info:
            load_dataset(path)
        assert (info.value.item_id, info.value.line) == ("a", 2)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError):
            load_dataset(tmp_path / "absent.jsonl")


class TestBenchmarkRunner:
    async def test_scripted_accuracy_and_ece(self, synth20, offline_runner):
        records = await offline_runner().run_benchmark(synth20)
        summary = summarize_metrics(records, 10)

        assert [r.item_id for r in records] == [item.item_id for item in synth20]
        assert summary.n == 20
        assert summary.accuracy == pytest.approx(0.6, abs=1e-12)
        # 12 correct at fused 0.9, 8 wrong at fused 0.7
        assert summary.ece == pytest.approx(0.6 * 0.1 + 0.4 * 0.7, abs=1e-12)
        assert summary.mean_confidence == pytest.approx(0.82, abs=1e-12)
        assert summary.overconfidence == pytest.approx(0.22, abs=1e-12)
        assert summary.failures == 0
        assert summary.notes == (ECE_NOTE,)

    async def test_hard_failure_costs_one_item(self, synth20, offline_runner, repo_fixtures):
        book = ScriptBook.load(repo_fixtures / "offline_script.yaml")
        runner = offline_runner(FailingOn(book, "Which ocean is the largest?"))

        records = await runner.run_benchmark(synth20)
        summary = summarize_metrics(records)

        failed = [r for r in records if r.error]
        assert [r.item_id for r in failed] == ["synth-10"]
        assert failed[0].error.startswith("DeliberationAborted")
        assert failed[0].confidence.norm == 0.0
        assert summary.accuracy == pytest.approx(0.6 - 1 / 20, abs=1e-12)
        assert summary.failures == 1
        assert len(summary.notes) == 2

    async def test_failed_item_reported_with_partial_state(self, synth20, offline_runner, repo_fixtures):
        book = ScriptBook.load(repo_fixtures / "offline_script.yaml")
        runner = offline_runner(FailingOn(book, "Which ocean is the largest?"))
        failures = []

        async def on_failure(item, error):
            failures.append((item.item_id, error))

        records = await runner.run_benchmark(synth20, parallelism=4, on_failure=on_failure)

        assert [item_id for item_id, _ in failures] == ["synth-10"]
        error = failures[0][1]
        assert isinstance(error, DeliberationAborted)
        assert error.state.trace == ()
        assert sum(1 for r in records if r.error) == 1

    async def test_parallel_run_keeps_input_order(self, synth20, offline_runner):
        seen = []

        async def on_result(item, result):
            seen.append(item.item_id)

        sequential = await offline_runner().run_benchmark(synth20)
        parallel = await offline_runner().run_benchmark(synth20, parallelism=5, on_result=on_result)

        assert parallel == sequential
        assert sorted(seen) == sorted(item.item_id for item in synth20)

    async def test_empty_benchmark(self, offline_runner):
        with pytest.raises(EmptyInputError):
            await offline_runner().run_benchmark([])


class TestOutputs:
    async def test_metrics_records_and_plot(self, synth20, offline_runner, tmp_path):
        records = await offline_runner().run_benchmark(synth20[:4])
        summary = summarize_metrics(records, 5, run_config={"seed": 0})

        metrics = json.loads(write_metrics(summary, tmp_path / "m" / "metrics.json").read_text())
        assert {"n", "accuracy", "ece", "mce", "mean_confidence", "overconfidence", "n_bins", "reliability",
                "run_config", "notes"} <= set(metrics)
        assert len(metrics["reliability"]) == 5
        assert metrics["run_config"] == {"seed": 0}

        lines = write_records(records, tmp_path / "records.jsonl").read_text().splitlines()
        assert len(lines) == 4
        first = json.loads(lines[0])
        assert first["item_id"] == "synth-01"
        assert first["provenance"] == "fused"
        assert first["correct"] is True

        png = plot_reliability(summary, tmp_path / "plot" / "reliability.png")
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_summary_requires_records(self):
        with pytest.raises(EmptyInputError):
            summarize_metrics([])
