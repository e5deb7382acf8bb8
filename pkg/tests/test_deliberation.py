"""The THINK -> SEARCH -> READ loop."""
import json
import random
import re

import httpx
import pytest

from src.deliberation import (
    DeliberationPolicy,
    Deliberator,
    TerminationReason,
    ThinkOutcome,
    init_state,
    parse_think_fields,
    should_terminate,
)
from src.errors import (
    DeliberationAborted,
    EmptyQuestionError,
    MalformedRequestError,
    MalformedResponseError,
    StepOrderError,
    TransportExhaustedError,
)
from src.models import (
    ActionKind,
    Confidence,
    Provenance,
    ReadPayload,
    SearchPayload,
    SourceRef,
    ThinkPayload,
)
from src.providers import (
    CompletionRequest,
    FixtureFetcher,
    FixtureSearchProvider,
    HttpDocumentFetcher,
    ProviderConfig,
    ResponderCompletionProvider,
    RetryPolicy,
    ScriptedCompletionProvider,
)

from .conftest import CORPUS_DOCUMENTS, CORPUS_QUERIES

ALPHA = "https://example.test/alpha"
BETA = "https://example.test/beta"
TRACE_GRAMMAR = re.compile(r"T(SRT)*")


def _kinds(state) -> str:
    return "".join(record.kind.value[0] for record in state.trace)


class TestHelpers:
    def test_init_state(self):
        state = init_state("  Who?  ")
        assert state.question == "Who?"
        assert state.trace == ()
        assert state.confidence == Confidence.zero()

    def test_init_state_rejects_blank(self):
        with pytest.raises(EmptyQuestionError):
            init_state(" ")

    def test_parse_think_fields_accepts_pipes(self):
        fields = parse_think_fields("ANSWER: Oslo | FINAL: no | NEXT_QUERY: beta hq | CONFIDENCE: 4")
        assert fields == {"ANSWER": "Oslo", "FINAL": "no", "NEXT_QUERY": "beta hq", "CONFIDENCE": "4"}

    def test_parse_think_fields_keeps_pipes_inside_values(self):
        fields = parse_think_fields("ANSWER: A | B | FINAL: yes")
        assert fields == {"ANSWER": "A | B", "FINAL": "yes"}

        fields = parse_think_fields("ANSWER: x | y | z\nNEXT_QUERY: p | q | confidence: 3")
        assert fields["ANSWER"] == "x | y | z"
        assert fields["NEXT_QUERY"] == "p | q"
        assert fields["CONFIDENCE"] == "3"

    def test_parse_think_fields_first_occurrence_wins(self):
        assert parse_think_fields("answer: one\nANSWER: two")["ANSWER"] == "one"


class TestShouldTerminate:
    def _outcome(self, final, norm):
        return ThinkOutcome(
            tentative_answer="a",
            is_final=final,
            next_query=None if final else "q",
            confidence=Confidence.from_norm(norm, Provenance.FUSED),
        )

    def test_final_flag_takes_precedence(self):
        policy = DeliberationPolicy(max_rounds=1)
        state = init_state("q")
        assert should_terminate(state, self._outcome(True, 0.99), policy) == TerminationReason.FINAL_FLAG

    def test_confidence_threshold_inclusive(self):
        policy = DeliberationPolicy(confidence_stop=0.75)
        state = init_state("q")
        assert should_terminate(state, self._outcome(False, 0.75), policy) == TerminationReason.CONFIDENCE_STOP
        assert should_terminate(state, self._outcome(False, 0.7), policy) is None


class TestSteps:
    async def test_step_order_enforced(self, make_deliberator, think_reply):
        deliberator = make_deliberator([think_reply("a", final=False, next_query="alpha history")])
        state = init_state("q")
        with pytest.raises(StepOrderError):
            await deliberator.search_step(state, "alpha history")
        with pytest.raises(StepOrderError):
            await deliberator.read_step(state, [])

        _, state = await deliberator.think_step(state)
        with pytest.raises(StepOrderError):
            await deliberator.think_step(state)
        with pytest.raises(StepOrderError):
            await deliberator.read_step(state, [])

    async def test_search_after_final_think_rejected(self, make_deliberator, think_reply):
        deliberator = make_deliberator([think_reply("done")])
        _, state = await deliberator.think_step(init_state("q"))
        with pytest.raises(StepOrderError):
            await deliberator.search_step(state, "anything")

    async def test_think_records_fused_confidence(self, make_deliberator, think_reply):
        deliberator = make_deliberator([think_reply("a", final=False, confidence=6, next_query="alpha history")])
        outcome, state = await deliberator.think_step(init_state("q"))

        payload = state.trace[0].payload
        assert isinstance(payload, ThinkPayload)
        assert payload.verbal_confidence == Confidence.verbalized(6)
        assert payload.consistency == 1.0
        assert outcome.confidence.norm == pytest.approx(0.8)
        assert state.confidence == outcome.confidence
        assert state.rounds_used == 1

    async def test_consistency_over_samples(self, searcher, fetcher, prompts, think_reply):
        llm = ScriptedCompletionProvider(
            [think_reply("Paris", confidence=10), think_reply(" paris"), think_reply("Lyon")]
        )
        policy = DeliberationPolicy(consistency_samples=3)
        outcome, state = await Deliberator(llm, searcher, fetcher, policy, prompts).think_step(init_state("q"))

        assert llm.requests[0].sample_count == 3
        assert state.trace[0].payload.consistency == pytest.approx(2 / 3)
        assert outcome.confidence.norm == pytest.approx(0.5 * 1.0 + 0.5 * 2 / 3)

    async def test_missing_marker_and_query_degrade(self, make_deliberator, think_reply):
        deliberator = make_deliberator([think_reply("a", final=False, confidence=None)])
        outcome, state = await deliberator.think_step(init_state("the question"))

        warnings = state.trace[0].warnings
        assert any("fallback score 5" in w for w in warnings)
        assert any("next query missing" in w for w in warnings)
        assert outcome.next_query == "the question"
        assert state.trace[0].payload.verbal_confidence.raw == 5.0

    async def test_search_filters_already_read_urls(self, make_deliberator, think_reply, extract_reply):
        deliberator = make_deliberator(
            [
                think_reply("a", final=False, confidence=1, next_query="alpha history"),
                extract_reply([{"text": "Alpha was founded in 1990.", "sources": [ALPHA]}]),
                think_reply("a", final=False, confidence=1, next_query="beta facts"),
            ]
        )
        _, state = await deliberator.think_step(init_state("q"))
        refs, state = await deliberator.search_step(state, "alpha history")
        _, state = await deliberator.read_step(state, refs)
        _, state = await deliberator.think_step(state)
        refs, state = await deliberator.search_step(state, "beta facts")

        assert refs == []
        payload = state.trace[-1].payload
        assert isinstance(payload, SearchPayload)
        assert set(payload.filtered) == {ALPHA, BETA}
        assert state.trace[-1].round == 2

    async def test_search_failure_degrades_to_empty(self, make_deliberator, think_reply, searcher, mocker):
        mocker.patch.object(searcher, "search", side_effect=TransportExhaustedError("search", 3))
        deliberator = make_deliberator(
            [
                think_reply("a", final=False, confidence=1, next_query="alpha history"),
                think_reply("best guess", confidence=2),
            ]
        )
        result = await deliberator.run_deliberation("q")

        assert _kinds(result.state) == "TSRT"
        assert result.state.trace[1].payload.results == ()
        assert any("search failed" in w for w in result.state.trace[1].warnings)
        # READ with nothing to read makes no completion call
        assert len(deliberator.llm.requests) == 2

    async def test_rejected_search_request_degrades_to_empty(self, make_deliberator, think_reply, searcher, mocker):
        mocker.patch.object(searcher, "search", side_effect=MalformedRequestError("HTTP 400 from search"))
        deliberator = make_deliberator(
            [
                think_reply("a", final=False, confidence=1, next_query="alpha history"),
                think_reply("best guess", confidence=2),
            ]
        )
        result = await deliberator.run_deliberation("q")

        assert _kinds(result.state) == "TSRT"
        assert result.state.trace[1].payload.results == ()
        assert result.state.trace[1].warnings == ("search failed: HTTP 400 from search",)
        assert result.answer == "best guess"

    async def test_unusable_url_skipped_during_run(self, searcher, policy, prompts, think_reply, extract_reply, mocker):
        bad_url = "https://example.com/\x00x"
        mocker.patch.object(
            searcher,
            "search",
            return_value=[SourceRef(url=bad_url, rank=1), SourceRef(url=ALPHA, rank=2)],
        )
        served = []

        def serve(request: httpx.Request) -> httpx.Response:
            served.append(str(request.url))
            return httpx.Response(200, text="Alpha makes widgets.")

        fetcher = HttpDocumentFetcher(
            ProviderConfig(retry=RetryPolicy(max_attempts=2, backoff_base=0.0, backoff_max=0.0)),
            httpx.AsyncClient(transport=httpx.MockTransport(serve)),
        )
        llm = ScriptedCompletionProvider(
            [
                think_reply("a", final=False, confidence=1, next_query="alpha"),
                extract_reply([{"text": "Alpha makes widgets.", "sources": [ALPHA]}]),
                think_reply("widgets", confidence=9),
            ],
            cycle=False,
        )
        result = await Deliberator(llm, searcher, fetcher, policy, prompts).run_deliberation("q")

        read = result.state.trace[2].payload
        assert read.skipped == (bad_url,)
        assert [r.url for r in read.ingested] == [ALPHA]
        assert any("unusable url" in w for w in read.warnings)
        assert served == [ALPHA]
        assert result.answer == "widgets"

    async def test_dead_url_skipped_without_abort(self, make_deliberator, think_reply, extract_reply):
        deliberator = make_deliberator(
            [
                think_reply("a", final=False, confidence=1, next_query="gamma"),
                extract_reply([{"text": "Alpha makes widgets.", "sources": [ALPHA]}], confidence=6),
                think_reply("widgets", confidence=9),
            ]
        )
        result = await deliberator.run_deliberation("q")

        read = result.state.trace[2].payload
        assert isinstance(read, ReadPayload)
        assert read.skipped == ("https://example.test/gamma",)
        assert [r.url for r in read.ingested] == [ALPHA]
        assert read.confidence == Confidence.verbalized(6)
        assert result.answer == "widgets"

    async def test_unread_citations_dropped(self, make_deliberator, think_reply, extract_reply):
        deliberator = make_deliberator(
            [
                think_reply("a", final=False, confidence=1, next_query="alpha history"),
                extract_reply(
                    [
                        {"text": "Cited twice.", "sources": [ALPHA, "https://elsewhere.test"]},
                        {"text": "Only elsewhere.", "sources": ["https://elsewhere.test"]},
                    ]
                ),
            ]
        )
        _, state = await deliberator.think_step(init_state("q"))
        refs, state = await deliberator.search_step(state, "alpha history")
        outcome, state = await deliberator.read_step(state, refs, section_title="Alpha")

        assert [n.text for n in outcome.notes] == ["Cited twice."]
        assert [r.url for r in outcome.notes[0].sources] == [ALPHA]
        assert outcome.notes[0].section_title == "Alpha"
        assert len(state.trace[-1].warnings) == 3
        assert state.notes == outcome.notes

    async def test_unparseable_extraction_keeps_going(self, make_deliberator, think_reply):
        deliberator = make_deliberator(
            [
                think_reply("a", final=False, confidence=1, next_query="alpha history"),
                "not json at all",
            ]
        )
        _, state = await deliberator.think_step(init_state("q"))
        refs, state = await deliberator.search_step(state, "alpha history")
        outcome, state = await deliberator.read_step(state, refs)

        assert outcome.notes == ()
        assert len(outcome.ingested) == 2
        assert outcome.confidence == state.confidence

    async def test_documents_stamped_with_read_timestamp(self, make_deliberator, think_reply, extract_reply, fetcher, mocker):
        spy = mocker.spy(fetcher, "fetch")
        deliberator = make_deliberator(
            [
                think_reply("a", final=False, confidence=1, next_query="alpha history"),
                extract_reply([]),
            ]
        )
        _, state = await deliberator.think_step(init_state("q"))
        refs, state = await deliberator.search_step(state, "alpha history")
        _, state = await deliberator.read_step(state, refs)

        assert spy.call_count == 2
        assert state.trace[-1].timestamp == 3
        prompt = deliberator.llm.requests[-1].prompt
        assert f"[URL] {ALPHA}" in prompt and f"[URL] {BETA}" in prompt


class TestRunDeliberation:
    async def test_minimal_run_is_one_think(self, make_deliberator, think_reply):
        result = await make_deliberator([think_reply("Oslo", confidence=9)]).run_deliberation("Where?")
        assert _kinds(result.state) == "T"
        assert result.terminated_by == TerminationReason.FINAL_FLAG
        assert result.answer == "Oslo"
        assert result.confidence.provenance == Provenance.FUSED

    async def test_confidence_stop_without_final_flag(self, make_deliberator, think_reply):
        result = await make_deliberator(
            [think_reply("Oslo", final=False, confidence=9, next_query="x")]
        ).run_deliberation("Where?")
        assert result.terminated_by == TerminationReason.CONFIDENCE_STOP
        assert _kinds(result.state) == "T"

    async def test_round_cap(self, make_deliberator, think_reply):
        reply = think_reply("unsure", final=False, confidence=2, next_query="nothing indexed")
        result = await make_deliberator([reply, reply], max_rounds=2).run_deliberation("q")
        assert result.terminated_by == TerminationReason.ROUND_CAP
        assert _kinds(result.state) == "TSRT"
        assert result.state.rounds_used == 2

    async def test_search_then_answer(self, make_deliberator, think_reply, extract_reply):
        result = await make_deliberator(
            [
                think_reply("unknown", final=False, confidence=3, next_query="alpha history"),
                extract_reply([{"text": "Alpha was founded in 1990.", "sources": [ALPHA]}]),
                think_reply("1990", confidence=9),
            ]
        ).run_deliberation("When was Alpha founded?")

        assert _kinds(result.state) == "TSRT"
        assert [r.timestamp for r in result.state.trace] == [1, 2, 3, 4]
        assert [r.round for r in result.state.trace] == [1, 1, 1, 2]
        assert result.answer == "1990"
        assert result.confidence.norm == pytest.approx(0.95)
        assert result.state.notes[0].text == "Alpha was founded in 1990."

    async def test_provider_failure_aborts_with_partial_state(self, make_deliberator, think_reply):
        deliberator = make_deliberator(
            [
                think_reply("a", final=False, confidence=1, next_query="nothing indexed"),
                MalformedResponseError("backend down"),
            ]
        )
        with pytest.raises(DeliberationAborted) as info:
            await deliberator.run_deliberation("q")
        assert _kinds(info.value.state) == "TSR"
        assert isinstance(info.value.cause, MalformedResponseError)


def _fuzz_responder(rng: random.Random):
    urls = list(CORPUS_DOCUMENTS) + ["https://elsewhere.test"]
    queries = list(CORPUS_QUERIES) + ["unindexed query"]

    def respond(request: CompletionRequest) -> str:
        if request.prompt.startswith("### TASK: think"):
            fields = [f"ANSWER: {rng.choice(['a', 'b', 'c'])}"]
            fields.append(f"FINAL: {rng.choice(['yes', 'no', 'no', 'no'])}")
            if rng.random() < 0.8:
                fields.append(f"NEXT_QUERY: {rng.choice(queries)}")
            if rng.random() < 0.9:
                fields.append(f"CONFIDENCE: {rng.uniform(-1, 11):.1f}")
            return rng.choice(["\n", " | "]).join(fields)
        if rng.random() < 0.15:
            return "garbled"
        notes = [
            {"text": f"fact {i}", "sources": rng.sample(urls, rng.randint(0, 2))}
            for i in range(rng.randint(0, 3))
        ]
        return json.dumps({"notes": notes, "confidence": rng.randint(0, 10)})

    return respond


async def test_fuzzed_runs_halt_and_follow_grammar(corpus, prompts):
    rng = random.Random(20240601)
    for scenario in range(500):
        policy = DeliberationPolicy(
            max_rounds=rng.randint(1, 6),
            confidence_stop=rng.choice([0.5, 0.8, 0.95, 1.0]),
            search_k=rng.randint(0, 3),
            consistency_samples=rng.randint(1, 3),
            fusion_weight_w=rng.random(),
        )
        deliberator = Deliberator(
            ResponderCompletionProvider(_fuzz_responder(rng)),
            FixtureSearchProvider(corpus),
            FixtureFetcher(corpus),
            policy,
            prompts,
        )
        result = await deliberator.run_deliberation(f"question {scenario}")

        kinds = _kinds(result.state)
        assert TRACE_GRAMMAR.fullmatch(kinds), (scenario, kinds)
        assert 1 <= result.state.rounds_used <= policy.max_rounds
        assert kinds.count("T") == result.state.rounds_used
        last = result.state.trace[-1]
        assert last.kind == ActionKind.THINK
        assert result.confidence == last.confidence
        if result.terminated_by == TerminationReason.ROUND_CAP:
            assert result.state.rounds_used == policy.max_rounds
        read_urls = set(result.state.read_urls)
        for note in result.state.notes:
            assert {ref.url for ref in note.sources} <= read_urls
