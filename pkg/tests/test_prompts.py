"""Prompt packs, run configuration and provider wiring."""
import pytest

from src.config import RunConfig, Settings, load_run_config
from src.dependencies import (
    ProviderBundle,
    build_network_providers,
    build_offline_providers,
    get_providers,
    set_providers,
)
from src.errors import PromptError, UsageError
from src.models import EvidenceNote, SourceDoc, SourceRef
from src.prompts import EMPTY_BLOCK, PromptPack, available_versions, format_documents, format_notes
from src.providers import OfflineCompletionProvider


class TestPromptPack:
    def test_default_pack(self, prompts):
        assert prompts.version == "v1"
        assert "v1" in available_versions()
        assert prompts.system

    def test_render_fills_slots(self, prompts):
        text = prompts.render("think", round=2, question="Why?", notes=EMPTY_BLOCK)
        assert text.startswith("### TASK: think\nROUND: 2\n")
        assert "Why?" in text

    def test_missing_slot(self, prompts):
        with pytest.raises(PromptError, match="needs slot"):
            prompts.render("think", round=1, question="Why?")

    def test_unknown_template(self, prompts):
        with pytest.raises(PromptError):
            prompts.render("summarize")

    def test_unknown_version(self):
        with pytest.raises(UsageError, match="unknown prompt pack"):
            PromptPack.load("v9")

    def test_incomplete_pack(self):
        with pytest.raises(PromptError, match="missing templates"):
            PromptPack("draft-only", {"draft": "$notes"})


class TestFormatting:
    def test_notes(self):
        note = EvidenceNote(
            text="Alpha makes widgets.",
            sources=(SourceRef(url="https://a.test"), SourceRef(url="https://b.test")),
        )
        assert format_notes([note]) == "- Alpha makes widgets. (sources: https://a.test, https://b.test)"
        assert format_notes([]) == EMPTY_BLOCK

    def test_documents(self):
        doc = SourceDoc(ref=SourceRef(url="https://a.test", title="A"), body="  Body text.\n")
        assert format_documents([doc]) == "[URL] https://a.test\nTITLE: A\nBody text."
        assert format_documents([]) == EMPTY_BLOCK


class TestRunConfig:
    def test_defaults_without_file(self):
        config = load_run_config(None, Settings(config=None))
        assert config.pipeline.queries_per_section == 2
        assert config.output.report == "report.md"

    def test_role_falls_back_to_default(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(
            "providers:\n"
            "  default: {endpoint: 'http://llm.test/v1', model_name: base}\n"
            "  writer: {endpoint: 'http://llm.test/v1', model_name: big}\n",
            encoding="utf-8",
        )
        config = load_run_config(path, Settings(config=None))
        assert config.provider("planner").model_name == "base"
        assert config.provider("writer").model_name == "big"

    def test_missing_role_without_default(self):
        with pytest.raises(UsageError, match="no provider configured"):
            RunConfig().provider("search")

    @pytest.mark.parametrize(
        "content",
        ["- just\n- a list\n", "pipeline: {reflection_cap: -1}\n", "providers: [unclosed\n", "unknown_key: 1\n"],
    )
    def test_invalid_files(self, tmp_path, content):
        path = tmp_path / "run.yaml"
        path.write_text(content, encoding="utf-8")
        with pytest.raises(UsageError):
            load_run_config(path, Settings(config=None))

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(UsageError, match="cannot read"):
            load_run_config(tmp_path / "absent.yaml", Settings(config=None))


class TestProviderWiring:
    def test_registry(self):
        with pytest.raises(RuntimeError):
            get_providers()
        bundle = build_offline_providers(RunConfig(), Settings(config=None))
        set_providers(bundle)
        assert get_providers() is bundle
        assert isinstance(bundle.planner, OfflineCompletionProvider)
        assert bundle.planner is bundle.writer

    def test_identical_roles_share_a_client(self):
        shared = {"endpoint": "http://llm.test/v1", "model_name": "m"}
        config = RunConfig.model_validate(
            {
                "providers": {
                    "default": shared,
                    "writer": {**shared, "model_name": "other"},
                    "search": {"endpoint": "http://search.test"},
                    "fetch": {"endpoint": ""},
                }
            }
        )
        bundle = build_network_providers(config)
        assert bundle.planner is bundle.researcher is bundle.reflector
        assert bundle.writer is not bundle.planner

    async def test_bundle_closes_each_handle_once(self):
        class Closable:
            def __init__(self):
                self.closes = 0

            async def aclose(self):
                self.closes += 1

        shared, writer = Closable(), Closable()
        offline = build_offline_providers(RunConfig(), Settings(config=None))
        bundle = ProviderBundle(
            planner=shared,
            researcher=shared,
            writer=writer,
            reflector=shared,
            searcher=offline.searcher,
            fetcher=offline.fetcher,
        )
        await bundle.aclose()
        assert (shared.closes, writer.closes) == (1, 1)

    async def test_network_bundle_releases_clients(self):
        config = RunConfig.model_validate(
            {
                "providers": {
                    "default": {"endpoint": "http://llm.test/v1"},
                    "search": {"endpoint": "http://search.test"},
                }
            }
        )
        bundle = build_network_providers(config)
        await bundle.aclose()
        assert bundle.searcher._http_client.is_closed
        assert bundle.fetcher._http_client.is_closed
