"""Runs deliberations over benchmark items and grades the answers."""
import asyncio
from typing import Awaitable, Callable, List, Optional, Sequence

from src.calibration import grade_answer
from src.deliberation import DeliberationResult, Deliberator
from src.errors import EmptyInputError
from src.models import Confidence, PredictionRecord
from src.utils.logging import LoggerMixin

from .dataset import BenchmarkItem

ResultCallback = Callable[[BenchmarkItem, DeliberationResult], Awaitable[None]]
FailureCallback = Callable[[BenchmarkItem, Exception], Awaitable[None]]


class BenchmarkRunner(LoggerMixin):
    def __init__(self, deliberator: Deliberator) -> None:
        super().__init__()
        self.deliberator = deliberator

    async def run_item(
        self,
        item: BenchmarkItem,
        on_result: Optional[ResultCallback] = None,
        on_failure: Optional[FailureCallback] = None,
    ) -> PredictionRecord:
        """Deliberate on one item and grade it; failures score as zero-confidence misses."""
        try:
            result = await self.deliberator.run_deliberation(item.prompt)
            if on_result is not None:
                await on_result(item, result)
            correct = grade_answer(result.answer, item.gold, item.grading_mode)
            return PredictionRecord(
                item_id=item.item_id,
                answer=result.answer,
                confidence=result.confidence,
                correct=correct,
            )

        except Exception as e:
            self.log_warning("Benchmark item failed", item_id=item.item_id, error=str(e))
            if on_failure is not None:
                await on_failure(item, e)
            return PredictionRecord(
                item_id=item.item_id,
                answer="",
                confidence=Confidence.zero(),
                correct=False,
                error=f"{type(e).__name__}: {e}",
            )

    async def run_benchmark(
        self,
        items: Sequence[BenchmarkItem],
        parallelism: int = 1,
        on_result: Optional[ResultCallback] = None,
        on_failure: Optional[FailureCallback] = None,
    ) -> List[PredictionRecord]:
        """Run every item with at most ``parallelism`` in flight.

        Returns one record per item, in input order.
        """
        if not items:
            raise EmptyInputError("benchmark has no items")
        semaphore = asyncio.Semaphore(max(1, parallelism))

        async def bounded(item: BenchmarkItem) -> PredictionRecord:
            async with semaphore:
                return await self.run_item(item, on_result, on_failure)

        records = list(await asyncio.gather(*(bounded(item) for item in items)))
        failures = sum(1 for r in records if r.error)
        self.log_info(
            "Benchmark finished",
            items=len(records),
            correct=sum(r.correct for r in records),
            failures=failures,
            parallelism=parallelism,
        )
        return records
