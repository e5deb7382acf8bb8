"""Structural checks for plans and deliberation traces.

Violations are returned as values; nothing here raises.
"""
from collections import Counter
from typing import Iterable, List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict

from .domain import ActionKind, ActionRecord, ReportPlan, SectionKind


class Violation(BaseModel):
    model_config = ConfigDict(frozen=True)

    code: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}" if self.detail else self.code


class ValidationVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def codes(self) -> List[str]:
        return [v.code for v in self.violations]

    @classmethod
    def of(cls, violations: Iterable[Violation]) -> "ValidationVerdict":
        return cls(violations=tuple(violations))


def validate_plan(plan: ReportPlan) -> ValidationVerdict:
    violations: List[Violation] = []
    sections = plan.sections
    bodies = [s for s in sections if s.kind == SectionKind.BODY]
    intros = [s for s in sections if s.kind == SectionKind.INTRODUCTION]
    conclusions = [s for s in sections if s.kind == SectionKind.CONCLUSION]

    if not bodies:
        violations.append(Violation(code="no body sections"))
    if not intros:
        violations.append(Violation(code="missing introduction"))
    elif len(intros) > 1:
        violations.append(Violation(code="multiple introduction sections", detail=str(len(intros))))
    if not conclusions:
        violations.append(Violation(code="missing conclusion"))
    elif len(conclusions) > 1:
        violations.append(Violation(code="multiple conclusion sections", detail=str(len(conclusions))))

    titles = Counter(" ".join(s.title.casefold().split()) for s in sections)
    for section in sections:
        key = " ".join(section.title.casefold().split())
        if titles[key] > 1:
            violations.append(Violation(code="duplicate title", detail=section.title))
            titles[key] = 0

    indices = [s.index for s in bodies]
    if indices != list(range(1, len(bodies) + 1)):
        violations.append(
            Violation(code="body indices not contiguous", detail=", ".join(map(str, indices)))
        )

    if len(intros) == 1 and sections[0].kind != SectionKind.INTRODUCTION:
        violations.append(Violation(code="introduction must come first"))
    if len(conclusions) == 1 and sections[-1].kind != SectionKind.CONCLUSION:
        violations.append(Violation(code="conclusion must come last"))

    return ValidationVerdict.of(violations)


# Expected successor of each action kind in THINK (SEARCH READ THINK)*
_NEXT = {
    ActionKind.THINK: ActionKind.SEARCH,
    ActionKind.SEARCH: ActionKind.READ,
    ActionKind.READ: ActionKind.THINK,
}


def validate_trace(trace: Sequence[ActionRecord]) -> ValidationVerdict:
    if not trace:
        return ValidationVerdict.of([Violation(code="trace is empty")])

    violations: List[Violation] = []
    if trace[0].kind != ActionKind.THINK:
        violations.append(Violation(code="trace must begin with THINK", detail=trace[0].kind.value))

    for position in range(1, len(trace)):
        previous, current = trace[position - 1].kind, trace[position].kind
        expected = _NEXT[previous]
        if current != expected:
            violations.append(
                Violation(
                    code="unexpected action",
                    detail=f"record {position}: {current.value} after {previous.value}, expected {expected.value}",
                )
            )

    if trace[-1].kind != ActionKind.THINK:
        violations.append(Violation(code="trace must end on THINK", detail=trace[-1].kind.value))

    return ValidationVerdict.of(violations)
