"""Fact-checking consistency evaluation.

Facts are extracted from the summary as a numbered list, then checked in one
batched call against the source article (consistency) and in another against
the summary itself (meta score: a perfect evaluator re-verifies every fact).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import prompts
from .errors import CheckingFailed, ContentFiltered, ExtractionFailed, LengthMismatch, ParseError
from .judge import CallFailed, Judge
from .qa_eval import check_indices, parse_label_lines

OK = "ok"
EXTRACTION_FAILED = "extraction_failed"
CHECKING_FAILED = "checking_failed"
CONTENT_FILTERED = "content_filtered"

_FACT_RE = re.compile(r"^\s*(\d+)\.\s+(\S.*?)\s*$")
_VERDICTS = {"true": True, "false": False}


@dataclass
class FactEvaluation:
    article_id: str
    system_id: str
    status: str = OK
    facts: list[str] = field(default_factory=list)
    article_verdicts: list[bool] = field(default_factory=list)
    summary_verdicts: list[bool] = field(default_factory=list)
    consistency: Optional[float] = None
    meta: Optional[float] = None
    detail: str = ""
    transcript: list = field(default_factory=list)

    def scores(self) -> dict:
        if self.status == CONTENT_FILTERED:
            return {}
        out = {}
        if self.consistency is not None:
            out["fact_consistency"] = self.consistency
        if self.meta is not None:
            out["fact_meta"] = self.meta
        return out


def parse_fact_list(raw: str) -> list[str]:
    found = [(int(m[1]), m[2]) for m in map(_FACT_RE.match, raw.splitlines()) if m]
    if not found:
        raise ExtractionFailed("no numbered facts in response")
    try:
        check_indices([i for i, _ in found])
    except ParseError as exc:
        raise ExtractionFailed(str(exc)) from exc
    return [text for _, text in sorted(found)]


def parse_verdicts(raw: str, expected: int) -> list[bool]:
    return parse_label_lines(raw, _VERDICTS, expected, CheckingFailed)


def extract_facts(summary: str, judge: Judge) -> list[str]:
    if not summary.strip():
        raise ExtractionFailed("empty summary")
    try:
        raw = judge.ask("fact_extraction", prompts.fill(prompts.FACT_EXTRACTION, text=summary))
    except CallFailed as exc:
        raise ExtractionFailed(str(exc)) from exc
    return parse_fact_list(raw)


def check_facts(context: str, facts: Sequence[str], judge: Judge,
                step: str = "fact_checking") -> list[bool]:
    if not facts:
        raise CheckingFailed("no facts to check")
    prompt = prompts.fill(prompts.FACT_CHECKING, text=context, facts=prompts.numbered(facts))
    try:
        raw = judge.ask(step, prompt)
    except CallFailed as exc:
        raise CheckingFailed(str(exc)) from exc
    return parse_verdicts(raw, len(facts))


def score_facts(article_verdicts: Sequence[bool], summary_verdicts: Sequence[bool]):
    """Return ``(consistency, meta)``: the fraction of True verdicts on each side."""
    n = len(article_verdicts)
    if n == 0 or n != len(summary_verdicts):
        raise LengthMismatch(f"need equal nonzero lengths, got {n} and {len(summary_verdicts)}")
    return sum(map(bool, article_verdicts)) / n, sum(map(bool, summary_verdicts)) / n


def evaluate_facts(article_id: str, system_id: str, summary: str, source: str,
                   judge: Judge) -> FactEvaluation:
    """Extract, check against the article, check against the summary.

    Each score is kept when its own check succeeded. Content filtering at any
    step drops the pair from aggregates.
    """
    judge = judge.fork()
    ev = FactEvaluation(article_id, system_id, transcript=judge.transcript)
    try:
        ev.facts = extract_facts(summary, judge)
    except ContentFiltered as exc:
        ev.status, ev.detail = CONTENT_FILTERED, str(exc)
        return ev
    except ExtractionFailed as exc:
        ev.status, ev.detail = EXTRACTION_FAILED, str(exc)
        return ev

    n = len(ev.facts)
    failures = []
    for attr, context, step in (("article_verdicts", source, "check_against_article"),
                                ("summary_verdicts", summary, "check_against_summary")):
        try:
            setattr(ev, attr, check_facts(context, ev.facts, judge, step))
        except ContentFiltered as exc:
            ev.status, ev.detail = CONTENT_FILTERED, str(exc)
            ev.consistency = ev.meta = None
            return ev
        except CheckingFailed as exc:
            failures.append(f"{step}: {exc}")
            continue
        if attr == "article_verdicts":
            ev.consistency = sum(ev.article_verdicts) / n
        else:
            ev.meta = sum(ev.summary_verdicts) / n
    if failures:
        ev.status, ev.detail = CHECKING_FAILED, "; ".join(failures)
    return ev
