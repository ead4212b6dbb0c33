"""Question-answer consistency evaluation.

Yes/no questions with an answer key are generated from the summary, then
answered twice: once with the summary as context and once with the source
article. Comparing the two answer sets gives consistency and hallucination;
comparing the summary-side answers with the key audits the evaluator itself
(the meta score, 1.0 for a perfect evaluator).
"""

from __future__ import annotations

import enum
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import prompts
from .errors import (AnsweringFailed, ContentFiltered, DuplicateIndex, GenerationFailed,
                     LengthMismatch, NonContiguousIndices, ParseError)
from .judge import CallFailed, Judge

OK = "ok"
GENERATION_FAILED = "generation_failed"
ANSWERING_FAILED = "answering_failed"
CONTENT_FILTERED = "content_filtered"

MIN_QUESTIONS = 3


class Answer(str, enum.Enum):
    YES = "Yes"
    NO = "No"
    UNKNOWN = "Unknown"

    @classmethod
    def parse(cls, token: str) -> "Answer":
        return cls(token.strip().capitalize())


class Scenario(str, enum.Enum):
    CONSISTENT_STRONG = "consistent_strong"
    CONSISTENT_WEAK = "consistent_weak"
    INCONSISTENT = "inconsistent"
    HALLUCINATION = "hallucination"
    NON_INFORMATIVE = "non_informative"


def classify(source: Answer, summary: Answer) -> Scenario:
    if source == summary:
        return Scenario.CONSISTENT_WEAK if source == Answer.UNKNOWN else Scenario.CONSISTENT_STRONG
    if source == Answer.UNKNOWN:
        return Scenario.HALLUCINATION
    if summary == Answer.UNKNOWN:
        return Scenario.NON_INFORMATIVE
    return Scenario.INCONSISTENT


@dataclass(frozen=True)
class GeneratedQuestion:
    index: int
    text: str
    key: Answer


@dataclass(frozen=True)
class QaScores:
    consistency: float
    hallucination: float
    meta: float


@dataclass
class QaEvaluation:
    article_id: str
    system_id: str
    status: str = OK
    questions: list[GeneratedQuestion] = field(default_factory=list)
    summary_answers: list[Answer] = field(default_factory=list)
    source_answers: list[Answer] = field(default_factory=list)
    consistency: Optional[float] = None
    hallucination: Optional[float] = None
    meta: Optional[float] = None
    detail: str = ""
    transcript: list = field(default_factory=list)

    def scores(self) -> dict:
        """Metric values that enter aggregates; content-filtered pairs give none."""
        if self.status == CONTENT_FILTERED:
            return {}
        out = {}
        for name, val in (("qa_consistency", self.consistency),
                          ("qa_hallucination", self.hallucination),
                          ("qa_meta", self.meta)):
            if val is not None:
                out[name] = val
        return out


# --- transcript parsing ---------------------------------------------------

_QUESTION_RE = re.compile(r"^\s*(\d+)\.\s+(.+?)\s+\[(yes|no|unknown)\]\s*$", re.IGNORECASE)
_NUMBERED_RE = re.compile(r"^\s*\d+\s*[.)]\s*\S")


def check_indices(indices: Sequence[int]) -> None:
    dup = [i for i, c in Counter(indices).items() if c > 1]
    if dup:
        raise DuplicateIndex(f"index {min(dup)} appears more than once")
    if sorted(indices) != list(range(1, len(indices) + 1)):
        raise NonContiguousIndices(f"indices {sorted(indices)} are not 1..{len(indices)}")


def parse_question_block(raw: str) -> list[GeneratedQuestion]:
    """Extract ``N. question [Yes|No|Unknown]`` lines; other lines are ignored."""
    found = []
    for line in raw.splitlines():
        m = _QUESTION_RE.match(line)
        if m:
            found.append(GeneratedQuestion(int(m[1]), m[2], Answer.parse(m[3])))
    check_indices([q.index for q in found])
    return sorted(found, key=lambda q: q.index)


def parse_label_lines(raw: str, labels: dict[str, object], expected: int, fail=ParseError):
    """Parse one label per line, either ``N. LABEL`` or bare ``LABEL`` in order.

    Labels match case-insensitively with an optional trailing period. A
    numbered line carrying anything else is an error, as is mixing numbered
    and bare lines. Other unnumbered lines are ignored. ``fail`` is raised
    with the labels recovered so far as its second argument.
    """
    alternatives = "|".join(re.escape(k) for k in labels)
    line_re = re.compile(rf"^\s*(?:(\d+)\s*[.):]\s*)?({alternatives})\s*\.?\s*$", re.IGNORECASE)
    numbered: list[tuple[int, object]] = []
    bare: list[object] = []
    for line in raw.splitlines():
        m = line_re.match(line)
        if m:
            value = labels[m[2].lower()]
            if m[1] is not None:
                numbered.append((int(m[1]), value))
            else:
                bare.append(value)
        elif _NUMBERED_RE.match(line):
            partial = [v for _, v in sorted(numbered, key=lambda p: p[0])] or bare
            raise fail(f"unparseable line {line.strip()!r}", partial)
    if numbered and bare:
        raise fail("mixed numbered and bare lines", [])
    if numbered:
        try:
            check_indices([i for i, _ in numbered])
        except ParseError as exc:
            raise fail(str(exc), []) from exc
        values = [v for _, v in sorted(numbered, key=lambda p: p[0])]
    else:
        values = bare
    if len(values) != expected:
        raise fail(f"expected {expected} answers, got {len(values)}", values)
    return values


_ANSWER_LABELS = {"yes": Answer.YES, "no": Answer.NO, "unknown": Answer.UNKNOWN}


def parse_answers(raw: str, expected: int) -> list[Answer]:
    return parse_label_lines(raw, _ANSWER_LABELS, expected, AnsweringFailed)


# --- LLM steps ------------------------------------------------------------

def generate_questions(summary: str, judge: Judge) -> list[GeneratedQuestion]:
    """Ask for 3-4 keyed questions about ``summary``.

    Raises:
        GenerationFailed: fewer than three questions, a numbered line whose key
            is missing or invalid, or a bad index sequence.
        ContentFiltered: the endpoint refused the prompt.
    """
    if not summary.strip():
        raise GenerationFailed("empty summary")
    try:
        raw = judge.ask("question_generation",
                        prompts.fill(prompts.QUESTION_GENERATION, text=summary))
    except CallFailed as exc:
        raise GenerationFailed(str(exc)) from exc
    try:
        questions = parse_question_block(raw)
    except ParseError as exc:
        raise GenerationFailed(str(exc)) from exc
    keyless = [ln for ln in raw.splitlines() if _NUMBERED_RE.match(ln) and not _QUESTION_RE.match(ln)]
    if keyless:
        raise GenerationFailed(f"question without a valid key: {keyless[0].strip()!r}")
    if len(questions) < MIN_QUESTIONS:
        raise GenerationFailed(f"only {len(questions)} questions parsed")
    return questions


def answer_questions(context: str, questions: Sequence[GeneratedQuestion], judge: Judge,
                     step: str = "question_answering") -> list[Answer]:
    """Answer the (key-less) questions against ``context``.

    Raises:
        AnsweringFailed: answer count differs from question count or a line
            cannot be parsed; ``exc.answers`` holds what was recovered.
        ContentFiltered: the endpoint refused the prompt.
    """
    if not questions:
        raise AnsweringFailed("no questions to answer")
    prompt = prompts.fill(prompts.QUESTION_ANSWERING, text=context,
                          questions=prompts.numbered(q.text for q in questions))
    try:
        raw = judge.ask(step, prompt)
    except CallFailed as exc:
        raise AnsweringFailed(str(exc)) from exc
    return parse_answers(raw, len(questions))


# --- scoring --------------------------------------------------------------

def meta_score(questions: Sequence[GeneratedQuestion], summary_answers: Sequence[Answer], *,
               partial: bool = False, key_malformed: bool = False) -> float:
    """Fraction of summary-side answers that agree with the answer key.

    Zero when some questions went unanswered or the key block was malformed.
    """
    if partial or key_malformed:
        return 0.0
    if len(questions) != len(summary_answers):
        raise LengthMismatch(f"{len(questions)} questions, {len(summary_answers)} answers")
    return sum(a == q.key for q, a in zip(questions, summary_answers)) / len(questions)


def score_qa(questions: Sequence[GeneratedQuestion], summary_answers: Sequence[Answer],
             source_answers: Sequence[Answer]) -> QaScores:
    n = len(questions)
    if n == 0 or not (n == len(summary_answers) == len(source_answers)):
        raise LengthMismatch(
            f"need equal nonzero lengths, got {n}, {len(summary_answers)}, {len(source_answers)}"
        )
    same = sum(s == t for s, t in zip(summary_answers, source_answers))
    halluc = sum(t == Answer.UNKNOWN and s != Answer.UNKNOWN
                 for s, t in zip(summary_answers, source_answers))
    return QaScores(same / n, halluc / n, meta_score(questions, summary_answers))


def scenario_fractions(summary_answers, source_answers) -> dict[Scenario, float]:
    n = len(summary_answers)
    counts = Counter(classify(t, s) for s, t in zip(summary_answers, source_answers))
    return {sc: counts.get(sc, 0) / n for sc in Scenario}


# --- pipeline -------------------------------------------------------------

def evaluate_qa(article_id: str, system_id: str, summary: str, source: str,
                judge: Judge) -> QaEvaluation:
    """Run generation and both answering passes; never raises on evaluator failure.

    Content-filtered pairs carry no scores. A summary-side answer transcript
    that does not cover every question forces meta to zero. A failed
    source-side pass keeps the (valid) meta score but no consistency.
    """
    judge = judge.fork()
    ev = QaEvaluation(article_id, system_id, transcript=judge.transcript)
    try:
        ev.questions = generate_questions(summary, judge)
    except ContentFiltered as exc:
        ev.status, ev.detail = CONTENT_FILTERED, str(exc)
        return ev
    except GenerationFailed as exc:
        ev.status, ev.detail = GENERATION_FAILED, str(exc)
        return ev

    try:
        ev.summary_answers = answer_questions(summary, ev.questions, judge, "answer_from_summary")
    except ContentFiltered as exc:
        ev.status, ev.detail = CONTENT_FILTERED, str(exc)
        return ev
    except AnsweringFailed as exc:
        ev.status, ev.detail = ANSWERING_FAILED, f"summary side: {exc}"
        ev.summary_answers = exc.answers
        if not isinstance(exc.__cause__, CallFailed):
            ev.meta = meta_score(ev.questions, exc.answers, partial=True)
        return ev
    ev.meta = meta_score(ev.questions, ev.summary_answers)

    try:
        ev.source_answers = answer_questions(source, ev.questions, judge, "answer_from_source")
    except ContentFiltered as exc:
        ev.status, ev.detail, ev.meta = CONTENT_FILTERED, str(exc), None
        return ev
    except AnsweringFailed as exc:
        ev.status, ev.detail = ANSWERING_FAILED, f"source side: {exc}"
        ev.source_answers = exc.answers
        return ev

    scores = score_qa(ev.questions, ev.summary_answers, ev.source_answers)
    ev.consistency, ev.hallucination, ev.meta = scores.consistency, scores.hallucination, scores.meta
    return ev
