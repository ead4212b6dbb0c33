"""Abstractive summaries through the gateway, or imported from JSONL.

Summary files hold one object per line:
``{"article_id", "system_id", "status", "text", "word_count"}``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .corpus import Article, read_jsonl, word_count
from .errors import InvalidArgument, MalformedRecord, UnknownArticle
from .gateway import ContentFiltered, Gateway, Text
from .prompts import summary_prompt

log = logging.getLogger(__name__)

OK = "ok"
CONTENT_FILTERED = "content_filtered"
GENERATION_FAILED = "generation_failed"
STATUSES = (OK, CONTENT_FILTERED, GENERATION_FAILED)

REFERENCE_SYSTEM = "reference"


@dataclass(frozen=True)
class SummaryRecord:
    article_id: str
    system_id: str
    text: Optional[str] = None
    status: str = OK
    word_count: int = 0

    def __post_init__(self):
        if self.status not in STATUSES:
            raise InvalidArgument(f"bad summary status {self.status!r}")
        has_text = bool(self.text and self.text.strip())
        if (self.status == OK) != has_text:
            raise InvalidArgument(
                f"{self.article_id}/{self.system_id}: status {self.status} with "
                f"{'a' if has_text else 'no'} text"
            )

    @classmethod
    def ok(cls, article_id, system_id, text):
        return cls(article_id, system_id, text, OK, word_count(text))

    @classmethod
    def failed(cls, article_id, system_id, status):
        return cls(article_id, system_id, None, status, 0)

    def to_dict(self) -> dict:
        return {
            "article_id": self.article_id,
            "system_id": self.system_id,
            "status": self.status,
            "text": self.text,
            "word_count": self.word_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SummaryRecord":
        return cls(d["article_id"], d["system_id"], d.get("text"), d.get("status", OK),
                   int(d.get("word_count") or 0))


def summarize(article: Article, gateway: Gateway, provider_id: str) -> SummaryRecord:
    """One temperature-0 summary request; failures become status values."""
    outcome = gateway.chat(provider_id, summary_prompt(article.text))
    if isinstance(outcome, Text) and outcome.content.strip():
        return SummaryRecord.ok(article.id, provider_id, outcome.content.strip())
    if isinstance(outcome, ContentFiltered):
        return SummaryRecord.failed(article.id, provider_id, CONTENT_FILTERED)
    log.warning("summary failed for %s/%s: %s", article.id, provider_id, outcome)
    return SummaryRecord.failed(article.id, provider_id, GENERATION_FAILED)


def reference_summaries(articles: Iterable[Article]) -> list[SummaryRecord]:
    out = []
    for art in articles:
        if art.reference_summary and art.reference_summary.strip():
            out.append(SummaryRecord.ok(art.id, REFERENCE_SYSTEM, art.reference_summary.strip()))
        else:
            out.append(SummaryRecord.failed(art.id, REFERENCE_SYSTEM, GENERATION_FAILED))
    return out


def import_summaries(path, system_id: str, known_ids) -> list[SummaryRecord]:
    """Read externally generated summaries (``{"article_id", "text"}`` per line).

    Raises:
        UnknownArticle: a record names an article that is not in the corpus.
        MalformedRecord: missing fields, empty text or a repeated article id.
    """
    known = set(known_ids)
    seen = set()
    out = []
    for index, obj in read_jsonl(path):
        if not isinstance(obj, dict):
            raise MalformedRecord("expected a JSON object", index)
        art_id, text = obj.get("article_id"), obj.get("text")
        if not isinstance(art_id, str) or not art_id:
            raise MalformedRecord("missing 'article_id'", index)
        if not isinstance(text, str) or not text.strip():
            raise MalformedRecord(f"missing or empty 'text' for {art_id!r}", index)
        if art_id not in known:
            raise UnknownArticle(art_id)
        if art_id in seen:
            raise MalformedRecord(f"duplicate summary for ({art_id!r}, {system_id!r})", index)
        seen.add(art_id)
        out.append(SummaryRecord.ok(art_id, system_id, text.strip()))
    return out


def sort_records(records):
    return sorted(records, key=lambda r: (r.system_id, r.article_id))


def write_summaries(path, records: Iterable[SummaryRecord]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in sort_records(records):
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def read_summaries(path) -> list[SummaryRecord]:
    out = []
    for index, obj in read_jsonl(path):
        try:
            out.append(SummaryRecord.from_dict(obj))
        except (KeyError, TypeError, InvalidArgument) as exc:
            raise MalformedRecord(str(exc), index) from exc
    return out
