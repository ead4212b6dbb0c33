"""Article ingestion and length filtering.

Input is JSONL, one object per line with keys ``id`` and ``text`` (required)
and ``title`` / ``summary`` (optional).
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import InvalidArgument, MalformedRecord, SumevalError

log = logging.getLogger(__name__)


class IoFailure(SumevalError, OSError):
    pass


@dataclass(frozen=True)
class Article:
    id: str
    text: str
    title: Optional[str] = None
    reference_summary: Optional[str] = None

    def to_json(self) -> dict:
        out = {"id": self.id, "text": self.text}
        if self.title is not None:
            out["title"] = self.title
        if self.reference_summary is not None:
            out["summary"] = self.reference_summary
        return out


@dataclass(frozen=True)
class CorpusFilter:
    min_words: int = 100
    max_words: int = 400

    def __post_init__(self):
        if not (0 < self.min_words <= self.max_words):
            raise InvalidArgument(
                f"need 0 < min_words <= max_words, got ({self.min_words}, {self.max_words})"
            )

    def accepts(self, text: str) -> bool:
        return self.min_words <= word_count(text) <= self.max_words


@dataclass
class FilterStats:
    total: int = 0
    retained: int = 0
    excluded_low: int = 0
    excluded_high: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class Corpus:
    articles: list[Article] = field(default_factory=list)
    stats: FilterStats = field(default_factory=FilterStats)

    def __iter__(self):
        return iter(self.articles)

    def __len__(self):
        return len(self.articles)

    def by_id(self) -> dict[str, Article]:
        return {a.id: a for a in self.articles}


def word_count(text: str) -> int:
    """Number of maximal runs of non-whitespace characters."""
    return len(text.split())


def _article_from_record(obj, index: int) -> Article:
    if not isinstance(obj, dict):
        raise MalformedRecord("expected a JSON object", index)
    art_id = obj.get("id")
    text = obj.get("text")
    if not isinstance(art_id, str) or not art_id:
        raise MalformedRecord("missing or empty 'id'", index)
    if not isinstance(text, str) or not text.strip():
        raise MalformedRecord(f"missing or empty 'text' for id {art_id!r}", index)
    title = obj.get("title")
    summary = obj.get("summary")
    for key, val in (("title", title), ("summary", summary)):
        if val is not None and not isinstance(val, str):
            raise MalformedRecord(f"'{key}' must be a string", index)
    return Article(id=art_id, text=text, title=title, reference_summary=summary)


def read_jsonl(path) -> Iterable[tuple[int, object]]:
    """Yield ``(line_index, parsed_object)``, skipping blank lines."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    with fh:
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                yield i, json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"invalid JSON: {exc.msg}", i) from exc


def filter_articles(articles: Iterable[Article], flt: CorpusFilter) -> Corpus:
    corpus = Corpus()
    stats = corpus.stats
    for art in articles:
        stats.total += 1
        wc = word_count(art.text)
        if wc < flt.min_words:
            stats.excluded_low += 1
        elif wc > flt.max_words:
            stats.excluded_high += 1
        else:
            corpus.articles.append(art)
    stats.retained = len(corpus.articles)
    return corpus


def load_corpus(path, flt: CorpusFilter | None = None) -> Corpus:
    """Load a JSONL corpus and keep articles within the word-count window.

    Raises:
        MalformedRecord: a record lacks id/text or repeats an id. The error
            carries the zero-based line index.
        IoFailure: the file cannot be read.
    """
    flt = flt or CorpusFilter()
    seen: set[str] = set()
    parsed = []
    for index, obj in read_jsonl(path):
        art = _article_from_record(obj, index)
        if art.id in seen:
            raise MalformedRecord(f"duplicate id {art.id!r}", index)
        seen.add(art.id)
        parsed.append(art)
    corpus = filter_articles(parsed, flt)
    log.info("loaded %s: %s", path, corpus.stats.as_dict())
    return corpus


def write_corpus(path, articles: Iterable[Article]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for art in articles:
            fh.write(json.dumps(art.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def print_stats(stats: FilterStats, stream=None) -> None:
    stream = stream or sys.stderr
    print(
        f"corpus: {stats.total} parsed, {stats.retained} retained, "
        f"{stats.excluded_low} below min, {stats.excluded_high} above max",
        file=stream,
    )
