"""Config loading and the ingest / summarize / evaluate / report stages.

The config is an INI file::

    [corpus]
    path = articles.jsonl
    min_words = 100
    max_words = 400

    [run]
    output_dir = out
    cache_mode = replay          ; live | record | replay
    cache_path = cache.jsonl
    systems = textrank, gpt35, t5, reference
    workers = 4

    [textrank]
    k = 2
    damping = 0.85
    tolerance = 1e-6
    max_iterations = 100

    [embedding]
    kind = hashing               ; hashing | onehot | remote
    dim = 512

    [evaluator]
    provider = gpt35

    [provider:gpt35]
    endpoint = https://example.invalid/v1/chat/completions
    model = gpt-3.5-turbo
    api_key_env = OPENAI_API_KEY
    instruction_template = {prompt}

    [import:t5]
    path = t5_summaries.jsonl

Relative paths are resolved against the config file's directory.
Artifacts written to ``output_dir``: articles.jsonl, summaries.jsonl,
scores.jsonl, transcripts.jsonl, report.csv, report.md, manifest.json.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
import sys
import threading
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import corpus as corpus_mod
from . import fact_eval, lexical, qa_eval, report, semantic, summarizer, textrank
from .errors import CacheMiss, ConvergenceFailure, InvalidArgument, StageError, SumevalError
from .gateway import CACHE_MODES, Gateway, ProviderProfile, ReplayCache
from .judge import Judge
from .summarizer import REFERENCE_SYSTEM, SummaryRecord

log = logging.getLogger(__name__)

STAGES = ("ingest", "summarize", "evaluate", "report")
TEXTRANK_SYSTEM = "textrank"

ARTICLES_FILE = "articles.jsonl"
SUMMARIES_FILE = "summaries.jsonl"
SCORES_FILE = "scores.jsonl"
TRANSCRIPTS_FILE = "transcripts.jsonl"
MANIFEST_FILE = "manifest.json"

# metric -> evaluation group that produces it
METRIC_GROUPS = {
    "rouge1": "lexical_ref", "rougeL": "lexical_ref",
    "rouge1_article": "lexical_article", "rougeL_article": "lexical_article",
    "bertscore": "bert_ref", "bertscore_article": "bert_article",
    "qa_consistency": "qa", "qa_hallucination": "qa", "qa_meta": "qa",
    "fact_consistency": "fact", "fact_meta": "fact",
    "avg_summary_words": "words",
}
SCORE_DECIMALS = 9


@dataclass
class RunConfig:
    corpus_path: Path
    output_dir: Path
    corpus_filter: corpus_mod.CorpusFilter = field(default_factory=corpus_mod.CorpusFilter)
    cache_mode: str = "replay"
    cache_path: Optional[Path] = None
    systems: list[str] = field(default_factory=list)
    providers: dict[str, ProviderProfile] = field(default_factory=dict)
    imports: dict[str, Path] = field(default_factory=dict)
    evaluator: Optional[str] = None
    textrank_k: int = 2
    pagerank: textrank.PageRankConfig = field(default_factory=textrank.PageRankConfig)
    embedding: dict = field(default_factory=lambda: {"kind": "hashing"})
    metrics: Optional[list[str]] = None
    workers: int = 4
    config_hash: str = ""

    def wants(self, group: str) -> bool:
        if self.metrics is None:
            return True
        return any(METRIC_GROUPS.get(m) == group for m in self.metrics)

    def needs_llm(self) -> bool:
        return bool(set(self.systems) & set(self.providers)) or self.wants("qa") or self.wants("fact")


def _split_list(value: str) -> list[str]:
    return [v.strip() for v in value.replace("\n", ",").split(",") if v.strip()]


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Parse an INI config; ``overrides`` (from the CLI) win over file values."""
    path = Path(path)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise StageError("config", f"cannot read {path}: {exc}") from exc
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(raw.decode("utf-8"), source=str(path))
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise StageError("config", f"{path}: {exc}") from exc
    base = path.parent

    def resolve(p: str) -> Path:
        p = Path(p).expanduser()
        return p if p.is_absolute() else base / p

    def get(section, key, fallback=None):
        return parser.get(section, key, fallback=fallback) if parser.has_section(section) else fallback

    try:
        corpus_path = overrides.get("corpus") or get("corpus", "path")
        if not corpus_path:
            raise StageError("config", "[corpus] path is required")
        min_words = int(overrides.get("min_words", get("corpus", "min_words", 100)))
        max_words = int(overrides.get("max_words", get("corpus", "max_words", 400)))

        providers = {}
        imports = {}
        for section in parser.sections():
            kind, _, name = section.partition(":")
            name = name.strip()
            if kind == "provider" and name:
                sec = parser[section]
                providers[name] = ProviderProfile(
                    id=name,
                    model=sec.get("model", name),
                    endpoint=sec.get("endpoint", ""),
                    api_key_env=sec.get("api_key_env", ""),
                    instruction_template=sec.get("instruction_template", "{prompt}"),
                    system_prompt=sec.get("system_prompt") or None,
                    max_tokens=int(sec["max_tokens"]) if sec.get("max_tokens") else None,
                    max_in_flight=int(sec.get("max_in_flight", 4)),
                    auth_header=sec.get("auth_header", "Authorization"),
                )
            elif kind == "import" and name:
                imports[name] = resolve(parser[section]["path"])

        systems = overrides.get("systems") or _split_list(get("run", "systems", ""))
        if isinstance(systems, str):
            systems = _split_list(systems)
        metrics = overrides.get("metrics") or (_split_list(get("run", "metrics", "")) or None)
        if isinstance(metrics, str):
            metrics = _split_list(metrics)
        cache_mode = overrides.get("cache_mode") or get("run", "cache_mode", "replay")
        out_dir = overrides.get("out") or get("run", "output_dir", "out")
        cache_path = get("run", "cache_path")
        embedding = dict(parser["embedding"]) if parser.has_section("embedding") else {"kind": "hashing"}
        embedding.setdefault("kind", "hashing")

        cfg = RunConfig(
            corpus_path=resolve(corpus_path),
            output_dir=Path(out_dir) if "out" in overrides else resolve(out_dir),
            corpus_filter=corpus_mod.CorpusFilter(min_words, max_words),
            cache_mode=cache_mode,
            cache_path=resolve(cache_path) if cache_path else None,
            systems=list(systems),
            providers=providers,
            imports=imports,
            evaluator=get("evaluator", "provider"),
            textrank_k=int(get("textrank", "k", 2)),
            pagerank=textrank.PageRankConfig(
                damping=float(get("textrank", "damping", 0.85)),
                tolerance=float(get("textrank", "tolerance", 1e-6)),
                max_iterations=int(get("textrank", "max_iterations", 100)),
            ),
            embedding=embedding,
            metrics=list(metrics) if metrics else None,
            workers=int(get("run", "workers", 4)),
        )
    except (ValueError, KeyError, InvalidArgument) as exc:
        raise StageError("config", f"{path}: {exc}") from exc

    if cfg.cache_mode not in CACHE_MODES:
        raise StageError("config", f"cache_mode must be one of {CACHE_MODES}")
    known = {TEXTRANK_SYSTEM, REFERENCE_SYSTEM} | set(providers) | set(imports)
    unknown = [s for s in cfg.systems if s not in known]
    if unknown:
        raise StageError("config", f"unknown systems {unknown}; known: {sorted(known)}")
    if cfg.metrics:
        bad = [m for m in cfg.metrics if m not in METRIC_GROUPS]
        if bad:
            raise StageError("config", f"unknown metrics {bad}")
    if cfg.evaluator and cfg.evaluator not in providers:
        raise StageError("config", f"evaluator provider {cfg.evaluator!r} has no [provider:] section")
    digest = hashlib.sha256(raw)
    # where outputs go and how LLM calls are served do not change results
    hashed = {k: v for k, v in overrides.items() if k not in ("out", "cache_mode")}
    digest.update(json.dumps(hashed, sort_keys=True, default=str).encode("utf-8"))
    cfg.config_hash = digest.hexdigest()
    return cfg


# --- helpers --------------------------------------------------------------

class _Serialized:
    """Wraps a provider that is not safe for concurrent calls."""

    thread_safe = True

    def __init__(self, inner):
        self._inner = inner
        self._lock = threading.Lock()

    def embed_tokens(self, text):
        with self._lock:
            return self._inner.embed_tokens(text)


def make_embedder(cfg: RunConfig):
    opts = {k: v for k, v in cfg.embedding.items() if k != "kind"}
    provider = semantic.make_provider(cfg.embedding["kind"], **opts)
    return provider if getattr(provider, "thread_safe", False) else _Serialized(provider)


def make_gateway(cfg: RunConfig) -> Gateway:
    if cfg.cache_mode == "replay" and cfg.needs_llm():
        if cfg.cache_path is None or not cfg.cache_path.exists():
            raise StageError("config", f"replay cache not found: {cfg.cache_path}")
    cache = ReplayCache(cfg.cache_path if cfg.cache_mode != "live" else None)
    return Gateway(cfg.providers, cfg.cache_mode, cache)


def _require(path: Path, stage: str, producer: str) -> Path:
    if not path.exists():
        raise StageError(stage, f"missing input {path.name} (run the '{producer}' stage first): {path}")
    return path


def _write_jsonl(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def _parallel(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def update_manifest(out_dir: Path, **sections) -> dict:
    path = out_dir / MANIFEST_FILE
    manifest = json.loads(path.read_text(encoding="utf-8")) if path.exists() else {}
    manifest.update(sections)
    out_dir.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


# --- stages ---------------------------------------------------------------

def stage_ingest(cfg: RunConfig) -> corpus_mod.Corpus:
    try:
        corpus = corpus_mod.load_corpus(cfg.corpus_path, cfg.corpus_filter)
    except SumevalError as exc:
        raise StageError("ingest", f"{cfg.corpus_path.name}: {exc}") from exc
    corpus_mod.write_corpus(cfg.output_dir / ARTICLES_FILE, corpus.articles)
    corpus_mod.print_stats(corpus.stats)
    update_manifest(cfg.output_dir,
                    corpus={"min_words": cfg.corpus_filter.min_words,
                            "max_words": cfg.corpus_filter.max_words,
                            **corpus.stats.as_dict()})
    return corpus


def _load_articles(cfg: RunConfig, stage: str) -> list[corpus_mod.Article]:
    path = _require(cfg.output_dir / ARTICLES_FILE, stage, "ingest")
    flt = corpus_mod.CorpusFilter(1, sys.maxsize)
    return corpus_mod.load_corpus(path, flt).articles


def _textrank_record(article, provider, cfg: RunConfig) -> SummaryRecord:
    try:
        text = textrank.textrank_summary(article.text, provider, cfg.textrank_k, cfg.pagerank)
    except ConvergenceFailure as exc:
        log.warning("textrank failed for %s: %s", article.id, exc)
        return SummaryRecord.failed(article.id, TEXTRANK_SYSTEM, summarizer.GENERATION_FAILED)
    if not text.strip():
        return SummaryRecord.failed(article.id, TEXTRANK_SYSTEM, summarizer.GENERATION_FAILED)
    return SummaryRecord.ok(article.id, TEXTRANK_SYSTEM, text)


def summary_counts(records: Sequence[SummaryRecord], systems: Sequence[str]) -> dict:
    counts = {s: {status: 0 for status in summarizer.STATUSES} for s in systems}
    for rec in records:
        counts.setdefault(rec.system_id, {status: 0 for status in summarizer.STATUSES})
        counts[rec.system_id][rec.status] += 1
    return counts


def stage_summarize(cfg: RunConfig, gateway: Gateway | None = None) -> list[SummaryRecord]:
    articles = _load_articles(cfg, "summarize")
    ids = [a.id for a in articles]
    records: list[SummaryRecord] = []
    embedder = None
    for system in cfg.systems:
        if system == TEXTRANK_SYSTEM:
            embedder = embedder or make_embedder(cfg)
            records += _parallel(lambda a: _textrank_record(a, embedder, cfg), articles, cfg.workers)
        elif system == REFERENCE_SYSTEM:
            records += summarizer.reference_summaries(articles)
        elif system in cfg.imports:
            try:
                imported = summarizer.import_summaries(cfg.imports[system], system, ids)
            except SumevalError as exc:
                raise StageError("summarize", f"import {system}: {exc}") from exc
            have = {r.article_id for r in imported}
            # articles the external system did not cover count as failed
            imported += [SummaryRecord.failed(i, system, summarizer.GENERATION_FAILED)
                         for i in ids if i not in have]
            records += imported
        else:
            gateway = gateway or make_gateway(cfg)

            def run(article, system=system):
                try:
                    return summarizer.summarize(article, gateway, system)
                except CacheMiss as exc:
                    raise StageError("summarize", f"article {article.id}, system {system}: {exc}") from exc

            records += _parallel(run, articles, cfg.workers)
    records = summarizer.sort_records(records)
    summarizer.write_summaries(cfg.output_dir / SUMMARIES_FILE, records)
    update_manifest(cfg.output_dir, summaries=summary_counts(records, cfg.systems),
                    cache_mode=cfg.cache_mode, config_sha256=cfg.config_hash)
    return records


def _round(x: float) -> float:
    return round(float(x), SCORE_DECIMALS)


def evaluate_pair(rec: SummaryRecord, article: corpus_mod.Article, cfg: RunConfig,
                  embedder, judge: Judge | None) -> tuple[dict, list]:
    row = {"article_id": rec.article_id, "system_id": rec.system_id,
           "summary_status": rec.status, "scores": {}}
    transcripts = []
    if rec.status != summarizer.OK:
        return row, transcripts
    scores = row["scores"]
    summary = rec.text
    ref = article.reference_summary
    vs_ref = rec.system_id != REFERENCE_SYSTEM and bool(ref and ref.strip())

    if cfg.wants("lexical_ref") and vs_ref:
        r1, rl = lexical.score_pair(summary, ref, lexical.VS_REFERENCE)
        scores["rouge1"], scores["rougeL"] = r1.f1, rl.f1
    if cfg.wants("lexical_article"):
        r1, rl = lexical.score_pair(summary, article.text, lexical.VS_ARTICLE)
        scores["rouge1_article"], scores["rougeL_article"] = r1.f1, rl.f1
    if cfg.wants("bert_ref") and vs_ref:
        scores["bertscore"] = semantic.bertscore(summary, ref, embedder).f1
    if cfg.wants("bert_article"):
        scores["bertscore_article"] = semantic.bertscore(summary, article.text, embedder).f1

    if judge is not None and cfg.wants("qa"):
        ev = qa_eval.evaluate_qa(rec.article_id, rec.system_id, summary, article.text, judge)
        row["qa_status"] = ev.status
        scores.update(ev.scores())
        transcripts.append({"article_id": rec.article_id, "system_id": rec.system_id,
                            "evaluator": "qa", "status": ev.status, "detail": ev.detail,
                            "steps": ev.transcript})
    if judge is not None and cfg.wants("fact"):
        ev = fact_eval.evaluate_facts(rec.article_id, rec.system_id, summary, article.text, judge)
        row["fact_status"] = ev.status
        scores.update(ev.scores())
        transcripts.append({"article_id": rec.article_id, "system_id": rec.system_id,
                            "evaluator": "fact", "status": ev.status, "detail": ev.detail,
                            "steps": ev.transcript})
    if cfg.metrics is not None:
        row["scores"] = {k: v for k, v in scores.items() if k in cfg.metrics}
    row["scores"] = {k: _round(v) for k, v in row["scores"].items()}
    return row, transcripts


def stage_evaluate(cfg: RunConfig, gateway: Gateway | None = None) -> list[dict]:
    articles = {a.id: a for a in _load_articles(cfg, "evaluate")}
    path = _require(cfg.output_dir / SUMMARIES_FILE, "evaluate", "summarize")
    records = [r for r in summarizer.read_summaries(path)
               if not cfg.systems or r.system_id in cfg.systems]
    embedder = make_embedder(cfg)
    judge = None
    if cfg.evaluator and (cfg.wants("qa") or cfg.wants("fact")):
        judge = Judge(gateway or make_gateway(cfg), cfg.evaluator)

    def run(rec):
        article = articles.get(rec.article_id)
        if article is None:
            raise StageError("evaluate", f"summary for unknown article {rec.article_id}")
        try:
            return evaluate_pair(rec, article, cfg, embedder, judge)
        except CacheMiss as exc:
            raise StageError("evaluate",
                             f"article {rec.article_id}, system {rec.system_id}: {exc}") from exc
        except SumevalError as exc:
            raise StageError("evaluate",
                             f"article {rec.article_id}, system {rec.system_id}: {exc}") from exc

    results = _parallel(run, summarizer.sort_records(records), cfg.workers)
    rows = [row for row, _ in results]
    _write_jsonl(cfg.output_dir / SCORES_FILE, rows)
    _write_jsonl(cfg.output_dir / TRANSCRIPTS_FILE, [t for _, ts in results for t in ts])

    evals: dict = {}
    for row in rows:
        per = evals.setdefault(row["system_id"], {"qa": Counter(), "fact": Counter()})
        for kind in ("qa", "fact"):
            if f"{kind}_status" in row:
                per[kind][row[f"{kind}_status"]] += 1
    update_manifest(cfg.output_dir,
                    evaluations={s: {k: dict(sorted(c.items())) for k, c in v.items()}
                                 for s, v in sorted(evals.items())},
                    cache_mode=cfg.cache_mode, config_sha256=cfg.config_hash)
    return rows


def collect_scores(rows, summaries: Sequence[SummaryRecord], metrics=None):
    triples = []
    for row in rows:
        for metric, value in row["scores"].items():
            triples.append((row["system_id"], metric, value))
    for rec in summaries:
        if rec.status == summarizer.OK:
            triples.append((rec.system_id, "avg_summary_words", rec.word_count))
    if metrics is not None:
        triples = [t for t in triples if t[1] in metrics]
    return triples


def stage_report(cfg: RunConfig) -> list[report.MetricReport]:
    scores_path = _require(cfg.output_dir / SCORES_FILE, "report", "evaluate")
    rows = [obj for _, obj in corpus_mod.read_jsonl(scores_path)]
    summaries_path = cfg.output_dir / SUMMARIES_FILE
    summaries = summarizer.read_summaries(summaries_path) if summaries_path.exists() else []
    if cfg.systems:
        rows = [r for r in rows if r["system_id"] in cfg.systems]
        summaries = [s for s in summaries if s.system_id in cfg.systems]
    order = cfg.systems or sorted({r["system_id"] for r in rows})
    reports = report.aggregate(collect_scores(rows, summaries, cfg.metrics), order)
    report.emit_report(reports, cfg.output_dir / "report.csv", "csv")
    report.emit_report(reports, cfg.output_dir / "report.md", "markdown")
    update_manifest(cfg.output_dir,
                    summaries=summary_counts(summaries, order),
                    report={"groups": len(reports)})
    return reports


def run_pipeline(config_path, stages: Sequence[str] = STAGES, overrides: dict | None = None,
                 gateway: Gateway | None = None, stream=None) -> int:
    """Run stages in canonical order. Returns a process exit code."""
    stream = stream or sys.stderr
    try:
        cfg = load_config(config_path, overrides)
        unknown = [s for s in stages if s not in STAGES]
        if unknown:
            raise StageError("cli", f"unknown stages {unknown}")
        for stage in STAGES:
            if stage not in stages:
                continue
            log.info("stage %s", stage)
            if stage == "ingest":
                stage_ingest(cfg)
            elif stage == "summarize":
                stage_summarize(cfg, gateway)
            elif stage == "evaluate":
                stage_evaluate(cfg, gateway)
            else:
                stage_report(cfg)
    except StageError as exc:
        print(f"error: {exc}", file=stream)
        return 2
    except SumevalError as exc:
        print(f"error: {exc}", file=stream)
        return 1
    update_manifest(cfg.output_dir, cache_mode=cfg.cache_mode, config_sha256=cfg.config_hash)
    return 0
