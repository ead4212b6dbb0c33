import csv
import io
import json
import shutil

import httpx
import pytest

from replay_fixture import CONFIG, FIXTURE, GOLDEN, HAND_TALLY, SYSTEMS
from scripted_llm import ScriptedLLM
from sumeval import pipeline
from sumeval.errors import StageError
from sumeval.gateway import Gateway, ReplayCache


def run(out, stages=pipeline.STAGES, **overrides):
    err = io.StringIO()
    code = pipeline.run_pipeline(CONFIG, stages, {"out": str(out), **overrides}, stream=err)
    return code, err.getvalue()


def read_rows_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def read_rows(path):
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("full")
    code, err = run(out)
    assert code == 0, err
    return out


def row(out, article_id, system_id):
    return next(r for r in read_rows(out / "scores.jsonl")
                if r["article_id"] == article_id and r["system_id"] == system_id)


# --- end-to-end replay ----------------------------------------------------

@pytest.mark.parametrize("name", ["summaries.jsonl", "scores.jsonl", "report.csv", "report.md",
                                  "manifest.json"])
def test_replay_matches_golden(full_run, name):
    assert (full_run / name).read_bytes() == (GOLDEN / name).read_bytes()


def test_rerun_is_byte_identical(full_run, tmp_path):
    code, err = run(tmp_path)
    assert code == 0, err
    for path in sorted(full_run.iterdir()):
        assert (tmp_path / path.name).read_bytes() == path.read_bytes(), path.name


def test_manifest_matches_hand_tally(full_run):
    manifest = json.loads((full_run / "manifest.json").read_text())
    corpus = {k: manifest["corpus"][k] for k in HAND_TALLY["corpus"]}
    assert corpus == HAND_TALLY["corpus"]
    assert manifest["summaries"] == HAND_TALLY["summaries"]
    assert manifest["cache_mode"] == "replay"


def test_every_article_accounted_for(full_run):
    manifest = json.loads((full_run / "manifest.json").read_text())
    retained = manifest["corpus"]["retained"]
    for system in SYSTEMS:
        assert sum(manifest["summaries"][system].values()) == retained
    assert len(read_rows(full_run / "scores.jsonl")) == retained * len(SYSTEMS)


def test_content_filtered_summary_has_no_scores(full_run):
    r = row(full_run, "fx-09", "gpt35")
    assert r["summary_status"] == "content_filtered"
    assert r["scores"] == {}


def test_content_filtered_evaluation_keeps_lexical_scores(full_run):
    r = row(full_run, "fx-09", "textrank")
    assert r["summary_status"] == "ok"
    assert r["qa_status"] == r["fact_status"] == "content_filtered"
    assert "rouge1" in r["scores"]
    assert not {"qa_consistency", "qa_meta", "fact_consistency", "fact_meta"} & set(r["scores"])


def test_convergence_failure_is_a_failed_summary(full_run):
    r = row(full_run, "fx-11", "textrank")
    assert r["summary_status"] == "generation_failed"
    assert r["scores"] == {}


def test_partial_answers_force_zero_meta(full_run):
    r = row(full_run, "fx-07", "lead")
    assert r["qa_status"] == "answering_failed"
    assert r["scores"]["qa_meta"] == 0.0
    assert "qa_consistency" not in r["scores"]


def test_reference_has_no_reference_metrics(full_run):
    for r in read_rows(full_run / "scores.jsonl"):
        if r["system_id"] == "reference":
            assert "rouge1" not in r["scores"] and "bertscore" not in r["scores"]
            assert "rouge1_article" in r["scores"]


def test_transcripts_written(full_run):
    entries = read_rows(full_run / "transcripts.jsonl")
    assert {e["evaluator"] for e in entries} == {"qa", "fact"}
    qa = next(e for e in entries if e["evaluator"] == "qa" and e["status"] == "ok")
    assert [s["step"] for s in qa["steps"]] == [
        "question_generation", "answer_from_summary", "answer_from_source"]


def test_report_excludes_failed_summaries_from_length(full_run):
    reports = {(r["system_id"], r["metric"]): r
               for r in read_rows_csv(full_run / "report.csv")}
    assert int(reports[("gpt35", "avg_summary_words")]["n"]) == 11
    assert int(reports[("textrank", "avg_summary_words")]["n"]) == 11


# --- record mode ----------------------------------------------------------

def test_record_then_replay_reproduces_golden(tmp_path):
    cfg = pipeline.load_config(CONFIG)
    lead_fx07 = json.loads((FIXTURE / "lead_summaries.jsonl").read_text().splitlines()[6])["text"]
    llm = ScriptedLLM(partial_contexts=[lead_fx07])
    cache_path = tmp_path / "cache.jsonl"
    gateway = Gateway(cfg.providers, "record", ReplayCache(cache_path),
                      client=httpx.Client(transport=llm.transport()))
    code = pipeline.run_pipeline(CONFIG, overrides={"out": str(tmp_path / "rec"),
                                                    "cache_mode": "record"}, gateway=gateway)
    assert code == 0
    assert llm.calls > 0
    replay = Gateway(cfg.providers, "replay", ReplayCache(cache_path))
    code = pipeline.run_pipeline(CONFIG, overrides={"out": str(tmp_path / "rep")}, gateway=replay)
    assert code == 0
    for name in ("scores.jsonl", "summaries.jsonl", "report.csv"):
        assert (tmp_path / "rep" / name).read_bytes() == (GOLDEN / name).read_bytes()


# --- stage wiring and diagnostics -----------------------------------------

def test_evaluate_without_summarize_names_missing_file(tmp_path):
    assert run(tmp_path, ("ingest",))[0] == 0
    code, err = run(tmp_path, ("evaluate",))
    assert code == 2
    assert "summaries.jsonl" in err and "summarize" in err
    assert not (tmp_path / "scores.jsonl").exists()


def test_summarize_without_ingest(tmp_path):
    code, err = run(tmp_path, ("summarize",))
    assert code == 2 and "articles.jsonl" in err


def test_report_without_scores(tmp_path):
    code, err = run(tmp_path, ("report",))
    assert code == 2 and "scores.jsonl" in err


def test_report_only_makes_no_llm_calls(full_run, tmp_path):
    for name in ("articles.jsonl", "summaries.jsonl", "scores.jsonl", "manifest.json"):
        shutil.copy(full_run / name, tmp_path / name)
    cfg = pipeline.load_config(CONFIG)
    llm = ScriptedLLM()
    live = Gateway(cfg.providers, "live", ReplayCache(),
                   client=httpx.Client(transport=llm.transport()))
    code = pipeline.run_pipeline(CONFIG, ("report",), {"out": str(tmp_path), "cache_mode": "live"},
                                 gateway=live)
    assert code == 0
    assert llm.calls == 0
    assert (tmp_path / "report.md").read_bytes() == (GOLDEN / "report.md").read_bytes()


def test_replay_cache_miss_is_a_stage_error(tmp_path):
    cfg_dir = tmp_path / "cfg"
    shutil.copytree(FIXTURE, cfg_dir, ignore=shutil.ignore_patterns("golden", "out"))
    (cfg_dir / "cache.jsonl").write_text("")
    err = io.StringIO()
    code = pipeline.run_pipeline(cfg_dir / "config.ini", overrides={"out": str(tmp_path / "o")},
                                 stream=err)
    assert code == 2
    assert "cache" in err.getvalue().lower()


def test_missing_replay_cache_file(tmp_path):
    cfg_dir = tmp_path / "cfg"
    shutil.copytree(FIXTURE, cfg_dir, ignore=shutil.ignore_patterns("golden", "out", "cache.jsonl"))
    with pytest.raises(StageError, match="replay cache not found"):
        pipeline.make_gateway(pipeline.load_config(cfg_dir / "config.ini"))


def test_lexical_only_run_needs_no_cache(tmp_path):
    cfg_dir = tmp_path / "cfg"
    shutil.copytree(FIXTURE, cfg_dir, ignore=shutil.ignore_patterns("golden", "out", "cache.jsonl"))
    code = pipeline.run_pipeline(cfg_dir / "config.ini",
                                 overrides={"out": str(tmp_path / "o"), "systems": "textrank,lead",
                                            "metrics": "rouge1,rougeL"})
    assert code == 0
    rows = read_rows(tmp_path / "o" / "scores.jsonl")
    assert {r["system_id"] for r in rows} == {"textrank", "lead"}
    assert all(set(r["scores"]) <= {"rouge1", "rougeL"} for r in rows)
    assert "qa_status" not in rows[0]


# --- config ---------------------------------------------------------------

def test_load_config_resolves_relative_paths():
    cfg = pipeline.load_config(CONFIG)
    assert cfg.corpus_path == FIXTURE / "corpus.jsonl"
    assert cfg.cache_path == FIXTURE / "cache.jsonl"
    assert cfg.imports == {"lead": FIXTURE / "lead_summaries.jsonl"}
    assert cfg.systems == list(SYSTEMS)
    assert cfg.pagerank.max_iterations == 8
    assert cfg.evaluator == "gpt35"
    assert cfg.providers["gpt35"].model == "gpt-3.5-turbo"


def test_overrides_win():
    cfg = pipeline.load_config(CONFIG, {"systems": "lead", "min_words": 50, "max_words": 500,
                                        "cache_mode": "live", "metrics": "rouge1"})
    assert cfg.systems == ["lead"]
    assert (cfg.corpus_filter.min_words, cfg.corpus_filter.max_words) == (50, 500)
    assert cfg.cache_mode == "live"
    assert cfg.metrics == ["rouge1"]
    assert not cfg.needs_llm()


def test_config_hash_ignores_output_location():
    a = pipeline.load_config(CONFIG, {"out": "/tmp/a"}).config_hash
    b = pipeline.load_config(CONFIG, {"out": "/tmp/b"}).config_hash
    c = pipeline.load_config(CONFIG, {"systems": "lead"}).config_hash
    assert a == b != c


@pytest.mark.parametrize("overrides, match", [
    ({"systems": "nope"}, "unknown systems"),
    ({"metrics": "rouge9"}, "unknown metrics"),
    ({"cache_mode": "sometimes"}, "cache_mode"),
    ({"min_words": 300, "max_words": 200}, "config"),
])
def test_bad_config(overrides, match):
    with pytest.raises(StageError, match=match):
        pipeline.load_config(CONFIG, overrides)


def test_config_missing_corpus_path(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[run]\nsystems = textrank\n")
    with pytest.raises(StageError):
        pipeline.load_config(ini)


def test_bad_corpus_record_reports_index(tmp_path):
    (tmp_path / "corpus.jsonl").write_text('{"id": "a", "text": "x"}\nnot json\n')
    ini = tmp_path / "c.ini"
    ini.write_text("[corpus]\npath = corpus.jsonl\n[run]\nsystems = textrank\n")
    err = io.StringIO()
    code = pipeline.run_pipeline(ini, ("ingest",), {"out": str(tmp_path / "o")}, stream=err)
    assert code == 2
    assert "record 1" in err.getvalue()
