"""Per-system aggregation with normal-approximation 95% CIs, CSV/Markdown output."""

from __future__ import annotations

import csv
import io
import math
import statistics
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InvalidArgument

Z95 = 1.96

# row order of the rendered table
METRICS = (
    "rouge1", "rougeL", "rouge1_article", "rougeL_article",
    "bertscore", "bertscore_article",
    "qa_consistency", "qa_hallucination", "fact_consistency",
    "qa_meta", "fact_meta",
    "avg_summary_words",
)
METRIC_LABELS = {
    "rouge1": "ROUGE-1",
    "rougeL": "ROUGE-L",
    "rouge1_article": "ROUGE-1 (article)",
    "rougeL_article": "ROUGE-L (article)",
    "bertscore": "BERTScore",
    "bertscore_article": "BERTScore (article)",
    "qa_consistency": "QA Consistency",
    "qa_hallucination": "QA Hallucination",
    "fact_consistency": "Fact Consistency",
    "qa_meta": "QA Meta Evaluation",
    "fact_meta": "Fact Meta Evaluation",
    "avg_summary_words": "Average summary length (words)",
}
LOWER_IS_BETTER = frozenset({"qa_hallucination"})
UNRANKED = frozenset({"avg_summary_words"})

CSV_FIELDS = ("system_id", "metric", "mean", "n", "ci95_half_width")


@dataclass(frozen=True)
class MetricReport:
    system_id: str
    metric: str
    mean: float
    n: int
    ci95_half_width: float


def fmt(x: float) -> str:
    out = f"{x:.3f}"
    return "0.000" if out == "-0.000" else out


def ci95_half_width(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    return Z95 * statistics.stdev(values) / math.sqrt(len(values))


def aggregate(scores: Iterable[tuple[str, str, float]], system_order: Sequence[str] = ()) -> list[MetricReport]:
    """Group ``(system_id, metric, value)`` triples and summarize each group.

    Output is ordered by ``system_order`` (unlisted systems sorted after it)
    then by the canonical metric order.
    """
    groups: dict[tuple[str, str], list[float]] = defaultdict(list)
    for system_id, metric, value in scores:
        value = float(value)
        if not math.isfinite(value):
            raise InvalidArgument(f"non-finite {metric} for {system_id}: {value}")
        groups[(system_id, metric)].append(value)
    rank = {s: i for i, s in enumerate(system_order)}
    metric_rank = {m: i for i, m in enumerate(METRICS)}

    def order(key):
        sys_id, metric = key
        return (rank.get(sys_id, len(rank)), sys_id, metric_rank.get(metric, len(METRICS)), metric)

    out = []
    for key in sorted(groups, key=order):
        vals = groups[key]
        out.append(MetricReport(key[0], key[1], math.fsum(vals) / len(vals), len(vals),
                                ci95_half_width(vals)))
    return out


def to_csv(reports: Sequence[MetricReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in reports:
        writer.writerow([r.system_id, r.metric, fmt(r.mean), r.n, fmt(r.ci95_half_width)])
    return buf.getvalue()


def to_markdown(reports: Sequence[MetricReport]) -> str:
    """Metrics as rows, systems as columns; the best mean per row is bolded."""
    systems: list[str] = []
    for r in reports:
        if r.system_id not in systems:
            systems.append(r.system_id)
    cells = {(r.metric, r.system_id): r for r in reports}
    present = [m for m in METRICS if any((m, s) in cells for s in systems)]
    present += sorted({r.metric for r in reports} - set(present))

    lines = ["| Metric | " + " | ".join(systems) + " |",
             "|---|" + "---|" * len(systems)]
    for metric in present:
        row = {s: cells[(metric, s)] for s in systems if (metric, s) in cells}
        best = None
        if metric not in UNRANKED and row:
            rounded = [float(fmt(r.mean)) for r in row.values()]
            best = min(rounded) if metric in LOWER_IS_BETTER else max(rounded)
        out = []
        for s in systems:
            r = row.get(s)
            if r is None:
                out.append("--")
            elif best is not None and float(fmt(r.mean)) == best:
                out.append(f"**{fmt(r.mean)}**")
            else:
                out.append(fmt(r.mean))
        lines.append(f"| {METRIC_LABELS.get(metric, metric)} | " + " | ".join(out) + " |")
    return "\n".join(lines) + "\n"


def emit_report(reports: Sequence[MetricReport], path, fmt_name: str = "csv") -> Path:
    if fmt_name == "csv":
        text = to_csv(reports)
    elif fmt_name == "markdown":
        text = to_markdown(reports)
    else:
        raise InvalidArgument(f"unknown report format {fmt_name!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
