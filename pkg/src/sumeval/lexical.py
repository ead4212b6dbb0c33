"""ROUGE-1 / ROUGE-N and ROUGE-L over a simple alphanumeric tokenizer.

No stemming and no stopword removal. ROUGE-L is computed over the whole
token sequence rather than per sentence.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidArgument

VS_REFERENCE = "vs_reference"
VS_ARTICLE = "vs_article"
MODES = (VS_REFERENCE, VS_ARTICLE)

# letters and digits only: \w minus underscore
_TOKEN_RE = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "RougeScore":
        return cls(precision, recall, f1_score(precision, recall))


ZERO = RougeScore(0.0, 0.0, 0.0)


def f1_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def tokenize(text: str) -> list[str]:
    """Lowercase and split on anything that is not a letter or digit."""
    return _TOKEN_RE.findall(text.lower())


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int = 1) -> RougeScore:
    if n < 1:
        raise InvalidArgument(f"n must be >= 1, got {n}")
    cand = ngrams(candidate, n)
    ref = ngrams(reference, n)
    cand_total = sum(cand.values())
    ref_total = sum(ref.values())
    if cand_total == 0 or ref_total == 0:
        return ZERO
    overlap = sum((cand & ref).values())
    return RougeScore.from_pr(overlap / cand_total, overlap / ref_total)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    if not candidate or not reference:
        return ZERO
    lcs = lcs_length(candidate, reference)
    return RougeScore.from_pr(lcs / len(candidate), lcs / len(reference))


def score_pair(summary: str, reference_text: str, mode: str = VS_REFERENCE):
    """Return ``(rouge1, rougeL)`` for a summary against a reference text.

    ``mode`` only records which text the caller passed as the reference;
    in article mode that is the source article itself.
    """
    if mode not in MODES:
        raise InvalidArgument(f"unknown mode {mode!r}")
    cand = tokenize(summary)
    ref = tokenize(reference_text)
    return rouge_n(cand, ref, 1), rouge_l(cand, ref)
