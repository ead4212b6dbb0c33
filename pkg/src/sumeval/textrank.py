"""TextRank extractive summarization.

Sentences become graph vertices, edges carry the (clamped) cosine similarity
of sentence embeddings, PageRank scores the vertices and the top-k sentences
are returned in document order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceFailure, InvalidArgument
from .semantic import EmbeddingProvider

DEFAULT_ABBREVIATIONS = frozenset(
    {
        "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "jr.", "sr.", "rev.", "hon.",
        "gen.", "col.", "lt.", "sgt.", "capt.", "cmdr.", "gov.", "sen.", "rep.",
        "pres.", "insp.", "supt.", "det.", "no.", "vs.", "etc.", "e.g.", "i.e.",
        "inc.", "ltd.", "co.", "corp.", "plc.", "u.s.", "u.k.", "jan.", "feb.",
        "mar.", "apr.", "aug.", "sept.", "sep.", "oct.", "nov.", "dec.", "approx.",
    }
)

# terminal punctuation, optional closing quotes/brackets, then whitespace +
# uppercase letter or end of text
_BOUNDARY_RE = re.compile(r"[.!?]+[\"'’”)\]]*(?=\s+[A-Z]|\s*$)")


@dataclass(frozen=True)
class PageRankConfig:
    damping: float = 0.85
    tolerance: float = 1e-6
    max_iterations: int = 100

    def __post_init__(self):
        if not 0 < self.damping < 1:
            raise InvalidArgument(f"damping must be in (0, 1), got {self.damping}")
        if self.tolerance <= 0:
            raise InvalidArgument("tolerance must be positive")
        if self.max_iterations < 1:
            raise InvalidArgument("max_iterations must be >= 1")


@dataclass
class SentenceGraph:
    sentences: list[str]
    weights: np.ndarray

    def __post_init__(self):
        n = len(self.sentences)
        if self.weights.shape != (n, n):
            raise InvalidArgument(f"weights shape {self.weights.shape} does not match {n} sentences")


def split_sentences(text: str, abbreviations=DEFAULT_ABBREVIATIONS) -> list[str]:
    sentences = []
    start = 0
    for m in _BOUNDARY_RE.finditer(text):
        # the word that ends at this punctuation, e.g. "Mr." or "e.g."
        head = text[start : m.end()].split()
        last = head[-1].lower() if head else ""
        last = last.rstrip("\"'’”)]")
        if last in abbreviations:
            continue
        piece = text[start : m.end()].strip()
        if piece:
            sentences.append(piece)
        start = m.end()
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _sentence_vector(provider: EmbeddingProvider, sentence: str) -> np.ndarray | None:
    tokens, vecs = provider.embed_tokens(sentence)
    if len(tokens) == 0:
        return None
    return np.asarray(vecs, dtype=float).mean(axis=0)


def build_graph(sentences: Sequence[str], provider: EmbeddingProvider) -> SentenceGraph:
    """Similarity graph over sentence embeddings (mean of token vectors).

    Sentences without tokens or with a zero embedding get zero-weight edges.
    """
    if not sentences:
        raise InvalidArgument("need at least one sentence")
    vectors = [_sentence_vector(provider, s) for s in sentences]
    dims = {v.shape[0] for v in vectors if v is not None}
    dim = dims.pop() if dims else 1
    emb = np.zeros((len(sentences), dim))
    for i, v in enumerate(vectors):
        if v is not None:
            emb[i] = v
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    unit = np.divide(emb, norms, out=np.zeros_like(emb), where=norms > 0)
    weights = np.clip(unit @ unit.T, 0.0, 1.0)
    np.fill_diagonal(weights, 0.0)
    # exact symmetry regardless of floating-point matmul order
    weights = (weights + weights.T) / 2
    return SentenceGraph(list(sentences), weights)


def transition_matrix(weights: np.ndarray) -> np.ndarray:
    """Row-stochastic matrix; rows with no out-weight spread uniformly."""
    n = weights.shape[0]
    out = weights.sum(axis=1, keepdims=True)
    uniform = np.full_like(weights, 1.0 / n)
    return np.where(out > 0, weights / np.where(out > 0, out, 1.0), uniform)


def pagerank(graph: SentenceGraph | np.ndarray, cfg: PageRankConfig = PageRankConfig()) -> np.ndarray:
    """Weighted PageRank by power iteration.

    Raises:
        ConvergenceFailure: the L1 change is still at or above ``cfg.tolerance``
            after ``cfg.max_iterations`` iterations.
    """
    weights = graph.weights if isinstance(graph, SentenceGraph) else np.asarray(graph, dtype=float)
    n = weights.shape[0]
    if n == 0:
        raise InvalidArgument("empty graph")
    if n == 1:
        return np.array([1.0])
    trans_t = transition_matrix(weights).T
    d = cfg.damping
    x = np.full(n, 1.0 / n)
    err = float("inf")
    for _ in range(cfg.max_iterations):
        new = (1 - d) / n + d * (trans_t @ x)
        new /= new.sum()
        err = float(np.abs(new - x).sum())
        x = new
        if err < cfg.tolerance:
            return x
    raise ConvergenceFailure(cfg.max_iterations, err)


def top_k_indices(scores: Sequence[float], k: int) -> list[int]:
    """Indices of the k best scores (earlier position wins ties), in document order."""
    # scores equal up to float noise count as ties
    ranked = sorted(range(len(scores)), key=lambda i: (-round(float(scores[i]), 12), i))
    return sorted(ranked[:k])


def textrank_summary(text: str, provider: EmbeddingProvider, k: int = 2,
                     cfg: PageRankConfig = PageRankConfig(),
                     abbreviations=DEFAULT_ABBREVIATIONS) -> str:
    if k < 1:
        raise InvalidArgument(f"k must be >= 1, got {k}")
    sentences = split_sentences(text, abbreviations)
    if len(sentences) <= k:
        return " ".join(sentences)
    scores = pagerank(build_graph(sentences, provider), cfg)
    return " ".join(sentences[i] for i in top_k_indices(scores, k))
