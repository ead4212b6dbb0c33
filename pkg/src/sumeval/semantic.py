"""Greedy-matching BERTScore over pluggable token-embedding providers.

No IDF weighting and no baseline rescaling: precision is the mean over
candidate tokens of the best cosine against any reference token, recall the
mirror image.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import httpx
import numpy as np

from .errors import EmptyTokenization, ProviderFailure, ZeroVector
from .lexical import tokenize


@runtime_checkable
class EmbeddingProvider(Protocol):
    #: whether ``embed_tokens`` may be called from several threads at once
    thread_safe: bool

    def embed_tokens(self, text: str) -> tuple[list[str], np.ndarray]:
        """Return tokens and a ``(len(tokens), d)`` array of their vectors."""
        ...


@dataclass(frozen=True)
class BertScoreResult:
    precision: float
    recall: float
    f1: float


class OneHotProvider:
    """Each distinct token gets its own basis vector.

    Indices are handed out on first sight, so a token keeps its vector for
    the lifetime of the provider. Cosine between two tokens is 1 if they are
    equal and 0 otherwise, which makes BERTScore collapse to unigram matching.
    """

    thread_safe = True

    def __init__(self, dim: int = 4096):
        self.dim = dim
        self._index: dict[str, int] = {}
        self._lock = threading.Lock()

    def _slot(self, token: str) -> int:
        with self._lock:
            idx = self._index.get(token)
            if idx is None:
                if len(self._index) >= self.dim:
                    raise ProviderFailure(f"one-hot vocabulary exceeded dim={self.dim}")
                idx = self._index[token] = len(self._index)
            return idx

    def embed_tokens(self, text):
        tokens = tokenize(text)
        vecs = np.zeros((len(tokens), self.dim))
        for row, tok in enumerate(tokens):
            vecs[row, self._slot(tok)] = 1.0
        return tokens, vecs


class HashingProvider:
    """Deterministic offline embedder: hashed character n-grams per token.

    Tokens sharing character n-grams get positive cosine, so inflections and
    near-spellings score between 0 and 1. Stable across processes and
    platforms (blake2b, not ``hash()``).
    """

    thread_safe = True

    def __init__(self, dim: int = 512, ngram: int = 3):
        self.dim = dim
        self.ngram = ngram
        self._cache: dict[str, np.ndarray] = {}

    def _bucket(self, gram: str) -> int:
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little") % self.dim

    def token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            vec = np.zeros(self.dim)
            padded = f"<{token}>"
            n = min(self.ngram, len(padded))
            for i in range(len(padded) - n + 1):
                vec[self._bucket(padded[i : i + n])] += 1.0
            # whole-token feature keeps exact matches dominant
            vec[self._bucket(padded)] += float(n)
            vec /= np.linalg.norm(vec)
            self._cache[token] = vec
        return vec

    def embed_tokens(self, text):
        tokens = tokenize(text)
        if not tokens:
            return tokens, np.zeros((0, self.dim))
        return tokens, np.stack([self.token_vector(t) for t in tokens])


class RemoteEmbeddingProvider:
    """Client for an HTTP token-embedding service.

    Request: ``POST {"model": ..., "text": ...}``.
    Response: ``{"tokens": [str, ...], "vectors": [[float, ...], ...]}``.
    """

    thread_safe = True

    def __init__(self, endpoint: str, model: str, client: httpx.Client | None = None,
                 timeout: float = 60.0):
        self.endpoint = endpoint
        self.model = model
        self._client = client or httpx.Client(timeout=timeout)

    def embed_tokens(self, text):
        try:
            resp = self._client.post(self.endpoint, json={"model": self.model, "text": text})
            resp.raise_for_status()
            body = resp.json()
            tokens = [str(t) for t in body["tokens"]]
            vectors = np.asarray(body["vectors"], dtype=float)
        except (httpx.HTTPError, KeyError, TypeError, ValueError) as exc:
            raise ProviderFailure(f"embedding request failed: {exc}") from exc
        if not tokens:
            return tokens, np.zeros((0, 1))
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens) or vectors.shape[1] == 0:
            raise ProviderFailure(
                f"expected {len(tokens)} vectors, got array of shape {vectors.shape}"
            )
        return tokens, vectors


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ZeroVector("cosine of a zero vector is undefined")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def _unit_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    return np.divide(mat, norms, out=np.zeros_like(mat), where=norms > 0)


def _embed(provider: EmbeddingProvider, text: str, side: str) -> np.ndarray:
    try:
        tokens, vecs = provider.embed_tokens(text)
    except ProviderFailure:
        raise
    except Exception as exc:
        raise ProviderFailure(f"provider raised on {side}: {exc}") from exc
    if len(tokens) == 0:
        raise EmptyTokenization(f"{side} produced no tokens")
    vecs = np.asarray(vecs, dtype=float)
    if vecs.shape[0] != len(tokens):
        raise ProviderFailure(f"{side}: {len(tokens)} tokens but {vecs.shape[0]} vectors")
    return vecs


def bertscore(candidate: str, reference: str, provider: EmbeddingProvider) -> BertScoreResult:
    cand = _embed(provider, candidate, "candidate")
    ref = _embed(provider, reference, "reference")
    if cand.shape[1] != ref.shape[1]:
        raise ProviderFailure(f"embedding dims differ: {cand.shape[1]} vs {ref.shape[1]}")
    sim = _unit_rows(cand) @ _unit_rows(ref).T
    p = float(sim.max(axis=1).mean())
    r = float(sim.max(axis=0).mean())
    f1 = 2 * p * r / (p + r) if p + r != 0 else 0.0
    return BertScoreResult(p, r, f1)


def make_provider(kind: str, **opts) -> EmbeddingProvider:
    if kind == "hashing":
        return HashingProvider(dim=int(opts.get("dim", 512)), ngram=int(opts.get("ngram", 3)))
    if kind == "onehot":
        return OneHotProvider(dim=int(opts.get("dim", 4096)))
    if kind == "remote":
        return RemoteEmbeddingProvider(opts["endpoint"], opts["model"])
    raise ValueError(f"unknown embedding provider kind {kind!r}")
