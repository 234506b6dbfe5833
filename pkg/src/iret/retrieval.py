"""KL-divergence scoring and ranking, query expansion, negative model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import CollectionModel, Corpus, DocModel, build_doc_model


class RetrievalError(Exception):
    pass


@dataclass(frozen=True)
class QueryModel:
    """Query language model theta_q with its key term regularization set.

    ``original_tokens`` keeps the raw query token sequence (with repeats)
    for feature extraction; ``key_terms`` starts as the original query
    terms and grows during the session.
    """

    probs: dict[str, float]
    key_terms: frozenset[str]
    original_tokens: tuple[str, ...]

    @classmethod
    def from_tokens(cls, tokens, vocab) -> "QueryModel":
        """Build the initial relative-frequency model over in-vocabulary tokens."""
        in_vocab = [t for t in tokens if t in vocab]
        if not in_vocab:
            raise RetrievalError("query has no in-vocabulary terms")
        probs: dict[str, float] = {}
        for t in in_vocab:
            probs[t] = probs.get(t, 0.0) + 1.0
        n = len(in_vocab)
        return cls(
            probs={t: c / n for t, c in probs.items()},
            key_terms=frozenset(tokens),
            original_tokens=tuple(tokens),
        )


@dataclass(frozen=True)
class NegativeModel:
    """Uniform model theta_N over terms the user marked irrelevant."""

    terms: frozenset[str] = frozenset()

    @property
    def empty_flag(self) -> bool:
        return not self.terms

    @property
    def probs(self) -> dict[str, float]:
        if not self.terms:
            return {}
        p = 1.0 / len(self.terms)
        return {t: p for t in self.terms}


@dataclass(frozen=True)
class RankedList:
    """(doc id, score) pairs in descending score order, ties by ascending id."""

    entries: tuple[tuple[str, float], ...]

    def __len__(self) -> int:
        return len(self.entries)

    def ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.entries]

    def scores(self) -> list[float]:
        return [s for _, s in self.entries]

    def top(self, k: int) -> list[str]:
        return [doc_id for doc_id, _ in self.entries[:k]]


def _kl_against(probs: dict[str, float], doc_prob) -> float:
    """KL(p || theta_d) over the support of p, natural log."""
    total = 0.0
    for t, p in probs.items():
        if p <= 0.0:
            continue
        q = doc_prob(t)
        if q <= 0.0:
            raise RetrievalError(f"document model assigns zero probability to {t!r}")
        total += p * math.log(p / q)
    return total


def score(query: QueryModel, neg: NegativeModel, doc: DocModel, beta: float) -> float:
    """Relevance score S(q,d) = -[KL(theta_q||theta_d) - beta*KL(theta_N||theta_d)]."""
    if beta < 0.0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    s = -_kl_against(query.probs, doc.prob)
    if not neg.empty_flag:
        s += beta * _kl_against(neg.probs, doc.prob)
    return s


class SearchIndex:
    """Precomputed smoothed document models for vectorized ranking."""

    def __init__(self, corpus: Corpus, collection: CollectionModel, lambda_d: float = 0.5):
        self.corpus = corpus
        self.collection = collection
        self.lambda_d = lambda_d
        self.doc_ids = corpus.doc_ids()
        n_docs, n_vocab = len(corpus), len(corpus.vocab)
        probs = np.tile(lambda_d * collection.prob_vec, (n_docs, 1))
        for i, d in enumerate(corpus.docs):
            for t, c in d.counts.items():
                probs[i, corpus.vocab[t]] += (1.0 - lambda_d) * c / d.length
        self._probs = probs
        with np.errstate(divide="ignore"):
            self._log_probs = np.log(probs)
        self._all_positive = bool(np.all(probs > 0.0))
        # order used for deterministic tie-breaking
        self._id_order = np.argsort(np.argsort(self.doc_ids))
        self.row_of = {doc_id: i for i, doc_id in enumerate(self.doc_ids)}

    def doc_model(self, doc_id: str) -> DocModel:
        i = self.row_of[doc_id]
        return DocModel(owner=doc_id, vocab=self.corpus.vocab, prob_vec=self._probs[i])

    def _cross_entropy_scores(self, probs: dict[str, float]) -> np.ndarray:
        """-KL(p || theta_d) for every document, vectorized over the support."""
        vocab = self.corpus.vocab
        terms = list(probs.keys())
        try:
            all_idx = np.fromiter(map(vocab.__getitem__, terms), np.intp, len(terms))
        except KeyError as exc:
            raise RetrievalError(f"term {exc.args[0]!r} outside collection vocabulary")
        all_vals = np.fromiter(probs.values(), float, len(probs))
        keep = all_vals > 0.0
        idx = all_idx[keep]
        vals_arr = all_vals[keep]
        entropy = float(np.sum(vals_arr * np.log(vals_arr)))
        if self._all_positive and len(idx) * 4 > len(vocab):
            # wide support: a dense matvec beats copying log-prob columns
            dense = np.zeros(len(vocab))
            dense[idx] = vals_arr
            return self._log_probs @ dense - entropy
        cols = self._log_probs[:, idx]
        if not self._all_positive and np.any(np.isneginf(cols)):
            raise RetrievalError("zero document probability on query support")
        return cols @ vals_arr - entropy

    def rank(self, query: QueryModel, neg: NegativeModel, beta: float) -> RankedList:
        scores = self._cross_entropy_scores(query.probs)
        if not neg.empty_flag:
            scores -= beta * self._cross_entropy_scores(neg.probs)
        order = np.lexsort((self._id_order, -scores))
        sorted_scores = scores[order].tolist()
        entries = tuple(
            (self.doc_ids[i], s) for i, s in zip(order.tolist(), sorted_scores)
        )
        return RankedList(entries=entries)


def rank(query: QueryModel, neg: NegativeModel, index: SearchIndex, beta: float) -> RankedList:
    """Full ordering of all documents by S(q,d), ties by ascending doc id."""
    if len(index.corpus) == 0:
        raise RetrievalError("empty corpus")
    return index.rank(query, neg, beta)


def estimate_feedback_model(
    feedback_docs, collection: CollectionModel, lambda_f: float, em_iters: int
) -> dict[str, float]:
    """EM estimate of theta_F assuming feedback tokens come from the mixture
    (1 - lambda_f) * P(t|theta_F) + lambda_f * P(t|C)."""
    counts: dict[str, float] = {}
    for d in feedback_docs:
        for t, c in d.counts.items():
            counts[t] = counts.get(t, 0.0) + c
    terms = sorted(counts)
    c_vec = np.array([counts[t] for t in terms])
    vocab = collection.vocab
    bg_idx = [vocab.get(t, -1) for t in terms]
    bg = np.where(np.array(bg_idx) >= 0, collection.prob_vec[bg_idx], 0.0)
    theta = c_vec / c_vec.sum()
    if lambda_f == 0.0 or em_iters == 0:
        return dict(zip(terms, (c_vec / c_vec.sum()).tolist()))
    for _ in range(em_iters):
        num = (1.0 - lambda_f) * theta
        denom = num + lambda_f * bg
        post = np.divide(num, denom, out=np.zeros_like(num), where=denom > 0)
        weighted = c_vec * post
        total = weighted.sum()
        if total <= 0:
            break
        theta = weighted / total
    return dict(zip(terms, theta.tolist()))


def _mix(a: dict[str, float], b: dict[str, float], w: float) -> dict[str, float]:
    """(1-w)*a + w*b over the union support, dropping zero entries."""
    out: dict[str, float] = {}
    for t, p in a.items():
        v = (1.0 - w) * p
        if v > 0.0:
            out[t] = v
    for t, p in b.items():
        v = w * p
        if v > 0.0:
            out[t] = out.get(t, 0.0) + v
    return out


def expand_query(
    query: QueryModel,
    feedback_docs,
    collection: CollectionModel,
    alpha: float = 0.5,
    lambda_f: float = 0.5,
    mu: float = 0.2,
    em_iters: int = 30,
) -> QueryModel:
    """Query-regularized mixture-model expansion from feedback documents.

    theta_F from EM, pulled toward a uniform distribution over the key
    term set (weight mu), then interpolated into theta_q (weight alpha).
    Empty feedback is a no-op.
    """
    for name, v in (("alpha", alpha), ("lambda_f", lambda_f), ("mu", mu)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {v}")
    feedback_docs = list(feedback_docs)
    if not feedback_docs:
        return query
    theta_f = estimate_feedback_model(feedback_docs, collection, lambda_f, em_iters)
    # anchor only on key terms the collection can score
    anchors = sorted(t for t in query.key_terms if collection.prob(t) > 0.0)
    uniform_key = {t: 1.0 / len(anchors) for t in anchors} if anchors else {}
    regularized = _mix(theta_f, uniform_key, mu) if uniform_key else theta_f
    return QueryModel(
        probs=_mix(query.probs, regularized, alpha),
        key_terms=query.key_terms,
        original_tokens=query.original_tokens,
    )


def add_key_term(query: QueryModel, term: str, w: float = 0.3) -> QueryModel:
    """Add a confirmed key term: grow key_terms and mix in a point mass."""
    if not 0.0 < w < 1.0:
        raise ValueError(f"w must be in (0, 1), got {w}")
    return QueryModel(
        probs=_mix(query.probs, {term: 1.0}, w),
        key_terms=query.key_terms | {term},
        original_tokens=query.original_tokens,
    )


def update_negative(neg: NegativeModel, term: str) -> NegativeModel:
    """Mark a term irrelevant; theta_N stays uniform over the set."""
    if not term:
        raise ValueError("term must be non-empty")
    return NegativeModel(terms=neg.terms | {term})


def interpolate_topic(query: QueryModel, topic_dist: dict[str, float], w_z: float = 0.3) -> QueryModel:
    """Mix a selected topic's word distribution into the query model."""
    if not 0.0 <= w_z <= 1.0:
        raise ValueError(f"w_z must be in [0, 1], got {w_z}")
    return QueryModel(
        probs=_mix(query.probs, topic_dist, w_z),
        key_terms=query.key_terms,
        original_tokens=query.original_tokens,
    )
