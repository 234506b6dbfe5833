"""Feature vectors for the dialogue policy: seven query-performance
predictors, the turn index, and the raw top-N relevance scores."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .retrieval import NegativeModel, QueryModel, RankedList, SearchIndex, expand_query

HANDCRAFTED_NAMES = (
    "clarity",
    "scope",
    "scs",
    "ambiguity",
    "query_collection_sim",
    "wig",
    "query_feedback",
)


@dataclass(frozen=True)
class FeatureConfig:
    n_raw: int = 10
    use_handcrafted: bool = True
    use_raw: bool = True
    clarity_top_r: int = 10
    ambiguity_top_k: int = 10
    wig_top_k: int = 10
    feedback_top_k: int | None = None  # None -> min(50, max(1, |corpus| // 10))
    feedback_em_iters: int = 5
    beta: float = 0.3

    @property
    def dimension(self) -> int:
        return (7 if self.use_handcrafted else 0) + 1 + (self.n_raw if self.use_raw else 0)

    def names(self) -> list[str]:
        out = list(HANDCRAFTED_NAMES) if self.use_handcrafted else []
        out.append("t")
        if self.use_raw:
            out.extend(f"s_{i + 1}" for i in range(self.n_raw))
        return out


def raw_scores(ranked: RankedList, n: int) -> np.ndarray:
    """First n scores of the list; shorter lists pad with the minimum score."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if len(ranked) == 0:
        raise ValueError("empty ranked list")
    scores = ranked.scores()
    if len(scores) < n:
        scores = scores + [scores[-1]] * (n - len(scores))
    return np.asarray(scores[:n])


def _clarity(query, neg, ranked, index, cfg) -> float:
    """KL(theta_RM || P(.|C)) for the relevance model over the top-R docs."""
    top = ranked.entries[: cfg.clarity_top_r]
    weights = np.array([math.exp(s) for _, s in top])
    if weights.sum() <= 0.0:
        weights = np.ones(len(top))
    weights /= weights.sum()
    rm = np.zeros(len(index.corpus.vocab))
    for w, (doc_id, _) in zip(weights, top):
        rm += w * index._probs[index.row_of[doc_id]]
    rm /= rm.sum()
    bg = index.collection.prob_vec
    mask = rm > 0.0
    return float(np.sum(rm[mask] * np.log(rm[mask] / bg[mask])))


def _scope(query, index) -> float:
    """-ln(n_q / |corpus|) with n_q the docs containing any original query term."""
    q_terms = set(query.original_tokens)
    n_q = sum(1 for d in index.corpus.docs if q_terms & d.counts.keys())
    n_q = max(n_q, 1)
    return -math.log(n_q / len(index.corpus))


def _scs(query, index) -> float:
    """Simplified clarity: KL of the query-term relative frequencies from P(.|C)."""
    counts: dict[str, float] = {}
    for t in query.original_tokens:
        counts[t] = counts.get(t, 0.0) + 1.0
    total = sum(counts.values())
    out = 0.0
    for t, c in counts.items():
        p = c / total
        bg = index.collection.prob(t)
        if bg > 0.0:
            out += p * math.log(p / bg)
    return out


def _ambiguity(ranked, index, cfg) -> float:
    """Mean pairwise cosine similarity of count vectors among the top-K docs."""
    top_ids = ranked.top(cfg.ambiguity_top_k)
    if len(top_ids) < 2:
        return 1.0
    vecs = []
    for doc_id in top_ids:
        d = index.corpus.by_id[doc_id]
        v = np.zeros(len(index.corpus.vocab))
        for t, c in d.counts.items():
            v[index.corpus.vocab[t]] = c
        norm = np.linalg.norm(v)
        vecs.append(v / norm if norm > 0 else v)
    mat = np.array(vecs)
    sims = mat @ mat.T
    iu = np.triu_indices(len(top_ids), k=1)
    return float(sims[iu].mean())


def _query_collection_sim(query, index) -> float:
    """Cosine between the query term-frequency vector and collection frequencies."""
    qv = np.zeros(len(index.corpus.vocab))
    for t in query.original_tokens:
        i = index.corpus.vocab.get(t)
        if i is not None:
            qv[i] += 1.0
    cv = index.collection.prob_vec * index.collection.total_tokens
    qn, cn = np.linalg.norm(qv), np.linalg.norm(cv)
    if qn == 0.0 or cn == 0.0:
        return 0.0
    return float(qv @ cv / (qn * cn))


def _collection_score(query, neg, index, beta) -> float:
    """Score of the collection model treated as a pseudo-document."""
    from .corpus import DocModel
    from .retrieval import score

    pseudo = DocModel(owner="__collection__", vocab=index.corpus.vocab,
                      prob_vec=index.collection.prob_vec)
    return score(query, neg, pseudo, beta)


def _wig(query, neg, ranked, index, cfg) -> float:
    """Weighted information gain of the top-K docs over the collection score."""
    top = ranked.entries[: cfg.wig_top_k]
    s_c = _collection_score(query, neg, index, cfg.beta)
    q_len = max(len(query.original_tokens), 1)
    return sum(s - s_c for _, s in top) / (len(top) * q_len)


def _query_feedback(query, neg, ranked, index, cfg) -> float:
    """Overlap of the top-K lists before and after pseudo-relevance feedback."""
    k = cfg.feedback_top_k
    if k is None:
        k = min(50, max(1, len(index.corpus) // 10))
    feedback = [index.corpus.by_id[d] for d in ranked.top(10)]
    expanded = expand_query(
        query, feedback, index.collection, alpha=0.5, lambda_f=0.5, mu=0.2,
        em_iters=cfg.feedback_em_iters,
    )
    reranked = index.rank(expanded, neg, cfg.beta)
    return len(set(ranked.top(k)) & set(reranked.top(k))) / k


def extract_handcrafted(
    query: QueryModel,
    neg: NegativeModel,
    ranked: RankedList,
    index: SearchIndex,
    cfg: FeatureConfig,
) -> np.ndarray:
    """The seven query-performance predictors, in fixed order."""
    if len(ranked) == 0:
        raise ValueError("empty ranked list")
    return np.array(
        [
            _clarity(query, neg, ranked, index, cfg),
            _scope(query, index),
            _scs(query, index),
            _ambiguity(ranked, index, cfg),
            _query_collection_sim(query, index),
            _wig(query, neg, ranked, index, cfg),
            _query_feedback(query, neg, ranked, index, cfg),
        ]
    )


def _static_triple(query, index) -> tuple[float, float, float]:
    """The three predictors fixed by the original query tokens alone."""
    return (_scope(query, index), _scs(query, index), _query_collection_sim(query, index))


class FeatureExtractor:
    """Maps a session state to the fixed-dimension policy input."""

    def __init__(self, index: SearchIndex, cfg: FeatureConfig):
        self.index = index
        self.cfg = cfg
        self._static_cache: dict[tuple, tuple[float, float, float]] = {}

    @property
    def dimension(self) -> int:
        return self.cfg.dimension

    def __call__(self, state) -> np.ndarray:
        parts = []
        if self.cfg.use_handcrafted:
            query, neg, ranked = state.query, state.neg, state.ranked
            if len(ranked) == 0:
                raise ValueError("empty ranked list")
            key = tuple(query.original_tokens)
            static = self._static_cache.get(key)
            if static is None:
                static = _static_triple(query, self.index)
                self._static_cache[key] = static
            scope, scs, qcs = static
            parts.append(
                np.array(
                    [
                        _clarity(query, neg, ranked, self.index, self.cfg),
                        scope,
                        scs,
                        _ambiguity(ranked, self.index, self.cfg),
                        qcs,
                        _wig(query, neg, ranked, self.index, self.cfg),
                        _query_feedback(query, neg, ranked, self.index, self.cfg),
                    ]
                )
            )
        parts.append(np.array([float(state.turn)]))
        if self.cfg.use_raw:
            parts.append(raw_scores(state.ranked, self.cfg.n_raw))
        vec = np.concatenate(parts)
        if not np.all(np.isfinite(vec)):
            raise ValueError("non-finite feature value")
        return vec
