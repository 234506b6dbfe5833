"""Simulated user: deterministic responders for the four feedback actions."""

from __future__ import annotations

import math

import numpy as np

from .corpus import Corpus
from .environment import ActionId
from .topics import TopicModel


def respond_documents(ranked_ids, relevant: set):
    """First document of the list that is relevant, else None."""
    for doc_id in ranked_ids:
        if doc_id in relevant:
            return doc_id
    return None


def respond_keyterm(term: str, relevant_docs) -> bool:
    """True iff the term occurs in strictly more than half of the relevant docs."""
    docs = list(relevant_docs)
    hits = sum(1 for d in docs if term in d.counts)
    return hits * 2 > len(docs)


def respond_request(relevant_docs, corpus: Corpus, existing_terms: set) -> str:
    """Best TF-IDF term over the relevant documents not already in the query.

    Ties break to the lexicographically smallest term.
    """
    df = corpus.document_frequency()
    n = len(corpus)
    scores: dict[str, float] = {}
    for d in relevant_docs:
        for t, c in d.counts.items():
            scores[t] = scores.get(t, 0.0) + c * math.log(n / df[t])
    best = None
    for t in sorted(scores):
        if t in existing_terms:
            continue
        if best is None or scores[t] > scores[best]:
            best = t
    if best is None:
        raise ValueError("no candidate term outside the existing query terms")
    return best


def respond_topic(offered, truth: set, rng: np.random.Generator):
    """Uniform choice among the offered topics that are truly relevant."""
    candidates = [z for z in offered if z in truth]
    if not candidates:
        return None
    return candidates[int(rng.integers(len(candidates)))]


def derive_topic_truth(topics: TopicModel, judgments: dict) -> dict:
    """Topic z is relevant to query q iff the mean P(z|d) over q's relevant
    documents reaches the uniform-mass threshold 1/K."""
    truth: dict[str, set] = {}
    for qid, relevant in judgments.items():
        doc_rows = [topics.doc_topics(d) for d in sorted(relevant) if d in topics.doc_ids]
        if not doc_rows:
            truth[qid] = set()
            continue
        mean = np.mean(doc_rows, axis=0)
        truth[qid] = {z for z in range(topics.K) if mean[z] >= 1.0 / topics.K}
    return truth


class SimUser:
    """Answers environment payloads following the scripted behaviors above."""

    def __init__(self, corpus: Corpus, judgments: dict, topics: TopicModel, seed: int = 0):
        self.corpus = corpus
        self.judgments = judgments
        self.topics = topics
        self.topic_truth = derive_topic_truth(topics, judgments)
        self._seed = seed
        self.rng = np.random.default_rng(seed)
        self._df = corpus.document_frequency()

    def reset(self, seed: int | None = None) -> None:
        """Restart the random stream (one episode per stream for replays)."""
        self.rng = np.random.default_rng(self._seed if seed is None else seed)

    def _relevant_docs(self, qid: str):
        return [self.corpus.by_id[d] for d in sorted(self.judgments.get(qid, ()))]

    def respond(self, action: ActionId, payload: dict, qid: str) -> dict:
        if action == ActionId.RETURN_DOCUMENTS:
            doc = respond_documents(
                [d["id"] for d in payload["docs"]], self.judgments.get(qid, set())
            )
            return {"doc": doc}
        if action == ActionId.RETURN_KEYTERM:
            term = payload.get("term")
            if term is None:
                return {"term": None}
            yes = respond_keyterm(term, self._relevant_docs(qid))
            return {"term": term, "answer": "yes" if yes else "no"}
        if action == ActionId.RETURN_REQUEST:
            relevant = self._relevant_docs(qid)
            if not relevant:
                return {"term": None}
            existing = set(payload.get("query_terms", ()))
            try:
                term = respond_request(relevant, self.corpus, existing)
            except ValueError:
                term = None
            return {"term": term}
        if action == ActionId.RETURN_TOPIC:
            offered = [t["id"] for t in payload["topics"]]
            z = respond_topic(offered, self.topic_truth.get(qid, set()), self.rng)
            return {"topic": z}
        if action == ActionId.SHOW_LIST:
            return {}
        raise ValueError(f"unknown action {action!r}")
