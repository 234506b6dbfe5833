"""PLSA topic model fitted with EM, used by the Return Topic action."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus


@dataclass
class TopicModel:
    K: int
    vocab: dict[str, int]
    doc_ids: list[str]
    topic_word: np.ndarray  # (K, V), rows sum to 1
    doc_topic: np.ndarray  # (D, K), rows sum to 1

    def topic_dist(self, z: int) -> dict[str, float]:
        """P(t|z) as a sparse term -> probability map."""
        row = self.topic_word[z]
        return {t: float(row[i]) for t, i in self.vocab.items() if row[i] > 0.0}

    def doc_topics(self, doc_id: str) -> np.ndarray:
        return self.doc_topic[self.doc_ids.index(doc_id)]

    def top_terms(self, z: int, n: int = 10) -> list[str]:
        terms = sorted(self.vocab, key=self.vocab.get)
        order = np.argsort(-self.topic_word[z])[:n]
        return [terms[i] for i in order]

    def log_likelihood(self, counts: np.ndarray) -> float:
        mix = self.doc_topic @ self.topic_word
        mask = counts > 0
        return float(np.sum(counts[mask] * np.log(mix[mask])))

    def to_json(self) -> str:
        terms = sorted(self.vocab, key=self.vocab.get)
        return json.dumps(
            {
                "K": self.K,
                "topic_word": [
                    [[terms[i], row[i]] for i in range(len(terms)) if row[i] > 0.0]
                    for row in self.topic_word.tolist()
                ],
                "doc_topic": {
                    doc_id: self.doc_topic[i].tolist() for i, doc_id in enumerate(self.doc_ids)
                },
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "TopicModel":
        obj = json.loads(text)
        vocab: dict[str, int] = {}
        for row in obj["topic_word"]:
            for term, _ in row:
                if term not in vocab:
                    vocab[term] = len(vocab)
        k = obj["K"]
        topic_word = np.zeros((k, len(vocab)))
        for z, row in enumerate(obj["topic_word"]):
            for term, p in row:
                topic_word[z, vocab[term]] = p
        doc_ids = list(obj["doc_topic"])
        doc_topic = np.array([obj["doc_topic"][d] for d in doc_ids])
        return cls(K=k, vocab=vocab, doc_ids=doc_ids, topic_word=topic_word, doc_topic=doc_topic)


def _count_matrix(corpus: Corpus) -> np.ndarray:
    counts = np.zeros((len(corpus), len(corpus.vocab)))
    for i, d in enumerate(corpus.docs):
        for t, c in d.counts.items():
            counts[i, corpus.vocab[t]] = c
    return counts


def fit_topics(corpus: Corpus, K: int, em_iters: int = 50, seed: int = 0) -> TopicModel:
    """Fit a K-topic PLSA model by EM from a seeded random start."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if K > len(corpus):
        raise ValueError(f"K={K} exceeds number of documents ({len(corpus)})")
    if em_iters < 1:
        raise ValueError(f"em_iters must be >= 1, got {em_iters}")
    rng = np.random.default_rng(seed)
    counts = _count_matrix(corpus)
    n_docs, n_vocab = counts.shape
    topic_word = rng.random((K, n_vocab)) + 1e-2
    topic_word /= topic_word.sum(axis=1, keepdims=True)
    doc_topic = rng.random((n_docs, K)) + 1e-2
    doc_topic /= doc_topic.sum(axis=1, keepdims=True)
    for _ in range(em_iters):
        # E-step folded into the M-step accumulators: posterior
        # P(z|d,t) = P(z|d) P(t|z) / sum_z'
        mix = doc_topic @ topic_word  # (D, V)
        safe = np.where(mix > 0.0, mix, 1.0)
        ratio = counts / safe  # (D, V)
        tw_new = topic_word * (doc_topic.T @ ratio)  # (K, V)
        dt_new = doc_topic * (ratio @ topic_word.T)  # (D, K)
        tw_sums = tw_new.sum(axis=1, keepdims=True)
        topic_word = np.divide(tw_new, tw_sums, out=topic_word, where=tw_sums > 0)
        dt_sums = dt_new.sum(axis=1, keepdims=True)
        doc_topic = np.divide(dt_new, dt_sums, out=doc_topic, where=dt_sums > 0)
    return TopicModel(
        K=K,
        vocab=dict(corpus.vocab),
        doc_ids=corpus.doc_ids(),
        topic_word=topic_word,
        doc_topic=doc_topic,
    )
