"""Synthetic desk-scale corpus: topic-mixture documents, single-topic
queries, and dominant-topic relevance judgments."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class SynthParams:
    n_docs: int = 500
    n_topics: int = 10
    vocab_size: int = 2000
    doc_length: int = 100
    n_queries: int = 50
    query_length: int = 3
    topic_concentration: float = 0.1  # Dirichlet over words within a topic
    mix_concentration: float = 0.3  # Dirichlet over topics within a doc


def _terms(vocab_size: int) -> list[str]:
    width = len(str(vocab_size - 1))
    return [f"w{i:0{width}d}" for i in range(vocab_size)]


def generate(params: SynthParams, seed: int = 0):
    """Returns (doc rows, query rows, qrel pairs) as in-memory structures."""
    rng = np.random.default_rng(seed)
    terms = _terms(params.vocab_size)
    topic_word = rng.dirichlet(
        [params.topic_concentration] * params.vocab_size, size=params.n_topics
    )
    doc_mix = rng.dirichlet([params.mix_concentration] * params.n_topics, size=params.n_docs)
    dominant = doc_mix.argmax(axis=1)

    # every topic must dominate at least one document so each query has
    # a non-empty relevant set; pin one document per topic
    for z in range(params.n_topics):
        if not np.any(dominant == z):
            i = int(rng.integers(params.n_docs))
            doc_mix[i] = np.full(params.n_topics, 0.1 / params.n_topics)
            doc_mix[i, z] = 0.9
            doc_mix[i] /= doc_mix[i].sum()
            dominant[i] = z

    docs = []
    width = len(str(params.n_docs - 1))
    for i in range(params.n_docs):
        word_dist = doc_mix[i] @ topic_word
        idx = rng.choice(params.vocab_size, size=params.doc_length, p=word_dist)
        docs.append({"id": f"d{i:0{width}d}", "text": " ".join(terms[j] for j in idx)})

    queries = []
    qrels = []
    qwidth = len(str(params.n_queries - 1))
    for qn in range(params.n_queries):
        z = qn % params.n_topics
        idx = rng.choice(params.vocab_size, size=params.query_length, p=topic_word[z])
        qid = f"q{qn:0{qwidth}d}"
        queries.append({"qid": qid, "text": " ".join(terms[j] for j in idx)})
        for i in np.flatnonzero(dominant == z):
            qrels.append((qid, docs[int(i)]["id"]))
    return docs, queries, qrels


def make_synthetic(out_dir, params: SynthParams, seed: int = 0) -> dict:
    """Write corpus.jsonl, queries.jsonl and qrels.tsv; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    docs, queries, qrels = generate(params, seed)
    paths = {
        "corpus": out / "corpus.jsonl",
        "queries": out / "queries.jsonl",
        "qrels": out / "qrels.tsv",
    }
    with open(paths["corpus"], "w", encoding="utf-8") as fh:
        for row in docs:
            fh.write(json.dumps(row) + "\n")
    with open(paths["queries"], "w", encoding="utf-8") as fh:
        for row in queries:
            fh.write(json.dumps(row) + "\n")
    with open(paths["qrels"], "w", encoding="utf-8") as fh:
        fh.write("# qid\tdocid\n")
        for qid, docid in qrels:
            fh.write(f"{qid}\t{docid}\n")
    return {k: str(v) for k, v in paths.items()}
