"""Corpus ingestion, unigram language models, and token noise injection."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

# CJK unified ideographs (base + ext A + compatibility). Each matched
# character becomes its own token; other scripts tokenize as alnum runs.
_CJK = r"㐀-䶿一-鿿豈-﫿"
_TOKEN_RE = re.compile(rf"[{_CJK}]|(?:(?![{_CJK}])[^\W_])+")


class CorpusError(Exception):
    """Malformed or inconsistent corpus/query/qrels input."""


def tokenize(text: str) -> list[str]:
    """Lowercase and split into tokens.

    Alphanumeric runs are tokens; every CJK codepoint is its own token.
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Document:
    id: str
    tokens: tuple[str, ...]
    counts: dict[str, int]
    length: int

    @classmethod
    def from_text(cls, doc_id: str, text: str) -> "Document":
        tokens = tuple(tokenize(text))
        counts: dict[str, int] = {}
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
        return cls(id=doc_id, tokens=tokens, counts=counts, length=len(tokens))


@dataclass
class Corpus:
    docs: list[Document]
    by_id: dict[str, Document] = field(init=False)
    vocab: dict[str, int] = field(init=False)

    def __post_init__(self) -> None:
        self.by_id = {}
        for d in self.docs:
            if d.id in self.by_id:
                raise CorpusError(f"duplicate document id {d.id!r}")
            self.by_id[d.id] = d
        vocab: dict[str, int] = {}
        for d in self.docs:
            for t in d.counts:
                if t not in vocab:
                    vocab[t] = len(vocab)
        self.vocab = vocab
        self._df: dict[str, int] | None = None

    def __len__(self) -> int:
        return len(self.docs)

    def doc_ids(self) -> list[str]:
        return [d.id for d in self.docs]

    def document_frequency(self) -> dict[str, int]:
        if self._df is None:
            df: dict[str, int] = {}
            for d in self.docs:
                for t in d.counts:
                    df[t] = df.get(t, 0) + 1
            self._df = df
        return self._df


@dataclass
class CollectionModel:
    """Background unigram distribution P(t|C) over the corpus vocabulary."""

    vocab: dict[str, int]
    prob_vec: np.ndarray
    total_tokens: int

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    @property
    def probs(self) -> dict[str, float]:
        return {t: float(self.prob_vec[i]) for t, i in self.vocab.items()}

    def prob(self, term: str) -> float:
        i = self.vocab.get(term)
        return float(self.prob_vec[i]) if i is not None else 0.0

    @classmethod
    def from_corpus(cls, corpus: Corpus) -> "CollectionModel":
        vec = np.zeros(len(corpus.vocab))
        total = 0
        for d in corpus.docs:
            for t, c in d.counts.items():
                vec[corpus.vocab[t]] += c
            total += d.length
        if total == 0:
            raise CorpusError("empty corpus: no tokens")
        return cls(vocab=corpus.vocab, prob_vec=vec / total, total_tokens=total)


@dataclass
class DocModel:
    """Smoothed document unigram distribution P(t|theta_d)."""

    owner: str
    vocab: dict[str, int]
    prob_vec: np.ndarray

    @property
    def probs(self) -> dict[str, float]:
        return {t: float(self.prob_vec[i]) for t, i in self.vocab.items()}

    def prob(self, term: str) -> float:
        i = self.vocab.get(term)
        return float(self.prob_vec[i]) if i is not None else 0.0


def build_doc_model(doc: Document, collection: CollectionModel, lambda_d: float = 0.5) -> DocModel:
    """Jelinek-Mercer smoothed document model.

    P(t|theta_d) = (1 - lambda_d) * count(t, d) / |d| + lambda_d * P(t|C)
    """
    if not 0.0 <= lambda_d <= 1.0:
        raise ValueError(f"lambda_d must be in [0, 1], got {lambda_d}")
    if doc.length == 0:
        raise CorpusError(f"document {doc.id!r} is empty")
    ml = np.zeros(len(collection.vocab))
    for t, c in doc.counts.items():
        ml[collection.vocab[t]] = c / doc.length
    vec = (1.0 - lambda_d) * ml + lambda_d * collection.prob_vec
    return DocModel(owner=doc.id, vocab=collection.vocab, prob_vec=vec)


@dataclass(frozen=True)
class Query:
    qid: str
    text: str
    tokens: tuple[str, ...]


JudgmentSet = dict[str, set]  # qid -> set of relevant doc ids


def _read_jsonl(path, required_keys):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            for key in required_keys:
                if key not in obj:
                    raise CorpusError(f"{path}:{lineno}: missing key {key!r}")
            rows.append(obj)
    return rows


def ingest(corpus_path, queries_path, qrels_path) -> tuple[Corpus, list[Query], JudgmentSet]:
    """Load corpus, queries, and judgments; validate cross-references.

    Corpus and queries are JSON-lines; qrels is a two-column TSV
    (qid<TAB>docid) with '#' comment lines ignored. Documents that
    tokenize to nothing are rejected.
    """
    doc_rows = _read_jsonl(corpus_path, ("id", "text"))
    if not doc_rows:
        raise CorpusError(f"{corpus_path}: no documents")
    docs = []
    for row in doc_rows:
        doc = Document.from_text(str(row["id"]), str(row["text"]))
        if doc.length == 0:
            raise CorpusError(f"document {doc.id!r} has no tokens after filtering")
        docs.append(doc)
    corpus = Corpus(docs)

    queries = [
        Query(qid=str(r["qid"]), text=str(r["text"]), tokens=tuple(tokenize(str(r["text"]))))
        for r in _read_jsonl(queries_path, ("qid", "text"))
    ]

    judgments: JudgmentSet = {}
    with open(qrels_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise CorpusError(f"{qrels_path}:{lineno}: expected 'qid<TAB>docid'")
            qid, docid = parts
            if docid not in corpus.by_id:
                raise CorpusError(f"{qrels_path}:{lineno}: unknown document id {docid!r}")
            judgments.setdefault(qid, set()).add(docid)
    return corpus, queries, judgments


def inject_noise(corpus: Corpus, rate: float, seed: int) -> Corpus:
    """Independently replace tokens with draws from P(t|C) to emulate
    recognition errors. Deterministic given the seed; rate 0 is identity."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate must be in [0, 1], got {rate}")
    if rate == 0.0:
        return corpus
    rng = np.random.default_rng(seed)
    collection = CollectionModel.from_corpus(corpus)
    terms = list(collection.vocab)
    probs = collection.prob_vec
    docs = []
    for d in corpus.docs:
        flips = rng.random(d.length) < rate
        replacements = rng.choice(len(terms), size=d.length, p=probs)
        tokens = tuple(
            terms[replacements[i]] if flips[i] else tok for i, tok in enumerate(d.tokens)
        )
        counts: dict[str, int] = {}
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
        docs.append(Document(id=d.id, tokens=tokens, counts=counts, length=d.length))
    return Corpus(docs)
