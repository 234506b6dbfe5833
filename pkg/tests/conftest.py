import json

import pytest

from iret.corpus import CollectionModel, Corpus, Document, ingest
from iret.environment import (
    Environment,
    QueryExpansionParams,
    RewardConfig,
)
from iret.features import FeatureConfig, FeatureExtractor
from iret.retrieval import SearchIndex
from iret.topics import fit_topics
from iret.user_sim import SimUser


def make_corpus(texts: dict) -> Corpus:
    return Corpus([Document.from_text(doc_id, text) for doc_id, text in texts.items()])


def write_dataset(tmp_path, docs, queries, qrels):
    corpus_path = tmp_path / "corpus.jsonl"
    queries_path = tmp_path / "queries.jsonl"
    qrels_path = tmp_path / "qrels.tsv"
    corpus_path.write_text(
        "".join(json.dumps({"id": i, "text": t}) + "\n" for i, t in docs.items())
    )
    queries_path.write_text(
        "".join(json.dumps({"qid": q, "text": t}) + "\n" for q, t in queries.items())
    )
    qrels_path.write_text("".join(f"{q}\t{d}\n" for q, d in qrels))
    return corpus_path, queries_path, qrels_path


TOY_DOCS = {
    "d0": "apple banana apple cherry",
    "d1": "banana banana cherry date",
    "d2": "cherry date elderberry fig",
    "d3": "apple apple apple banana",
    "d4": "fig grape fig grape date",
    "d5": "grape elderberry grape fig",
}
TOY_QUERIES = {"q0": "apple banana", "q1": "grape fig"}
TOY_QRELS = [("q0", "d0"), ("q0", "d3"), ("q1", "d4"), ("q1", "d5")]


@pytest.fixture(scope="session")
def toy_dataset(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("toy")
    paths = write_dataset(tmp, TOY_DOCS, TOY_QUERIES, TOY_QRELS)
    return ingest(*paths)


@pytest.fixture(scope="session")
def toy_env(toy_dataset):
    corpus, queries, judgments = toy_dataset
    collection = CollectionModel.from_corpus(corpus)
    index = SearchIndex(corpus, collection, lambda_d=0.5)
    topics = fit_topics(corpus, K=2, em_iters=20, seed=7)
    cfg = FeatureConfig(n_raw=5, feedback_em_iters=3)
    env = Environment(
        index=index,
        topics=topics,
        judgments=judgments,
        extractor=FeatureExtractor(index, cfg),
        reward=RewardConfig(tau=1000.0, t_max=5),
        expansion=QueryExpansionParams(em_iters=10),
    )
    return env, queries


@pytest.fixture
def toy_user(toy_env):
    env, _ = toy_env
    return SimUser(env.corpus, env.judgments, env.topics, seed=3)
