import numpy as np
import pytest

from iret.environment import ActionId
from iret.user_sim import (
    SimUser,
    derive_topic_truth,
    respond_documents,
    respond_keyterm,
    respond_request,
    respond_topic,
)

from conftest import make_corpus


class TestRespondDocuments:
    def test_first_relevant(self):
        assert respond_documents(["a", "b", "c", "d"], {"b", "d"}) == "b"

    def test_none_when_absent(self):
        assert respond_documents(["a", "b"], {"z"}) is None

    def test_rank_one(self):
        assert respond_documents(["a", "b"], {"a", "b"}) == "a"


class TestRespondKeyterm:
    def _docs(self, texts):
        corpus = make_corpus(texts)
        return list(corpus.docs)

    def test_in_all_docs(self):
        docs = self._docs({"d1": "t x", "d2": "t y"})
        assert respond_keyterm("t", docs) is True

    def test_exactly_half_is_no(self):
        docs = self._docs({"d1": "t x", "d2": "y z"})
        assert respond_keyterm("t", docs) is False

    def test_two_of_three(self):
        docs = self._docs({"d1": "t x", "d2": "t y", "d3": "z w"})
        assert respond_keyterm("t", docs) is True


class TestRespondRequest:
    def test_idf_zero_term_loses(self):
        # x appears only in the relevant doc; y is in every doc (idf 0)
        corpus = make_corpus({"d1": "x x y", "d2": "y a", "d3": "y b"})
        term = respond_request([corpus.by_id["d1"]], corpus, set())
        assert term == "x"

    def test_exclusion_returns_second_best(self):
        corpus = make_corpus({"d1": "x x y", "d2": "y a", "d3": "y b"})
        term = respond_request([corpus.by_id["d1"]], corpus, {"x"})
        assert term != "x"

    def test_tie_breaks_lexicographic(self):
        corpus = make_corpus({"d1": "m k", "d2": "a b"})
        # k and m both occur once in d1 with equal idf
        assert respond_request([corpus.by_id["d1"]], corpus, set()) == "k"

    def test_all_excluded_errors(self):
        corpus = make_corpus({"d1": "x y"})
        with pytest.raises(ValueError):
            respond_request([corpus.by_id["d1"]], corpus, {"x", "y"})


class TestRespondTopic:
    def test_single_intersection(self):
        rng = np.random.default_rng(0)
        assert respond_topic([0, 1, 2], {1}, rng) == 1

    def test_empty_intersection(self):
        rng = np.random.default_rng(0)
        assert respond_topic([0, 1], {5}, rng) is None

    def test_deterministic_given_seed(self):
        picks = {respond_topic([0, 1, 2], {0, 1, 2}, np.random.default_rng(4)) for _ in range(5)}
        assert len(picks) == 1


class TestSimUser:
    def test_topic_truth_threshold(self, toy_env):
        env, _ = toy_env
        truth = derive_topic_truth(env.topics, env.judgments)
        for qid, zs in truth.items():
            relevant = sorted(env.judgments[qid])
            mean = np.mean([env.topics.doc_topics(d) for d in relevant], axis=0)
            for z in range(env.topics.K):
                assert (z in zs) == (mean[z] >= 1.0 / env.topics.K)

    def test_episode_replay_bit_identical(self, toy_env):
        env, _ = toy_env
        user = SimUser(env.corpus, env.judgments, env.topics, seed=5)

        def run():
            user.reset(17)
            actions = iter(
                [ActionId.RETURN_TOPIC, ActionId.RETURN_DOCUMENTS, ActionId.SHOW_LIST]
            )
            return env.run_episode(lambda f: next(actions), user, "q0", ("apple", "banana"))

        t1, r1 = run()
        t2, r2 = run()
        assert r1 == r2
        for e1, e2 in zip(t1, t2):
            np.testing.assert_array_equal(e1.features, e2.features)
            assert e1.reward == e2.reward

    def test_respond_documents_payload(self, toy_env, toy_user):
        env, _ = toy_env
        state = env.start("q0", ("apple", "banana"))
        payload = env.propose(state, ActionId.RETURN_DOCUMENTS)
        response = toy_user.respond(ActionId.RETURN_DOCUMENTS, payload, "q0")
        assert response["doc"] in env.judgments["q0"]
