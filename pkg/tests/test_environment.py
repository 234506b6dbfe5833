import numpy as np
import pytest

from iret.environment import (
    ActionId,
    EnvironmentError_,
    average_precision,
)
from iret.retrieval import RankedList


def ranked(*ids):
    return RankedList(entries=tuple((d, -float(i)) for i, d in enumerate(ids)))


class TestAveragePrecision:
    def test_all_relevant_on_top(self):
        assert average_precision(ranked("a", "b", "c", "d"), {"a", "b"}) == 1.0

    def test_no_relevant_in_list(self):
        assert average_precision(ranked("a", "b"), {"zz"}) == 0.0

    def test_hand_value(self):
        # relevant at ranks 1 and 3 -> (1/1 + 2/3) / 2
        assert average_precision(ranked("r1", "x", "r2"), {"r1", "r2"}) == pytest.approx(5 / 6)

    def test_single_relevant_at_rank_r(self):
        for r in range(1, 6):
            ids = [f"x{i}" for i in range(r - 1)] + ["rel"] + ["y1", "y2"]
            assert average_precision(ranked(*ids), {"rel"}) == pytest.approx(1 / r)

    def test_empty_relevant_errors(self):
        with pytest.raises(ValueError):
            average_precision(ranked("a"), set())


class TestPropose(object):
    def test_show_list_payload_is_ranked_list(self, toy_env):
        env, _ = toy_env
        state = env.start("q0", ("apple", "banana"))
        payload = env.propose(state, ActionId.SHOW_LIST)
        assert payload["type"] == "final"
        assert [d["id"] for d in payload["docs"]] == state.ranked.ids()

    def test_keyterm_excludes_asked(self, toy_env):
        env, _ = toy_env
        state = env.start("q0", ("apple", "banana"))
        p1 = env.propose(state, ActionId.RETURN_KEYTERM)
        result = env.transition(
            state, ActionId.RETURN_KEYTERM, {"term": p1["term"], "answer": "no"}
        )
        p2 = env.propose(result.state, ActionId.RETURN_KEYTERM)
        assert p2["term"] != p1["term"]

    def test_topic_menu_ordered_by_mass(self, toy_env):
        env, _ = toy_env
        state = env.start("q0", ("apple", "banana"))
        payload = env.propose(state, ActionId.RETURN_TOPIC)
        offered = [t["id"] for t in payload["topics"]]
        mass = np.zeros(env.topics.K)
        for doc_id in state.ranked.top(10):
            mass += env.topics.doc_topics(doc_id)
        assert offered[0] == int(np.argmax(mass))

    def test_terminal_state_rejected(self, toy_env):
        env, _ = toy_env
        state = env.start("q0", ("apple", "banana"))
        result = env.transition(state, ActionId.SHOW_LIST, {})
        with pytest.raises(EnvironmentError_):
            env.propose(result.state, ActionId.RETURN_DOCUMENTS)


class TestTransition:
    def test_show_list_at_start_zero_reward(self, toy_env):
        env, _ = toy_env
        state = env.start("q0", ("apple", "banana"))
        result = env.transition(state, ActionId.SHOW_LIST, {})
        assert result.reward == 0.0
        assert result.terminal

    def test_reward_arithmetic(self, toy_env):
        env, _ = toy_env
        state = env.start("q0", ("apple", "banana"))
        ap_before = env.ap(state)
        result = env.transition(state, ActionId.RETURN_DOCUMENTS, {"doc": "d0"})
        ap_after = env.ap(result.state)
        expected = -env.reward.costs[ActionId.RETURN_DOCUMENTS] + env.reward.tau * (
            ap_after - ap_before
        )
        assert result.reward == pytest.approx(expected, abs=1e-9)

    def test_none_response_costs_only(self, toy_env):
        env, _ = toy_env
        state = env.start("q0", ("apple", "banana"))
        result = env.transition(state, ActionId.RETURN_DOCUMENTS, {"doc": None})
        assert result.reward == pytest.approx(-env.reward.costs[ActionId.RETURN_DOCUMENTS])
        assert not result.terminal
        assert result.state.query.probs == state.query.probs

    def test_mismatched_response_errors(self, toy_env):
        env, _ = toy_env
        state = env.start("q0", ("apple", "banana"))
        with pytest.raises(EnvironmentError_):
            env.transition(state, ActionId.RETURN_DOCUMENTS, {"answer": "yes"})

    def test_unknown_doc_errors(self, toy_env):
        env, _ = toy_env
        state = env.start("q0", ("apple", "banana"))
        with pytest.raises(EnvironmentError_):
            env.transition(state, ActionId.RETURN_DOCUMENTS, {"doc": "nope"})

    def test_unknown_topic_errors(self, toy_env):
        env, _ = toy_env
        state = env.start("q0", ("apple", "banana"))
        with pytest.raises(EnvironmentError_):
            env.transition(state, ActionId.RETURN_TOPIC, {"topic": 99})

    def test_transition_after_terminal_rejected(self, toy_env):
        env, _ = toy_env
        state = env.start("q0", ("apple", "banana"))
        result = env.transition(state, ActionId.SHOW_LIST, {})
        with pytest.raises(EnvironmentError_):
            env.transition(result.state, ActionId.SHOW_LIST, {})

    def test_keyterm_yes_increases_query_mass(self, toy_env):
        env, _ = toy_env
        state = env.start("q0", ("apple", "banana"))
        payload = env.propose(state, ActionId.RETURN_KEYTERM)
        result = env.transition(
            state, ActionId.RETURN_KEYTERM, {"term": payload["term"], "answer": "yes"}
        )
        assert result.state.query.probs.get(payload["term"], 0.0) > state.query.probs.get(
            payload["term"], 0.0
        )

    def test_keyterm_no_updates_negative(self, toy_env):
        env, _ = toy_env
        state = env.start("q0", ("apple", "banana"))
        payload = env.propose(state, ActionId.RETURN_KEYTERM)
        result = env.transition(
            state, ActionId.RETURN_KEYTERM, {"term": payload["term"], "answer": "no"}
        )
        assert payload["term"] in result.state.neg.terms


class TestEpisodes:
    def test_immediate_show_list(self, toy_env, toy_user):
        env, _ = toy_env
        trajectory, total = env.run_episode(
            lambda feats: ActionId.SHOW_LIST, toy_user, "q0", ("apple", "banana")
        )
        assert len(trajectory) == 1
        assert total == 0.0

    def test_turn_cap(self, toy_env, toy_user):
        env, _ = toy_env
        trajectory, _ = env.run_episode(
            lambda feats: ActionId.RETURN_KEYTERM, toy_user, "q0", ("apple", "banana")
        )
        assert len(trajectory) == env.reward.t_max
        assert trajectory[-1].terminal
        assert all(not e.terminal for e in trajectory[:-1])

    def test_deterministic_replay(self, toy_env, toy_user):
        env, _ = toy_env
        actions = [ActionId.RETURN_DOCUMENTS, ActionId.RETURN_TOPIC, ActionId.SHOW_LIST]

        def run():
            toy_user.reset(11)
            it = iter(actions)
            return env.run_episode(lambda feats: next(it), toy_user, "q0", ("apple", "banana"))

        t1, r1 = run()
        t2, r2 = run()
        assert r1 == r2
        assert [e.reward for e in t1] == [e.reward for e in t2]

    def test_telescoping_return(self, toy_env, toy_user):
        env, queries = toy_env
        rng = np.random.default_rng(0)
        for _ in range(25):
            toy_user.reset(int(rng.integers(2**31)))
            policy = lambda feats: ActionId(int(rng.integers(5)))
            qid = ["q0", "q1"][int(rng.integers(2))]
            tokens = {"q0": ("apple", "banana"), "q1": ("grape", "fig")}[qid]
            state = env.start(qid, tokens)
            ap0 = env.ap(state)
            total = 0.0
            costs = 0.0
            terminal_steps = 0
            while not state.terminal:
                action = policy(None)
                payload = env.propose(state, action)
                response = toy_user.respond(action, payload, qid)
                result = env.transition(state, action, response)
                total += result.reward
                costs += env.reward.costs[result.action]
                terminal_steps += int(result.terminal)
                state = result.state
            assert total == pytest.approx(
                env.reward.tau * (env.ap(state) - ap0) - costs, abs=1e-9
            )
            assert terminal_steps == 1
