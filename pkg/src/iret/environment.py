"""The dialogue MDP: session state, the five interaction actions, rewards,
average precision, and episode execution."""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .corpus import Corpus
from .features import FeatureExtractor
from .retrieval import (
    NegativeModel,
    QueryModel,
    RankedList,
    SearchIndex,
    add_key_term,
    expand_query,
    interpolate_topic,
    update_negative,
)
from .topics import TopicModel


class EnvironmentError_(Exception):
    pass


class ActionId(IntEnum):
    RETURN_DOCUMENTS = 0
    RETURN_KEYTERM = 1
    RETURN_REQUEST = 2
    RETURN_TOPIC = 3
    SHOW_LIST = 4


NON_TERMINAL_ACTIONS = (
    ActionId.RETURN_DOCUMENTS,
    ActionId.RETURN_KEYTERM,
    ActionId.RETURN_REQUEST,
    ActionId.RETURN_TOPIC,
)

ACTION_NAMES = {
    ActionId.RETURN_DOCUMENTS: "return_documents",
    ActionId.RETURN_KEYTERM: "return_keyterm",
    ActionId.RETURN_REQUEST: "return_request",
    ActionId.RETURN_TOPIC: "return_topic",
    ActionId.SHOW_LIST: "show_list",
}
ACTION_BY_NAME = {v: k for k, v in ACTION_NAMES.items()}


@dataclass(frozen=True)
class RewardConfig:
    tau: float = 1000.0
    costs: dict = field(
        default_factory=lambda: {
            ActionId.RETURN_DOCUMENTS: 30.0,
            ActionId.RETURN_KEYTERM: 10.0,
            ActionId.RETURN_REQUEST: 50.0,
            ActionId.RETURN_TOPIC: 20.0,
            ActionId.SHOW_LIST: 0.0,
        }
    )
    t_max: int = 5
    gamma: float = 0.9

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.costs.get(ActionId.SHOW_LIST, 0.0) != 0.0:
            raise ValueError("show-list cost is fixed at 0")


@dataclass(frozen=True)
class QueryExpansionParams:
    alpha: float = 0.5
    lambda_f: float = 0.5
    mu: float = 0.2
    em_iters: int = 30
    keyterm_w: float = 0.3
    topic_w: float = 0.3


@dataclass(frozen=True)
class SessionState:
    qid: str
    query: QueryModel
    neg: NegativeModel
    ranked: RankedList
    turn: int = 0
    asked_terms: frozenset = frozenset()
    terminal: bool = False


@dataclass(frozen=True)
class StepResult:
    reward: float
    state: SessionState
    terminal: bool
    payload: dict
    action: ActionId  # the action actually charged (ShowList when the cap forces it)


@dataclass(frozen=True)
class Experience:
    features: np.ndarray
    action: ActionId
    reward: float
    next_features: np.ndarray
    terminal: bool


def average_precision(ranked: RankedList, relevant: set) -> float:
    """AP of the full list against a binary relevant-document set.

    Accumulated in exact rational arithmetic so the float result is the
    correctly rounded value of the underlying rational number.
    """
    if not relevant:
        raise ValueError("relevant set is empty")
    hits = 0
    total = Fraction(0)
    for i, (doc_id, _) in enumerate(ranked.entries, start=1):
        if doc_id in relevant:
            hits += 1
            total += Fraction(hits, i)
    return float(total / len(relevant))


class Environment:
    """Holds the shared immutable retrieval machinery and applies MDP steps.

    Per-session state lives in SessionState values; the environment itself
    is safe to share across concurrent sessions.
    """

    def __init__(
        self,
        index: SearchIndex,
        topics: TopicModel,
        judgments: dict,
        extractor: FeatureExtractor,
        reward: RewardConfig | None = None,
        expansion: QueryExpansionParams | None = None,
        beta: float = 0.3,
        topic_menu_size: int = 5,
    ):
        self.index = index
        self.corpus: Corpus = index.corpus
        self.topics = topics
        self.judgments = judgments
        self.extractor = extractor
        self.reward = reward or RewardConfig()
        self.expansion = expansion or QueryExpansionParams()
        self.beta = beta
        self.topic_menu_size = topic_menu_size

    # -- session lifecycle -------------------------------------------------

    def start(self, qid: str, query_tokens) -> SessionState:
        query = QueryModel.from_tokens(tuple(query_tokens), self.corpus.vocab)
        neg = NegativeModel()
        ranked = self.index.rank(query, neg, self.beta)
        return SessionState(qid=qid, query=query, neg=neg, ranked=ranked)

    def ap(self, state: SessionState) -> float | None:
        relevant = self.judgments.get(state.qid)
        if not relevant:
            return None
        return average_precision(state.ranked, relevant)

    # -- action proposal ---------------------------------------------------

    def _keyterm_candidate(self, state: SessionState) -> str | None:
        """Highest-TF-IDF term over the top-10 docs, excluding key terms
        already in the query and terms already asked about."""
        df = self._df()
        n = len(self.corpus)
        scores: dict[str, float] = {}
        for doc_id in state.ranked.top(10):
            for t, c in self.corpus.by_id[doc_id].counts.items():
                scores[t] = scores.get(t, 0.0) + c * math.log(n / df[t])
        excluded = set(state.query.key_terms) | set(state.asked_terms)
        best = None
        for t in sorted(scores):
            if t in excluded:
                continue
            if best is None or scores[t] > scores[best]:
                best = t
        return best

    def _df(self) -> dict[str, int]:
        cached = getattr(self, "_df_cache", None)
        if cached is None:
            cached = self.corpus.document_frequency()
            self._df_cache = cached
        return cached

    def _topic_menu(self, state: SessionState) -> list[int]:
        mass = np.zeros(self.topics.K)
        for doc_id in state.ranked.top(10):
            mass += self.topics.doc_topics(doc_id)
        order = np.lexsort((np.arange(self.topics.K), -mass))
        return [int(z) for z in order[: self.topic_menu_size]]

    def propose(self, state: SessionState, action: ActionId) -> dict:
        if state.terminal:
            raise EnvironmentError_("session is terminal")
        if action == ActionId.RETURN_DOCUMENTS:
            return {
                "type": "documents",
                "docs": [{"id": d, "score": s} for d, s in state.ranked.entries],
            }
        if action == ActionId.RETURN_KEYTERM:
            term = self._keyterm_candidate(state)
            if term is None:
                return {"type": "keyterm", "term": None, "noop": True}
            return {"type": "keyterm", "term": term}
        if action == ActionId.RETURN_REQUEST:
            return {
                "type": "request",
                "prompt": "Provide an additional query term.",
                "query_terms": sorted(state.query.key_terms),
            }
        if action == ActionId.RETURN_TOPIC:
            menu = self._topic_menu(state)
            return {
                "type": "topics",
                "topics": [{"id": z, "top_terms": self.topics.top_terms(z)} for z in menu],
            }
        if action == ActionId.SHOW_LIST:
            return {
                "type": "final",
                "docs": [{"id": d, "score": s} for d, s in state.ranked.entries],
            }
        raise EnvironmentError_(f"unknown action {action!r}")

    # -- transition --------------------------------------------------------

    def _apply_response(self, state: SessionState, action: ActionId, response: dict):
        """Returns (query, neg, asked_terms) after the user's response."""
        query, neg, asked = state.query, state.neg, state.asked_terms
        exp = self.expansion
        if action == ActionId.RETURN_DOCUMENTS:
            if "doc" not in response:
                raise EnvironmentError_("expected a 'doc' response for return_documents")
            doc_id = response["doc"]
            if doc_id is not None:
                if doc_id not in self.corpus.by_id:
                    raise EnvironmentError_(f"unknown document id {doc_id!r}")
                query = expand_query(
                    query,
                    [self.corpus.by_id[doc_id]],
                    self.index.collection,
                    alpha=exp.alpha,
                    lambda_f=exp.lambda_f,
                    mu=exp.mu,
                    em_iters=exp.em_iters,
                )
        elif action == ActionId.RETURN_KEYTERM:
            term = response.get("term")
            if term is not None:
                asked = asked | {term}
                answer = response.get("answer")
                if answer not in ("yes", "no"):
                    raise EnvironmentError_("expected answer 'yes' or 'no' for return_keyterm")
                if answer == "yes":
                    query = add_key_term(query, term, exp.keyterm_w)
                else:
                    neg = update_negative(neg, term)
        elif action == ActionId.RETURN_REQUEST:
            if "term" not in response:
                raise EnvironmentError_("expected a 'term' response for return_request")
            term = response["term"]
            # terms outside the collection vocabulary cannot shift the ranking
            if term is not None and term in self.corpus.vocab:
                query = add_key_term(query, term, exp.keyterm_w)
        elif action == ActionId.RETURN_TOPIC:
            if "topic" not in response:
                raise EnvironmentError_("expected a 'topic' response for return_topic")
            z = response["topic"]
            if z is not None:
                if not 0 <= int(z) < self.topics.K:
                    raise EnvironmentError_(f"unknown topic id {z!r}")
                query = interpolate_topic(query, self.topics.topic_dist(int(z)), exp.topic_w)
        elif action != ActionId.SHOW_LIST:
            raise EnvironmentError_(f"unknown action {action!r}")
        return query, neg, asked

    def transition(self, state: SessionState, action: ActionId, response: dict) -> StepResult:
        if state.terminal:
            raise EnvironmentError_("session is terminal")
        # The last permitted turn always counts as ShowList: no model update,
        # zero cost, whatever the caller asked for.
        if state.turn + 1 >= self.reward.t_max and action != ActionId.SHOW_LIST:
            action = ActionId.SHOW_LIST
            response = {}
        ap_before = self.ap(state)
        query, neg, asked = self._apply_response(state, action, response)
        ranked = self.index.rank(query, neg, self.beta)
        turn = state.turn + 1
        terminal = action == ActionId.SHOW_LIST or turn >= self.reward.t_max
        next_state = SessionState(
            qid=state.qid,
            query=query,
            neg=neg,
            ranked=ranked,
            turn=turn,
            asked_terms=asked,
            terminal=terminal,
        )
        ap_after = self.ap(next_state)
        cost = self.reward.costs[action]
        if ap_before is None or ap_after is None:
            reward = -cost
        else:
            reward = -cost + self.reward.tau * (ap_after - ap_before)
        payload = {
            "type": "final" if terminal else "continue",
            "docs": [{"id": d, "score": s} for d, s in ranked.entries],
        }
        return StepResult(
            reward=reward, state=next_state, terminal=terminal, payload=payload, action=action
        )

    # -- episodes ----------------------------------------------------------

    def run_episode(self, policy, user, qid: str, query_tokens) -> tuple[list[Experience], float]:
        """Run one interactive session to termination.

        ``policy`` maps a feature vector to an ActionId; ``user`` answers
        each proposed payload via ``respond(action, payload, qid)``.
        """
        state = self.start(qid, query_tokens)
        features = self.extractor(state)
        trajectory: list[Experience] = []
        total = 0.0
        while not state.terminal:
            action = ActionId(policy(features))
            if state.turn + 1 >= self.reward.t_max:
                action = ActionId.SHOW_LIST
            payload = self.propose(state, action)
            response = user.respond(action, payload, qid)
            result = self.transition(state, action, response)
            next_features = self.extractor(result.state)
            trajectory.append(
                Experience(
                    features=features,
                    action=result.action,
                    reward=result.reward,
                    next_features=next_features,
                    terminal=result.terminal,
                )
            )
            total += result.reward
            state = result.state
            features = next_features
        return trajectory, total
