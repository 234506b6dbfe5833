"""HTTP session service: lets a live human replace the simulated user."""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .agent_dqn import QNetwork, select_action
from .baselines import RandomPolicy
from .corpus import tokenize
from .environment import ACTION_BY_NAME, ACTION_NAMES, ActionId
from .harness import Workbench

EXPECTED_KEYS = {
    "documents": "doc",
    "keyterm": "answer",
    "request": "term",
    "topics": "topic",
}


@dataclass
class Session:
    id: str
    qid: str
    policy_name: str
    state: object
    features: np.ndarray
    pending_action: ActionId | None
    pending_payload: dict | None
    transcript: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_access: float = field(default_factory=time.monotonic)
    total_reward: float = 0.0
    final_payload: dict | None = None


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


class PolicyRegistry:
    """Named policies plus fixed-sequence policies (``seq:a,b,...``)."""

    def __init__(self, bench: Workbench, dqn_net: QNetwork | None = None, seed: int = 0):
        self.bench = bench
        self.dqn_net = dqn_net
        self.seed = seed

    def names(self) -> list[str]:
        names = ["random"]
        if self.dqn_net is not None:
            names.append("dqn")
        return names

    def create(self, name: str):
        """Returns (policy callable, q_values callable or None)."""
        if name == "random":
            return RandomPolicy(self.seed), None
        if name == "dqn" and self.dqn_net is not None:
            net = self.dqn_net
            rng = np.random.default_rng(self.seed)
            return (lambda feats: select_action(net, feats, 0.0, rng),
                    lambda feats: net.forward(feats))
        if name.startswith("seq:"):
            actions = [ACTION_BY_NAME[n.strip()] for n in name[4:].split(",")]
            it = iter(actions)
            return (lambda feats: next(it, ActionId.SHOW_LIST)), None
        raise KeyError(name)


def create_app(bench: Workbench, dqn_net: QNetwork | None = None, seed: int = 0,
               idle_expiry_s: float = 1800.0) -> FastAPI:
    app = FastAPI(title="interactive retrieval session service")
    env = bench.env
    registry = PolicyRegistry(bench, dqn_net, seed)
    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()
    query_text_by_qid = {qid: tokens for qid, tokens in bench.queries}

    def _purge() -> None:
        now = time.monotonic()
        with store_lock:
            stale = [sid for sid, s in sessions.items()
                     if now - s.last_access > idle_expiry_s]
            for sid in stale:
                del sessions[sid]

    def _propose_next(session: Session, policy) -> None:
        """Ask the policy for the next action and stage its payload."""
        action = ActionId(policy(session.features))
        if session.state.turn + 1 >= env.reward.t_max:
            action = ActionId.SHOW_LIST
        payload = env.propose(session.state, action)
        session.pending_action = action
        session.pending_payload = payload
        session.transcript.append(
            {"action": ACTION_NAMES[action], "payload": payload, "response": None,
             "reward": None}
        )

    @app.get("/policies")
    def list_policies():
        return {"policies": registry.names()}

    @app.get("/docs/{doc_id}")
    def get_doc(doc_id: str):
        doc = env.corpus.by_id.get(doc_id)
        if doc is None:
            return _error(404, f"unknown document {doc_id!r}")
        return {"id": doc.id, "text": " ".join(doc.tokens)}

    @app.post("/sessions")
    def create_session(body: dict):
        _purge()
        query = (body.get("query") or "").strip()
        policy_name = body.get("policy", "random")
        if not query:
            return _error(400, "query must be non-empty")
        try:
            policy, q_values = registry.create(policy_name)
        except KeyError:
            return _error(404, f"unknown policy {policy_name!r}")
        qid = body.get("qid") or f"live-{uuid.uuid4().hex[:8]}"
        tokens = query_text_by_qid.get(qid) or tuple(tokenize(query))
        try:
            state = env.start(qid, tokens)
        except Exception as exc:
            return _error(400, str(exc))
        session = Session(
            id=uuid.uuid4().hex,
            qid=qid,
            policy_name=policy_name,
            state=state,
            features=env.extractor(state),
            pending_action=None,
            pending_payload=None,
        )
        session._policy = policy
        session._q_values = q_values
        _propose_next(session, policy)
        with store_lock:
            sessions[session.id] = session
        if session.pending_action == ActionId.SHOW_LIST:
            # the policy ended immediately; resolve the terminal step now
            result = env.transition(session.state, ActionId.SHOW_LIST, {})
            session.transcript[-1]["response"] = {}
            session.transcript[-1]["reward"] = result.reward
            session.total_reward += result.reward
            session.state = result.state
            session.final_payload = result.payload
            session.pending_action = None
            session.pending_payload = None
            return {"session_id": session.id, "action": "show_list",
                    "payload": result.payload, "terminal": True}
        return {
            "session_id": session.id,
            "action": ACTION_NAMES[session.pending_action],
            "payload": session.pending_payload,
            "terminal": False,
        }

    @app.post("/sessions/{session_id}/step")
    def step_session(session_id: str, body: dict):
        session = sessions.get(session_id)
        if session is None:
            return _error(404, f"unknown session {session_id!r}")
        with session.lock:
            session.last_access = time.monotonic()
            if session.pending_action is None:
                return _error(400, "session is finished")
            action = session.pending_action
            payload = session.pending_payload
            expected = EXPECTED_KEYS.get(payload["type"])
            if payload["type"] == "keyterm" and payload.get("term") is None:
                expected = None  # degenerate proposal: nothing to answer
            if expected is not None and expected not in body:
                return _error(
                    400,
                    f"expected a {expected!r} field for a {payload['type']} payload",
                )
            response = dict(body)
            if action == ActionId.RETURN_KEYTERM:
                response["term"] = payload.get("term")
            try:
                result = env.transition(session.state, action, response)
            except Exception as exc:
                return _error(400, str(exc))
            features = env.extractor(result.state)
            session.transcript[-1]["response"] = body
            session.transcript[-1]["reward"] = (
                result.reward if session.qid in env.judgments else None
            )
            session.total_reward += result.reward
            session.state = result.state
            session.features = features
            if result.terminal:
                session.final_payload = result.payload
                session.pending_action = None
                session.pending_payload = None
                return {"action": "show_list", "payload": result.payload, "terminal": True}
            _propose_next(session, session._policy)
            if session.pending_action == ActionId.SHOW_LIST:
                final = env.transition(session.state, ActionId.SHOW_LIST, {})
                session.transcript[-1]["response"] = {}
                session.transcript[-1]["reward"] = (
                    final.reward if session.qid in env.judgments else None
                )
                session.total_reward += final.reward
                session.state = final.state
                session.final_payload = final.payload
                session.pending_action = None
                session.pending_payload = None
                return {"action": "show_list", "payload": final.payload, "terminal": True}
            return {
                "action": ACTION_NAMES[session.pending_action],
                "payload": session.pending_payload,
                "terminal": False,
            }

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = sessions.get(session_id)
        if session is None:
            return _error(404, f"unknown session {session_id!r}")
        session.last_access = time.monotonic()
        out = {
            "session_id": session.id,
            "qid": session.qid,
            "policy": session.policy_name,
            "terminal": session.pending_action is None,
            "transcript": session.transcript,
            "total_reward": session.total_reward,
        }
        if session.final_payload is not None:
            out["final"] = session.final_payload
        if session._q_values is not None:
            out["q_values"] = [float(v) for v in session._q_values(session.features)]
        return out

    return app
