"""Interactive teaching sessions over HTTP.

The episode loop is the same EpisodeDriver the oracle uses; the teacher
methods block on queues that the HTTP endpoints feed, so a human answer
travels exactly the code path an oracle answer would (parity by
construction).  One session per server; turn-taking is enforced and
out-of-turn or malformed posts are rejected without touching state.

Endpoints (JSON bodies, schema version 1):
  GET  /state            -> scene, belief snapshot, pending utterance, turn
  POST /instruction      {"text": ...}
  POST /answer           {"objects": [ids]}         (awaiting_answer turn)
  POST /correction       {"text": ..., "object": id} (awaiting_feedback turn)
  POST /proceed          {}                           (accept the action)
"""

from __future__ import annotations

import json
import logging
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

import numpy as np

from . import belief as beliefmod
from .blocks import Pick, Place, REFERENCE_FAILURE, Scene, generate_scene
from .grammar import ParseError, parse_correction, parse_instruction
from .harness import EpisodeDriver, ExperimentConfig, _transition_belief, prior_fn_for
from .logic import THE_N, A, BOTH, EXACTLY_N, N_OF_THE_M
from .policy import make_policy

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1


class ProtocolError(Exception):
    def __init__(self, message, status=409, expected=None):
        super().__init__(message)
        self.status = status
        self.expected = expected


def _expected_cardinality_of(refexp) -> Optional[int]:
    kind = refexp.quant.kind
    if kind in (THE_N, EXACTLY_N, N_OF_THE_M):
        return refexp.quant.n
    if kind == BOTH:
        return 2
    if kind == A:
        return 1
    return None  # universal answers may designate any nonempty set


class HumanTeacher:
    """Blocks the driver thread until the session endpoints supply input."""

    def __init__(self, session):
        self.session = session

    def answer(self, refexp, scene, t):
        with self.session.lock:
            self.session.pending_refexp = refexp
            self.session.pending_action = None
            self.session.pending_scene = scene
        self.session._await("awaiting_answer")
        designation = self.session.answers.get()
        return REFERENCE_FAILURE if designation is None else designation

    def feedback(self, action, scene, t):
        if isinstance(action, Pick):
            utterance = f"(picks {action.obj})"
        elif isinstance(action, Place):
            utterance = f"(places {action.obj} at {action.pos[0]:.2f}, {action.pos[1]:.2f})"
        else:
            utterance = "I have finished the task."
        with self.session.lock:
            self.session.pending_action = action
            self.session.pending_scene = scene
            self.session.pending_refexp = None
        self.session._await("awaiting_feedback", utterance)
        return self.session.corrections.get()


class Session:
    """One turn-taking teaching session driving a single episode at a time."""

    def __init__(self, scene: Scene, policy_kind: str, cfg: ExperimentConfig):
        self.cfg = cfg
        self.scene0 = scene
        self.policy = make_policy(policy_kind, cfg.params)
        self.lock = threading.Lock()
        self.turn = "awaiting_instruction"
        self.utterance: Optional[str] = None
        self.answers: "queue.Queue" = queue.Queue()
        self.corrections: "queue.Queue" = queue.Queue()
        self.driver: Optional[EpisodeDriver] = None
        self.thread: Optional[threading.Thread] = None
        self.belief = _transition_belief(None, scene, cfg)
        self.episode_rewards: list = []
        self.error: Optional[str] = None
        self.last_undo: Optional[dict] = None
        self.pending_refexp = None
        self.pending_action = None
        self.pending_scene: Optional[Scene] = None

    # -- driver side -------------------------------------------------------

    def _await(self, turn: str, utterance: Optional[str] = None) -> None:
        with self.lock:
            self.turn = turn
            if utterance is not None:
                self.utterance = utterance

    def _run_episode(self, text: str) -> None:
        try:
            teacher = HumanTeacher(self)
            driver = EpisodeDriver(
                self.policy, teacher, self.scene0, text, self.belief,
                self.cfg.costs, np.random.default_rng(self.cfg.base_seed),
                attempts_cap=self.cfg.attempts_cap,
                prior_fn=prior_fn_for(self.cfg.prior_mode))
            with self.lock:
                self.driver = driver
            original_ask = driver.ask

            def announced_ask(question):
                with self.lock:
                    self.utterance = question.surface
                return original_ask(question)

            driver.ask = announced_ask
            result = driver.run()
            with self.lock:
                self.belief = result.belief
                self.scene0 = result.scene
                self.episode_rewards = result.rewards
                self.turn = "done"
                self.utterance = "Correct." if result.success else "Episode over."
        except Exception as err:  # surfaced in /state rather than lost in the thread
            log.exception("session episode crashed")
            with self.lock:
                self.error = str(err)
                self.turn = "error"

    # -- endpoint side -------------------------------------------------------

    def post_instruction(self, text: str) -> dict:
        with self.lock:
            if self.turn != "awaiting_instruction":
                raise ProtocolError("instruction posted out of turn",
                                    expected=self.turn)
            try:
                parse_instruction(text)
            except ParseError as err:
                raise ProtocolError(f"cannot parse instruction: {err}", status=400)
            self.turn = "agent_thinking"
            self.utterance = None
        self.thread = threading.Thread(target=self._run_episode, args=(text,), daemon=True)
        self.thread.start()
        return {"ok": True}

    def post_answer(self, object_ids: list, no_referent: bool = False) -> dict:
        with self.lock:
            if self.turn != "awaiting_answer":
                raise ProtocolError("answer posted out of turn", expected=self.turn)
            if no_referent:
                self.turn = "agent_thinking"
            else:
                scene = self.driver.scene if self.driver else self.scene0
                unknown = [o for o in object_ids if o not in scene.ids]
                if unknown:
                    raise ProtocolError(f"unknown object ids {unknown}", status=400)
                want = (_expected_cardinality_of(self.pending_refexp)
                        if self.pending_refexp is not None else None)
                if want is not None and len(object_ids) != want:
                    raise ProtocolError(
                        f"this question needs exactly {want} designated objects",
                        status=400)
                if not object_ids:
                    raise ProtocolError("designate at least one object", status=400)
                self.turn = "agent_thinking"
        self.answers.put(None if no_referent else tuple(object_ids))
        return {"ok": True}

    def post_correction(self, text: str, object_id: str) -> dict:
        with self.lock:
            if self.turn != "awaiting_feedback":
                raise ProtocolError("correction posted out of turn", expected=self.turn)
            scene = self.driver.scene if self.driver else self.scene0
            if object_id not in scene.ids:
                raise ProtocolError(f"unknown object id {object_id!r}", status=400)
            try:
                correction = parse_correction(text, (object_id,))
            except ParseError as err:
                raise ProtocolError(f"cannot parse correction: {err}", status=400)
            self.turn = "agent_thinking"
            self.last_undo = {"object": object_id}
        self.corrections.put(correction)
        return {"ok": True}

    def post_proceed(self) -> dict:
        with self.lock:
            if self.turn != "awaiting_feedback":
                raise ProtocolError("proceed posted out of turn", expected=self.turn)
            self.turn = "agent_thinking"
        self.corrections.put(None)
        return {"ok": True}

    def state(self) -> dict:
        with self.lock:
            driver = self.driver
            scene = driver.scene if driver else self.scene0
            belief = driver.belief if driver and self.turn != "done" else self.belief
            return {
                "version": PROTOCOL_VERSION,
                "turn": self.turn,
                "utterance": self.utterance,
                "error": self.error,
                "scene": {
                    "objects": [
                        {"id": o.id, "x": o.x, "y": o.y, "color": o.color,
                         "shape": o.shape, "texture": o.texture,
                         "held": scene.held == o.id}
                        for o in scene.objects
                    ],
                    "grid": scene.grid,
                },
                "belief": beliefmod.snapshot(belief),
                "transcript": list(driver.events) if driver else [],
                "rewards": list(driver.rewards) if driver else self.episode_rewards,
                "last_undo": self.last_undo,
            }


class _Handler(BaseHTTPRequestHandler):
    session: Session = None  # assigned by serve()

    def log_message(self, fmt, *args):
        log.debug("http: " + fmt, *args)

    def _send(self, code: int, payload: dict) -> None:
        body = json.dumps(payload, sort_keys=True).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self):
        self._send(200, {})

    def do_GET(self):
        if self.path.rstrip("/") in ("", "/state"):
            self._send(200, self.session.state())
        else:
            self._send(404, {"error": f"no such endpoint {self.path!r}"})

    def do_POST(self):
        length = int(self.headers.get("Content-Length", "0") or 0)
        try:
            payload = json.loads(self.rfile.read(length) or b"{}")
        except json.JSONDecodeError:
            self._send(400, {"error": "body is not valid JSON"})
            return
        try:
            if self.path == "/instruction":
                out = self.session.post_instruction(str(payload.get("text", "")))
            elif self.path == "/answer":
                out = self.session.post_answer(list(payload.get("objects", [])),
                                               bool(payload.get("no_referent", False)))
            elif self.path == "/correction":
                out = self.session.post_correction(str(payload.get("text", "")),
                                                   str(payload.get("object", "")))
            elif self.path == "/proceed":
                out = self.session.post_proceed()
            else:
                self._send(404, {"error": f"no such endpoint {self.path!r}"})
                return
            self._send(200, out)
        except ProtocolError as err:
            self._send(err.status, {"error": str(err), "expected_turn": err.expected})


def make_server(scene: Scene, policy_kind: str, cfg: ExperimentConfig,
                host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    session = Session(scene, policy_kind, cfg)
    handler = type("BoundHandler", (_Handler,), {"session": session})
    server = ThreadingHTTPServer((host, port), handler)
    server.session = session
    return server


def serve(seed: int, policy_kind: str, cfg: ExperimentConfig,
          host: str = "127.0.0.1", port: int = 8321) -> None:
    scene = generate_scene(seed, cfg.scene)
    server = make_server(scene, policy_kind, cfg, host, port)
    log.info("session server on http://%s:%d (scene seed %d, policy %s)",
             host, port, seed, policy_kind)
    print(f"serving teaching session on http://{host}:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
