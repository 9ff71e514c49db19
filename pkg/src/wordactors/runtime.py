"""A small serialized-actor runtime with a seeded deterministic scheduler.

Actors process one message at a time.  Posting is asynchronous: an envelope
goes into a pending pool and is delivered later, in an order chosen by a
seeded random number generator, so arrival order is unpredictable in
principle yet exactly reproducible per seed.  Delivering one envelope runs,
atomically: the receiving behavior's pre-distribution rule (which may
forward copies of the message), the handler itself (the computation), and
the post-distribution rule.  Every arrival is recorded as one event whose
causes are the events that posted the message.

Messages here are plain envelope values rather than actors in their own
right; the distribution hooks preserve the observable effect (forwarding
decided by message plus receiver state, recorded as extra sends of the
same arrival event).

Two modes share one semantics contract.  The normative ``sequential`` mode
delivers one envelope at a time.  The ``parallel`` mode picks, per round, a
batch of pending envelopes addressed to pairwise distinct actors and
delivers the whole batch before considering messages posted meanwhile; the
recorded network is still a valid linearization, it just explores a
different legal schedule.  Handlers never touch other actors' state, so no
locking is needed in either mode.

Synchronous services (unification, taxonomy queries, lexicon lookup) are
pure evaluations callable only from inside a computation event via
``request``; a blocking call to a pure function satisfies the request-reply
contract without a second scheduling layer.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from . import events as ev
from .features import FeatureStructure, render_fs


class ContractViolation(RuntimeError):
    """An operation was used outside its stated preconditions."""


class HandlerFailure(RuntimeError):
    """A handler raised; identifies the event, hides partial state."""


class LivelockError(RuntimeError):
    """Step ceiling exceeded; carries the trace recorded so far."""

    def __init__(self, message: str, network: ev.EventNetwork):
        super().__init__(message)
        self.network = network


@dataclass
class MessageEnvelope:
    key: str
    params: dict
    initiator: Optional[int]
    sender: Optional[int]
    envelope_id: int


@dataclass
class ActorState:
    """Base state: named acquaintances (ids or id lists) plus whatever a
    behavior adds in subclasses."""
    acquaintances: dict = field(default_factory=dict)


@dataclass
class BehaviorDef:
    """Executable handlers plus their declarative mirror.

    ``action_trees`` describe, per message key, the sends a handler may
    perform (Seq / If / Send / Create / Become nodes); ``distribution_sends``
    declare the keys the pre/post-distribution hooks may forward.  The
    runtime enforces conformance: a computation may only emit keys that its
    declaration admits.
    """
    name: str
    handlers: dict = field(default_factory=dict)
    action_trees: dict = field(default_factory=dict)
    distribution_sends: dict = field(default_factory=dict)
    pre_distribution: dict = field(default_factory=dict)
    post_distribution: dict = field(default_factory=dict)

    def allowed_keys(self, key: str) -> frozenset:
        pairs = ev.derive_script(self).get(key, set())
        return frozenset(k for (k, _, _) in pairs)


@dataclass
class SchedulerState:
    rng_seed: int
    pending: list = field(default_factory=list)  # (target, envelope, cause id or None)
    delivered_count: int = 0
    posted_count: int = 0


class Actor:
    __slots__ = ("actor_id", "behavior", "state", "state_version", "display_name")

    def __init__(self, actor_id: int, behavior: BehaviorDef, state: ActorState, display_name: str):
        self.actor_id = actor_id
        self.behavior = behavior
        self.state = state
        self.state_version = 0
        self.display_name = display_name


def _render_value(value: Any):
    if isinstance(value, FeatureStructure):
        return render_fs(value)
    if isinstance(value, (frozenset, set)):
        return sorted(_render_value(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [_render_value(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _render_value(v) for k, v in value.items()}
    if isinstance(value, (int, str, bool)) or value is None:
        return value
    return str(value)


class Context:
    """Handler-side view of the system during one computation event."""

    def __init__(self, system: "System", actor: Actor, envelope: MessageEnvelope):
        self.system = system
        self.actor = actor
        self.envelope = envelope

    @property
    def actor_id(self) -> int:
        return self.actor.actor_id

    @property
    def state(self):
        return self.actor.state

    @property
    def shared(self) -> dict:
        return self.system.shared

    def send(self, target: int, key: str, initiator: Optional[int] = None, **params) -> None:
        self.system._emit(self.actor, target, key, params, initiator)

    def spawn(self, behavior_name: str, display_name: str, state: ActorState) -> int:
        return self.system.spawn(behavior_name, display_name, state)

    def bump(self) -> None:
        self.actor.state_version += 1

    def request(self, service: str, *args):
        return self.system.request(service, *args)


class System:
    """One run: behaviors, actors, scheduler, recorder, shared knowledge."""

    def __init__(self, seed: int = 0, step_ceiling: int = 100000,
                 mode: str = "sequential", log_requests: bool = False):
        if mode not in ("sequential", "parallel"):
            raise ValueError(f"unknown mode {mode!r}")
        self.behaviors: dict[str, BehaviorDef] = {}
        self.actors: dict[int, Actor] = {}
        self.scheduler = SchedulerState(rng_seed=seed)
        self._rng = random.Random(seed)
        self.net = ev.EventNetwork()
        self.services: dict[str, Callable] = {}
        self.shared: dict[str, Any] = {}
        self.step_ceiling = step_ceiling
        self.mode = mode
        self.log_requests = log_requests
        self.request_log: dict[int, list] = {}
        self._next_actor_id = 1
        self._next_envelope_id = 0
        self._current_event: Optional[int] = None
        self._current_allowed: Optional[frozenset] = None
        self._batch: list = []

    # -- program definition --------------------------------------------

    def register_behavior(self, behavior: BehaviorDef) -> None:
        self.behaviors[behavior.name] = behavior

    def register_service(self, name: str, fn: Callable) -> None:
        self.services[name] = fn

    # -- core operations ------------------------------------------------

    def spawn(self, behavior_name: str, display_name: str, state: ActorState) -> int:
        if behavior_name not in self.behaviors:
            raise ContractViolation(f"unknown behavior {behavior_name!r}")
        for tag, value in state.acquaintances.items():
            ids = value if isinstance(value, list) else [value]
            for aid in ids:
                if aid is not None and aid not in self.actors:
                    raise ContractViolation(f"acquaintance {tag!r} refers to unknown actor {aid}")
        actor_id = self._next_actor_id
        self._next_actor_id += 1
        actor = Actor(actor_id, self.behaviors[behavior_name], state, display_name)
        self.actors[actor_id] = actor
        self.net.register_actor(actor_id, display_name)
        causes = [self._current_event] if self._current_event is not None else []
        self.net.record(actor_id, ev.CREATED, {"behavior": behavior_name}, causes, 0)
        return actor_id

    def post(self, target: int, key: str, params: Optional[dict] = None,
             initiator: Optional[int] = None, sender: Optional[int] = None,
             cause: Optional[int] = None) -> None:
        """Queue an envelope; no processing happens until delivery."""
        if target not in self.actors:
            raise ContractViolation(f"post to unknown actor {target}")
        env = MessageEnvelope(key, params or {}, initiator, sender, self._next_envelope_id)
        self._next_envelope_id += 1
        self.scheduler.pending.append((target, env, cause))
        self.scheduler.posted_count += 1

    def _emit(self, actor: Actor, target: int, key: str, params: dict,
              initiator: Optional[int]) -> None:
        if self._current_event is None:
            raise ContractViolation("messages can only be sent from inside a computation event")
        if self._current_allowed is not None and key not in self._current_allowed:
            raise ContractViolation(
                f"behavior {actor.behavior.name!r} emitted undeclared key {key!r} "
                f"while handling {self.net.events[self._current_event].key!r}")
        self.post(target, key, params, initiator=initiator,
                  sender=actor.actor_id, cause=self._current_event)

    def request(self, service: str, *args):
        """Synchronous call to a pure service, legal only inside an event."""
        if self._current_event is None:
            raise ContractViolation("request() outside a computation event")
        if service not in self.services:
            raise ContractViolation(f"unknown service {service!r}")
        result = self.services[service](*args)
        if self.log_requests:
            self.request_log.setdefault(self._current_event, []).append(
                (service, _render_value(list(args)), _render_value(result)))
        return result

    # -- scheduling -------------------------------------------------------

    def _pick_index(self) -> int:
        return self._rng.randrange(len(self.scheduler.pending))

    def _fill_batch(self) -> None:
        """Parallel mode: snapshot one round of deliveries to distinct actors."""
        pending = self.scheduler.pending
        order = list(range(len(pending)))
        self._rng.shuffle(order)
        taken_targets = set()
        taken_indices = []
        for i in order:
            target = pending[i][0]
            if target not in taken_targets:
                taken_targets.add(target)
                taken_indices.append(i)
        self._batch = [pending[i] for i in taken_indices]
        for i in sorted(taken_indices, reverse=True):
            pending.pop(i)

    def deliver_next(self) -> Optional[ev.Event]:
        """Deliver one envelope; None at quiescence."""
        if self.mode == "parallel":
            if not self._batch:
                if not self.scheduler.pending:
                    return None
                self._fill_batch()
            target, envelope, cause = self._batch.pop(0)
        else:
            if not self.scheduler.pending:
                return None
            target, envelope, cause = self.scheduler.pending.pop(self._pick_index())
        return self._execute(target, envelope, cause)

    def _execute(self, target: int, envelope: MessageEnvelope, cause: Optional[int]) -> ev.Event:
        actor = self.actors[target]
        behavior = actor.behavior
        handler = behavior.handlers.get(envelope.key)
        if handler is None:
            raise ContractViolation(
                f"behavior {behavior.name!r} has no handler for key {envelope.key!r}")

        causes = [cause] if cause is not None else []
        rendered = _render_value(dict(envelope.params))
        if envelope.initiator is not None:
            rendered["initiator"] = envelope.initiator
        event_id = self.net.record(target, envelope.key, rendered, causes, actor.state_version)

        self._current_event = event_id
        self._current_allowed = behavior.allowed_keys(envelope.key)
        ctx = Context(self, actor, envelope)
        try:
            pre = behavior.pre_distribution.get(envelope.key)
            if pre is not None:
                pre(ctx, envelope)
            result = handler(ctx, envelope)
            post = behavior.post_distribution.get(envelope.key)
            if post is not None:
                post(ctx, envelope, result)
        except (ContractViolation, LivelockError):
            raise
        except Exception as err:
            raise HandlerFailure(
                f"handler for {envelope.key!r} failed at event {event_id} "
                f"(actor {actor.display_name}): {err}") from err
        finally:
            self._current_event = None
            self._current_allowed = None

        self.scheduler.delivered_count += 1
        return self.net.events[event_id]

    def run_to_quiescence(self) -> ev.EventNetwork:
        """Deliver until nothing is pending; the full event network results."""
        steps = 0
        while True:
            event = self.deliver_next()
            if event is None:
                return self.net
            steps += 1
            if steps > self.step_ceiling:
                raise LivelockError(
                    f"possible livelock: step ceiling {self.step_ceiling} exceeded "
                    f"({len(self.scheduler.pending)} envelopes still pending)", self.net)

    # -- bootstrap --------------------------------------------------------

    def kick(self, target: int, key: str, params: Optional[dict] = None) -> None:
        """Post an initial envelope from outside any event (no cause)."""
        self.post(target, key, params, cause=None)
