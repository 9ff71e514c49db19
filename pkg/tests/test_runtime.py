"""Actor runtime: scheduling, determinism, conformance, services."""

from dataclasses import dataclass, field

import pytest

from wordactors import events as ev
from wordactors import runtime as rt


@dataclass
class CounterState(rt.ActorState):
    hits: int = 0
    seen: list = field(default_factory=list)


def counter_behavior():
    def on_ping(ctx, env):
        ctx.state.hits += 1
        ctx.state.seen.append(env.params.get("n"))
        ctx.bump()
        if env.params.get("chain", 0) > 0:
            ctx.send(ctx.actor_id, "ping", n=env.params.get("n"),
                     chain=env.params["chain"] - 1)

    return rt.BehaviorDef(
        name="counter",
        handlers={"ping": on_ping},
        action_trees={"ping": ev.If("chain remains", ev.Send("self", "ping"))},
    )


def fresh_system(**kw):
    system = rt.System(**kw)
    system.register_behavior(counter_behavior())
    return system


def test_spawned_ids_are_unique_and_live():
    system = fresh_system()
    a = system.spawn("counter", "a", CounterState())
    b = system.spawn("counter", "b", CounterState())
    assert a != b
    assert system.actors[a].display_name == "a"


def test_spawn_rejects_unknown_behavior():
    system = fresh_system()
    with pytest.raises(rt.ContractViolation, match="unknown behavior"):
        system.spawn("ghost", "g", CounterState())


def test_spawn_rejects_dangling_acquaintance():
    system = fresh_system()
    with pytest.raises(rt.ContractViolation, match="unknown actor 99"):
        system.spawn("counter", "a", CounterState(acquaintances={"left": 99}))


def test_spawn_accepts_absent_acquaintance():
    system = fresh_system()
    aid = system.spawn("counter", "a", CounterState(acquaintances={"left": None}))
    assert aid in system.actors


def test_creation_is_recorded_as_an_event():
    system = fresh_system()
    system.spawn("counter", "a", CounterState())
    assert [e.key for e in system.net.events] == [ev.CREATED]
    assert system.net.events[0].causes == frozenset()


def test_post_then_delivery_carries_the_cause():
    system = fresh_system()
    a = system.spawn("counter", "a", CounterState())
    system.kick(a, "ping", {"n": 1, "chain": 1})
    net = system.run_to_quiescence()
    pings = [e for e in net.events if e.key == "ping"]
    assert len(pings) == 2
    assert pings[0].causes == frozenset()          # kicked from outside
    assert pings[1].causes == {pings[0].event_id}  # chained send


def test_post_to_unknown_target():
    system = fresh_system()
    with pytest.raises(rt.ContractViolation, match="unknown actor"):
        system.post(42, "ping")


def test_delivery_order_is_scheduler_chosen():
    first_delivered = set()
    for seed in range(20):
        system = fresh_system(seed=seed)
        a = system.spawn("counter", "a", CounterState())
        system.kick(a, "ping", {"n": 1})
        system.kick(a, "ping", {"n": 2})
        system.run_to_quiescence()
        first_delivered.add(system.actors[a].state.seen[0])
    assert first_delivered == {1, 2}


def test_same_seed_means_identical_networks():
    def run(seed):
        system = fresh_system(seed=seed)
        a = system.spawn("counter", "a", CounterState())
        b = system.spawn("counter", "b", CounterState())
        for n in range(4):
            system.kick(a if n % 2 else b, "ping", {"n": n, "chain": 2})
        return ev.export(system.run_to_quiescence(), "jsonl")

    assert run(3) == run(3)
    # a different seed still delivers everything, possibly reordered
    lines_a, lines_b = run(3).splitlines(), run(4).splitlines()
    assert len(lines_a) == len(lines_b)


def test_guaranteed_delivery():
    system = fresh_system(seed=11)
    a = system.spawn("counter", "a", CounterState())
    for n in range(5):
        system.kick(a, "ping", {"n": n, "chain": n % 3})
    system.run_to_quiescence()
    assert not system.scheduler.pending
    delivered = [e for e in system.net.events if e.key == "ping"]
    assert len(delivered) == system.scheduler.posted_count


def test_step_ceiling_reports_livelock():
    def forever(ctx, env):
        ctx.send(ctx.actor_id, "ping")

    system = rt.System(step_ceiling=25)
    system.register_behavior(rt.BehaviorDef(
        name="loop", handlers={"ping": forever},
        action_trees={"ping": ev.Send("self", "ping")}))
    a = system.spawn("loop", "a", rt.ActorState())
    system.kick(a, "ping")
    with pytest.raises(rt.LivelockError, match="possible livelock") as err:
        system.run_to_quiescence()
    assert len(err.value.network.events) > 25


def test_undeclared_send_is_a_contract_violation():
    def sneaky(ctx, env):
        ctx.send(ctx.actor_id, "pong")

    system = rt.System()
    system.register_behavior(rt.BehaviorDef(
        name="sneak", handlers={"ping": sneaky, "pong": lambda ctx, env: None},
        action_trees={"ping": ev.Seq(), "pong": ev.Seq()}))
    a = system.spawn("sneak", "a", rt.ActorState())
    system.kick(a, "ping")
    with pytest.raises(rt.ContractViolation, match="undeclared key 'pong'"):
        system.run_to_quiescence()


def test_missing_handler_is_a_contract_violation():
    system = fresh_system()
    a = system.spawn("counter", "a", CounterState())
    system.kick(a, "no-such-key")
    with pytest.raises(rt.ContractViolation, match="no handler"):
        system.run_to_quiescence()


def test_handler_failure_identifies_the_event():
    def broken(ctx, env):
        return 1 // 0

    system = rt.System()
    system.register_behavior(rt.BehaviorDef(
        name="bad", handlers={"ping": broken}, action_trees={"ping": ev.Seq()}))
    a = system.spawn("bad", "oops", rt.ActorState())
    system.kick(a, "ping")
    with pytest.raises(rt.HandlerFailure, match="oops"):
        system.run_to_quiescence()


def test_request_requires_a_computation_event():
    system = fresh_system()
    system.register_service("double", lambda x: 2 * x)
    with pytest.raises(rt.ContractViolation, match="outside a computation event"):
        system.request("double", 3)


def test_request_inside_an_event():
    results = []

    def asking(ctx, env):
        results.append(ctx.request("double", env.params["n"]))

    system = rt.System()
    system.register_service("double", lambda x: 2 * x)
    system.register_behavior(rt.BehaviorDef(
        name="asker", handlers={"ping": asking}, action_trees={"ping": ev.Seq()}))
    a = system.spawn("asker", "a", rt.ActorState())
    system.kick(a, "ping", {"n": 21})
    system.run_to_quiescence()
    assert results == [42]


def test_unknown_service_is_a_contract_violation():
    def asking(ctx, env):
        ctx.request("halve", 4)

    system = rt.System()
    system.register_behavior(rt.BehaviorDef(
        name="asker", handlers={"ping": asking}, action_trees={"ping": ev.Seq()}))
    a = system.spawn("asker", "a", rt.ActorState())
    system.kick(a, "ping")
    with pytest.raises(rt.ContractViolation, match="unknown service"):
        system.run_to_quiescence()


def test_spawn_during_an_event_is_causally_ordered():
    def parent(ctx, env):
        ctx.spawn("counter", "kid", CounterState())

    system = rt.System()
    system.register_behavior(counter_behavior())
    system.register_behavior(rt.BehaviorDef(
        name="parent", handlers={"ping": parent}, action_trees={"ping": ev.Seq()}))
    a = system.spawn("parent", "a", rt.ActorState())
    system.kick(a, "ping")
    net = system.run_to_quiescence()
    ping = next(e for e in net.events if e.key == "ping")
    created = [e for e in net.events if e.key == ev.CREATED]
    assert created[-1].causes == {ping.event_id}
    assert ev.causes_closure(net).leq(ping.event_id, created[-1].event_id)


def test_initiator_is_rendered_into_params():
    def starter(ctx, env):
        ctx.send(ctx.actor_id, "pong", initiator=ctx.actor_id)

    system = rt.System()
    system.register_behavior(rt.BehaviorDef(
        name="b",
        handlers={"ping": starter, "pong": lambda ctx, env: None},
        action_trees={"ping": ev.Send("self", "pong"), "pong": ev.Seq()}))
    a = system.spawn("b", "a", rt.ActorState())
    system.kick(a, "ping")
    net = system.run_to_quiescence()
    pong = next(e for e in net.events if e.key == "pong")
    assert pong.params["initiator"] == a


def test_state_version_is_recorded_before_processing():
    system = fresh_system()
    a = system.spawn("counter", "a", CounterState())
    system.kick(a, "ping", {"n": 1})
    system.kick(a, "ping", {"n": 2})
    net = system.run_to_quiescence()
    versions = [e.state_version for e in net.events if e.key == "ping"]
    assert versions == [0, 1]


def test_rejects_unknown_mode():
    with pytest.raises(ValueError):
        rt.System(mode="speculative")


def _parallel_fixture(mode, seed):
    system = rt.System(seed=seed, mode=mode)
    system.register_behavior(counter_behavior())
    ids = [system.spawn("counter", f"w{i}", CounterState()) for i in range(3)]
    for i, aid in enumerate(ids):
        system.kick(aid, "ping", {"n": i, "chain": 2})
        system.kick(aid, "ping", {"n": 10 + i})
    net = system.run_to_quiescence()
    summary = sorted((net.name_of(e.target), e.key, e.params.get("n"))
                     for e in net.events)
    return net, summary


def test_parallel_mode_delivers_the_same_multiset():
    _, sequential = _parallel_fixture("sequential", seed=5)
    _, parallel = _parallel_fixture("parallel", seed=5)
    assert sequential == parallel


def test_parallel_mode_is_still_a_valid_linearization():
    net, _ = _parallel_fixture("parallel", seed=9)
    for e in net.events:
        assert all(c < e.event_id for c in e.causes)


def test_parallel_mode_is_deterministic_per_seed():
    net1, _ = _parallel_fixture("parallel", seed=2)
    net2, _ = _parallel_fixture("parallel", seed=2)
    assert ev.export(net1, "jsonl") == ev.export(net2, "jsonl")
