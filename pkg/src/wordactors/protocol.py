"""Words as actors: the message protocol that grows dependency trees.

Every token becomes one actor.  A word that needs a head searches leftward:
it sends searchHead to the word bordering its phrase on the left.  The
receiver either offers one of its empty valencies (headFound), applies to
hang itself below the searching word, passes the request up to its own
head, or declines with a receipt.  The searcher keeps a ledger of receipts;
once everyone who saw the request has answered, it tells the scanner to
read the next token.  A second head offer for an already governed word does
not block anything: the affected part of the tree is copied under a fresh
reading tag and the offer is repeated against the copy.

All linguistic knowledge enters through the registered lookup services
(resolve_entry, unify, subsumes, subclass_of, is_a, role_permits); the
handlers themselves only route messages and keep actor-local state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from . import events as ev
from . import runtime as rt
from . import lexicon as lx
from . import trees as tr
from .features import EMPTY, FeatureStructure

SEARCH_HEAD = "searchHead"
HEAD_FOUND = "headFound"
HEAD_ACCEPTED = "headAccepted"
HEAD_RETRACTED = "headRetracted"
RECEIPT = "receipt"
UPDATE_FEATURES = "updateFeatures"
SCAN_NEXT = "scanNext"
COPY_STRUCTURE = "copyStructure"
DUPLICATE_STRUCTURE = "duplicateStructure"

DEFERRING = "deferring"
SEEKING = "seekingHead"
GOVERNED = "governed"
ROOT_FINAL = "root-final"


class ProtocolError(RuntimeError):
    """A word received a message its bookkeeping cannot account for."""


class ParseAbort(rt.ContractViolation):
    """Input the scanner refuses to continue over (not a protocol bug)."""


# --------------------------------------------------------------------------
# Reading tags.

class ReadingRegistry:
    """Tree of reading tags.

    Tag 0 is the base reading of the whole text.  Homonyms get sibling
    children of 0, attachment splits get a child of the reading they grew
    out of.  State entries tagged with an ancestor reading stay visible in
    the descendant.
    """

    def __init__(self):
        self.parent = {0: None}
        self._anc = {0: frozenset({0})}

    def new_child(self, parent: int) -> int:
        tag = len(self.parent)
        self.parent[tag] = parent
        self._anc[tag] = self._anc[parent] | {tag}
        return tag

    def ancestors_or_self(self, tag: int) -> frozenset:
        return self._anc[tag]

    def visible(self, entry_tag: int, context: int) -> bool:
        return entry_tag in self._anc[context]

    def depth(self, tag: int) -> int:
        return len(self._anc[tag])


# --------------------------------------------------------------------------
# Word-local records.

@dataclass
class Fill:
    reading: int
    filler: int
    concept: Optional[str]
    left: int
    right: int


@dataclass
class Slot:
    spec: lx.ValencyDef
    fills: list = field(default_factory=list)


@dataclass
class HeadLink:
    reading: int
    head: int
    label: str


@dataclass
class ReceiptLedger:
    expected: set
    received: set = field(default_factory=set)
    closed: bool = False


@dataclass
class SearchEpisode:
    reading: int
    ledger: ReceiptLedger


@dataclass
class HeldReceipt:
    """An offer or application whose receipt is withheld until it resolves.

    ``answered_by`` names the actor the receipt will speak for; when an
    offer migrates onto a copy during an ambiguity split, the copy releases
    the receipt in the original's name, because that is the name the
    searcher's ledger knows.
    """
    initiator: int
    candidate: int
    valency: str
    reading: int
    answered_by: int
    distributed_to: tuple = ()
    constraints: FeatureStructure = EMPTY
    relay: Optional[dict] = None


@dataclass
class WordState(rt.ActorState):
    surface: str = ""
    position: int = 0
    reading: int = 0
    word_class: str = ""
    concept: Optional[str] = None
    features: FeatureStructure = EMPTY
    slots: list = field(default_factory=list)
    head_links: list = field(default_factory=list)
    phase: str = SEEKING
    deferred: bool = False
    left_edge: int = 0
    right_edge: int = 0
    left_exit: Optional[int] = None   # actor just left of the own phrase
    episodes: dict = field(default_factory=dict)   # reading -> SearchEpisode
    searches_launched: set = field(default_factory=set)
    pending_offer: Optional[HeldReceipt] = None
    pending_application: Optional[HeldReceipt] = None
    expected_rebuilds: set = field(default_factory=set)
    origin_of: Optional[int] = None   # the actor this one was copied from


@dataclass
class ScannerState(rt.ActorState):
    tokens: list = field(default_factory=list)
    cursor: int = 0
    spawned: int = 0
    prev_ids: list = field(default_factory=list)
    lenient: bool = False


# --------------------------------------------------------------------------
# State predicates.  Everything is scoped to a reading context: entries
# tagged with an ancestor of the context count, entries on other branches
# do not exist as far as that context is concerned.

def _registry(ctx) -> ReadingRegistry:
    return ctx.shared["readings"]


def _slot_is_free(slot, reg, context):
    return not any(reg.visible(f.reading, context) for f in slot.fills)


def _visible_fills(state, reg, context):
    out = []
    for slot in state.slots:
        for f in slot.fills:
            if reg.visible(f.reading, context):
                out.append((slot.spec.name, f))
    return out


def _governing_link(state, reg, context) -> Optional[HeadLink]:
    best = None
    for link in state.head_links:
        if reg.visible(link.reading, context):
            if best is None or reg.depth(link.reading) > reg.depth(best.reading):
                best = link
    return best


def _mandatory_right_open(state, reg, context) -> bool:
    return any(s.spec.necessity == lx.MANDATORY and s.spec.direction == lx.RIGHT
               and _slot_is_free(s, reg, context)
               for s in state.slots)


def _effective_concept(state, reg, context):
    """A phrase speaks for the concept of its root word; a word without a
    concept of its own borrows the first one among its filled valencies."""
    if state.concept:
        return state.concept
    for slot in state.slots:
        for f in slot.fills:
            if reg.visible(f.reading, context) and f.concept:
                return f.concept
    return None


def _spec_view(v: lx.ValencyDef) -> dict:
    return {"name": v.name, "word_class": v.modifier_word_class,
            "features": v.morph_constraint, "role": v.conceptual_role,
            "necessity": v.necessity}


def _profile(state, reg, context) -> dict:
    """What a searching word tells the world about itself."""
    free_left = [_spec_view(s.spec) for s in state.slots
                 if s.spec.direction == lx.LEFT and _slot_is_free(s, reg, context)]
    return {
        "surface": state.surface,
        "word_class": state.word_class,
        "features": state.features,
        "concept": _effective_concept(state, reg, context),
        "position": state.position,
        "left_edge": state.left_edge,
        "right_edge": state.right_edge,
        "left_exit": state.left_exit,
        "reading": context,
        "left_slots": free_left,
    }


def _admits(ctx, spec, head_concept, mod_class, mod_features, mod_concept):
    """The three non-directional valency checks: word class, morphology,
    conceptual role.  Returns the unified morphology, or None."""
    if not ctx.request("subclass_of", mod_class, spec["word_class"]):
        return None
    merged = ctx.request("unify", spec["features"], mod_features)
    if merged is None:
        return None
    role = spec.get("role")
    if role:
        if head_concept is None or mod_concept is None:
            return None
        if not ctx.request("role_permits", head_concept, role, mod_concept):
            return None
    return merged


# --------------------------------------------------------------------------
# Search bootstrap, shared by the scanner (at spawn time) and by deferred
# words (once their rightward obligations are met).

def _launch_search(ctx, word_id, state, context):
    reg = _registry(ctx)
    state.phase = SEEKING
    state.searches_launched.add(context)
    state.episodes[context] = SearchEpisode(context, ReceiptLedger({state.left_exit}))
    ctx.send(state.left_exit, SEARCH_HEAD, initiator=word_id,
             candidate=word_id, profile=_profile(state, reg, context))


def _maybe_release_deferral(ctx, context):
    """A deferred word may search once its rightward obligations are met.

    Completeness is judged in the reading context the triggering acceptance
    belongs to: a slot filled on a homonym's branch says nothing about the
    other branches, so each context releases (at most once) on its own."""
    state = ctx.state
    if not state.deferred or state.origin_of is not None:
        return
    if context in state.searches_launched:
        return
    if _mandatory_right_open(state, _registry(ctx), context):
        return
    if state.left_exit is not None:
        _launch_search(ctx, ctx.actor_id, state, context)
    else:
        # Nothing to the left at all: this word closes as the root and the
        # scanner may continue.
        state.phase = ROOT_FINAL
        state.searches_launched.add(context)
        ctx.shared["stats"]["final_root_starts"] += 1
        ctx.send(state.acquaintances["scanner"], SCAN_NEXT)


# --------------------------------------------------------------------------
# Word handlers.

def pre_search_head(ctx, env):
    """Distribution part of searchHead: a governed word passes the request
    on to its head before looking at it."""
    link = _governing_link(ctx.state, _registry(ctx), env.params["profile"]["reading"])
    if link is not None:
        ctx.send(link.head, SEARCH_HEAD, initiator=env.initiator, **env.params)


def on_search_head(ctx, env):
    state, reg = ctx.state, _registry(ctx)
    profile = env.params["profile"]
    context = profile["reading"]
    candidate = env.params["candidate"]
    episode = env.initiator

    if ctx.shared.get("debug_checks"):
        _assert_on_fringe(ctx, profile)

    link = _governing_link(state, reg, context)
    distributed = (link.head,) if link is not None else ()

    # First choice: one of the own empty rightward valencies fits the
    # candidate's phrase.  The receipt is withheld until the candidate
    # answers the offer.
    if state.pending_offer is None:
        own_concept = _effective_concept(state, reg, context)
        for slot in state.slots:
            if slot.spec.direction != lx.RIGHT or not _slot_is_free(slot, reg, context):
                continue
            merged = _admits(ctx, _spec_view(slot.spec), own_concept,
                             profile["word_class"], profile["features"],
                             profile["concept"])
            if merged is None:
                continue
            state.pending_offer = HeldReceipt(
                initiator=episode, candidate=candidate, valency=slot.spec.name,
                reading=context, answered_by=ctx.actor_id,
                distributed_to=distributed,
                constraints=slot.spec.morph_constraint)
            ctx.bump()
            ctx.send(candidate, HEAD_FOUND, initiator=episode,
                     role="offer", offerer=ctx.actor_id,
                     valency=slot.spec.name,
                     constraints=slot.spec.morph_constraint, reading=context)
            return

    # Second choice: the reverse attachment.  An ungoverned receiver whose
    # own rightward obligations are met and whose phrase ends exactly where
    # the candidate's begins may apply for one of the candidate's empty
    # leftward valencies.
    if (link is None
            and state.pending_application is None
            and not _mandatory_right_open(state, reg, context)
            and state.right_edge == profile["left_edge"] - 1):
        own_concept = _effective_concept(state, reg, context)
        for spec in profile["left_slots"]:
            merged = _admits(ctx, spec, profile["concept"],
                             state.word_class, state.features, own_concept)
            if merged is None:
                continue
            state.pending_application = HeldReceipt(
                initiator=episode, candidate=candidate, valency=spec["name"],
                reading=context, answered_by=ctx.actor_id,
                distributed_to=(), relay=dict(env.params))
            ctx.bump()
            ctx.send(candidate, HEAD_FOUND, initiator=episode,
                     role="application", applicant=ctx.actor_id,
                     valency=spec["name"],
                     profile=_profile(state, reg, context), reading=context)
            return

    ctx.send(episode, RECEIPT, initiator=episode, reading=context,
             answered_by=ctx.actor_id, passed_on=list(distributed))


def on_head_found(ctx, env):
    if env.params["role"] == "offer":
        _on_offer(ctx, env)
    else:
        _on_application(ctx, env)


def _on_offer(ctx, env):
    """The searching word hears that a slot is on offer for it."""
    state, reg = ctx.state, _registry(ctx)
    context = env.params["reading"]
    offerer = env.params["offerer"]
    constraints = env.params["constraints"]
    episode = env.initiator

    if _governing_link(state, reg, context) is not None:
        _split_reading(ctx, env)
        return

    merged = ctx.request("unify", state.features, constraints)
    if merged is None:
        # The offer was computed against a profile that has since been
        # restricted by a concurrent attachment.  Withdraw; the offerer
        # still owes the episode a receipt.
        ctx.send(offerer, HEAD_RETRACTED, initiator=episode,
                 valency=env.params["valency"], reading=context)
        return

    state.features = merged
    state.head_links.append(HeadLink(context, offerer, env.params["valency"]))
    state.phase = GOVERNED
    ctx.bump()
    for _label, fill in _visible_fills(state, reg, context):
        ctx.send(fill.filler, UPDATE_FEATURES, initiator=episode,
                 delta=constraints, reading=context)
    ctx.send(offerer, HEAD_ACCEPTED, initiator=episode,
             role="fills-your-slot", modifier=ctx.actor_id,
             valency=env.params["valency"], reading=context,
             left_edge=state.left_edge, right_edge=state.right_edge,
             concept=_effective_concept(state, reg, context))


def _split_reading(ctx, env):
    """A second head offer for an already governed word.

    The attachment that is already in place stays untouched in the current
    reading.  For the alternative, the word copies itself and its phrase
    under a fresh child reading and asks the offerer to re-stage the offer
    against the copy.
    """
    state, reg = ctx.state, _registry(ctx)
    episode = env.initiator
    branch = reg.new_child(env.params["reading"])

    twin = _spawn_copy(ctx, state, branch, head_link=None, exclude=None)
    for _label, fill in _visible_fills(state, reg, branch):
        ctx.send(fill.filler, COPY_STRUCTURE, initiator=episode,
                 reading=branch, new_head=twin, exclude=None)
    ctx.send(env.params["offerer"], DUPLICATE_STRUCTURE, initiator=episode,
             reading=branch, new_root=twin)


def _spawn_copy(ctx, state, branch, head_link, exclude):
    """One node of a structure copy.  Valencies start empty; the rebuild
    acceptances from the copied modifiers fill them back in."""
    reg = _registry(ctx)
    rebuilds = {label for label, fill in _visible_fills(state, reg, branch)
                if fill.filler != exclude}
    twin = WordState(
        acquaintances=dict(state.acquaintances),
        surface=state.surface, position=state.position, reading=branch,
        word_class=state.word_class, concept=state.concept,
        features=state.features,
        slots=[Slot(s.spec) for s in state.slots],
        head_links=[head_link] if head_link is not None else [],
        phase=GOVERNED if head_link is not None else state.phase,
        left_edge=state.position, right_edge=state.position,
        expected_rebuilds=rebuilds, origin_of=ctx.actor_id)
    return ctx.spawn("word", state.surface, twin)


def _on_application(ctx, env):
    """The searching word rules on an application, authoritatively: the
    applicant judged from an advertised profile that may be stale."""
    state, reg = ctx.state, _registry(ctx)
    context = env.params["reading"]
    applicant = env.params["applicant"]
    ap = env.params["profile"]
    episode = env.initiator

    chosen = None
    if ap["right_edge"] == state.left_edge - 1:
        own_concept = _effective_concept(state, reg, context)
        for slot in state.slots:
            if slot.spec.direction != lx.LEFT or not _slot_is_free(slot, reg, context):
                continue
            merged = _admits(ctx, _spec_view(slot.spec), own_concept,
                             ap["word_class"], ap["features"], ap["concept"])
            if merged is not None:
                chosen = slot
                break
    if chosen is None:
        ctx.send(applicant, HEAD_RETRACTED, initiator=episode,
                 valency=env.params["valency"], reading=context)
        return

    chosen.fills.append(Fill(context, applicant, ap["concept"],
                             ap["left_edge"], ap["right_edge"]))
    state.left_edge = ap["left_edge"]
    state.left_exit = ap["left_exit"]
    ctx.bump()
    ctx.send(applicant, HEAD_ACCEPTED, initiator=episode,
             role="accepts-your-application", head=ctx.actor_id,
             valency=chosen.spec.name, delta=chosen.spec.morph_constraint,
             reading=context)


def on_head_accepted(ctx, env):
    if env.params["role"] == "fills-your-slot":
        _on_slot_filled(ctx, env)
    else:
        _on_application_accepted(ctx, env)


def _on_slot_filled(ctx, env):
    """An offer came back accepted, or a copied modifier reports in."""
    state = ctx.state
    p = env.params
    label = p["valency"]

    slot = next((s for s in state.slots if s.spec.name == label), None)
    if slot is None:
        raise ProtocolError(f"{state.surface}: acceptance names unknown valency {label!r}")

    held = state.pending_offer
    if held is not None and held.candidate == p["modifier"] and held.valency == label:
        slot.fills.append(Fill(p["reading"], p["modifier"], p["concept"],
                               p["left_edge"], p["right_edge"]))
        state.left_edge = min(state.left_edge, p["left_edge"])
        state.right_edge = max(state.right_edge, p["right_edge"])
        state.pending_offer = None
        ctx.bump()
        ctx.send(held.initiator, RECEIPT, initiator=held.initiator,
                 reading=held.reading, answered_by=held.answered_by,
                 passed_on=list(held.distributed_to))
        _maybe_release_deferral(ctx, p["reading"])
        return

    if label in state.expected_rebuilds:
        slot.fills.append(Fill(p["reading"], p["modifier"], p["concept"],
                               p["left_edge"], p["right_edge"]))
        state.left_edge = min(state.left_edge, p["left_edge"])
        state.right_edge = max(state.right_edge, p["right_edge"])
        state.expected_rebuilds.discard(label)
        ctx.bump()
        return

    raise ProtocolError(f"{state.surface}: acceptance for {label!r} without an open offer")


def _on_application_accepted(ctx, env):
    state, reg = ctx.state, _registry(ctx)
    p = env.params
    context = p["reading"]
    episode = env.initiator

    held = state.pending_application
    if held is None or held.candidate != p["head"]:
        raise ProtocolError(f"{state.surface}: acceptance without an open application")
    state.pending_application = None

    merged = ctx.request("unify", state.features, p["delta"])
    if merged is None:
        # Cannot happen through this protocol: nobody updates an ungoverned
        # word's features behind its back.
        raise ProtocolError(f"{state.surface}: accepted application no longer unifies")
    state.features = merged
    state.head_links.append(HeadLink(context, p["head"], p["valency"]))
    state.phase = GOVERNED
    ctx.bump()

    for _label, fill in _visible_fills(state, reg, context):
        ctx.send(fill.filler, UPDATE_FEATURES, initiator=episode,
                 delta=p["delta"], reading=context)

    # The candidate's phrase now reaches further left; the search front
    # moves on to whatever borders this word on the left.
    passed = []
    if state.left_exit is not None:
        relay = dict(held.relay)
        relayed_profile = dict(relay["profile"])
        relayed_profile["left_edge"] = state.left_edge
        relay["profile"] = relayed_profile
        ctx.send(state.left_exit, SEARCH_HEAD, initiator=episode, **relay)
        passed = [state.left_exit]
    ctx.send(episode, RECEIPT, initiator=episode, reading=context,
             answered_by=ctx.actor_id, passed_on=passed)


def on_head_retracted(ctx, env):
    """The candidate struck down an offer or application; the withheld
    receipt is released so the episode can still close."""
    state = ctx.state
    if state.pending_offer is not None:
        held, state.pending_offer = state.pending_offer, None
    elif state.pending_application is not None:
        held, state.pending_application = state.pending_application, None
    else:
        raise ProtocolError(f"{state.surface}: retraction without anything pending")
    ctx.bump()
    ctx.send(held.initiator, RECEIPT, initiator=held.initiator,
             reading=held.reading, answered_by=held.answered_by,
             passed_on=list(held.distributed_to))


def on_receipt(ctx, env):
    state = ctx.state
    ep = state.episodes.get(env.params["reading"])
    if ep is None or ep.ledger.closed:
        raise ProtocolError(f"{state.surface}: receipt without an open ledger")
    sender = env.params["answered_by"]
    if sender in ep.ledger.received:
        raise ProtocolError(f"{state.surface}: duplicate receipt from actor {sender}")
    ep.ledger.received.add(sender)
    # A receipt may overtake the receipt of the word that passed the search
    # on, so `received` can run ahead of `expected`; the two agree again at
    # closing time because the forwarder itself still owes its receipt.
    ep.ledger.expected.update(env.params["passed_on"])
    ctx.bump()
    if ep.ledger.received == ep.ledger.expected:
        ep.ledger.closed = True
        ctx.shared["stats"]["ledger_closes"] += 1
        if _governing_link(state, _registry(ctx), ep.reading) is None:
            state.phase = ROOT_FINAL
        ctx.send(state.acquaintances["scanner"], SCAN_NEXT, initiator=ctx.actor_id)


def on_update_features(ctx, env):
    state, reg = ctx.state, _registry(ctx)
    delta = env.params["delta"]
    context = env.params["reading"]
    merged = ctx.request("unify", state.features, delta)
    if merged is None:
        raise ProtocolError(f"{state.surface}: feature update no longer unifies")
    state.features = merged
    ctx.bump()
    for _label, fill in _visible_fills(state, reg, context):
        ctx.send(fill.filler, UPDATE_FEATURES, initiator=env.initiator,
                 delta=delta, reading=context)


def on_copy_structure(ctx, env):
    """Copy self under a new reading, hanging below the copy of the head."""
    state, reg = ctx.state, _registry(ctx)
    p = env.params
    branch, exclude = p["reading"], p["exclude"]
    if exclude is not None and ctx.actor_id == exclude:
        # This subtree re-roots elsewhere in the new reading; the copy
        # request must not descend into it.
        return
    link = _governing_link(state, reg, branch)
    if link is None:
        raise ProtocolError(f"{state.surface}: asked to copy but has no head")
    twin = _spawn_copy(ctx, state, branch,
                       head_link=HeadLink(branch, p["new_head"], link.label),
                       exclude=exclude)
    for _label, fill in _visible_fills(state, reg, branch):
        if fill.filler != exclude:
            ctx.send(fill.filler, COPY_STRUCTURE, initiator=env.initiator,
                     reading=branch, new_head=twin, exclude=exclude)
    left, right = _span_without(state, reg, branch, exclude)
    ctx.send(p["new_head"], HEAD_ACCEPTED, initiator=env.initiator,
             role="fills-your-slot", modifier=twin, valency=link.label,
             reading=branch, left_edge=left, right_edge=right,
             concept=_effective_concept(state, reg, branch))


def _span_without(state, reg, context, exclude):
    left = right = state.position
    for _label, fill in _visible_fills(state, reg, context):
        if fill.filler == exclude:
            continue
        left = min(left, fill.left)
        right = max(right, fill.right)
    return left, right


def on_duplicate_structure(ctx, env):
    """The offerer's side of an ambiguity split: copy the own phrase minus
    the candidate's re-rooted part, move the withheld receipt onto the
    copy, and repeat the offer against the new dependent root."""
    state, reg = ctx.state, _registry(ctx)
    p = env.params
    branch, new_root = p["reading"], p["new_root"]
    held = state.pending_offer
    if held is None:
        raise ProtocolError(f"{state.surface}: duplicateStructure without an open offer")
    state.pending_offer = None
    exclude = held.candidate

    twin = _spawn_copy(ctx, state, branch, head_link=None, exclude=exclude)
    # The copy owes the receipt now, but in the original's name and for the
    # original reading: the searcher's ledger knows neither copy nor branch.
    ctx.system.actors[twin].state.pending_offer = replace(held, candidate=new_root)
    ctx.bump()

    for _label, fill in _visible_fills(state, reg, branch):
        if fill.filler != exclude:
            ctx.send(fill.filler, COPY_STRUCTURE, initiator=env.initiator,
                     reading=branch, new_head=twin, exclude=exclude)
    ctx.send(new_root, HEAD_FOUND, initiator=env.initiator,
             role="offer", offerer=twin, valency=held.valency,
             constraints=held.constraints, reading=branch)


# --------------------------------------------------------------------------
# Scanner.

def on_scan_next(ctx, env):
    st = ctx.state
    if st.cursor >= len(st.tokens):
        return
    token = st.tokens[st.cursor]
    entries = ctx.request("resolve_entry", token)
    stats = ctx.shared["stats"]

    if not entries:
        if st.lenient:
            st.cursor += 1
            stats["lenient_skips"] += 1
            ctx.bump()
            ctx.send(ctx.actor_id, SCAN_NEXT)
            return
        raise ParseAbort(f"unknown word {token!r} at position {st.cursor + 1}")
    if len(st.prev_ids) > 1:
        raise ParseAbort("a word with several lexicon entries is only "
                         "supported as the last token of the text")

    # Positions number the spawned words, not the raw tokens, so that a
    # leniently skipped token leaves no hole in the adjacency structure.
    st.spawned += 1
    position = st.spawned
    st.cursor += 1
    ctx.bump()
    stats["spawning_deliveries"] += 1
    stats["spawned_positions"].add(position)

    reg = _registry(ctx)
    left = st.prev_ids[0] if st.prev_ids else None
    tags = [0] if len(entries) == 1 else [reg.new_child(0) for _ in entries]

    born = []
    for entry, tag in zip(entries, tags):
        ws = WordState(
            acquaintances={"scanner": ctx.actor_id, "left_neighbor": left},
            surface=token, position=position, reading=tag,
            word_class=entry.word_class, concept=entry.concept,
            features=entry.features,
            slots=[Slot(v) for v in entry.valencies],
            left_edge=position, right_edge=position, left_exit=left)
        born.append((ctx.spawn("word", token, ws), ws))
    st.prev_ids = [wid for wid, _ in born]

    for wid, ws in born:
        if _mandatory_right_open(ws, reg, ws.reading):
            # The word must collect its rightward dependents before it can
            # tell what phrase it stands for; its head search waits.
            ws.deferred = True
            ws.phase = DEFERRING
            stats["deferrals"] += 1
            ctx.send(ctx.actor_id, SCAN_NEXT)
        elif left is None:
            ws.phase = ROOT_FINAL
            stats["first_word_starts"] += 1
            ctx.send(ctx.actor_id, SCAN_NEXT)
        else:
            _launch_search(ctx, wid, ws, ws.reading)


# --------------------------------------------------------------------------
# Behavior declarations.  The action trees are the static mirror of the
# handlers above; the type network is derived from them, and the runtime
# holds every computation to the keys its tree admits.

def word_behavior() -> rt.BehaviorDef:
    return rt.BehaviorDef(
        name="word",
        handlers={
            SEARCH_HEAD: on_search_head,
            HEAD_FOUND: on_head_found,
            HEAD_ACCEPTED: on_head_accepted,
            HEAD_RETRACTED: on_head_retracted,
            RECEIPT: on_receipt,
            UPDATE_FEATURES: on_update_features,
            COPY_STRUCTURE: on_copy_structure,
            DUPLICATE_STRUCTURE: on_duplicate_structure,
        },
        action_trees={
            SEARCH_HEAD: ev.Seq(
                ev.If("valency constraint satisfied",
                      ev.Send("the searching word", HEAD_FOUND)),
                ev.If("no constraint satisfied",
                      ev.Send("the search's initiator", RECEIPT))),
            HEAD_FOUND: ev.Seq(
                ev.If("self is governed", ev.Seq(
                    ev.If("structural ambiguity & self has modifiers",
                          ev.Send("own modifiers", COPY_STRUCTURE)),
                    ev.Send("the offering word", DUPLICATE_STRUCTURE),
                    ev.Create("word"))),
                ev.If("no ambiguity",
                      ev.Send("the offering or applying word", HEAD_ACCEPTED)),
                ev.If("self has modifiers",
                      ev.Send("own modifiers", UPDATE_FEATURES)),
                ev.If("constraint no longer satisfied",
                      ev.Send("the offering or applying word", HEAD_RETRACTED,
                              plumbing=True)),
                ev.Become("head bound or slot filled")),
            HEAD_ACCEPTED: ev.Seq(
                ev.Send("the search's initiator", RECEIPT),
                ev.Send("the word left of the grown phrase", SEARCH_HEAD),
                ev.If("self has modifiers",
                      ev.Send("own modifiers", UPDATE_FEATURES, plumbing=True)),
                ev.If("no left neighbor",
                      ev.Send("the scanner", SCAN_NEXT, plumbing=True)),
                ev.Become("slot filled or head bound")),
            RECEIPT: ev.Seq(
                ev.Send("the scanner", SCAN_NEXT),
                ev.Become("ledger updated")),
            UPDATE_FEATURES: ev.Seq(
                ev.If("self has modifiers",
                      ev.Send("own modifiers", UPDATE_FEATURES)),
                ev.Become("features narrowed")),
            HEAD_RETRACTED: ev.Seq(
                ev.Send("the search's initiator", RECEIPT, plumbing=True),
                ev.Become("offer withdrawn")),
            COPY_STRUCTURE: ev.Seq(
                ev.If("self has modifiers",
                      ev.Send("own modifiers", COPY_STRUCTURE)),
                ev.Send("the copied head", HEAD_ACCEPTED),
                ev.Create("word")),
            DUPLICATE_STRUCTURE: ev.Seq(
                ev.If("self has modifiers",
                      ev.Send("own modifiers", COPY_STRUCTURE)),
                ev.Send("the copied phrase's new root", HEAD_FOUND),
                ev.Create("word")),
        },
        distribution_sends={SEARCH_HEAD: [(SEARCH_HEAD, False)]},
        pre_distribution={SEARCH_HEAD: pre_search_head})


def scanner_behavior() -> rt.BehaviorDef:
    return rt.BehaviorDef(
        name="scanner",
        handlers={SCAN_NEXT: on_scan_next},
        action_trees={
            SCAN_NEXT: ev.Seq(
                ev.Send("itself", SCAN_NEXT),
                ev.Send("the new word's left neighbor", SEARCH_HEAD),
                ev.Create("word"),
                ev.Become("cursor advanced")),
        })


def protocol_behaviors() -> list:
    return [word_behavior(), scanner_behavior()]


# --------------------------------------------------------------------------
# System assembly.

def build_system(lexicon, kb, tokens, *, seed=0, mode="sequential",
                 step_ceiling=100000, lenient=False, debug_checks=True,
                 log_requests=False):
    from . import concepts as cn
    from . import features as ft

    system = rt.System(seed=seed, step_ceiling=step_ceiling, mode=mode,
                       log_requests=log_requests)
    system.register_behavior(word_behavior())
    system.register_behavior(scanner_behavior())
    system.register_service("unify", ft.unify)
    system.register_service("subsumes", ft.subsumes)
    system.register_service("subclass_of",
                            lambda sub, sup: lx.subclass_of(lexicon, sub, sup))
    system.register_service("is_a", lambda sub, sup: cn.is_a(kb, sub, sup))
    system.register_service("role_permits",
                            lambda h, r, f: cn.role_permits(kb, h, r, f))
    system.register_service("resolve_entry",
                            lambda surface: lx.resolve_entry(lexicon, surface))

    system.shared["readings"] = ReadingRegistry()
    system.shared["stats"] = {
        "deferrals": 0, "first_word_starts": 0, "ledger_closes": 0,
        "final_root_starts": 0, "lenient_skips": 0,
        "spawning_deliveries": 0, "spawned_positions": set()}
    system.shared["debug_checks"] = debug_checks

    scanner = system.spawn("scanner", "scanner",
                           ScannerState(tokens=list(tokens), lenient=lenient))
    return system, scanner


def run_parse(lexicon, kb, tokens, **kw):
    """Parse one tokenized sentence; returns (system, event network, trees)."""
    system, scanner = build_system(lexicon, kb, tokens, **kw)
    system.kick(scanner, SCAN_NEXT)
    net = system.run_to_quiescence()
    return system, net, read_out_trees(system)


# --------------------------------------------------------------------------
# Reading the trees out of a quiescent system.

def _word_actors(system):
    return [a for a in system.actors.values() if a.behavior.name == "word"]


def _effective_link(system, reg, actor, context):
    """The governing link of an actor, or failing that of the actor it was
    copied from.  A copy made on the offerer's side of a split keeps its
    original's attachment: only the re-rooted phrase changes heads."""
    seen = set()
    a = actor
    while a is not None and a.actor_id not in seen:
        seen.add(a.actor_id)
        link = _governing_link(a.state, reg, context)
        if link is not None:
            return link
        origin = a.state.origin_of
        a = system.actors.get(origin) if origin is not None else None
    return None


def read_out_trees(system) -> list:
    """One ParseTree per reading that materializes as a complete, single
    rooted, projective tree with all mandatory valencies filled."""
    reg = system.shared["readings"]
    words = _word_actors(system)
    positions = sorted(system.shared["stats"]["spawned_positions"])
    out = []
    for tag in sorted(reg.parent):
        tree = _materialize(system, reg, words, positions, tag)
        if tree is not None:
            out.append(tree)
    return out


def _materialize(system, reg, words, positions, tag):
    chosen = {}
    for a in words:
        if a.state.reading not in reg.ancestors_or_self(tag):
            continue
        p = a.state.position
        cur = chosen.get(p)
        if cur is None or reg.depth(a.state.reading) > reg.depth(cur.state.reading):
            chosen[p] = a
        elif cur is not a and reg.depth(a.state.reading) == reg.depth(cur.state.reading):
            return None     # two equally specific actors claim one position
    if sorted(chosen) != positions:
        return None

    actor_pos = {a.actor_id: a.state.position for a in words}
    roots, edges, taken = [], set(), set()
    for p, a in sorted(chosen.items()):
        link = _effective_link(system, reg, a, tag)
        if link is None:
            roots.append(p)
            continue
        hp = actor_pos.get(link.head)
        if hp is None or hp not in chosen:
            return None
        if (hp, link.label) in taken:
            return None     # a valency may hold one phrase per reading
        taken.add((hp, link.label))
        edges.add(tr.Edge(hp, chosen[hp].state.surface, link.label,
                          p, a.state.surface))
    if len(roots) != 1:
        return None
    root = roots[0]

    filled_at = {}
    for e in edges:
        filled_at.setdefault(e.head_pos, set()).add(e.label)
    for p, a in chosen.items():
        need = {s.spec.name for s in a.state.slots
                if s.spec.necessity == lx.MANDATORY}
        if not need <= filled_at.get(p, set()):
            return None

    head_of = {e.mod_pos: e.head_pos for e in edges}
    for p in chosen:
        walk, seen = p, set()
        while walk != root:
            if walk in seen or walk not in head_of:
                return None
            seen.add(walk)
            walk = head_of[walk]

    tree = tr.ParseTree(root, chosen[root].state.surface, frozenset(edges))
    if not tr.is_projective(tree, set(chosen)):
        return None
    return tree


# --------------------------------------------------------------------------
# Run-level checks and projections.

def _assert_on_fringe(ctx, profile):
    """Debug check: searchHead may only reach the word whose phrase borders
    the candidate on the left, or a word on that word's head chain."""
    reg = _registry(ctx)
    context = profile["reading"]
    border = profile["left_edge"] - 1
    for a in _word_actors(ctx.system):
        st = a.state
        if st.right_edge != border or st.reading not in reg.ancestors_or_self(context):
            continue
        node, hops = a, set()
        while node is not None and node.actor_id not in hops:
            if node.actor_id == ctx.actor_id:
                return
            hops.add(node.actor_id)
            link = _governing_link(node.state, reg, context)
            node = ctx.system.actors.get(link.head) if link is not None else None
    raise ProtocolError(
        f"{ctx.state.surface}: searchHead reached a word outside the search fringe")


def check_invariants(system, net=None, etn=None) -> list:
    """Everything that must hold of a quiescent run; empty list means pass."""
    problems = []
    stats = system.shared["stats"]

    for a in _word_actors(system):
        st = a.state
        where = f"{st.surface}@{st.position}"
        for ep in st.episodes.values():
            led = ep.ledger
            if not led.closed:
                missing = sorted(led.expected - led.received)
                problems.append(f"{where}: receipt ledger still open, waiting for {missing}")
            elif led.received != led.expected:
                problems.append(f"{where}: ledger closed but out of balance")
        if st.pending_offer is not None:
            problems.append(f"{where}: head offer never answered")
        if st.pending_application is not None:
            problems.append(f"{where}: application never answered")
        if st.expected_rebuilds:
            problems.append(f"{where}: structure copy incomplete, "
                            f"missing {sorted(st.expected_rebuilds)}")

    if net is not None:
        scans = sum(1 for e in net.events if e.key == SCAN_NEXT)
        predicted = (1 + stats["deferrals"] + stats["first_word_starts"]
                     + stats["ledger_closes"] + stats["final_root_starts"]
                     + stats["lenient_skips"])
        if scans != predicted:
            problems.append(f"scanNext accounting: {scans} events, predicted {predicted}")
        if etn is None:
            etn = ev.derive_etn(protocol_behaviors())
        problems.extend(ev.validate_trace(net, etn))

    if stats["spawning_deliveries"] != len(stats["spawned_positions"]):
        problems.append("token spawn accounting is off")

    for tree in read_out_trees(system):
        pts = {tree.root_pos} | {e.head_pos for e in tree.edges} | {e.mod_pos for e in tree.edges}
        if not tr.is_projective(tree, pts):
            problems.append(f"non-projective tree escaped the readout (root {tree.root_pos})")

    return problems


def episode_events(net, episode: int) -> set:
    """Event ids of one head search: everything its initiator tagged, plus
    the event that posted the opening searchHead."""
    tagged = {e.event_id for e in net.events
              if e.params.get("initiator") == episode}
    for e in net.events:
        if e.key == SEARCH_HEAD and e.params.get("initiator") == episode:
            if e.causes:
                tagged.add(min(e.causes))
            break
    return tagged
