"""Brute-force reference parser.

Enumerates every projective, single rooted, labeled dependency tree over a
token sequence by recursive span tiling, applying the same per-edge checks
the word actors apply: word class subsumption, morphological unification,
linear direction, conceptual role, plus mandatory-valency completeness and
one-phrase-per-valency.  It shares only the pure lookups with the actor
implementation (no messages, no scheduler, no actor state), so agreement
between the two is meaningful evidence rather than a tautology.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import concepts as cn
from . import features as ft
from . import lexicon as lx
from . import trees as tr
from .features import FeatureStructure


@dataclass(frozen=True)
class _Analysis:
    """One complete parse of a span: the root's identity and lexical data,
    the phrase's effective concept, and all labeled edges inside."""
    root: int
    word_class: str
    features: FeatureStructure
    concept: Optional[str]
    edges: frozenset   # of (head_pos, label, mod_pos)


def oracle_parse(lex, kb, tokens) -> list:
    """All readings of the sentence, sorted by canonical form.

    Raises LexiconError on unknown words; an empty list means the sentence
    has no complete reading.
    """
    n = len(tokens)
    if n > 10:
        raise ValueError(f"exhaustive search is limited to 10 tokens, got {n}")
    entries = {}
    for pos, tok in enumerate(tokens, start=1):
        resolved = lx.resolve_entry(lex, tok)
        if not resolved:
            raise lx.LexiconError(f"unknown word {tok!r} at position {pos}")
        entries[pos] = resolved

    memo = {}

    def analyses(lo, hi):
        if (lo, hi) not in memo:
            found = []
            for p in range(lo, hi + 1):
                for entry in entries[p]:
                    for left in tilings(lo, p - 1):
                        for right in tilings(p + 1, hi):
                            found.extend(attach(p, entry, left, right))
            memo[(lo, hi)] = found
        return memo[(lo, hi)]

    def tilings(lo, hi):
        """Ways to cover [lo, hi] with adjacent complete subtrees."""
        if lo > hi:
            yield []
            return
        for mid in range(lo, hi + 1):
            for first in analyses(lo, mid):
                for rest in tilings(mid + 1, hi):
                    yield [first] + rest

    def attach(p, entry, left_subs, right_subs):
        """Every way to hang the given subtrees into the valencies of one
        head reading; a subtree that fits no slot sinks the arrangement."""
        sided = ([(lx.LEFT, s) for s in left_subs]
                 + [(lx.RIGHT, s) for s in right_subs])
        slots = entry.valencies
        assignments = []

        def assign(i, used, acc):
            if i == len(sided):
                assignments.append(dict(acc))
                return
            side, sub = sided[i]
            for k, v in enumerate(slots):
                if k in used or v.direction != side:
                    continue
                if not lx.subclass_of(lex, sub.word_class, v.modifier_word_class):
                    continue
                if ft.unify(v.morph_constraint, sub.features) is None:
                    continue
                assign(i + 1, used | {k}, acc + [(k, sub)])

        assign(0, frozenset(), [])

        mandatory = {k for k, v in enumerate(slots) if v.necessity == lx.MANDATORY}
        out = []
        for assignment in assignments:
            if not mandatory <= set(assignment):
                continue
            concept = entry.concept
            if concept is None:
                for k in sorted(assignment):
                    if assignment[k].concept is not None:
                        concept = assignment[k].concept
                        break
            admissible = True
            for k, sub in assignment.items():
                role = slots[k].conceptual_role
                if role is None:
                    continue
                if (concept is None or sub.concept is None
                        or not cn.role_permits(kb, concept, role, sub.concept)):
                    admissible = False
                    break
            if not admissible:
                continue
            edges = {(p, slots[k].name, sub.root) for k, sub in assignment.items()}
            for _k, sub in assignment.items():
                edges |= sub.edges
            out.append(_Analysis(p, entry.word_class, entry.features,
                                 concept, frozenset(edges)))
        return out

    result = []
    for a in analyses(1, n):
        edges = frozenset(
            tr.Edge(h, tokens[h - 1], label, m, tokens[m - 1])
            for (h, label, m) in a.edges)
        result.append(tr.ParseTree(a.root, tokens[a.root - 1], edges))
    result.sort(key=lambda t: t.canonical())
    return result
