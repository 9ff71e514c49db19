"""Minimal terminological knowledge: a concept tree plus role definitions.

The taxonomy is a single-parent tree of concept names rooted at one top
concept.  Roles relate a domain concept to a range concept; a head may
attach a filler under a role exactly when the head's concept falls under
the role's domain and the filler's concept under its range.  That is the
whole conceptual well-formedness check used by the parser.

File format, one declaration per line, '#' starts a comment:

    concept NAME [: PARENT]
    role NAME domain NAME range NAME
"""

from dataclasses import dataclass, field


class KBError(ValueError):
    pass


@dataclass
class RoleDef:
    name: str
    domain: str
    range: str


@dataclass
class ConceptTaxonomy:
    concepts: set = field(default_factory=set)
    super_of: dict = field(default_factory=dict)  # concept -> parent (root maps to None)
    roles: dict = field(default_factory=dict)     # name -> RoleDef

    @property
    def root(self):
        for name, parent in self.super_of.items():
            if parent is None:
                return name
        return None

    def add_concept(self, name, parent=None):
        if name in self.concepts:
            raise KBError(f"duplicate concept {name!r}")
        if parent is None and self.root is not None:
            # every later concept must hang off the existing tree
            raise KBError(f"concept {name!r} lacks a parent but a root already exists")
        if parent is not None and parent not in self.concepts:
            raise KBError(f"concept {name!r}: unknown parent {parent!r}")
        self.concepts.add(name)
        self.super_of[name] = parent

    def add_role(self, name, domain, range_):
        if name in self.roles:
            raise KBError(f"duplicate role {name!r}")
        for c in (domain, range_):
            if c not in self.concepts:
                raise KBError(f"role {name!r}: unknown concept {c!r}")
        self.roles[name] = RoleDef(name, domain, range_)


def load_kb(source):
    """Parse the line-oriented KB format into a taxonomy."""
    kb = ConceptTaxonomy()
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            fields = line.replace(":", " : ").split()
            if fields[0] == "concept":
                if len(fields) == 2:
                    kb.add_concept(fields[1])
                elif len(fields) == 4 and fields[2] == ":":
                    kb.add_concept(fields[1], fields[3])
                else:
                    raise KBError("malformed concept declaration")
            elif fields[0] == "role":
                if len(fields) == 6 and fields[2] == "domain" and fields[4] == "range":
                    kb.add_role(fields[1], fields[3], fields[5])
                else:
                    raise KBError("malformed role declaration")
            else:
                raise KBError(f"unknown declaration {fields[0]!r}")
        except KBError as err:
            raise KBError(f"line {lineno}: {err}") from None
    return kb


def is_a(kb, sub, super_):
    """Reflexive-transitive reachability from sub up to super_."""
    for c in (sub, super_):
        if c not in kb.concepts:
            raise KBError(f"undefined concept {c!r}")
    node = sub
    while node is not None:
        if node == super_:
            return True
        node = kb.super_of[node]
    return False


def role_permits(kb, head_concept, role, filler_concept):
    """True iff head_concept fits the role's domain and filler its range."""
    if role not in kb.roles:
        raise KBError(f"undefined role {role!r}")
    r = kb.roles[role]
    return is_a(kb, head_concept, r.domain) and is_a(kb, filler_concept, r.range)
