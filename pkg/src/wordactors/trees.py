"""Canonical dependency-tree values shared by the parser and the oracle.

Only representation and rendering live here, no constraint logic, so the
brute-force oracle can share it without depending on the parsing machinery.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Edge:
    head_pos: int
    head_surface: str
    label: str
    mod_pos: int
    mod_surface: str


@dataclass(frozen=True)
class ParseTree:
    root_pos: int
    root_surface: str
    edges: frozenset

    def canonical(self) -> tuple:
        """Position-accurate identity, independent of rendering."""
        return (self.root_pos,
                tuple(sorted((e.head_pos, e.label, e.mod_pos) for e in self.edges)))

    def render(self) -> str:
        """One line per edge, sorted by head position then label."""
        ordered = sorted(self.edges, key=lambda e: (e.head_pos, e.label, e.mod_pos))
        if not ordered:
            return self.root_surface
        return "\n".join(
            f"{e.head_surface} —{e.label}→ {e.mod_surface}" for e in ordered)


def is_projective(tree: ParseTree, positions) -> bool:
    """Every head's subtree must cover a contiguous interval of positions."""
    children: dict[int, list[int]] = {p: [] for p in positions}
    for e in tree.edges:
        children[e.head_pos].append(e.mod_pos)

    span_cache: dict[int, tuple] = {}

    def span(node: int) -> tuple:
        if node not in span_cache:
            covered = {node}
            for child in children[node]:
                lo, hi, nodes = span(child)
                covered |= nodes
            span_cache[node] = (min(covered), max(covered), covered)
        return span_cache[node]

    for node in positions:
        lo, hi, covered = span(node)
        expected = {p for p in positions if lo <= p <= hi}
        if covered != expected:
            return False
    return True
