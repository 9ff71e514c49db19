"""Concurrent lexicalized dependency parsing with one actor per word.

Words are serialized actors that negotiate head/modifier links by
asynchronous message passing; every run records its causal event network,
and the static event type network derived from the behavior scripts bounds
what any run may do.
"""

from .concepts import ConceptTaxonomy, KBError, is_a, load_kb, role_permits
from .events import (
    EventNetwork,
    EventTypeNetwork,
    compare_networks,
    derive_etn,
    derive_script,
    export,
    validate_trace,
)
from .features import (
    EMPTY,
    FeatureStructure,
    FSSyntaxError,
    parse_fs,
    render_fs,
    subsumes,
    unify,
)
from .lexicon import (
    Lexicon,
    LexiconError,
    load_lexicon,
    resolve_entry,
    subclass_of,
    validate_lexicon,
)
from .oracle import oracle_parse
from .protocol import build_system, check_invariants, protocol_behaviors, run_parse
from .runtime import LivelockError, System
from .trees import Edge, ParseTree, is_projective

__version__ = "0.1.0"

__all__ = [
    "EMPTY",
    "ConceptTaxonomy",
    "Edge",
    "EventNetwork",
    "EventTypeNetwork",
    "FSSyntaxError",
    "FeatureStructure",
    "KBError",
    "Lexicon",
    "LexiconError",
    "LivelockError",
    "ParseTree",
    "System",
    "build_system",
    "check_invariants",
    "compare_networks",
    "derive_etn",
    "derive_script",
    "export",
    "is_a",
    "is_projective",
    "load_kb",
    "load_lexicon",
    "oracle_parse",
    "protocol_behaviors",
    "parse_fs",
    "render_fs",
    "resolve_entry",
    "role_permits",
    "run_parse",
    "subclass_of",
    "subsumes",
    "unify",
    "validate_lexicon",
    "__version__",
]
