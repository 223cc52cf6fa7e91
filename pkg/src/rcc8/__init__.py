"""RCC-8 calculus toolkit: relation algebra, constraint networks, a grid-region
model checker, and an evaluation harness for LLM composition/continuity tests."""

from .algebra import (
    ALL,
    ANONYMIZED,
    CANONICAL,
    EMPTY,
    RELATIONS,
    BaseRelation,
    CompositionTable,
    Lexicon,
    LawViolation,
    MalformedTable,
    RCC8Error,
    RelationSet,
    UnknownRelation,
    compose,
    compose_sets,
    converse,
    converse_set,
    default_table,
    load_composition_table,
    parse_relation,
)
from .neighborhood import (
    CNGraph,
    conceptual_distance,
    default_graph,
    is_neighbor,
    load_cn_graph,
    neighbors,
)
from .network import (
    ConstraintNetwork,
    add_constraint,
    algebraic_closure,
    refine_to_scenario,
)

__version__ = "0.1.0"
