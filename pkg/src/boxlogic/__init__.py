"""Exact construction and analysis of the logic of two-party box worlds."""

from .boxworld import BoxPolytope, BoxShape, BoxState, build_polytope
from .questions import Question, QuestionAlgebra, QuestionSet, generate_logic
from .logic import LogicPoset, build_poset

__all__ = [
    "BoxPolytope",
    "BoxShape",
    "BoxState",
    "LogicPoset",
    "Question",
    "QuestionAlgebra",
    "QuestionSet",
    "build_polytope",
    "build_poset",
    "generate_logic",
]

__version__ = "0.1.0"
