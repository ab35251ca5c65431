"""Symbol-level toolkit for homogeneous constant-coefficient operators."""

from .catalog import get_entry, load_catalog
from .exact import ExactMatrix, Subspace
from .operator import HomOperator, compose_symbols, eval_symbol, adjoint_symbol, restrict_to_subspace
from .structure import (
    Certificate,
    Verdict,
    canceling_space,
    cokernel_space,
    direct_sum_condition,
    is_cocanceling,
    is_elliptic,
    rank_one_condition,
)
from .synthesis import build_annihilator, build_correction, build_potential, build_recovery

__all__ = [
    "ExactMatrix",
    "Subspace",
    "HomOperator",
    "compose_symbols",
    "eval_symbol",
    "adjoint_symbol",
    "restrict_to_subspace",
    "Certificate",
    "Verdict",
    "is_elliptic",
    "canceling_space",
    "cokernel_space",
    "is_cocanceling",
    "rank_one_condition",
    "direct_sum_condition",
    "build_potential",
    "build_annihilator",
    "build_recovery",
    "build_correction",
    "load_catalog",
    "get_entry",
]

__version__ = "0.1.0"
