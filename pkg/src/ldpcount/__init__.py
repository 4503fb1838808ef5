"""Approximate model counting with random parity constraints, including sparse LDPC families."""

from .boost import LdpcEnsemble, boost_table, boost_upper_bound, codewords, density, estimate_boost_mc
from .bounds import augment_lower_bound, decide_at_least, iterations_for
from .counter import CounterConfig, approx_count, compute_constants, plan
from .formula import CnfFormula, emit_dimacs, parse_dimacs, parse_dimacs_with_xors
from .oracle import BoundedCountResult, ExternalBackend, InternalBackend, OracleBudget, bounded_count
from .xorsys import FamilySpec, XorSystem, sample_nested, sample_system

__version__ = "0.1.0"
