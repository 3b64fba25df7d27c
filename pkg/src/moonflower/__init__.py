"""Moonflower-free set families, covering games, puncturing and code sparsifiers."""
from .setfam import (BudgetExceeded, FamilyFormatError, MoonflowerWitness, SetFamily,
                     gen_lower_bound_family, is_moonflower, mf_exact, mf_greedy, parse_family,
                     project, read_family, write_family)
from .cover import peel_exceptional, phi_value
from .puncture import ReductionConfig, iterated_puncture, one_step_reduce
from .sparsify import (Code, Sparsifier, SparsifierConfig, build_sparsifier,
                       certify_lower_bound, gen_chain_code, nrd, verify_sparsifier)

__version__ = "0.1.0"
