"""Classical laboratory for sieve-based quantum pattern matching.

The package simulates the hidden-shift sieve at the level of phase labels,
runs the injectivized matching pipeline on top of it with a two-column cost
ledger, and supplies generators, baselines and statistics for experiments.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .baseline import OracleReport, brute_force_match, brute_force_shift, classical_injective_match
from .errors import (
    ContractError,
    CoordinateError,
    FormatError,
    ParameterError,
    QpmError,
    RecoveryError,
    ShapeError,
    SieveInvariantError,
    SizeError,
)
from .grid import DerivedView, GridString, SubgridView, injectivity_length, m_injectivity_length, megachar, read
from .instances import (
    GenSpec,
    gen_adversarial,
    gen_permutation_pair,
    gen_random,
    gen_shift_instance,
    inject_noise,
    injectivity_tail_experiment,
    megacharacter_blocking,
)
from .ledger import QueryLedger
from .matcher import MatchParams, check, find_match, find_match_auto_nu, rough_check, rough_check2
from .outcome import MatchOutcome
from .sieve import (
    HiddenShiftInstance,
    ParitySample,
    PhaseLabel,
    PhaseState,
    SieveSchedule,
    combine,
    make_schedule,
    measure_final,
    prepare_state,
    recover_low_bits,
    recover_shift,
    recover_shift_majority,
    run_sieve,
    run_stage,
)
