"""Two-level feedback dynamics driven by classical vibrons."""

from .model import (
    UNITS,
    RatchetModel,
    StateVector,
    UnitSystem,
    VibronAnsatz,
    vibron_value,
    vibron_velocity,
    wavenumber_to_omega,
)
from .dynamics import (
    GeneratorSample,
    IntegrationError,
    IntegratorConfig,
    Trajectory,
    detect_markov_moment,
    evolve,
    generator_at,
    run_two_stage,
)
from .landau_zener import (
    DegeneratePassage,
    LinearSweep,
    LzParams,
    local_slope_at_crossing,
    lz_collapsed_probability,
    lz_transition_probability,
)
from .crossing import CrossingReport, direct_crossing, reverse_crossing, solvability_margin_scan

__version__ = "0.1.0"
