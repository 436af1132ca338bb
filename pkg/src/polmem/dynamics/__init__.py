from .evolve import (IntegratorConfig, Trajectory, cutoff_sentinel, evolve, invariant_support,
                     lindblad_rhs)
from .oracle import liouvillian, oracle_propagate, oracle_step
from .states import (MOTT, NAMED_STATES, SUPERFLUID, DensityInput, DensityMatrix, Fock,
                     PolaritonProduct, Superposition, initial_density, trace_distance)

__all__ = [
    "IntegratorConfig", "Trajectory", "cutoff_sentinel", "evolve", "invariant_support",
    "lindblad_rhs", "liouvillian", "oracle_propagate", "oracle_step", "MOTT", "NAMED_STATES",
    "SUPERFLUID", "DensityInput", "DensityMatrix", "Fock", "PolaritonProduct", "Superposition",
    "initial_density", "trace_distance",
]
