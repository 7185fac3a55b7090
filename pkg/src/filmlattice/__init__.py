"""Lattice model of a two-phase film on a substrate under a graph constraint."""
from .core import (
    A,
    B,
    S,
    V,
    Configuration,
    FormatError,
    GridSpec,
    SpecMismatch,
    SubgraphViolation,
    dumps,
    from_columns,
    from_label_grid,
    load,
    loads,
    make_flat,
    save,
    symmetric_difference,
    volumes,
)
from .energy import (
    EnergyBreakdown,
    HypothesisViolated,
    SurfaceTensions,
    energy_delta,
    interface_lengths,
    penalized_energy,
    relaxed_tensions,
    surface_energy,
    total_energy,
)
from .potential import NonConvergence, lipschitz_probe, nonlocal_energy, solve_potential

__version__ = "0.1.0"
