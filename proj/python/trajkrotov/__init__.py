"""Trajectory-based Krotov optimal control for cascaded cavity networks."""

from ._trajkrotov import (
    ContractError,
    ControlField,
    IterationRecord,
    NetworkModel,
    NetworkSpec,
    NumericalError,
    OptimizationResult,
    OracleCheck,
    PowerLawFit,
    RunConfig,
    blackman_guess,
    fit_power_law,
    load_config,
    noise_measure,
    optimize,
    parse_config,
    run_optimize,
    run_oracles,
    savgol_smooth,
    savgol_weights,
    simulate_density,
    simulate_trajectory,
    update_increment_cross,
)

__all__ = [name for name in dir() if not name.startswith("_")]
