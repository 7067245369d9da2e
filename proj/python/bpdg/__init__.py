"""Positivity-preserving DG solver for the 1D Boltzmann-Poisson diode."""

from ._bpdg import (
    DIAGNOSTICS_HEADER,
    ConfigError,
    DomainError,
    PositivityError,
    StallError,
    check_config,
    energy,
    maxwellian_normalization,
    momentum_of_energy,
    quad_rule,
    run,
    ssp_rk_scalar,
    velocity,
)

__all__ = [
    "DIAGNOSTICS_HEADER",
    "ConfigError",
    "DomainError",
    "PositivityError",
    "StallError",
    "check_config",
    "energy",
    "maxwellian_normalization",
    "momentum_of_energy",
    "quad_rule",
    "run",
    "ssp_rk_scalar",
    "velocity",
]
