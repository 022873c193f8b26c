"""Initial data of the bubble-collapse and grid-study experiments.

Cell values are point samples at the cell midpoints. Scenario parameters can
be overridden through ``scenario.<name>`` config keys.
"""

import numpy as np

from .config import ConfigError
from .eos import density_from_pressure
from .fvm import CoupledField, Grid

BUBBLE_DEFAULTS = {
    "bubble_left": 0.075,
    "bubble_right": 0.125,
    "alpha_in": 0.9,
    "alpha_out": 0.1,
    "p_in": 3.5e3,
    "p_out": 1.75e7,
    "sigma": -3.5e7,
}

GRIDSTUDY_DEFAULTS = {
    "sigma": -3.5e5,
    "width": 200.0,
    "p0": 3.5e5,
}


def _params(cfg, defaults):
    unknown = set(cfg.scenario_params) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown {cfg.scenario} parameters: {sorted(unknown)}")
    return {**defaults, **cfg.scenario_params}


def _grid(cfg, expected):
    if cfg.scenario != expected:
        raise ConfigError(f"config is for scenario {cfg.scenario!r}, not {expected!r}")
    return Grid(cfg.n_solid, cfg.n_fluid, cfg.dx)


def fluid_state(alpha1, p, eos1, eos2, v=0.0):
    """Conserved fluid states ``(5, N)`` at common pressure ``p`` and velocity ``v``."""
    alpha1 = np.asarray(alpha1, dtype=float)
    p = np.broadcast_to(np.asarray(p, dtype=float), alpha1.shape)
    m1 = alpha1 * density_from_pressure(eos1, p)
    m2 = (1.0 - alpha1) * density_from_pressure(eos2, p)
    return np.array([alpha1, m1, m1 * v, m2, m2 * v])


def scenario_bubble_collapse(cfg):
    """Vapour bubble in near-pure water next to a prestressed steel wall."""
    grid = _grid(cfg, "bubble")
    prm = _params(cfg, BUBBLE_DEFAULTS)
    if not 0.0 <= prm["bubble_left"] < prm["bubble_right"] <= cfg.x_max:
        raise ConfigError("bubble must lie inside the fluid domain")
    _, eos1, eos2 = cfg.materials()
    x = grid.fluid_centers
    inside = (x > prm["bubble_left"]) & (x < prm["bubble_right"])
    alpha = np.where(inside, prm["alpha_in"], prm["alpha_out"])
    p = np.where(inside, prm["p_in"], prm["p_out"])
    solid = np.zeros((2, grid.n_solid))
    solid[1] = prm["sigma"]
    return CoupledField(grid, solid, fluid_state(alpha, p, eos1, eos2))


def scenario_grid_study(cfg):
    """Smooth Gaussian vapour profile with exponential pressure."""
    grid = _grid(cfg, "gridstudy")
    prm = _params(cfg, GRIDSTUDY_DEFAULTS)
    _, eos1, eos2 = cfg.materials()
    x = grid.fluid_centers
    alpha = np.exp(-prm["width"] * x * x)
    p = prm["p0"] * np.exp(x)
    solid = np.zeros((2, grid.n_solid))
    solid[1] = prm["sigma"]
    return CoupledField(grid, solid, fluid_state(alpha, p, eos1, eos2))


SCENARIO_BUILDERS = {"bubble": scenario_bubble_collapse, "gridstudy": scenario_grid_study}


def initial_field(cfg):
    return SCENARIO_BUILDERS[cfg.scenario](cfg)
