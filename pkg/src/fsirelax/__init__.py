"""One-dimensional coupling of a linear-elastic solid with a two-phase fluid.

The solid is a linear wave system in dilatation velocity and shear stress, the
fluid a barotropic Baer-Nunziato model with stiffened-gas phases. Both are
discretized by a second-order relaxation finite-volume scheme and coupled at
``x = 0`` through an interface Riemann solver.
"""

from .backend import default as kernel
from .config import SimulationConfig, load_config, parse_config, serialize_config
from .coupling import CouplingStates, TraceStates, coupling_residuals, solve_coupling
from .eos import STEEL, VAPOR, WATER, ElasticMaterial, GasEos
from .fvm import CoupledField, Grid, Model, TimeControl, run, step

__version__ = "0.1.0"
