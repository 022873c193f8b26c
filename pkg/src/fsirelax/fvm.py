"""Coupled finite-volume scheme: grid, time step, fluxes, relaxation, driver.

Cells ``j < 0`` belong to the elastic solid, cells ``j >= 0`` to the
two-phase fluid; the material interface sits at ``x = 0`` between cells
``-1`` and ``0``. Interior edges use a MUSCL/minmod relaxation flux, the
interface edge uses first-order fluxes built from the coupling states. After
each update the fluid is projected onto velocity and pressure equilibrium.

The time loop itself lives in a kernel module (see :mod:`.backend`); the
functions here expose the individual pieces and drive the loop.
"""

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import _pykernel as pk
from .backend import get as get_backend
from .coupling import TraceStates, solve_coupling
from .eos import ElasticMaterial, GasEos, elastic_wave_bound, fluid_wave_bound
from .errors import DegenerateError
from .nonconservative import DEFAULT_QUADRATURE, QuadratureRule
from .states import MIXTURE, FluidConserved, InterfacialParams, check_admissible


class RelaxationMode(Enum):
    INSTANTANEOUS = "instantaneous"
    NONE = "none"


@dataclass(frozen=True)
class Grid:
    n_solid: int
    n_fluid: int
    dx: float

    def __post_init__(self):
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if self.n_solid < 2 or self.n_fluid < 2:
            raise ValueError("need at least two cells per subdomain")

    @classmethod
    def uniform(cls, n_per_side, length=0.2):
        return cls(n_per_side, n_per_side, length / n_per_side)

    @property
    def solid_centers(self):
        return (np.arange(-self.n_solid, 0) + 0.5) * self.dx

    @property
    def fluid_centers(self):
        return (np.arange(self.n_fluid) + 0.5) * self.dx


@dataclass(frozen=True)
class TimeControl:
    """Courant number, step rule and end time.

    ``mode="hyperbolic"``: ``dt = cfl dx / max(lambda_bar, lambda)``.
    ``mode="parabolic"``: ``dt = cfl dx**2 / lambda_bar`` (grid studies).
    """

    cfl: float = 0.2
    mode: str = "hyperbolic"
    t_end: float = 0.0

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise ValueError(f"CFL must lie in (0, 1], got {self.cfl}")
        if self.mode not in ("hyperbolic", "parabolic"):
            raise ValueError(f"unknown time step mode {self.mode!r}")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")


@dataclass(frozen=True)
class Model:
    """Material data and discretization choices shared by all steps."""

    mat: ElasticMaterial
    eos1: GasEos
    eos2: GasEos
    interfacial: InterfacialParams = MIXTURE
    quadrature: QuadratureRule = DEFAULT_QUADRATURE

    def __post_init__(self):
        if self.interfacial.mode != "mixture":
            raise ValueError("the coupled scheme supports the mixture closure v_I = v, p_I = p only")

    def kernel_args(self):
        nodes, weights = self.quadrature.arrays
        return dict(rho_s=self.mat.rho_s, c_s=self.mat.c_s, c1=self.eos1.c, pi1=self.eos1.pi,
                    c2=self.eos2.c, pi2=self.eos2.pi, nodes=nodes, weights=weights)


@dataclass
class CoupledField:
    """Solid states ``(2, Ns)`` and fluid states ``(5, Nf)`` at time ``t``."""

    grid: Grid
    solid: np.ndarray
    fluid: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.solid = np.ascontiguousarray(self.solid, dtype=float)
        self.fluid = np.ascontiguousarray(self.fluid, dtype=float)
        if self.solid.shape != (2, self.grid.n_solid):
            raise ValueError(f"solid array has shape {self.solid.shape}")
        if self.fluid.shape != (5, self.grid.n_fluid):
            raise ValueError(f"fluid array has shape {self.fluid.shape}")
        check_admissible(self.fluid)

    def copy(self):
        return CoupledField(self.grid, self.solid.copy(), self.fluid.copy(), self.t)


def minmod(a, b):
    if (a > 0 and b > 0) or (a < 0 and b < 0):
        return a if abs(a) <= abs(b) else b
    return 0.0


def wave_speeds(field, model, fixed_lambda=None):
    """``(lambda_bar, lambda)`` for the current field."""
    lam = fixed_lambda if fixed_lambda else fluid_wave_bound(field.fluid, model.eos1, model.eos2)
    return elastic_wave_bound(model.mat), lam


def compute_dt(field, tc, model, fixed_lambda=None):
    """Time step for ``field``, shortened so that ``t + dt <= t_end``."""
    lb, lam = wave_speeds(field, model, fixed_lambda)
    if tc.mode == "parabolic":
        dt = tc.cfl * field.grid.dx**2 / lb
    else:
        speed = max(lb, lam)
        if not speed > 0:
            raise DegenerateError("zero wave speed")
        dt = tc.cfl * field.grid.dx / speed
    return min(dt, tc.t_end - field.t) if tc.t_end > field.t else dt


def _solid_index(field, j):
    if not -field.grid.n_solid <= j <= -1:
        raise IndexError(f"solid cell index {j} out of range")
    return j + field.grid.n_solid


def solid_slopes(field, j, model):
    """Limited slopes ``(S-, S+)`` of solid cell ``j`` (``-Ns <= j <= -1``)."""
    i = _solid_index(field, j)
    mat = model.mat
    s = field.solid
    Ue = np.concatenate([s[:, :1], s[:, :1], s, s[:, -1:]], axis=1)
    Fe = np.vstack([-Ue[1] / mat.rho_s, -mat.rho_s * mat.c_s**2 * Ue[0]])
    Sm, Sp = pk.muscl_slopes(Fe, Ue, mat.c_s, field.grid.dx)
    if i == field.grid.n_solid - 1:
        return np.zeros(2), np.zeros(2)
    return Sm[:, i + 1], Sp[:, i + 1]


def discrete_T(field, model, far_field_shift=None):
    """Operator ``T`` on the fluid cells, shape ``(5, Nf)``."""
    c1s, c2s = model.eos1.c**2, model.eos2.c**2
    nodes, weights = model.quadrature.arrays
    shift = np.zeros(5) if far_field_shift is None else np.asarray(far_field_shift, float)
    return pk.discrete_T(field.fluid, c1s, model.eos1.pi, c2s, model.eos2.pi, nodes, weights, shift)


def fluid_slopes(field, T, j, lam):
    """Limited slopes ``(S-, S+)`` of fluid cell ``j`` built from ``T``."""
    if not 0 <= j < field.grid.n_fluid:
        raise IndexError(f"fluid cell index {j} out of range")
    if j == 0:
        return np.zeros(5), np.zeros(5)
    f = field.fluid
    Ue = np.concatenate([f[:, :1], f, f[:, -1:], f[:, -1:]], axis=1)
    Te = np.concatenate([T[:, :1], T, T[:, -1:], T[:, -1:]], axis=1)
    Sm, Sp = pk.muscl_slopes(Te, Ue, lam, field.grid.dx)
    return Sm[:, j], Sp[:, j]


def interior_flux_solid(field, j, model):
    """Flux on the edge between solid cells ``j-1`` and ``j`` (``-Ns <= j <= -1``).

    ``j = -Ns`` is the outer boundary edge against the copy ghost.
    """
    i = _solid_index(field, j)
    return pk.solid_fluxes(field.solid, model.mat.rho_s, model.mat.c_s, field.grid.dx)[:, i]


def interior_flux_fluid(field, T, j, lam):
    """Flux on the edge between fluid cells ``j-1`` and ``j`` (``1 <= j <= Nf``).

    ``j = Nf`` is the outer boundary edge against the copy ghost.
    """
    if not 1 <= j <= field.grid.n_fluid:
        raise IndexError(f"fluid edge index {j} out of range")
    return pk.fluid_fluxes(field.fluid, T, lam, field.grid.dx)[:, j - 1]


def interface_fluxes(cs, t, mat):
    """Numerical fluxes at ``x = 0`` seen from the solid and from the fluid."""
    Fbar = np.asarray(t.Vbar_m1)
    Ub = np.asarray(t.Ubar_m1)
    left = 0.5 * (Fbar + cs.Vbar_R) - 0.5 * t.lambda_bar * (np.asarray(cs.Ubar_R) - Ub)
    right = 0.5 * (cs.V_L + t.V_0) - 0.5 * t.lam * (np.asarray(t.U_0) - np.asarray(cs.U_L))
    return left, right


def interface_traces(field, model, lam, T=None):
    T = discrete_T(field, model) if T is None else T
    return TraceStates.from_cells(field.solid[:, -1], field.fluid[:, 0], T[:, 0], model.mat,
                                  elastic_wave_bound(model.mat), lam)


def velocity_projection(U):
    """Equalize phase velocities at the mixture velocity; masses and total momentum kept."""
    arr = np.array(U, dtype=float)
    pk.velocity_projection(arr)
    return FluidConserved(*arr)


def pressure_projection(U, eos1, eos2):
    """Move the volume fraction to pressure equilibrium; masses and momenta kept."""
    check_admissible(U)
    arr = np.array(U, dtype=float)
    arr[0] = float(pk.equilibrium_alpha(arr[1], arr[3], eos1.c**2, eos1.pi, eos2.c**2, eos2.pi))
    return FluidConserved(*arr)


@dataclass
class StepOptions:
    """Switches of the time loop that are not physical parameters."""

    relaxation: RelaxationMode = RelaxationMode.INSTANTANEOUS
    fixed_lambda: float = 0.0
    far_field_shift: np.ndarray = None
    residual_every: int = 100
    residual_tol: float = 1e-9
    backend: str = None
    stats: dict = field(default_factory=lambda: {"solves": 0, "max_residual": 0.0, "steps": 0})


def advance(field, model, tc, t_stop, opts=None, clip=True, max_steps=-1):
    """Advance ``field`` in place towards ``t_stop``; returns the number of steps."""
    opts = opts or StepOptions()
    kernel = get_backend(opts.backend)
    shift = np.zeros(5) if opts.far_field_shift is None else np.asarray(opts.far_field_shift, float)
    t, steps, solves, max_res = kernel.advance(
        field.solid, field.fluid, float(field.t), float(t_stop), field.grid.dx,
        cfl=tc.cfl, parabolic=tc.mode == "parabolic",
        relax=opts.relaxation == RelaxationMode.INSTANTANEOUS,
        fixed_lambda=float(opts.fixed_lambda or 0.0), shift=shift, max_steps=max_steps,
        clip=clip, residual_every=opts.residual_every, residual_tol=opts.residual_tol,
        solve_counter=opts.stats["solves"], **model.kernel_args())
    field.t = t
    opts.stats["solves"] = solves
    opts.stats["steps"] += steps
    opts.stats["max_residual"] = max(opts.stats["max_residual"], max_res)
    return steps


def step(field, model, tc, opts=None):
    """One time step; returns a new field."""
    new = field.copy()
    t_stop = tc.t_end if tc.t_end > field.t else np.inf
    advance(new, model, tc, t_stop, opts, clip=True, max_steps=1)
    return new


def run(cfg, backend=None, progress=None):
    """Run the configured scenario; returns one snapshot per output time."""
    from .scenarios import initial_field
    from .snapshots import FieldSnapshot

    model = cfg.model()
    tc = cfg.time_control()
    fld = initial_field(cfg)
    opts = cfg.step_options(backend)
    snaps = []
    for t_out in sorted(cfg.output_times):
        if t_out < fld.t:
            continue
        final = abs(t_out - tc.t_end) == 0.0
        advance(fld, model, tc, t_out, opts, clip=final)
        snaps.append(FieldSnapshot.from_field(fld, model, tag=t_out))
        if progress:
            progress(fld.t, opts.stats)
    if fld.t < tc.t_end:
        advance(fld, model, tc, tc.t_end, opts, clip=True)
    run.last_field = fld
    run.last_stats = opts.stats
    return snaps
