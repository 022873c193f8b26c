"""Run configuration and its flat ``section.key = value`` text format.

Lines hold one assignment each; ``#`` starts a comment, blank lines are
ignored, lists are comma separated and all quantities are SI. Keys under
``scenario.`` other than ``scenario.id`` are scenario parameters (floats).

Example::

    scenario.id = gridstudy
    grid.n_solid = 200
    grid.n_fluid = 200
    time.mode = parabolic
    time.t_end = 1e-5
"""

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .eos import ElasticMaterial, GasEos, STEEL, VAPOR, WATER
from .nonconservative import QuadratureRule
from .states import InterfacialParams

SCENARIOS = ("bubble", "gridstudy")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _floats(text):
    text = text.strip()
    return tuple(float(v) for v in text.split(",")) if text else ()


def _ints(text):
    text = text.strip()
    return tuple(int(v) for v in text.split(",")) if text else ()


def _fmt(value):
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# key -> (attribute, parser)
_KEYS = {
    "scenario.id": ("scenario", str),
    "grid.n_solid": ("n_solid", int),
    "grid.n_fluid": ("n_fluid", int),
    "grid.x_min": ("x_min", float),
    "grid.x_max": ("x_max", float),
    "solid.rho": ("rho_s", float),
    "solid.c": ("c_s", float),
    "phase1.c": ("c1", float),
    "phase1.pi": ("pi1", float),
    "phase2.c": ("c2", float),
    "phase2.pi": ("pi2", float),
    "interfacial.mode": ("interfacial_mode", str),
    "interfacial.d1": ("d1", float),
    "interfacial.d2": ("d2", float),
    "time.cfl": ("cfl", float),
    "time.mode": ("time_mode", str),
    "time.t_end": ("t_end", float),
    "time.output": ("output_times", _floats),
    "relaxation.mode": ("relaxation", str),
    "numerics.quadrature_order": ("quadrature_order", int),
    "numerics.fixed_lambda": ("fixed_lambda", float),
    "numerics.residual_every": ("residual_every", int),
    "output.dir": ("output_dir", str),
    "convergence.levels": ("levels", _ints),
    "convergence.reference": ("reference_n", int),
}


@dataclass(frozen=True)
class SimulationConfig:
    scenario: str = "bubble"
    scenario_params: dict = field(default_factory=dict)
    n_solid: int = 600
    n_fluid: int = 600
    x_min: float = -0.2
    x_max: float = 0.2
    rho_s: float = STEEL.rho_s
    c_s: float = STEEL.c_s
    c1: float = VAPOR.c
    pi1: float = VAPOR.pi
    c2: float = WATER.c
    pi2: float = WATER.pi
    interfacial_mode: str = "mixture"
    d1: float = 0.5
    d2: float = 0.5
    cfl: float = 0.2
    time_mode: str = "hyperbolic"
    t_end: float = 1e-3
    output_times: tuple = ()
    relaxation: str = "instantaneous"
    quadrature_order: int = 3
    fixed_lambda: float = 0.0
    residual_every: int = 100
    output_dir: str = "output"
    levels: tuple = (200, 400, 800, 1600)
    reference_n: int = 3200

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.n_solid < 2 or self.n_fluid < 2:
            raise ConfigError("grid needs at least two cells per subdomain")
        if not self.x_min < 0 < self.x_max:
            raise ConfigError("the solid must lie left of x=0 and the fluid right of it")
        dxs, dxf = -self.x_min / self.n_solid, self.x_max / self.n_fluid
        if abs(dxs - dxf) > 1e-12 * max(dxs, dxf):
            raise ConfigError(f"solid and fluid cell widths differ ({dxs} vs {dxf})")
        if any(not 0.0 <= t <= self.t_end for t in self.output_times):
            raise ConfigError("output times must lie in [0, t_end]")
        if self.time_mode not in ("hyperbolic", "parabolic"):
            raise ConfigError(f"unknown time.mode {self.time_mode!r}")
        if self.relaxation not in ("instantaneous", "none"):
            raise ConfigError(f"unknown relaxation.mode {self.relaxation!r}")
        if not 0 < self.cfl <= 1:
            raise ConfigError("time.cfl must lie in (0, 1]")
        if self.quadrature_order < 1:
            raise ConfigError("numerics.quadrature_order must be positive")
        if self.fixed_lambda < 0:
            raise ConfigError("numerics.fixed_lambda must be nonnegative")
        try:
            self.materials()
            self.interfacial()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.interfacial_mode != "mixture":
            raise ConfigError("the coupled scheme supports interfacial.mode = mixture only")

    @property
    def dx(self):
        return -self.x_min / self.n_solid

    def with_cells(self, n):
        """Same setup with ``n`` cells per subdomain on the same extents."""
        ratio = self.x_max / -self.x_min
        n_fluid = round(n * ratio)
        return replace(self, n_solid=n, n_fluid=n_fluid)

    def materials(self):
        return ElasticMaterial(self.rho_s, self.c_s), GasEos(self.c1, self.pi1), GasEos(self.c2, self.pi2)

    def interfacial(self):
        return InterfacialParams(self.interfacial_mode, self.d1, self.d2)

    def model(self):
        from .fvm import Model

        mat, e1, e2 = self.materials()
        return Model(mat, e1, e2, self.interfacial(),
                     QuadratureRule.gauss_legendre(self.quadrature_order))

    def time_control(self):
        from .fvm import TimeControl

        return TimeControl(self.cfl, self.time_mode, self.t_end)

    def step_options(self, backend=None):
        from .fvm import RelaxationMode, StepOptions

        return StepOptions(relaxation=RelaxationMode(self.relaxation),
                           fixed_lambda=self.fixed_lambda,
                           residual_every=self.residual_every, backend=backend)


def parse_config(text, source="<string>"):
    """Parse the flat text format into a :class:`SimulationConfig`."""
    values = {}
    params = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'section.key = value'")
        try:
            if key in _KEYS:
                attr, conv = _KEYS[key]
                values[attr] = conv(value)
            elif key.startswith("scenario."):
                params[key[len("scenario."):]] = float(value)
            else:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {value!r}") from exc
    try:
        return SimulationConfig(scenario_params=params, **values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_config(text, str(path))


def serialize_config(cfg):
    """Text form of ``cfg``; ``parse_config`` inverts it exactly."""
    attrs = {f.name for f in fields(cfg)}
    lines = []
    for key, (attr, _) in _KEYS.items():
        assert attr in attrs
        lines.append(f"{key} = {_fmt(getattr(cfg, attr))}")
    for name, value in sorted(cfg.scenario_params.items()):
        lines.append(f"scenario.{name} = {float(value)!r}")
    return "\n".join(lines) + "\n"
