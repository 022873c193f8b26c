"""Isothermal stiffened-gas equations of state and elastic material data."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError


@dataclass(frozen=True)
class GasEos:
    """Isothermal stiffened gas ``p = c**2 * rho - pi``.

    Parameters
    ----------
    c : float
        Isothermal speed of sound (m/s).
    pi : float
        Minimal pressure (Pa).
    """

    c: float
    pi: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"sound speed must be positive, got {self.c}")
        if not self.pi >= 0:
            raise ValueError(f"minimal pressure must be nonnegative, got {self.pi}")


@dataclass(frozen=True)
class ElasticMaterial:
    """Linear-elastic solid: density ``rho_s`` (kg/m^3), dilatation wave speed ``c_s`` (m/s)."""

    rho_s: float
    c_s: float

    def __post_init__(self):
        if not self.rho_s > 0:
            raise ValueError(f"solid density must be positive, got {self.rho_s}")
        if not self.c_s > 0:
            raise ValueError(f"wave speed must be positive, got {self.c_s}")

    @property
    def impedance_stress(self):
        """``rho_s * c_s**2``, the natural stress scale of the solid."""
        return self.rho_s * self.c_s**2


# Parameters of the bubble-collapse experiment: steel, water vapour, liquid water.
STEEL = ElasticMaterial(rho_s=7800.0, c_s=5990.0)
VAPOR = GasEos(c=367.58, pi=0.0)
WATER = GasEos(c=1483.3, pi=1.1358e9)


def pressure(eos, rho):
    """Pressure of ``eos`` at density ``rho``; works elementwise on arrays."""
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(~(rho_arr > 0)):
        raise InvalidStateError(f"density must be positive, got {rho}")
    return eos.c**2 * rho - eos.pi


def density_from_pressure(eos, p):
    """Inverse of :func:`pressure`."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(~(p_arr + eos.pi > 0)):
        raise InvalidStateError(f"pressure {p} not above -pi = {-eos.pi}")
    return (p + eos.pi) / eos.c**2


def elastic_wave_bound(mat):
    """Spectral radius of the elastic flux Jacobian; its eigenvalues are ``+-c_s``."""
    return mat.c_s


def fluid_wave_bound(U, eos1, eos2):
    """Upper bound ``max(|v1| + c1, |v2| + c2, |v_I|)`` of the fluid wave speeds.

    ``U`` is a single conserved state or an array of shape ``(5, N)``; for the
    latter the maximum over all cells is returned. Any convex combination of
    the phase velocities (every supported ``v_I``) is dominated by the first
    two terms, so they alone give the bound.
    """
    from .states import check_admissible

    arr = np.asarray(U, dtype=float)
    check_admissible(arr)
    v1 = arr[2] / arr[1]
    v2 = arr[4] / arr[3]
    return float(np.max(np.maximum(np.abs(v1) + eos1.c, np.abs(v2) + eos2.c)))
