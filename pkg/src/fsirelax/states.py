"""State vectors of both systems, conversions, mixture and interfacial quantities.

The fluid is stored in conserved form ``(alpha1, a1r1, a1r1v1, a2r2, a2r2v2)``
with ``alpha2 = 1 - alpha1`` never stored. Primitive quantities are always
derived from that 5-vector.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .eos import pressure
from .errors import DegenerateError, InvalidStateError

ALPHA_MARGIN = 1e-10


class ElasticState(NamedTuple):
    w: float
    sigma: float


class FluidConserved(NamedTuple):
    alpha1: float
    m1: float
    q1: float
    m2: float
    q2: float


class FluidPrimitive(NamedTuple):
    alpha1: float
    rho1: float
    v1: float
    rho2: float
    v2: float


@dataclass(frozen=True)
class InterfacialParams:
    """Closure for the interfacial velocity and pressure.

    ``mode="mixture"`` takes ``v_I`` and ``p_I`` as the mixture velocity and
    pressure. ``mode="weighted"`` uses mass-weighted combinations with
    constants ``d1 + d2 = 1``.
    """

    mode: str = "mixture"
    d1: float = 0.5
    d2: float = 0.5

    def __post_init__(self):
        if self.mode not in ("mixture", "weighted"):
            raise ValueError(f"unknown interfacial mode {self.mode!r}")
        if self.mode == "weighted":
            if not (0 <= self.d1 <= 1 and 0 <= self.d2 <= 1):
                raise ValueError("d1, d2 must lie in [0, 1]")
            if abs(self.d1 + self.d2 - 1) > 1e-14:
                raise ValueError("d1 + d2 must equal 1")


MIXTURE = InterfacialParams()


def check_admissible(U):
    """Raise :class:`InvalidStateError` unless every state in ``U`` is admissible.

    ``U`` may be a single 5-vector or an array of shape ``(5, N)``.
    """
    arr = np.asarray(U, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidStateError(f"non-finite fluid state {U}")
    a = arr[0]
    if np.any(a < ALPHA_MARGIN) or np.any(a > 1 - ALPHA_MARGIN):
        raise InvalidStateError(f"volume fraction outside ({ALPHA_MARGIN}, 1-{ALPHA_MARGIN}): {a}")
    if np.any(arr[1] <= 0) or np.any(arr[3] <= 0):
        raise InvalidStateError(f"non-positive partial density in {U}")


def cons_to_prim(U):
    check_admissible(U)
    a1, m1, q1, m2, q2 = (float(u) for u in U)
    return FluidPrimitive(a1, m1 / a1, q1 / m1, m2 / (1.0 - a1), q2 / m2)


def prim_to_cons(P):
    a1, r1, v1, r2, v2 = (float(u) for u in P)
    if not (ALPHA_MARGIN <= a1 <= 1 - ALPHA_MARGIN):
        raise InvalidStateError(f"volume fraction {a1} out of range")
    if not (r1 > 0 and r2 > 0):
        raise InvalidStateError(f"non-positive density in {P}")
    m1 = a1 * r1
    m2 = (1.0 - a1) * r2
    return FluidConserved(a1, m1, m1 * v1, m2, m2 * v2)


def phase_pressures(U, eos1, eos2):
    P = cons_to_prim(U)
    return pressure(eos1, P.rho1), pressure(eos2, P.rho2)


def mixture(U, eos1, eos2):
    """Mixture density, momentum and pressure ``(rho, rho_v, p)``."""
    a1 = U[0]
    p1, p2 = phase_pressures(U, eos1, eos2)
    return U[1] + U[3], U[2] + U[4], a1 * p1 + (1.0 - a1) * p2


def interfacial_states(U, params, eos1, eos2):
    """Interfacial velocity and pressure ``(v_I, p_I)``."""
    P = cons_to_prim(U)
    p1, p2 = pressure(eos1, P.rho1), pressure(eos2, P.rho2)
    if params.mode == "mixture":
        return (U[2] + U[4]) / (U[1] + U[3]), P.alpha1 * p1 + (1.0 - P.alpha1) * p2
    wsum = params.d1 * U[1] + params.d2 * U[3]
    if wsum == 0:
        raise DegenerateError("interfacial weights d1*m1 + d2*m2 vanish")
    beta1 = params.d1 * U[1] / wsum
    beta2 = params.d2 * U[3] / wsum
    return beta1 * P.v1 + beta2 * P.v2, beta2 * p1 + beta1 * p2


def elastic_flux(mat, s):
    """Flux ``-(sigma/rho_s, rho_s c_s^2 w)`` of the elastic system."""
    w, sigma = s
    return np.array([-sigma / mat.rho_s, -mat.rho_s * mat.c_s**2 * w])


def fluid_flux(U, eos1, eos2):
    """Conservative part ``F(U)`` of the two-phase system."""
    a1, m1, q1, m2, q2 = U
    p1, p2 = phase_pressures(U, eos1, eos2)
    return np.array([0.0, q1, q1 * (q1 / m1) + a1 * p1, q2, q2 * (q2 / m2) + (1.0 - a1) * p2])


def noncons_coeff(U, params, eos1, eos2):
    """First column ``g(U) = (v_I, 0, p_I, 0, -p_I)`` of the nonconservative matrix."""
    v_i, p_i = interfacial_states(U, params, eos1, eos2)
    return np.array([v_i, 0.0, p_i, 0.0, -p_i])
