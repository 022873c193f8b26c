"""Segment paths, path integrals of the nonconservative term and the operator T.

For a piecewise constant field ``U_0, ..., U_{N-1}`` with far-field state
``U_inf`` the discrete operator is

    T_j = F(U_j) - F(U_inf) - sum_{k >= j} P(U_k, U_{k+1}; G)

where ``P(U-, U+; G) = (alpha1+ - alpha1-) * int_0^1 g(Phi(s)) ds`` along the
segment path ``Phi``. Only the first column of ``G`` is nonzero, hence the
factor ``alpha1+ - alpha1-``.
"""

from dataclasses import dataclass

import numpy as np

from .states import FluidConserved, check_admissible, fluid_flux, noncons_coeff


class SegmentPath:
    """Straight line ``Phi(s; U-, U+) = U- + s (U+ - U-)`` in conserved variables."""

    def __call__(self, s, Uminus, Uplus):
        return segment_eval(s, Uminus, Uplus)


def segment_eval(s, Uminus, Uplus):
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"path parameter {s} outside [0, 1]")
    um = np.asarray(Uminus, dtype=float)
    up = np.asarray(Uplus, dtype=float)
    if s == 0.0:
        return um.copy()
    if s == 1.0:
        return up.copy()
    return um + s * (up - um)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes in ``[0, 1]`` and weights summing to one."""

    nodes: tuple
    weights: tuple

    @classmethod
    def gauss_legendre(cls, order=3):
        x, w = np.polynomial.legendre.leggauss(order)
        return cls(tuple(0.5 * (x + 1.0)), tuple(0.5 * w))

    @property
    def arrays(self):
        return np.array(self.nodes), np.array(self.weights)


DEFAULT_QUADRATURE = QuadratureRule.gauss_legendre(3)


@dataclass
class FluidField:
    """Ordered fluid cells (array ``(N, 5)``) and the far-field state.

    ``far_field`` defaults to the rightmost cell.
    """

    cells: np.ndarray
    far_field: np.ndarray = None

    def __post_init__(self):
        self.cells = np.atleast_2d(np.asarray(self.cells, dtype=float))
        if self.cells.shape[0] == 0:
            raise ValueError("fluid field must contain at least one cell")
        if self.far_field is None:
            self.far_field = self.cells[-1].copy()
        else:
            self.far_field = np.asarray(self.far_field, dtype=float)
        check_admissible(self.cells.T)


def _mixture_pressure(U, eos1, eos2):
    a, m1, _, m2, _ = U
    return eos1.c**2 * m1 - eos1.pi * a + eos2.c**2 * m2 - eos2.pi * (1.0 - a)


def path_integral_G(Uminus, Uplus, params, eos1, eos2, quad=DEFAULT_QUADRATURE):
    """Path integral of ``G(U) dU`` along the segment from ``Uminus`` to ``Uplus``."""
    check_admissible(Uminus)
    check_admissible(Uplus)
    d_alpha = Uplus[0] - Uminus[0]
    if d_alpha == 0.0:
        return np.zeros(5)
    acc = np.zeros(5)
    for s, w in zip(quad.nodes, quad.weights):
        acc += w * noncons_coeff(segment_eval(s, Uminus, Uplus), params, eos1, eos2)
    if params.mode == "mixture":
        # p_I is affine in U, so the endpoint mean is its exact segment average
        acc[2] = 0.5 * (_mixture_pressure(Uminus, eos1, eos2) + _mixture_pressure(Uplus, eos1, eos2))
    out = d_alpha * acc
    out[1] = 0.0
    out[3] = 0.0
    out[4] = -out[2]
    return out


def discrete_T(field, params, eos1, eos2, quad=DEFAULT_QUADRATURE):
    """Values ``T_j`` for every cell, as an array ``(N, 5)``, by one right-to-left scan."""
    cells = field.cells
    n = cells.shape[0]
    f_inf = fluid_flux(FluidConserved(*field.far_field), eos1, eos2)
    out = np.empty((n, 5))
    # the far field is reached through the jump from the last cell
    tail = path_integral_G(cells[-1], field.far_field, params, eos1, eos2, quad)
    out[-1] = fluid_flux(FluidConserved(*cells[-1]), eos1, eos2) - f_inf - tail
    for j in range(n - 2, -1, -1):
        tail = tail + path_integral_G(cells[j], cells[j + 1], params, eos1, eos2, quad)
        out[j] = fluid_flux(FluidConserved(*cells[j]), eos1, eos2) - f_inf - tail
    return out
