"""Interface Riemann solver coupling the elastic solid to the two-phase fluid.

Given the traces left (solid cell -1) and right (fluid cell 0) of the material
interface, the solver returns the coupling states ``(Ubar_R, Vbar_R, U_L, V_L)``.
The relaxed waves connecting traces and coupling states give

    Vbar_R = Vbar_{-1} + lam_bar (Ubar_{-1} - Ubar_R)
    V_L    = V_0 + lam (U_L - U_0)

and the remaining seven unknowns ``(w_R, sigma_R, U_L)`` are fixed by velocity
and stress continuity plus two relaxed conditions. Eliminating variables leaves
a cubic ``R1`` in ``[alpha1 rho1]_L`` and a quadratic ``R2`` in
``[alpha2 rho2 v2]_L``; the physical branch is the middle root of ``R1`` and the
smaller root of ``R2``.

The closed-form coefficients assume the mixture closure ``p_I = p``.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .eos import pressure
from .errors import (
    CouplingSolverError,
    DegenerateError,
    NoRealSolutionError,
    SingularDenominatorError,
    UnphysicalRootError,
)
from .states import ElasticState, FluidConserved, elastic_flux

SINGULAR_RTOL = 1e-14
CUBIC_DISC_RTOL = 1e-12


@dataclass(frozen=True)
class TraceStates:
    """Numerical traces next to the interface and the relaxation speeds.

    Use :meth:`from_cells` to build the auxiliary traces from their
    relaxation limits ``Vbar = Fbar(Ubar_{-1})`` and ``V = T_0``.
    """

    Ubar_m1: ElasticState
    U_0: FluidConserved
    Vbar_m1: np.ndarray
    V_0: np.ndarray
    lambda_bar: float
    lam: float

    def __post_init__(self):
        if not (self.lambda_bar > 0 and self.lam > 0):
            raise ValueError("relaxation speeds must be positive")

    @classmethod
    def from_cells(cls, solid, U0, T0, mat, lambda_bar, lam):
        solid = ElasticState(*map(float, solid))
        return cls(solid, FluidConserved(*map(float, U0)), elastic_flux(mat, solid),
                   np.asarray(T0, dtype=float), float(lambda_bar), float(lam))


@dataclass(frozen=True)
class CouplingStates:
    Ubar_R: ElasticState
    Vbar_R: np.ndarray
    U_L: FluidConserved
    V_L: np.ndarray
    roots: tuple = field(default=(), compare=False)


class CubicCoeffs(NamedTuple):
    a3: float
    a2: float
    a1: float
    a0: float


class QuadCoeffs(NamedTuple):
    b2: float
    b1: float
    b0: float


def _unpack(t, mat, eos1, eos2):
    w0, s0 = t.Ubar_m1
    a10, m10, q10, m20, q20 = t.U_0
    return (t.lam, t.lambda_bar, mat.rho_s, mat.c_s, eos1.c, eos2.c, eos1.pi, eos2.pi,
            w0, s0, a10, m10, q10, m20, q20)


def r1_coefficients(t, mat, eos1, eos2):
    """Coefficients of the cubic ``R1`` whose middle root is ``[alpha1 rho1]_L``."""
    lam, lb, rs, cs, c1, c2, p1, p2, w0, s0, _, m10, q10, m20, q20 = _unpack(t, mat, eos1, eos2)
    c1s, c2s, css = c1 * c1, c2 * c2, cs * cs
    k1 = lam * m10 - q10
    a3 = ((lam - w0) * rs * ((m10 * c1s + m20 * c2s) * lam - q10 * c1s - q20 * c2s) * css
          - lb * ((c1s * (p2 - s0) * m10 + m20 * c2s * (p1 - s0)) * lam
                  - c1s * (p2 - s0) * q10 - q20 * c2s * (p1 - s0))) * lb
    a2 = (rs**2 * (lam - w0)**2 * css**2
          - lb * rs * ((m10 * c1s + m20 * c2s - 2 * s0 + p1 + p2) * lam - q10 * c1s
                       + (-p1 - p2 + 2 * s0) * w0 - q20 * c2s) * css
          + lb**2 * (p2 - s0) * (p1 - s0)) * k1
    a1 = -2 * rs * css * k1**2 * (rs * (lam - w0) * css - lb * (p1 + p2 - 2 * s0) / 2)
    a0 = rs**2 * css**2 * k1**3
    return CubicCoeffs(a3, a2, a1, a0)


def _d2(x, t, mat, eos1):
    lam, lb, rs, cs = t.lam, t.lambda_bar, mat.rho_s, mat.c_s
    w0, s0 = t.Ubar_m1
    m10, q10 = t.U_0[1], t.U_0[2]
    k = cs * cs * rs
    terms = (lam * x * k, -lam * m10 * k, -x * w0 * k, lb * x * s0, -lb * x * eos1.pi, q10 * k)
    return math.fsum(terms), sum(abs(v) for v in terms)


def alpha2rho2_of_x(x, t, mat, eos1, eos2):
    """``[alpha2 rho2]_L = -N1(x) / D1(x)`` for ``x = [alpha1 rho1]_L``."""
    lb = t.lambda_bar
    d2, scale = _d2(x, t, mat, eos1)
    if abs(d2) <= SINGULAR_RTOL * scale or x == 0.0:
        raise SingularDenominatorError(f"D1 vanishes at x={x}")
    n1 = (d2 + lb * x * eos1.pi - eos2.pi * lb * x) * (d2 + lb * x * x * eos1.c**2)
    d1 = x * lb * eos2.c**2 * d2
    return -n1 / d1


def alpha1L_of_x(x, t, mat, eos1, eos2):
    """``alpha1_L = -N2(x) / D2(x)``; raises if the result is not a volume fraction."""
    d2, scale = _d2(x, t, mat, eos1)
    if abs(d2) <= SINGULAR_RTOL * scale:
        raise SingularDenominatorError(f"D2 vanishes at x={x}")
    a = -t.lambda_bar * x * x * eos1.c**2 / d2
    if not 0.0 < a < 1.0:
        raise UnphysicalRootError(f"alpha1_L = {a} outside (0, 1) at x={x}")
    return a


def r2_coefficients(x, y, t, mat, eos1, eos2):
    """Coefficients of the quadratic ``R2`` in ``[alpha2 rho2 v2]_L``.

    ``x = [alpha1 rho1]_L`` and ``y = [alpha2 rho2]_L`` are already known.
    """
    lam, lb, rs, _, c1, c2, p1, p2, w0, s0, a10, m10, q10, m20, q20 = _unpack(t, mat, eos1, eos2)
    b2 = -(x + y) * m20 * m10
    b1 = (lb * rs + lam * y + lam * x) * m10 * y * m20
    b0 = ((((-p1 + p2) * a10 - (q10 + q20) * lam - w0 * rs * lb + s0 - p2) * y * m20
           + lb * rs * m20 + q20**2 * y + y * c2**2 * m20**2 - m20 * lb * rs) * m10 * y
          + (m10**2 * c1**2 + q10**2) * y**2 * m20)
    return QuadCoeffs(b2, b1, b0)


def _cubic_value(c, x):
    a3, a2, a1, a0 = c
    return ((a3 * x + a2) * x + a1) * x + a0


def _polish(c, x, iterations=1):
    """Newton steps on the cubic; a step is kept only if it reduces ``|R(x)|``."""
    a3, a2, a1, _ = c
    f = _cubic_value(c, x)
    for _ in range(iterations):
        df = (3.0 * a3 * x + 2.0 * a2) * x + a1
        if df == 0.0 or f == 0.0:
            break
        xn = x - f / df
        fn = _cubic_value(c, xn)
        if not abs(fn) < abs(f):
            break
        x, f = xn, fn
    return x


def _closed_form_roots(b, cc, d):
    shift = b / 3.0
    p = cc - b * shift
    q = (2.0 * shift * shift - cc) * shift + d
    if p == 0.0 and q == 0.0:
        return [-shift] * 3
    if p < 0.0 and 4.0 * p**3 + 27.0 * q * q <= 0.0:
        r = math.sqrt(-p / 3.0)
        arg = max(-1.0, min(1.0, (1.5 * q / p) / r))
        phi = math.acos(arg) / 3.0
        return [2.0 * r * math.cos(phi - 2.0 * math.pi * k / 3.0) - shift for k in range(3)]
    sq = math.sqrt(max(q * q / 4.0 + p**3 / 27.0, 0.0))
    u = -math.copysign(abs(abs(q) / 2.0 + sq) ** (1.0 / 3.0), q)
    return [u - p / (3.0 * u) - shift if u != 0.0 else -shift]


def cubic_real_roots(c):
    """Real roots of ``a3 x^3 + a2 x^2 + a1 x + a0`` in ascending order.

    Returns one or three roots (repeated roots listed with multiplicity).
    The closed form (trigonometric or Cardano) supplies the root of largest
    magnitude, which is polished by Newton's method and deflated through
    ``x2 x3 = -a0 / (a3 x1)`` and ``x2 + x3 = (a1/a3 - x2 x3) / x1``. Neither
    relation cancels, so a close pair of small roots keeps full accuracy;
    the trigonometric formula alone loses half the digits there. Each
    remaining root gets one Newton polish.
    """
    a3, a2, a1, a0 = c
    if a3 == 0.0:
        raise DegenerateError("leading cubic coefficient is zero")
    b, cc, d = a2 / a3, a1 / a3, a0 / a3
    guess = max(_closed_form_roots(b, cc, d), key=abs)
    x1 = _polish(c, guess, iterations=50)
    if x1 == 0.0:
        # a0 == 0: factor out x directly
        rest = quadratic_roots_or_none((1.0, b, cc))
    else:
        prod = -d / x1
        total = (cc - prod) / x1
        rest = quadratic_roots_or_none((1.0, -total, prod))
    if rest is None:
        return (x1,)
    return tuple(sorted([x1, _polish(c, rest[0]), _polish(c, rest[1])]))


def quadratic_roots_or_none(c):
    """Like :func:`quadratic_roots` but returns ``None`` for a complex pair."""
    b2, b1, b0 = c
    disc = b1 * b1 - 4.0 * b2 * b0
    if disc < -CUBIC_DISC_RTOL * (b1 * b1 + abs(4.0 * b2 * b0)):
        return None
    return quadratic_roots(c)


def quadratic_roots(c):
    """Real roots ``(smaller, larger)`` of ``b2 x^2 + b1 x + b0``.

    The root of larger magnitude is computed first; the other one follows
    from the product of roots, which avoids cancellation.
    """
    b2, b1, b0 = c
    if b2 == 0.0:
        raise DegenerateError("leading quadratic coefficient is zero")
    disc = b1 * b1 - 4.0 * b2 * b0
    if disc < 0.0:
        if disc < -1e-14 * (b1 * b1 + abs(4.0 * b2 * b0)):
            raise NoRealSolutionError(f"negative discriminant {disc}")
        disc = 0.0
    qq = -0.5 * (b1 + math.copysign(math.sqrt(disc), b1))
    if qq == 0.0:
        return (0.0, 0.0)
    r1, r2 = qq / b2, b0 / qq
    return (r1, r2) if r1 <= r2 else (r2, r1)


def _stress_compatibility(sigma, t, mat, eos1, eos2):
    """Partial densities and volume fractions implied by an interface stress.

    The relaxed velocity conditions give ``[alpha_k rho_k]_L`` explicitly once
    ``sigma_R`` is known, and stress continuity gives ``alpha_kL``. Returns
    ``(m1L, m2L, alpha1L, alpha2L, f, df)`` where ``f = alpha1L + alpha2L - 1``.
    """
    lam, lb = t.lam, t.lambda_bar
    w0, s0 = t.Ubar_m1
    k = mat.rho_s * mat.c_s**2
    c1s, c2s = eos1.c**2, eos2.c**2
    A1 = lam * t.U_0[1] - t.U_0[2]
    A2 = lam * t.U_0[3] - t.U_0[4]
    den = lam - w0 + lb * (s0 - sigma) / k
    m1L, m2L = A1 / den, A2 / den
    g1, g2 = eos1.pi - sigma, eos2.pi - sigma
    a1L, a2L = c1s * m1L / g1, c2s * m2L / g2
    # d/dsigma of m_k/den-weighted terms: den' = -lb/k
    dden = -lb / k
    da1 = c1s * A1 * (1.0 / (g1 * g1 * den) - dden / (g1 * den * den))
    da2 = c2s * A2 * (1.0 / (g2 * g2 * den) - dden / (g2 * den * den))
    return m1L, m2L, a1L, a2L, (a1L + a2L) - 1.0, da1 + da2


def _refine_stress(sigma, t, mat, eos1, eos2, max_iter=8):
    for _ in range(max_iter):
        *_, f, df = _stress_compatibility(sigma, t, mat, eos1, eos2)
        if df == 0.0:
            break
        step = f / df
        sigma -= step
        if abs(step) <= 4e-16 * abs(sigma):
            break
    return sigma


def solve_coupling(t, mat, eos1, eos2, refine=True):
    """Coupling states for the traces ``t``.

    Steps: middle root ``x`` of ``R1`` as ``[alpha1 rho1]_L``; ``[alpha2 rho2]_L``
    and ``alpha1_L`` from their rational forms in ``x``; ``sigma_R`` from stress
    continuity of phase 1; the smaller root of ``R2`` as ``[alpha2 rho2 v2]_L``;
    ``w_R`` and ``[alpha1 rho1 v1]_L`` from velocity continuity.

    With ``refine=True`` the stress ``sigma_R`` from this sequence is polished
    by Newton's method on ``alpha1_L + alpha2_L = 1`` written in ``sigma_R``,
    and the partial densities and volume fractions are re-derived from it.
    The parametrization by ``x`` loses up to ten digits in
    ``[alpha2 rho2]_L`` when one phase nearly vanishes; the stress form is
    well conditioned and converges to the same root.
    """
    try:
        roots = cubic_real_roots(r1_coefficients(t, mat, eos1, eos2))
    except DegenerateError as exc:
        raise CouplingSolverError(f"R1 degenerate: {exc}", t) from exc
    if len(roots) != 3:
        raise CouplingSolverError(f"R1 has {len(roots)} real root(s), expected 3", t)
    x = roots[1]
    try:
        y = alpha2rho2_of_x(x, t, mat, eos1, eos2)
        a1L = alpha1L_of_x(x, t, mat, eos1, eos2)
        sigma_R = (eos1.pi * a1L - eos1.c**2 * x) / a1L
        if refine:
            sigma_new = _refine_stress(sigma_R, t, mat, eos1, eos2)
            if abs(sigma_new - sigma_R) > 1e-6 * (abs(sigma_R) + eos1.pi + eos2.pi):
                raise CouplingSolverError(
                    f"stress refinement left the selected root: {sigma_R} -> {sigma_new}", t)
            sigma_R = sigma_new
            x, y, a1L, a2L, _, _ = _stress_compatibility(sigma_R, t, mat, eos1, eos2)
            if a2L < a1L:
                a1L = 1.0 - a2L
            if not 0.0 < a1L < 1.0:
                raise UnphysicalRootError(f"alpha1_L = {a1L} outside (0, 1)")
        z = quadratic_roots(r2_coefficients(x, y, t, mat, eos1, eos2))[0]
    except (ArithmeticError, DegenerateError) as exc:
        raise CouplingSolverError(f"coupling solve failed: {exc}", t) from exc
    if not (x > 0.0 and y > 0.0):
        raise CouplingSolverError(f"negative partial density at interface: {x}, {y}", t)
    w_R = z / y
    q1L = w_R * x
    Ubar_R = ElasticState(w_R, sigma_R)
    U_L = FluidConserved(a1L, x, q1L, y, z)
    Vbar_R = np.asarray(t.Vbar_m1) + t.lambda_bar * (np.asarray(t.Ubar_m1) - np.asarray(Ubar_R))
    V_L = np.asarray(t.V_0) + t.lam * (np.asarray(U_L) - np.asarray(t.U_0))
    return CouplingStates(Ubar_R, Vbar_R, U_L, V_L, roots)


def coupling_residuals(cs, t, mat, eos1, eos2):
    """Signed, nondimensional residuals of the seven coupling conditions.

    Order: ``w_R - v1L``, ``w_R - v2L``, ``sigma_R + p1``, ``sigma_R + p2``,
    the relaxed velocity condition for each phase, the relaxed stress
    condition. Velocities are scaled by ``c_s``, stresses by ``rho_s c_s^2``.
    """
    rs, c_s = mat.rho_s, mat.c_s
    stress = rs * c_s**2
    w_R, sigma_R = cs.Ubar_R
    a1L, m1L, q1L, m2L, q2L = cs.U_L
    a10, m10, q10, m20, q20 = t.U_0
    V_L, V_0 = np.asarray(cs.V_L), np.asarray(t.V_0)
    Vw_R, Vs_R = cs.Vbar_R
    p1L = eos1.c**2 * m1L / a1L - eos1.pi
    p2L = eos2.c**2 * m2L / (1.0 - a1L) - eos2.pi
    p10 = eos1.c**2 * m10 / a10 - eos1.pi
    p20 = eos2.c**2 * m20 / (1.0 - a10) - eos2.pi
    w_from_V = -Vs_R / (c_s**2 * rs)
    r = np.empty(7)
    r[0] = (w_R - q1L / m1L) / c_s
    r[1] = (w_R - q2L / m2L) / c_s
    r[2] = (sigma_R + p1L) / stress
    r[3] = (sigma_R + p2L) / stress
    r[4] = (w_from_V - (V_L[1] - V_0[1] + q10) / m1L) / c_s
    r[5] = (w_from_V - (V_L[3] - V_0[3] + q20) / m2L) / c_s
    momentum_sum = (V_L[2] - V_0[2] + q10 * q10 / m10 + a10 * p10 - q1L * q1L / m1L
                    + V_L[4] - V_0[4] + q20 * q20 / m20 + (1.0 - a10) * p20 - q2L * q2L / m2L)
    r[6] = (rs * Vw_R - momentum_sum) / stress
    return r


def root_diagnostics(t, mat, eos1, eos2):
    """Root pattern of ``R1``/``R2`` for the given traces (for logging).

    Returns a dict with the number of real roots of ``R1``, whether the
    smallest is negative, whether the largest yields an unphysical volume
    fraction, and the ratio ``|larger root of R2| / |[alpha2 rho2 v2]_0|``.
    """
    roots = cubic_real_roots(r1_coefficients(t, mat, eos1, eos2))
    out = {"n_real": len(roots), "x1_negative": roots[0] < 0.0,
           "x3_unphysical": None, "r2_ratio": None}
    if len(roots) == 3:
        try:
            alpha1L_of_x(roots[2], t, mat, eos1, eos2)
            out["x3_unphysical"] = False
        except (UnphysicalRootError, SingularDenominatorError):
            out["x3_unphysical"] = True
        try:
            x = roots[1]
            y = alpha2rho2_of_x(x, t, mat, eos1, eos2)
            big = quadratic_roots(r2_coefficients(x, y, t, mat, eos1, eos2))[1]
            ref = abs(t.U_0[4])
            out["r2_ratio"] = abs(big) / ref if ref > 0 else math.inf
        except ArithmeticError:
            pass
    return out
