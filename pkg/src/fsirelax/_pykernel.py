"""Pure numpy implementation of the coupled time loop.

This is the fallback backend. ``_ckernel`` (Cython) implements the same
function with the same arithmetic; both are selected through ``backend``.

Arrays are modified in place: ``solid`` has shape ``(2, Ns)`` holding
``(w, sigma)``, ``fluid`` has shape ``(5, Nf)`` holding the conserved
two-phase state. Cell ``Ns - 1`` of ``solid`` and cell ``0`` of ``fluid``
touch the coupling interface.
"""

import math

import numpy as np

from .coupling import TraceStates, coupling_residuals, solve_coupling
from .eos import ElasticMaterial, GasEos
from .errors import DegenerateError, SimulationAbort
from .states import ALPHA_MARGIN

NAME = "python"


def minmod(a, b):
    same = ((a > 0) & (b > 0)) | ((a < 0) & (b < 0))
    return np.where(same, np.where(np.abs(a) <= np.abs(b), a, b), 0.0)


def fluid_flux(U, c1s, pi1, c2s, pi2):
    a, m1, q1, m2, q2 = U
    F = np.empty_like(U)
    F[0] = 0.0
    F[1] = q1
    F[2] = q1 * q1 / m1 + (c1s * m1 - pi1 * a)
    F[3] = q2
    F[4] = q2 * q2 / m2 + (c2s * m2 - pi2 * (1.0 - a))
    return F


def path_integrals(U, c1s, pi1, c2s, pi2, nodes, weights):
    """``P(U_j, U_{j+1}; G)`` for every neighbouring pair, shape ``(5, N-1)``."""
    a, m1, q1, m2, q2 = U
    Q, M = q1 + q2, m1 + m2
    dQ, dM = Q[1:] - Q[:-1], M[1:] - M[:-1]
    v_int = np.zeros(Q.size - 1)
    for s, w in zip(nodes, weights):
        v_int += w * ((Q[:-1] + s * dQ) / (M[:-1] + s * dM))
    p_mix = c1s * m1 - pi1 * a + c2s * m2 - pi2 * (1.0 - a)
    p_int = 0.5 * (p_mix[:-1] + p_mix[1:])
    da = a[1:] - a[:-1]
    P = np.zeros((5, Q.size - 1))
    P[0] = da * v_int
    P[2] = da * p_int
    P[4] = -P[2]
    return P


def discrete_T(U, c1s, pi1, c2s, pi2, nodes, weights, shift):
    F = fluid_flux(U, c1s, pi1, c2s, pi2)
    P = path_integrals(U, c1s, pi1, c2s, pi2, nodes, weights)
    n = U.shape[1]
    S = np.zeros((5, n))
    if n > 1:
        S[:, :-1] = np.cumsum(P[:, ::-1], axis=1)[:, ::-1]
    f_inf = F[:, -1] + shift
    return F - f_inf[:, None] - S


def fluid_wave_speed(U, c1, c2):
    a, m1, q1, m2, q2 = U
    return float(np.max(np.maximum(np.abs(q1 / m1) + c1, np.abs(q2 / m2) + c2)))


def muscl_slopes(Fe, Ue, lam, dx):
    """Limited slopes ``S^-`` and ``S^+`` for the interior of extended arrays.

    Returns arrays one shorter on each side than the inputs.
    """
    dF = Fe[:, 1:] - Fe[:, :-1]
    dU = Ue[:, 1:] - Ue[:, :-1]
    inv = 1.0 / (2.0 * dx)
    minus = (dF - lam * dU) * inv
    plus = (dF + lam * dU) * inv
    return minmod(minus[:, :-1], minus[:, 1:]), minmod(plus[:, :-1], plus[:, 1:])


def edge_fluxes(Fe, Ue, Sm, Sp, lam, dx):
    """Flux between extended cells ``i-1`` and ``i`` for consecutive pairs."""
    return (0.5 * (Fe[:, :-1] + Fe[:, 1:]) - 0.5 * lam * (Ue[:, 1:] - Ue[:, :-1])
            - 0.5 * dx * (Sm[:, 1:] - Sp[:, :-1]))


def solid_fluxes(solid, rho_s, c_s, dx):
    """Edge fluxes left of every solid cell, shape ``(2, Ns)``."""
    lb = c_s
    ns = solid.shape[1]
    # two copy ghosts on the outer side, one zero-slope stand-in at the interface
    Ue = np.concatenate([solid[:, :1], solid[:, :1], solid, solid[:, -1:]], axis=1)
    Fe = np.vstack([-Ue[1] / rho_s, -rho_s * c_s * c_s * Ue[0]])
    Sm, Sp = muscl_slopes(Fe, Ue, lb, dx)  # slopes for ext cells 1 .. ns+1
    Sm[:, -1] = 0.0
    Sp[:, -1] = 0.0
    # cells ext 1..ns+1 -> edges between ext (i-1, i) for i = 2..ns+1
    return edge_fluxes(Fe[:, 1:ns + 2], Ue[:, 1:ns + 2], Sm[:, :ns + 1], Sp[:, :ns + 1], lb, dx)


def fluid_fluxes(fluid, T, lam, dx):
    """Edge fluxes right of every fluid cell, shape ``(5, Nf)``."""
    nf = fluid.shape[1]
    Ue = np.concatenate([fluid[:, :1], fluid, fluid[:, -1:], fluid[:, -1:]], axis=1)
    Te = np.concatenate([T[:, :1], T, T[:, -1:], T[:, -1:]], axis=1)
    Sm, Sp = muscl_slopes(Te, Ue, lam, dx)  # slopes for ext cells 1 .. nf+1
    Sm[:, 0] = 0.0
    Sp[:, 0] = 0.0
    # edges between ext (i-1, i) for i = 2..nf+1  (fluid cells j, j+1)
    return edge_fluxes(Te[:, 1:nf + 2], Ue[:, 1:nf + 2], Sm[:, :nf + 1], Sp[:, :nf + 1], lam, dx)


def velocity_projection(U):
    m1, q1, m2, q2 = U[1], U[2], U[3], U[4]
    Q = q1 + q2
    v = Q / (m1 + m2)
    q1n = m1 * v
    U[2] = q1n
    U[4] = Q - q1n


def equilibrium_alpha(m1, m2, c1s, pi1, c2s, pi2):
    """Volume fraction equalizing ``c1^2 m1/a - pi1`` and ``c2^2 m2/(1-a) - pi2``.

    Root in ``(0, 1)`` of ``dpi a^2 + (c1^2 m1 + c2^2 m2 - dpi) a - c1^2 m1``
    with ``dpi = pi2 - pi1``; the quadratic is negative at 0 and positive at 1.
    """
    e1, e2 = c1s * m1, c2s * m2
    dpi = pi2 - pi1
    B = e1 + e2 - dpi
    if dpi == 0.0:
        return e1 / B
    disc = np.maximum(B * B + 4.0 * dpi * e1, 0.0)
    qq = -0.5 * (B + np.copysign(np.sqrt(disc), B))
    r1 = qq / dpi
    r2 = -e1 / qq
    return np.where((r1 > 0.0) & (r1 < 1.0), r1, r2)


def pressure_projection(U, c1s, pi1, c2s, pi2):
    U[0] = equilibrium_alpha(U[1], U[3], c1s, pi1, c2s, pi2)


def _dt(t, t_stop, lam, c_s, dx, cfl, parabolic):
    if parabolic:
        return cfl * dx * dx / c_s
    speed = max(c_s, lam)
    if speed <= 0.0:
        raise DegenerateError("zero wave speed")
    return cfl * dx / speed


def advance(solid, fluid, t, t_stop, dx, rho_s, c_s, c1, pi1, c2, pi2, cfl, parabolic,
            relax, nodes, weights, fixed_lambda=0.0, shift=None, max_steps=-1, clip=True,
            residual_every=100, residual_tol=1e-9, solve_counter=0):
    """Advance ``solid``/``fluid`` in place from ``t`` towards ``t_stop``.

    With ``clip`` the last step is shortened to land exactly on ``t_stop``;
    otherwise the loop stops at the step completion time nearest ``t_stop``.
    Returns ``(t, steps, solve_counter, max_residual)``.
    """
    mat = ElasticMaterial(rho_s, c_s)
    eos1, eos2 = GasEos(c1, pi1), GasEos(c2, pi2)
    c1s, c2s = c1 * c1, c2 * c2
    shift = np.zeros(5) if shift is None else np.asarray(shift, dtype=float)
    steps = 0
    max_res = 0.0
    while t < t_stop and (max_steps < 0 or steps < max_steps):
        lam = fixed_lambda if fixed_lambda > 0.0 else fluid_wave_speed(fluid, c1, c2)
        dt = _dt(t, t_stop, lam, c_s, dx, cfl, parabolic)
        last = False
        if clip:
            if t + dt >= t_stop:
                dt = t_stop - t
                last = True
        elif t_stop - t <= 0.5 * dt:
            break
        T = discrete_T(fluid, c1s, pi1, c2s, pi2, nodes, weights, shift)
        traces = TraceStates.from_cells(solid[:, -1], fluid[:, 0], T[:, 0], mat, c_s, lam)
        cs = solve_coupling(traces, mat, eos1, eos2)
        solve_counter += 1
        if residual_every > 0 and solve_counter % residual_every == 0:
            r = float(np.max(np.abs(coupling_residuals(cs, traces, mat, eos1, eos2))))
            max_res = max(max_res, r)
            if not r <= residual_tol:
                raise SimulationAbort(f"coupling residual {r:.3e} above {residual_tol:.1e}", t, -1)

        Fs = solid_fluxes(solid, rho_s, c_s, dx)
        Ff = fluid_fluxes(fluid, T, lam, dx)
        Fbar_m1 = np.array([-solid[1, -1] / rho_s, -rho_s * c_s * c_s * solid[0, -1]])
        left = 0.5 * (Fbar_m1 + cs.Vbar_R) - 0.5 * c_s * (np.asarray(cs.Ubar_R) - solid[:, -1])
        right = 0.5 * (cs.V_L + T[:, 0]) - 0.5 * lam * (fluid[:, 0] - np.asarray(cs.U_L))

        mu = dt / dx
        out_s = np.concatenate([Fs[:, 1:], left[:, None]], axis=1)
        solid -= mu * (out_s - Fs)
        in_f = np.concatenate([right[:, None], Ff[:, :-1]], axis=1)
        fluid -= mu * (Ff - in_f)

        bad = ~((fluid[1] > 0) & (fluid[3] > 0) & np.all(np.isfinite(fluid), axis=0))
        if relax:
            # the equilibrium volume fraction depends on the partial densities only
            velocity_projection(fluid)
            pos = ~bad
            a = fluid[0].copy()
            a[pos] = equilibrium_alpha(fluid[1, pos], fluid[3, pos], c1s, pi1, c2s, pi2)
            fluid[0] = a
        bad |= ~((fluid[0] >= ALPHA_MARGIN) & (fluid[0] <= 1 - ALPHA_MARGIN))
        if bad.any():
            j = int(np.argmax(bad))
            raise SimulationAbort(f"inadmissible fluid state in cell {j} at t={t + dt:.6e}",
                                  t + dt, j)
        if not np.all(np.isfinite(solid)):
            raise SimulationAbort(f"non-finite solid state at t={t + dt:.6e}", t + dt, None)
        t = t_stop if last else t + dt
        steps += 1
    return t, steps, solve_counter, max_res
