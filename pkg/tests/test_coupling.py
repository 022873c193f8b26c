import math

import numpy as np
import pytest
import sympy as sp
from conftest import liquid_state
from oracles import newton_coupling

from fsirelax.coupling import (
    CubicCoeffs,
    QuadCoeffs,
    TraceStates,
    alpha1L_of_x,
    alpha2rho2_of_x,
    coupling_residuals,
    cubic_real_roots,
    quadratic_roots,
    r1_coefficients,
    r2_coefficients,
    root_diagnostics,
    solve_coupling,
)
from fsirelax.eos import STEEL, VAPOR, WATER, fluid_wave_bound
from fsirelax.errors import (
    CouplingSolverError,
    DegenerateError,
    NoRealSolutionError,
    SingularDenominatorError,
    UnphysicalRootError,
)
from fsirelax.states import ElasticState, fluid_flux

ARGS = (STEEL, VAPOR, WATER)


def traces(w0=0.0, s0=-3.5e7, U=None, lam=1600.0, lb=5990.0, V0=None):
    U = liquid_state() if U is None else U
    V0 = fluid_flux(U, VAPOR, WATER) if V0 is None else V0
    return TraceStates.from_cells((w0, s0), U, V0, STEEL, lb, lam)


def moving_traces():
    U = liquid_state(0.3, 2e6, 0.0)
    U[2], U[4] = U[1] * 0.4, U[3] * 0.3
    return traces(w0=0.1, s0=-2.1e6, U=U, lam=1700.0)


def random_traces(rng):
    a = rng.uniform(0.05, 0.95)
    p = 10 ** rng.uniform(3.5, 7.5)
    v = rng.normal(0, 2)
    U = liquid_state(a, p, v)
    lam = fluid_wave_bound(U, VAPOR, WATER) * rng.uniform(1, 1.5)
    return traces(w0=v + rng.normal(0, 0.2), s0=-p * (1 + rng.normal(0, 0.05)), U=U, lam=lam)


def oracle_input(t):
    a0, m10, q10, m20, q20 = t.U_0
    return dict(w0=t.Ubar_m1[0], s0=t.Ubar_m1[1], a0=a0, m10=m10, q10=q10, m20=m20, q20=q20,
                lb=t.lambda_bar, lam=t.lam)


def _symbolic_setup(t):
    R = lambda v: sp.Rational(float(v))
    p = dict(lam=R(t.lam), lb=R(t.lambda_bar), rs=R(STEEL.rho_s), cs=R(STEEL.c_s), c1=R(VAPOR.c),
             c2=R(WATER.c), p1=R(VAPOR.pi), p2=R(WATER.pi), w0=R(t.Ubar_m1[0]), s0=R(t.Ubar_m1[1]))
    p.update(zip(("a0", "m10", "q10", "m20", "q20"), map(R, t.U_0)))
    return p


def _assert_proportional(exact, approx, rtol):
    exact = np.array([float(c) for c in exact])
    approx = np.array(approx, dtype=float)
    ratio = exact / approx
    np.testing.assert_allclose(ratio, ratio[0], rtol=rtol)


@pytest.mark.parametrize("make", [traces, moving_traces])
def test_r1_matches_symbolic_elimination(make):
    """Eliminating sigma_R, alpha1_L, [alpha2 rho2]_L from the conditions gives R1 up to a factor."""
    t = make()
    p = _symbolic_setup(t)
    x, sig = sp.symbols("x sig")
    # relaxed velocity condition of phase 1 fixes sigma_R, phase-1 stress fixes alpha1_L
    w_of_sigma = p["w0"] - p["lb"] * (p["s0"] - sig) / (p["cs"] ** 2 * p["rs"])
    sigma = sp.solve(sp.Eq(w_of_sigma, (p["lam"] * (x - p["m10"]) + p["q10"]) / x), sig)[0]
    w = w_of_sigma.subs(sig, sigma)
    a = p["c1"] ** 2 * x / (p["p1"] - sigma)
    y = (p["lam"] * p["m20"] - p["q20"]) / (p["lam"] - w)
    expr = sp.together(sigma + p["c2"] ** 2 * y / (1 - a) - p["p2"])
    poly = sp.Poly(sp.numer(expr), x)
    assert poly.degree() == 3
    _assert_proportional(poly.all_coeffs(), r1_coefficients(t, *ARGS), 1e-12)


def test_r1_symmetric_sanity():
    t = traces()
    a0 = r1_coefficients(t, *ARGS).a0
    expected = STEEL.rho_s**2 * STEEL.c_s**4 * (t.lam * t.U_0[1]) ** 3
    assert a0 == pytest.approx(expected, rel=1e-15)


def test_r1_a3_linear_in_momentum():
    U = liquid_state()
    t = traces()
    a3 = lambda q: r1_coefficients(traces(U=np.array([U[0], U[1], q, U[3], U[4]])), *ARGS).a3
    lb, lam, w0, s0 = t.lambda_bar, t.lam, *t.Ubar_m1
    slope = lb * (-(lam - w0) * STEEL.rho_s * VAPOR.c**2 * STEEL.c_s**2
                  + lb * VAPOR.c**2 * (WATER.pi - s0))
    for q, h in ((0.0, 1.0), (0.5, 10.0)):
        assert (a3(q + h) - a3(q - h)) / (2 * h) == pytest.approx(slope, rel=1e-6)


def test_r2_matches_symbolic_elimination():
    t = moving_traces()
    cs = solve_coupling(t, *ARGS)
    x, y = float(cs.U_L[1]), float(cs.U_L[3])
    p = _symbolic_setup(t)
    X, Y = sp.Rational(x), sp.Rational(y)
    z = sp.symbols("z")
    w = z / Y
    q1L = w * X
    Vw_R = -p["s0"] / p["rs"] + p["lb"] * (p["w0"] - w)
    p10 = p["c1"] ** 2 * p["m10"] / p["a0"] - p["p1"]
    p20 = p["c2"] ** 2 * p["m20"] / (1 - p["a0"]) - p["p2"]
    rhs = (p["lam"] * (q1L - p["q10"]) + p["q10"] ** 2 / p["m10"] + p["a0"] * p10 - q1L**2 / X
           + p["lam"] * (z - p["q20"]) + p["q20"] ** 2 / p["m20"] + (1 - p["a0"]) * p20 - z**2 / Y)
    poly = sp.Poly(sp.numer(sp.together(p["rs"] * Vw_R - rhs)), z)
    assert poly.degree() == 2
    _assert_proportional(poly.all_coeffs(), r2_coefficients(x, y, t, *ARGS), 1e-12)


def test_r2_sign_and_discriminant(rng):
    for _ in range(50):
        t = random_traces(rng)
        cs = solve_coupling(t, *ARGS)
        b = r2_coefficients(cs.U_L[1], cs.U_L[3], t, *ARGS)
        assert b.b2 < 0
        assert b.b1**2 - 4 * b.b2 * b.b0 >= 0


def test_alpha_functions_at_selected_and_unphysical_roots():
    t = traces()
    x1, x2, x3 = cubic_real_roots(r1_coefficients(t, *ARGS))
    assert x1 < 0
    assert alpha2rho2_of_x(x2, t, *ARGS) > 0
    assert 0 < alpha1L_of_x(x2, t, *ARGS) < 1
    with pytest.raises(UnphysicalRootError):
        alpha1L_of_x(x3, t, *ARGS)


def test_alpha_functions_singular_denominator():
    t = traces()
    lam, lb, rs, cs = t.lam, t.lambda_bar, STEEL.rho_s, STEEL.c_s
    w0, s0 = t.Ubar_m1
    m10, q10 = t.U_0[1], t.U_0[2]
    k = cs * cs * rs
    # D2(x) is affine in x; its zero
    x0 = (lam * m10 * k - q10 * k) / (lam * k - w0 * k + lb * s0 - lb * VAPOR.pi)
    with pytest.raises(SingularDenominatorError):
        alpha1L_of_x(x0, t, *ARGS)
    with pytest.raises(SingularDenominatorError):
        alpha2rho2_of_x(x0, t, *ARGS)


def test_cubic_examples():
    np.testing.assert_allclose(cubic_real_roots(CubicCoeffs(1, -6, 11, -6)), [1, 2, 3], rtol=1e-14)
    roots = cubic_real_roots(CubicCoeffs(1, 0, 1, 0))
    assert len(roots) == 1 and abs(roots[0]) < 1e-15
    with pytest.raises(DegenerateError):
        cubic_real_roots(CubicCoeffs(0, 1, 2, 3))


def test_cubic_against_companion_matrix(rng):
    for _ in range(500):
        c = CubicCoeffs(1.0, *rng.normal(0, 3, 3))
        ours = np.array(cubic_real_roots(c))
        eig = np.roots(c)
        real = np.sort(eig[np.abs(eig.imag) < 1e-7 * np.max(np.abs(eig))].real)
        scale = max(1.0, np.max(np.abs(eig)))
        if len(real) == len(ours):
            np.testing.assert_allclose(ours, real, atol=1e-9 * scale)
        for r in ours:
            value = ((c.a3 * r + c.a2) * r + c.a1) * r + c.a0
            assert abs(value) <= 1e-10 * max(map(abs, c)) * max(1.0, abs(r)) ** 3


def test_quadratic_examples():
    assert quadratic_roots(QuadCoeffs(1, -3, 2)) == pytest.approx((1, 2), rel=1e-15)
    assert quadratic_roots(QuadCoeffs(1, -2, 1)) == pytest.approx((1, 1), rel=1e-15)
    small, big = quadratic_roots(QuadCoeffs(1.0, 1e9, 1.0))
    assert small * big == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(NoRealSolutionError):
        quadratic_roots(QuadCoeffs(1, 0, 1))
    with pytest.raises(DegenerateError):
        quadratic_roots(QuadCoeffs(0, 1, 1))


def test_solve_equilibrium_traces_match_oracle():
    t = traces()
    cs = solve_coupling(t, *ARGS)
    X, norm, _ = newton_coupling(oracle_input(t), STEEL.rho_s, STEEL.c_s, VAPOR.c, VAPOR.pi,
                                 WATER.c, WATER.pi)
    ours = np.array([*cs.Ubar_R, *cs.U_L])
    scale = np.abs(ours)
    scale[[0, 4, 6]] = np.maximum(scale[[0, 4, 6]], [1.0, ours[3], ours[5]])
    assert np.max(np.abs(ours - X) / scale) <= 1e-8
    assert np.max(np.abs(coupling_residuals(cs, t, *ARGS))) <= 1e-9


def test_solve_relations_hold():
    t = moving_traces()
    cs = solve_coupling(t, *ARGS)
    np.testing.assert_allclose(cs.Vbar_R, t.Vbar_m1 + t.lambda_bar * (np.array(t.Ubar_m1) - cs.Ubar_R),
                               rtol=1e-12)
    np.testing.assert_allclose(cs.V_L, t.V_0 + t.lam * (np.array(cs.U_L) - t.U_0), rtol=1e-12,
                               atol=1e-12 * np.max(np.abs(cs.V_L)))
    assert cs.U_L[0] + (1 - cs.U_L[0]) == 1.0


def test_solve_continuous_in_speeds():
    t = moving_traces()
    base = solve_coupling(t, *ARGS)
    s = 1 + 1e-9
    other = solve_coupling(TraceStates(t.Ubar_m1, t.U_0, t.Vbar_m1, t.V_0, t.lambda_bar * s, t.lam * s),
                           *ARGS)
    a, b = np.array([*base.Ubar_R, *base.U_L]), np.array([*other.Ubar_R, *other.U_L])
    assert np.max(np.abs(a - b) / np.maximum(np.abs(a), 1.0)) <= 1e-6


def test_solve_deterministic():
    t = moving_traces()
    a, b = solve_coupling(t, *ARGS), solve_coupling(t, *ARGS)
    for u, v in zip((*a.Ubar_R, *a.Vbar_R, *a.U_L, *a.V_L, *a.roots),
                    (*b.Ubar_R, *b.Vbar_R, *b.U_L, *b.V_L, *b.roots)):
        assert u == v


def test_solver_failure_carries_traces():
    # vanishing relaxation speed leaves R1 without a physical middle root
    t = traces(lam=1e-9)
    with pytest.raises(CouplingSolverError) as info:
        solve_coupling(t, *ARGS)
    assert info.value.traces is t


def test_residual_shift_under_w_perturbation():
    t = moving_traces()
    cs = solve_coupling(t, *ARGS)
    base = coupling_residuals(cs, t, *ARGS)
    delta = 1e-3
    bumped = type(cs)(ElasticState(cs.Ubar_R[0] + delta, cs.Ubar_R[1]), cs.Vbar_R, cs.U_L, cs.V_L)
    shifted = coupling_residuals(bumped, t, *ARGS)
    np.testing.assert_allclose(shifted[:2] - base[:2], delta / STEEL.c_s, rtol=1e-9)
    np.testing.assert_array_equal(shifted[2:], base[2:])


def test_residuals_at_continuous_solution():
    """U_L = U_0 and V_L = V_0 with matching solid traces leave only the original conditions."""
    t = traces(s0=-1.75e7)
    cs = type(solve_coupling(t, *ARGS))(ElasticState(*t.Ubar_m1), np.array(t.Vbar_m1),
                                        t.U_0, np.array(t.V_0))
    assert np.max(np.abs(coupling_residuals(cs, t, *ARGS))) <= 1e-15


def test_random_corpus_against_oracle(rng):
    worst = 0.0
    for _ in range(200):
        t = random_traces(rng)
        cs = solve_coupling(t, *ARGS)
        X, norm, _ = newton_coupling(oracle_input(t), STEEL.rho_s, STEEL.c_s, VAPOR.c, VAPOR.pi,
                                     WATER.c, WATER.pi)
        ours = np.array([*cs.Ubar_R, *cs.U_L])
        vel = max(abs(ours[0]), abs(t.Ubar_m1[0]), abs(t.U_0[2] / t.U_0[1]), 1.0)
        scale = np.array([vel, abs(ours[1]), ours[2], ours[3], ours[3] * vel, ours[5], ours[5] * vel])
        worst = max(worst, float(np.max(np.abs(ours - X) / scale)))
        d = root_diagnostics(t, *ARGS)
        assert d["n_real"] == 3 and d["x1_negative"] and d["x3_unphysical"]
    assert worst <= 1e-8
    assert math.isfinite(worst)
