# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled time loop; same interface and arithmetic as ``_pykernel.advance``.

The whole loop, including the interface Riemann solve, runs without the GIL.
Failures are reported as status codes and turned into the exceptions the
numpy backend raises.
"""

import numpy as np

from libc.math cimport acos, cbrt, copysign, cos, fabs, isfinite, sqrt, M_PI

from .coupling import TraceStates
from .eos import ElasticMaterial
from .errors import CouplingSolverError, DegenerateError, SimulationAbort
from .states import ALPHA_MARGIN

NAME = "c"

cdef enum:
    OK = 0
    ERR_ROOTS = 1
    ERR_SINGULAR = 2
    ERR_UNPHYSICAL = 3
    ERR_REFINE = 4
    ERR_NOREAL = 5
    ERR_DEGENERATE = 6
    ERR_NEGATIVE = 7
    ERR_CELL = 10
    ERR_SOLID = 11
    ERR_RESIDUAL = 12
    ERR_SPEED = 13

cdef double SINGULAR_RTOL = 1e-14
cdef double CUBIC_DISC_RTOL = 1e-12
cdef double ALPHA_MARGIN_C = ALPHA_MARGIN

_COUPLING_MESSAGES = {
    ERR_ROOTS: "R1 does not have three real roots",
    ERR_SINGULAR: "rational form singular at the selected root",
    ERR_UNPHYSICAL: "interface volume fraction outside (0, 1)",
    ERR_REFINE: "stress refinement left the selected root",
    ERR_NOREAL: "R2 has no real root",
    ERR_DEGENERATE: "degenerate leading coefficient",
    ERR_NEGATIVE: "negative partial density at interface",
}


cdef struct Params:
    double rho_s, c_s, c1, pi1, c2, pi2, c1s, c2s


cdef struct Trace:
    double lam, lb
    double w0, s0
    double a10, m10, q10, m20, q20
    double Vb[2]
    double V0[5]


cdef struct Coupled:
    double wR, sR
    double UL[5]
    double VbR[2]
    double VL[5]
    double detail


cdef inline double cubic_value(double a3, double a2, double a1, double a0, double x) noexcept nogil:
    return ((a3 * x + a2) * x + a1) * x + a0


cdef double polish(double a3, double a2, double a1, double a0, double x, int iterations) noexcept nogil:
    cdef double f = cubic_value(a3, a2, a1, a0, x), df, xn, fn
    cdef int it
    for it in range(iterations):
        df = (3.0 * a3 * x + 2.0 * a2) * x + a1
        if df == 0.0 or f == 0.0:
            break
        xn = x - f / df
        fn = cubic_value(a3, a2, a1, a0, xn)
        if not fabs(fn) < fabs(f):
            break
        x = xn
        f = fn
    return x


cdef double largest_closed_form_root(double b, double cc, double d) noexcept nogil:
    cdef double shift = b / 3.0
    cdef double p = cc - b * shift
    cdef double q = (2.0 * shift * shift - cc) * shift + d
    cdef double r, arg, phi, best, v, sq, u
    cdef int k
    if p == 0.0 and q == 0.0:
        return -shift
    if p < 0.0 and 4.0 * p * p * p + 27.0 * q * q <= 0.0:
        r = sqrt(-p / 3.0)
        arg = (1.5 * q / p) / r
        arg = -1.0 if arg < -1.0 else (1.0 if arg > 1.0 else arg)
        phi = acos(arg) / 3.0
        best = 2.0 * r * cos(phi) - shift
        for k in range(1, 3):
            v = 2.0 * r * cos(phi - 2.0 * M_PI * k / 3.0) - shift
            if fabs(v) > fabs(best):
                best = v
        return best
    sq = q * q / 4.0 + p * p * p / 27.0
    sq = sqrt(sq if sq > 0.0 else 0.0)
    u = -copysign(cbrt(fabs(fabs(q) / 2.0 + sq)), q)
    if u == 0.0:
        return -shift
    return u - p / (3.0 * u) - shift


cdef int quadratic(double b2, double b1, double b0, double *lo, double *hi) noexcept nogil:
    """Stable real roots; returns ERR_NOREAL or ERR_DEGENERATE on failure."""
    cdef double disc, qq, r1, r2
    if b2 == 0.0:
        return ERR_DEGENERATE
    disc = b1 * b1 - 4.0 * b2 * b0
    if disc < 0.0:
        if disc < -1e-14 * (b1 * b1 + fabs(4.0 * b2 * b0)):
            return ERR_NOREAL
        disc = 0.0
    qq = -0.5 * (b1 + copysign(sqrt(disc), b1))
    if qq == 0.0:
        lo[0] = 0.0
        hi[0] = 0.0
        return OK
    r1 = qq / b2
    r2 = b0 / qq
    if r1 <= r2:
        lo[0] = r1
        hi[0] = r2
    else:
        lo[0] = r2
        hi[0] = r1
    return OK


cdef int cubic_roots(double a3, double a2, double a1, double a0, double *roots) noexcept nogil:
    """Three real roots ascending in ``roots``; ERR_ROOTS for a complex pair."""
    cdef double b, cc, d, x1, prod, total, disc, lo, hi, t
    cdef int st
    if a3 == 0.0:
        return ERR_DEGENERATE
    b = a2 / a3
    cc = a1 / a3
    d = a0 / a3
    x1 = polish(a3, a2, a1, a0, largest_closed_form_root(b, cc, d), 50)
    if x1 == 0.0:
        total = -b
        prod = cc
    else:
        prod = -d / x1
        total = (cc - prod) / x1
    # quadratic x^2 - total x + prod
    disc = total * total - 4.0 * prod
    if disc < -CUBIC_DISC_RTOL * (total * total + fabs(4.0 * prod)):
        return ERR_ROOTS
    st = quadratic(1.0, -total, prod, &lo, &hi)
    if st != OK:
        return ERR_ROOTS
    lo = polish(a3, a2, a1, a0, lo, 1)
    hi = polish(a3, a2, a1, a0, hi, 1)
    roots[0] = x1
    roots[1] = lo
    roots[2] = hi
    # sort three values
    if roots[0] > roots[1]:
        t = roots[0]; roots[0] = roots[1]; roots[1] = t
    if roots[1] > roots[2]:
        t = roots[1]; roots[1] = roots[2]; roots[2] = t
    if roots[0] > roots[1]:
        t = roots[0]; roots[0] = roots[1]; roots[1] = t
    return OK


cdef double d2_value(double x, Trace *t, Params *p, double *scale) noexcept nogil:
    """``D2(x)`` by compensated summation, plus the sum of term magnitudes."""
    cdef double k = p.c_s * p.c_s * p.rho_s
    cdef double terms[6]
    cdef double s = 0.0, c = 0.0, tt, v, sc = 0.0
    cdef int i
    terms[0] = t.lam * x * k
    terms[1] = -t.lam * t.m10 * k
    terms[2] = -x * t.w0 * k
    terms[3] = t.lb * x * t.s0
    terms[4] = -t.lb * x * p.pi1
    terms[5] = t.q10 * k
    for i in range(6):
        v = terms[i]
        sc += fabs(v)
        tt = s + v
        if fabs(s) >= fabs(v):
            c += (s - tt) + v
        else:
            c += (v - tt) + s
        s = tt
    scale[0] = sc
    return s + c


cdef void stress_compat(double sigma, Trace *t, Params *p, double *out) noexcept nogil:
    """``(m1L, m2L, alpha1L, alpha2L, f, df)`` implied by interface stress ``sigma``."""
    cdef double k = p.rho_s * (p.c_s * p.c_s)
    cdef double A1 = t.lam * t.m10 - t.q10
    cdef double A2 = t.lam * t.m20 - t.q20
    cdef double den = t.lam - t.w0 + t.lb * (t.s0 - sigma) / k
    cdef double m1L = A1 / den, m2L = A2 / den
    cdef double g1 = p.pi1 - sigma, g2 = p.pi2 - sigma
    cdef double a1L = p.c1s * m1L / g1, a2L = p.c2s * m2L / g2
    cdef double dden = -t.lb / k
    out[0] = m1L
    out[1] = m2L
    out[2] = a1L
    out[3] = a2L
    out[4] = (a1L + a2L) - 1.0
    out[5] = (p.c1s * A1 * (1.0 / (g1 * g1 * den) - dden / (g1 * den * den))
              + p.c2s * A2 * (1.0 / (g2 * g2 * den) - dden / (g2 * den * den)))


cdef int solve_coupling_c(Trace *t, Params *p, Coupled *o) noexcept nogil:
    cdef double lam = t.lam, lb = t.lb, rs = p.rho_s, css = p.c_s * p.c_s
    cdef double c1s = p.c1s, c2s = p.c2s, p1 = p.pi1, p2 = p.pi2
    cdef double w0 = t.w0, s0 = t.s0, m10 = t.m10, q10 = t.q10, m20 = t.m20, q20 = t.q20
    cdef double k1 = lam * m10 - q10
    cdef double a3, a2, a1, a0, x, y, a1L, sigma, sigma0, scale, dd, n1, step, z, zhi
    cdef double b2, b1, b0
    cdef double roots[3]
    cdef double sc[6]
    cdef int st, it

    a3 = ((lam - w0) * rs * ((m10 * c1s + m20 * c2s) * lam - q10 * c1s - q20 * c2s) * css
          - lb * ((c1s * (p2 - s0) * m10 + m20 * c2s * (p1 - s0)) * lam
                  - c1s * (p2 - s0) * q10 - q20 * c2s * (p1 - s0))) * lb
    a2 = (rs * rs * (lam - w0) * (lam - w0) * (css * css)
          - lb * rs * ((m10 * c1s + m20 * c2s - 2 * s0 + p1 + p2) * lam - q10 * c1s
                       + (-p1 - p2 + 2 * s0) * w0 - q20 * c2s) * css
          + lb * lb * (p2 - s0) * (p1 - s0)) * k1
    a1 = -2 * rs * css * (k1 * k1) * (rs * (lam - w0) * css - lb * (p1 + p2 - 2 * s0) / 2)
    a0 = rs * rs * (css * css) * (k1 * k1 * k1)

    st = cubic_roots(a3, a2, a1, a0, roots)
    if st != OK:
        return st
    x = roots[1]
    o.detail = x

    dd = d2_value(x, t, p, &scale)
    if fabs(dd) <= SINGULAR_RTOL * scale or x == 0.0:
        return ERR_SINGULAR
    n1 = (dd + lb * x * p1 - p2 * lb * x) * (dd + lb * x * x * c1s)
    y = -n1 / (x * lb * c2s * dd)
    a1L = -lb * x * x * c1s / dd
    if not (0.0 < a1L < 1.0):
        o.detail = a1L
        return ERR_UNPHYSICAL
    sigma = (p1 * a1L - c1s * x) / a1L

    sigma0 = sigma
    for it in range(8):
        stress_compat(sigma, t, p, sc)
        if sc[5] == 0.0:
            break
        step = sc[4] / sc[5]
        sigma -= step
        if fabs(step) <= 4e-16 * fabs(sigma):
            break
    if fabs(sigma - sigma0) > 1e-6 * (fabs(sigma0) + p1 + p2) or not isfinite(sigma):
        o.detail = sigma
        return ERR_REFINE
    stress_compat(sigma, t, p, sc)
    x = sc[0]
    y = sc[1]
    a1L = sc[2]
    if sc[3] < a1L:
        a1L = 1.0 - sc[3]
    if not (0.0 < a1L < 1.0):
        o.detail = a1L
        return ERR_UNPHYSICAL

    b2 = -(x + y) * m20 * m10
    b1 = (lb * rs + lam * y + lam * x) * m10 * y * m20
    b0 = ((((-p1 + p2) * t.a10 - (q10 + q20) * lam - w0 * rs * lb + s0 - p2) * y * m20
           + lb * rs * m20 + q20 * q20 * y + y * c2s * m20 * m20 - m20 * lb * rs) * m10 * y
          + (m10 * m10 * c1s + q10 * q10) * y * y * m20)
    st = quadratic(b2, b1, b0, &z, &zhi)
    if st != OK:
        return st
    if not (x > 0.0 and y > 0.0):
        return ERR_NEGATIVE

    o.wR = z / y
    o.sR = sigma
    o.UL[0] = a1L
    o.UL[1] = x
    o.UL[2] = o.wR * x
    o.UL[3] = y
    o.UL[4] = z
    o.VbR[0] = t.Vb[0] + lb * (t.w0 - o.wR)
    o.VbR[1] = t.Vb[1] + lb * (t.s0 - o.sR)
    o.VL[0] = t.V0[0] + lam * (o.UL[0] - t.a10)
    o.VL[1] = t.V0[1] + lam * (o.UL[1] - t.m10)
    o.VL[2] = t.V0[2] + lam * (o.UL[2] - t.q10)
    o.VL[3] = t.V0[3] + lam * (o.UL[3] - t.m20)
    o.VL[4] = t.V0[4] + lam * (o.UL[4] - t.q20)
    return OK


cdef double max_residual(Coupled *o, Trace *t, Params *p) noexcept nogil:
    """Largest scaled residual of the seven coupling conditions."""
    cdef double stress = p.rho_s * (p.c_s * p.c_s)
    cdef double a1L = o.UL[0], m1L = o.UL[1], q1L = o.UL[2], m2L = o.UL[3], q2L = o.UL[4]
    cdef double p1L = p.c1s * m1L / a1L - p.pi1
    cdef double p2L = p.c2s * m2L / (1.0 - a1L) - p.pi2
    cdef double p10 = p.c1s * t.m10 / t.a10 - p.pi1
    cdef double p20 = p.c2s * t.m20 / (1.0 - t.a10) - p.pi2
    cdef double w_from_V = -o.VbR[1] / ((p.c_s * p.c_s) * p.rho_s)
    cdef double r[7]
    cdef double msum, best = 0.0
    cdef int i
    r[0] = (o.wR - q1L / m1L) / p.c_s
    r[1] = (o.wR - q2L / m2L) / p.c_s
    r[2] = (o.sR + p1L) / stress
    r[3] = (o.sR + p2L) / stress
    r[4] = (w_from_V - (o.VL[1] - t.V0[1] + t.q10) / m1L) / p.c_s
    r[5] = (w_from_V - (o.VL[3] - t.V0[3] + t.q20) / m2L) / p.c_s
    msum = (o.VL[2] - t.V0[2] + t.q10 * t.q10 / t.m10 + t.a10 * p10 - q1L * q1L / m1L
            + o.VL[4] - t.V0[4] + t.q20 * t.q20 / t.m20 + (1.0 - t.a10) * p20 - q2L * q2L / m2L)
    r[6] = (p.rho_s * o.VbR[0] - msum) / stress
    for i in range(7):
        if not fabs(r[i]) <= best:
            best = fabs(r[i])
            if not isfinite(best):
                return best
    return best


cdef inline double eq_alpha(double m1, double m2, Params *p) noexcept nogil:
    # evaluated without branches so that the cell loop vectorizes
    cdef double e1 = p.c1s * m1, e2 = p.c2s * m2
    cdef double dpi = p.pi2 - p.pi1
    cdef double B = e1 + e2 - dpi
    cdef double disc = B * B + 4.0 * dpi * e1
    cdef double qq, r1, r2
    disc = disc if disc > 0.0 else 0.0
    qq = -0.5 * (B + copysign(sqrt(disc), B))
    r1 = qq / dpi
    r2 = -e1 / qq
    r1 = r1 if (r1 > 0.0) & (r1 < 1.0) else r2
    return e1 / B if dpi == 0.0 else r1


cdef inline double minmod_raw(double a, double b) noexcept nogil:
    # same selection as minmod, written without branches; callers scale the result
    cdef double m = a if fabs(a) <= fabs(b) else b
    return m if ((a > 0) & (b > 0)) | ((a < 0) & (b < 0)) else 0.0


cdef void edge_fluxes(double *U, double *F, double lam, double dx, Py_ssize_t n,
                      double *mi, double *pl, double *Sm, double *Sp, double *out) noexcept nogil:
    """Flux on the right edge of each cell of one component.

    Copy ghosts on the right; the slopes of the first and the last cell
    vanish. Differences are scaled by ``1/(2 dx)`` after
    the limiter, which picks the same operand either way since the scale is
    positive.
    """
    cdef Py_ssize_t j
    cdef double D, E, inv = 1.0 / (2.0 * dx)
    for j in range(n - 1):
        D = F[j + 1] - F[j]
        E = U[j + 1] - U[j]
        mi[j] = D - lam * E
        pl[j] = D + lam * E
    Sm[0] = 0.0
    Sp[0] = 0.0
    for j in range(1, n - 1):
        Sm[j] = minmod_raw(mi[j - 1], mi[j]) * inv
        Sp[j] = minmod_raw(pl[j - 1], pl[j]) * inv
    Sm[n - 1] = 0.0
    Sp[n - 1] = 0.0
    Sm[n] = 0.0
    Sp[n] = 0.0
    for j in range(n - 1):
        out[j] = 0.5 * (F[j] + F[j + 1]) - 0.5 * lam * (U[j + 1] - U[j]) - 0.5 * dx * (Sm[j + 1] - Sp[j])
    out[n - 1] = 0.5 * (F[n - 1] + F[n - 1]) - 0.5 * lam * (U[n - 1] - U[n - 1]) - 0.5 * dx * (Sm[n] - Sp[n - 1])


cdef void pressure_and_fluxes(double *A, double *M1, double *Q1, double *M2, double *Q2,
                              Py_ssize_t n, double c1s, double pi1, double c2s, double pi2,
                              double *pm, double *F2, double *F4) noexcept nogil:
    cdef Py_ssize_t j
    for j in range(n):
        pm[j] = c1s * M1[j] - pi1 * A[j] + c2s * M2[j] - pi2 * (1.0 - A[j])
        F2[j] = Q1[j] * Q1[j] / M1[j] + (c1s * M1[j] - pi1 * A[j])
        F4[j] = Q2[j] * Q2[j] / M2[j] + (c2s * M2[j] - pi2 * (1.0 - A[j]))


cdef void path_pairs3(double *A, double *M1, double *Q1, double *M2, double *Q2, double *pm,
                      Py_ssize_t n, double n0, double n1, double n2, double w0, double w1,
                      double w2, double *PA, double *PP) noexcept nogil:
    """Path integrals of neighbouring pairs for a three-node rule."""
    cdef Py_ssize_t j
    cdef double Q, M, dQ, dM, vint, da
    for j in range(n - 1):
        Q = Q1[j] + Q2[j]
        M = M1[j] + M2[j]
        dQ = (Q1[j + 1] + Q2[j + 1]) - Q
        dM = (M1[j + 1] + M2[j + 1]) - M
        vint = 0.0 + w0 * ((Q + n0 * dQ) / (M + n0 * dM))
        vint = vint + w1 * ((Q + n1 * dQ) / (M + n1 * dM))
        vint = vint + w2 * ((Q + n2 * dQ) / (M + n2 * dM))
        da = A[j + 1] - A[j]
        PA[j] = da * vint
        PP[j] = da * (0.5 * (pm[j] + pm[j + 1]))


cdef void relax_cells(double *A, double *M1, double *Q1, double *M2, double *Q2, Py_ssize_t n,
                      Params *p) noexcept nogil:
    cdef Py_ssize_t j
    cdef double Q, v, q1n
    for j in range(n):
        Q = Q1[j] + Q2[j]
        v = Q / (M1[j] + M2[j])
        q1n = M1[j] * v
        Q1[j] = q1n
        Q2[j] = Q - q1n
        A[j] = eq_alpha(M1[j], M2[j], p)


cdef double max_speed(double *M1, double *Q1, double *M2, double *Q2, Py_ssize_t n,
                      double c1, double c2, double *scratch) noexcept nogil:
    cdef Py_ssize_t j
    cdef double v, lam
    for j in range(n):
        v = fabs(Q1[j] / M1[j]) + c1
        scratch[j] = fabs(Q2[j] / M2[j]) + c2
        if v > scratch[j]:
            scratch[j] = v
    lam = scratch[0]
    for j in range(1, n):
        if scratch[j] > lam:
            lam = scratch[j]
    return lam


cdef struct Work:
    double *T      # (5, nf) operator T
    double *Ff     # (5, nf) right-edge fluxes
    double *Fsol   # (2, ns) physical solid fluxes, reversed cell order
    double *Usol   # (2, ns) solid states, reversed cell order
    double *Fs     # (2, ns) solid edge fluxes, reversed
    double *pm     # (nf,) mixture pressure
    double *PA     # (nf,) volume-fraction path integrals
    double *PP     # (nf,) momentum path integrals
    double *mi     # scratch differences and slopes, length n + 1
    double *pl
    double *Sm
    double *Sp


cdef int run_loop(double[:, ::1] solid, double[:, ::1] fluid, Params *p, double *t_io,
                  double t_stop, double dx, double cfl, bint parabolic, bint relax,
                  double *nodes, double *weights, int nq, double fixed_lambda, double *shift,
                  long max_steps, bint clip, long residual_every, double residual_tol,
                  long *steps_out, long *solves_io, double *maxres_io, Work *wk,
                  Trace *tr_out, int *cell_out, double *info) noexcept nogil:
    cdef Py_ssize_t ns = solid.shape[1], nf = fluid.shape[1]
    cdef Py_ssize_t i, j, k, kq
    cdef double t = t_io[0]
    cdef long steps = 0
    cdef long solves = solves_io[0]
    cdef double maxres = maxres_io[0]
    cdef double lam, dt, speed, v, mu, r, lb = p.c_s
    cdef bint last
    cdef double Q, M, dQ, dM, vint, da, q1n, acc0, acc2, acc4
    cdef double Finf[5]
    cdef double left[2]
    cdef double right[5]
    cdef double rs = p.rho_s, cs = p.c_s
    cdef double c1s = p.c1s, c2s = p.c2s, pi1 = p.pi1, pi2 = p.pi2
    cdef double *A = &fluid[0, 0]
    cdef double *M1 = &fluid[1, 0]
    cdef double *Q1 = &fluid[2, 0]
    cdef double *M2 = &fluid[3, 0]
    cdef double *Q2 = &fluid[4, 0]
    cdef double *W = &solid[0, 0]
    cdef double *S = &solid[1, 0]
    cdef double *T = wk.T
    cdef double *Ff = wk.Ff
    cdef double *pm = wk.pm
    cdef double *PA = wk.PA
    cdef double *PP = wk.PP
    cdef double *Fsol = wk.Fsol
    cdef double *Usol = wk.Usol
    cdef double *Fs = wk.Fs
    cdef Trace tr
    cdef Coupled co
    cdef int st
    cdef double w0 = 0.0, w1 = 0.0, w2 = 0.0, n0 = 0.0, n1 = 0.0, n2 = 0.0
    if nq == 3:
        w0 = weights[0]; w1 = weights[1]; w2 = weights[2]
        n0 = nodes[0]; n1 = nodes[1]; n2 = nodes[2]

    while t < t_stop and (max_steps < 0 or steps < max_steps):
        if fixed_lambda > 0.0:
            lam = fixed_lambda
        else:
            lam = max_speed(M1, Q1, M2, Q2, nf, p.c1, p.c2, pm)
        if parabolic:
            dt = cfl * dx * dx / cs
        else:
            speed = cs if cs >= lam else lam
            if speed <= 0.0:
                return ERR_SPEED
            dt = cfl * dx / speed
        last = False
        if clip:
            if t + dt >= t_stop:
                dt = t_stop - t
                last = True
        elif t_stop - t <= 0.5 * dt:
            break

        # operator T = F(U) - F(U_inf) - suffix sums of the path integrals
        pressure_and_fluxes(A, M1, Q1, M2, Q2, nf, c1s, pi1, c2s, pi2, pm, &T[2 * nf], &T[4 * nf])
        if nq == 3:
            path_pairs3(A, M1, Q1, M2, Q2, pm, nf, n0, n1, n2, w0, w1, w2, PA, PP)
        else:
            for j in range(nf - 1):
                Q = Q1[j] + Q2[j]
                M = M1[j] + M2[j]
                dQ = (Q1[j + 1] + Q2[j + 1]) - Q
                dM = (M1[j + 1] + M2[j + 1]) - M
                vint = 0.0
                for kq in range(nq):
                    vint = vint + weights[kq] * ((Q + nodes[kq] * dQ) / (M + nodes[kq] * dM))
                da = A[j + 1] - A[j]
                PA[j] = da * vint
                PP[j] = da * (0.5 * (pm[j] + pm[j + 1]))
        Finf[0] = 0.0 + shift[0]
        Finf[1] = Q1[nf - 1] + shift[1]
        Finf[2] = T[2 * nf + nf - 1] + shift[2]
        Finf[3] = Q2[nf - 1] + shift[3]
        Finf[4] = T[4 * nf + nf - 1] + shift[4]
        acc0 = 0.0
        acc2 = 0.0
        acc4 = 0.0
        for j in range(nf - 1, -1, -1):
            if j < nf - 1:
                acc0 = acc0 + PA[j]
                acc2 = acc2 + PP[j]
                acc4 = acc4 + (-PP[j])
            T[j] = 0.0 - Finf[0] - acc0
            T[nf + j] = Q1[j] - Finf[1] - 0.0
            T[2 * nf + j] = T[2 * nf + j] - Finf[2] - acc2
            T[3 * nf + j] = Q2[j] - Finf[3] - 0.0
            T[4 * nf + j] = T[4 * nf + j] - Finf[4] - acc4

        # interface Riemann problem
        tr.lam = lam
        tr.lb = lb
        tr.w0 = W[ns - 1]
        tr.s0 = S[ns - 1]
        tr.a10 = A[0]; tr.m10 = M1[0]; tr.q10 = Q1[0]
        tr.m20 = M2[0]; tr.q20 = Q2[0]
        tr.Vb[0] = -tr.s0 / rs
        tr.Vb[1] = -rs * (cs * cs) * tr.w0
        for k in range(5):
            tr.V0[k] = T[k * nf]
        tr_out[0] = tr
        st = solve_coupling_c(&tr, p, &co)
        if st != OK:
            info[0] = co.detail
            return st
        solves += 1
        if residual_every > 0 and solves % residual_every == 0:
            r = max_residual(&co, &tr, p)
            if r > maxres:
                maxres = r
            if not r <= residual_tol:
                info[0] = r
                t_io[0] = t
                return ERR_RESIDUAL

        # edge fluxes; the solid is handled mirrored so that the interface cell comes first
        for k in range(5):
            edge_fluxes(&fluid[k, 0], &T[k * nf], lam, dx, nf,
                        wk.mi, wk.pl, wk.Sm, wk.Sp, &Ff[k * nf])
        for i in range(ns):
            Usol[ns - 1 - i] = W[i]
            Usol[2 * ns - 1 - i] = S[i]
            Fsol[ns - 1 - i] = -S[i] / rs
            Fsol[2 * ns - 1 - i] = -rs * cs * cs * W[i]
        for k in range(2):
            # mirrored: differences flip sign, lam -> -lam swaps the roles of S- and S+
            edge_fluxes(&Usol[k * ns], &Fsol[k * ns], -lb, dx, ns,
                        wk.mi, wk.pl, wk.Sm, wk.Sp, &Fs[k * ns])

        left[0] = 0.5 * (tr.Vb[0] + co.VbR[0]) - 0.5 * cs * (co.wR - W[ns - 1])
        left[1] = 0.5 * (tr.Vb[1] + co.VbR[1]) - 0.5 * cs * (co.sR - S[ns - 1])
        for k in range(5):
            right[k] = 0.5 * (co.VL[k] + T[k * nf]) - 0.5 * lam * (fluid[k, 0] - co.UL[k])

        mu = dt / dx
        # solid cell i has right edge flux Fs[ns - 2 - i] (mirrored left edge of i + 1)
        for k in range(2):
            for i in range(ns - 1):
                solid[k, i] = solid[k, i] - mu * (Fs[k * ns + ns - 2 - i] - Fs[k * ns + ns - 1 - i])
            solid[k, ns - 1] = solid[k, ns - 1] - mu * (left[k] - Fs[k * ns])
        for k in range(5):
            fluid[k, 0] = fluid[k, 0] - mu * (Ff[k * nf] - right[k])
            for j in range(1, nf):
                fluid[k, j] = fluid[k, j] - mu * (Ff[k * nf + j] - Ff[k * nf + j - 1])

        for j in range(nf):
            if not (M1[j] > 0 and M2[j] > 0 and isfinite(A[j]) and isfinite(M1[j])
                    and isfinite(Q1[j]) and isfinite(M2[j]) and isfinite(Q2[j])):
                cell_out[0] = <int>j
                t_io[0] = t + dt
                return ERR_CELL
        if relax:
            relax_cells(A, M1, Q1, M2, Q2, nf, p)
        for j in range(nf):
            if not (A[j] >= ALPHA_MARGIN_C and A[j] <= 1 - ALPHA_MARGIN_C):
                cell_out[0] = <int>j
                t_io[0] = t + dt
                return ERR_CELL
        for i in range(ns):
            if not (isfinite(W[i]) and isfinite(S[i])):
                t_io[0] = t + dt
                cell_out[0] = -1
                return ERR_SOLID
        t = t_stop if last else t + dt
        steps += 1
    t_io[0] = t
    steps_out[0] = steps
    solves_io[0] = solves
    maxres_io[0] = maxres
    return OK


def advance(double[:, ::1] solid, double[:, ::1] fluid, double t, double t_stop, double dx,
            double rho_s, double c_s, double c1, double pi1, double c2, double pi2, double cfl,
            bint parabolic, bint relax, nodes, weights, double fixed_lambda=0.0, shift=None,
            long max_steps=-1, bint clip=True, long residual_every=100,
            double residual_tol=1e-9, long solve_counter=0):
    """Advance ``solid``/``fluid`` in place; see ``_pykernel.advance``."""
    cdef Params p
    cdef Work wk
    cdef Trace tr
    cdef int cell = -1, st
    cdef long steps = 0
    cdef long solves = solve_counter
    cdef double maxres = 0.0, info = 0.0
    cdef Py_ssize_t ns = solid.shape[1], nf = fluid.shape[1]
    if solid.shape[0] != 2 or fluid.shape[0] != 5:
        raise ValueError("solid must be (2, Ns) and fluid (5, Nf)")
    cdef double[::1] nd = np.ascontiguousarray(nodes, dtype=float)
    cdef double[::1] wt = np.ascontiguousarray(weights, dtype=float)
    cdef double[::1] sh = np.zeros(5) if shift is None else np.ascontiguousarray(shift, dtype=float)
    cdef Py_ssize_t nmax = max(nf, ns) + 1
    cdef double[::1] buf = np.zeros(10 * nf + 6 * ns + 3 * nf + 4 * nmax)
    p.rho_s = rho_s; p.c_s = c_s; p.c1 = c1; p.pi1 = pi1; p.c2 = c2; p.pi2 = pi2
    p.c1s = c1 * c1; p.c2s = c2 * c2
    wk.T = &buf[0]
    wk.Ff = &buf[5 * nf]
    wk.Fsol = &buf[10 * nf]
    wk.Usol = &buf[10 * nf + 2 * ns]
    wk.Fs = &buf[10 * nf + 4 * ns]
    wk.pm = &buf[10 * nf + 6 * ns]
    wk.PA = &buf[11 * nf + 6 * ns]
    wk.PP = &buf[12 * nf + 6 * ns]
    wk.mi = &buf[13 * nf + 6 * ns]
    wk.pl = &buf[13 * nf + 6 * ns + nmax]
    wk.Sm = &buf[13 * nf + 6 * ns + 2 * nmax]
    wk.Sp = &buf[13 * nf + 6 * ns + 3 * nmax]
    with nogil:
        st = run_loop(solid, fluid, &p, &t, t_stop, dx, cfl, parabolic, relax, &nd[0], &wt[0],
                      nd.shape[0], fixed_lambda, &sh[0], max_steps, clip, residual_every,
                      residual_tol, &steps, &solves, &maxres, &wk, &tr, &cell, &info)
    if st == OK:
        return t, steps, solves, maxres
    if st in _COUPLING_MESSAGES:
        traces = TraceStates.from_cells(np.array([tr.w0, tr.s0]),
                                        np.array([tr.a10, tr.m10, tr.q10, tr.m20, tr.q20]),
                                        np.array([tr.V0[0], tr.V0[1], tr.V0[2], tr.V0[3], tr.V0[4]]),
                                        ElasticMaterial(rho_s, c_s), tr.lb, tr.lam)
        raise CouplingSolverError(f"coupling solve failed: {_COUPLING_MESSAGES[st]} ({info!r})",
                                  traces)
    if st == ERR_RESIDUAL:
        raise SimulationAbort(f"coupling residual {info:.3e} above {residual_tol:.1e}", t, -1)
    if st == ERR_SPEED:
        raise DegenerateError("zero wave speed")
    if st == ERR_CELL:
        raise SimulationAbort(f"inadmissible fluid state in cell {cell} at t={t:.6e}", t, cell)
    raise SimulationAbort(f"non-finite solid state at t={t:.6e}", t, None)
