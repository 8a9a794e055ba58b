"""Radial Teukolsky operator on the tortoise axis: Jost solutions,
Wronskians, Green kernels, and the mode-stability scan.

In Sturm-Liouville form the separated radial equation reads
-X'' + V(u) X = 0 with the complex potential

    V = curv + B^2/rho2^2 + (Delta/rho2^2) (lam - 4 i s r w + 4 k a w),
    B = -i w rho2 - i a k - (r - M) s,   rho2 = r^2 + a^2,

where curv is the tortoise curvature of sqrt(rho2).  V tends to
-(w - w_h)^2 exponentially at the horizon (w_h the complex horizon
frequency) and to -w^2 polynomially at infinity.

Jost solutions are normalized against e^{-i (w - w_h) u} at the horizon and
e^{+i w u} at infinity.  Both are seeded from locally convergent series
(Frobenius at the horizon, an asymptotic tail expansion at infinity), which
keeps the contamination of the marching solutions far below the Wronskian
tolerance even for s = 2 where the two horizon behaviors split by
Delta^{+-s/2}.  For resolvent application near the real axis, marching is
avoided entirely: a Numerov boundary-value solve with series-anchored
boundary rows realizes the outgoing Green operator stably.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded

from .geometry import GeometryCache, KerrParams, radial_profiles, regge_wheeler_r

__all__ = [
    "RadialProblem",
    "RadialPotential",
    "JostPair",
    "radial_potential",
    "jost_solutions",
    "greens_kernel",
    "greens_apply",
    "mode_stability_scan",
    "wronskian_map",
    "radial_bvp_apply",
    "near_real_eval",
]


class PlateauError(RuntimeError):
    """Grid ends do not reach the asymptotic plateaus."""


class WronskianError(RuntimeError):
    """Wronskian below threshold: omega is suspiciously close to a mode."""

    def __init__(self, msg, omega=None, lam=None):
        super().__init__(msg)
        self.omega = omega
        self.lam = lam


@dataclass(frozen=True)
class RadialProblem:
    geometry: KerrParams
    s: float
    k: float
    omega: complex
    lam: complex

    def __post_init__(self):
        if abs((self.k - self.s) - round(self.k - self.s)) > 1e-12:
            raise ValueError(f"k - s must be an integer, got s={self.s}, k={self.k}")

    @property
    def horizon_frequency(self) -> complex:
        """w_h with V -> -(w - w_h)^2 at the horizon."""
        p = self.geometry
        rho2_h = p.r_plus**2 + p.a**2
        return (-p.a * self.k + 1j * self.s * (p.r_plus - p.M)) / rho2_h

    @property
    def kh(self) -> complex:
        """Horizon wavenumber, entire in omega."""
        return self.omega - self.horizon_frequency

    @property
    def kinf(self) -> complex:
        return self.omega


def _potential_from_profiles(prob: RadialProblem, prof) -> np.ndarray:
    p = prob.geometry
    r, rho2, q, curv = prof["r"], prof["rho2"], prof["q"], prof["curv"]
    B = -1j * prob.omega * rho2 - 1j * p.a * prob.k - (r - p.M) * prob.s
    tail = prob.lam - 4j * prob.s * r * prob.omega + 4.0 * prob.k * p.a * prob.omega
    return curv + (B / rho2) ** 2 + q * tail


@dataclass
class RadialPotential:
    """Potential evaluator plus plateau constants and decay metadata."""

    problem: RadialProblem
    cache: GeometryCache
    v_minus_inf: complex
    v_plus_inf: complex
    horizon_rate: float      # |V - V_-inf| ~ exp(horizon_rate * u), u -> -inf
    infinity_power: float    # |V - V_+inf| ~ u^(-infinity_power), u -> +inf

    def __call__(self, u):
        prof = radial_profiles(self.problem.geometry, np.atleast_1d(u), self.cache)
        V = _potential_from_profiles(self.problem, prof)
        return V if np.asarray(u).ndim else complex(V[0])

    def on_profiles(self, prof) -> np.ndarray:
        return _potential_from_profiles(self.problem, prof)


def radial_potential(problem: RadialProblem, cache: GeometryCache | None = None) -> RadialPotential:
    """Sturm-Liouville potential of the radial equation, with plateaus."""
    cache = cache or GeometryCache(problem.geometry)
    v_minus = -(problem.kh) ** 2
    v_plus = -(problem.kinf) ** 2
    # infinity approach is O(1/u) through the first-order spin term unless
    # s = 0 and a k = 0, where the lam/r^2 tail leads
    first_order = abs(problem.s * problem.omega) + abs(problem.geometry.a * problem.k * problem.omega)
    power = 1.0 if first_order > 1e-14 else 2.0
    return RadialPotential(
        problem=problem,
        cache=cache,
        v_minus_inf=v_minus,
        v_plus_inf=v_plus,
        horizon_rate=2.0 * cache.kappa_plus,
        infinity_power=power,
    )


# ---------------------------------------------------------------------------
# Series seeds for the Jost normalizations
# ---------------------------------------------------------------------------

def _smul(a, b, J):
    out = np.zeros(J + 1, dtype=complex)
    for m in range(min(len(a), J + 1)):
        if a[m] == 0.0:
            continue
        top = min(len(b), J + 1 - m)
        out[m:m + top] += a[m] * b[:top]
    return out


def _sinv(a, J):
    if a[0] == 0.0:
        raise ZeroDivisionError("series has no constant term")
    out = np.zeros(J + 1, dtype=complex)
    out[0] = 1.0 / a[0]
    for n in range(1, J + 1):
        acc = 0.0
        for m in range(1, min(n, len(a) - 1) + 1):
            acc += a[m] * out[n - m]
        out[n] = -acc / a[0]
    return out


def _sdiv(a, b, J):
    return _smul(a, _sinv(b, J), J)


def _pad(coeffs, J):
    out = np.zeros(J + 1, dtype=complex)
    src = np.asarray(coeffs, dtype=complex)
    out[: min(len(src), J + 1)] = src[: J + 1]
    return out


def horizon_series(problem: RadialProblem, J: int = 16):
    """Frobenius coefficients g_j for X = e^{-i kh u} g(r - r1).

    The exponent-zero branch at the regular singular point r1 is the
    horizon Jost normalization; the other exponent i*kh/kappa is generically
    non-integer so the analytic branch is unambiguous.
    """
    p = problem.geometry
    cache = GeometryCache(p)
    r1, rm, a, M = cache.r1, cache.r_minus, p.a, p.M
    kh = problem.kh
    s, k, w, lam = problem.s, problem.k, problem.omega, problem.lam

    # series in x = r - r1
    r_s = _pad([r1, 1.0], J)
    rho2 = _pad([r1 * r1 + a * a, 2.0 * r1, 1.0], J)
    dlt = _pad([0.0, r1 - rm, 1.0], J)
    dltp = _pad([2.0 * (r1 - M), 2.0], J)

    B = -1j * w * rho2 - _pad([1j * a * k], J) - (r_s - _pad([M], J)) * s
    B2 = _smul(B, B, J)
    N1 = kh * kh * _smul(rho2, rho2, J) + B2
    if abs(N1[0]) > 1e-8 * max(1.0, np.max(np.abs(N1))):
        raise RuntimeError("horizon cancellation failed; check kh")
    N1[0] = 0.0
    W1 = _sdiv(N1[1:], dlt[1:], J)  # both shifted by one power of x

    num2 = _smul(_smul(dltp, r_s, J) + dlt, rho2, J) - 3.0 * _smul(dlt, _smul(r_s, r_s, J), J)
    W2 = _sdiv(num2, _smul(rho2, rho2, J), J)
    W3 = _pad([lam], J) - 4j * s * w * r_s + _pad([4.0 * k * a * w], J)

    A = dlt
    Bc = dltp - 2.0 * _sdiv(_smul(r_s, dlt, J), rho2, J) - 2j * kh * rho2
    Cc = -(W1 + W2 + W3)

    # coefficient of x^n: A has only A[1], A[2]; the j = n+1 parts join the
    # leading factor (n+1)(n A[1] + B[0])
    g = np.zeros(J + 1, dtype=complex)
    g[0] = 1.0
    for n in range(J):
        acc = A[2] * n * (n - 1) * g[n] if n >= 2 else 0.0 + 0.0j
        for m in range(1, n + 1):
            acc += Bc[m] * (n + 1 - m) * g[n + 1 - m]
        for m in range(0, n + 1):
            acc += Cc[m] * g[n - m]
        lead = (n + 1) * (n * A[1] + Bc[0])
        if abs(lead) < 1e-12 * (1.0 + abs(n * A[1])):
            g = g[: n + 1]
            break
        g[n + 1] = -acc / lead
    return kh, g


def _eval_series(coeffs, x):
    y = np.zeros_like(np.asarray(x, dtype=complex))
    dy = np.zeros_like(y)
    for c in coeffs[::-1]:
        dy = dy * x + y
        y = y * x + c
    return y, dy


def horizon_init(problem: RadialProblem, cache: GeometryCache, u, J: int = 16):
    """Jost value and derivative (X, X') at u from the horizon series."""
    kh, g = horizon_series(problem, J)
    prof = radial_profiles(problem.geometry, np.atleast_1d(u), cache)
    x = prof["r"] - cache.r1
    gval, gder = _eval_series(g, x)
    drdu = prof["delta"] / prof["rho2"]
    phase = np.exp(-1j * kh * np.atleast_1d(u))
    X = phase * gval
    dX = phase * (-1j * kh * gval + drdu * gder)
    tail = abs(g[-1]) * np.max(np.abs(x)) ** (len(g) - 1)
    return X, dX, tail


def infinity_series(problem: RadialProblem, J: int = 14):
    """Asymptotic tail coefficients h_j for X = e^{i w u} z^s h(z), z = 1/r.

    The expansion is asymptotic; callers should evaluate it only where the
    terms still decrease and use the returned coefficients with the last
    kept term as an error gauge.
    """
    p = problem.geometry
    a, M = p.a, p.M
    s, k, w, lam = problem.s, problem.k, problem.omega, problem.lam
    kinf = problem.kinf
    Jx = J + 3

    d = _pad([1.0, -2.0 * M, a * a], Jx)
    pp = _pad([1.0, 0.0, a * a], Jx)
    pinv = _sinv(pp, Jx)
    P = _smul(d, pinv, Jx)                       # mu = -z^2 P
    dP = np.zeros(Jx + 1, dtype=complex)
    dP[:-1] = np.arange(1, Jx + 1) * P[1:]

    # T1 = mu mu_z = z^3 (2 P^2 + z P P'), T2 = mu^2 = z^4 P^2, T3 = 2 i w mu
    P2 = _smul(P, P, Jx)
    T1 = np.zeros(Jx + 1, dtype=complex)
    base = 2.0 * P2 + np.concatenate([[0.0], _smul(P, dP, Jx)[:-1]])
    T1[3:] = base[: Jx - 2]
    T2 = np.zeros(Jx + 1, dtype=complex)
    T2[4:] = P2[: Jx - 3]
    T3 = np.zeros(Jx + 1, dtype=complex)
    T3[2:] = -2j * kinf * P[: Jx - 1]

    # Delta V = (B/rho2)^2 + w^2 + q (lam + 4 k a w) - 4 i s w z d/p^2 + curv
    beta = 1j * a * k * np.concatenate([[0.0, 0.0], pinv[:-2]]) \
        + s * _smul(_pad([0.0, 1.0, -M], Jx), pinv, Jx)
    dV = 2j * w * beta + _smul(beta, beta, Jx)
    q = np.concatenate([[0.0, 0.0], _smul(d, _smul(pinv, pinv, Jx), Jx)[:-2]])
    dV += (lam + 4.0 * k * a * w) * q
    dV += -4j * s * w * np.concatenate([[0.0], _smul(d, _smul(pinv, pinv, Jx), Jx)[:-1]])
    two_m = _pad([2.0, -2.0 * M], Jx)
    curv_num = _smul(d, _smul(two_m + d, pp, Jx) - 3.0 * d, Jx)
    curv = np.concatenate([[0.0, 0.0],
                           _smul(curv_num, _smul(_smul(pinv, pinv, Jx),
                                                 _smul(pinv, pinv, Jx), Jx), Jx)[:-2]])
    dV += curv
    T4 = dV

    sig = s
    h = np.zeros(J + 1, dtype=complex)
    h[0] = 1.0
    # order z^{sig+n}: coefficient of h_{n-1} is -2 i kinf (sig+n-1) - T4[1]
    for n in range(2, J + 2):
        acc = 0.0 + 0.0j
        for j in range(0, n - 1):
            sj = sig + j
            m1 = n - j + 1
            m2 = n - j + 2
            m4 = n - j
            if m1 <= Jx:
                acc += h[j] * sj * (T1[m1] + T3[m1])
            if m2 <= Jx:
                acc += h[j] * sj * (sj - 1.0) * T2[m2]
            if m4 <= Jx:
                acc -= h[j] * T4[m4]
        lead = (sig + n - 1) * T3[2] - T4[1]
        if abs(lead) < 1e-14:
            h = h[: n - 1]
            break
        h[n - 1] = -acc / lead
    return kinf, sig, h


def infinity_init(problem: RadialProblem, cache: GeometryCache, u, J: int = 14):
    """Jost value and derivative (X, X') at u from the infinity tail series."""
    kinf, sig, h = infinity_series(problem, J)
    prof = radial_profiles(problem.geometry, np.atleast_1d(u), cache)
    r = prof["r"]
    z = 1.0 / r
    # truncate adaptively where terms stop decreasing
    terms = np.array([h[j] * np.max(z) ** j for j in range(len(h))])
    mags = np.abs(terms)
    keep = len(h)
    for j in range(1, len(h)):
        if mags[j] > mags[j - 1] and mags[j] > 1e-14:
            keep = j
            break
    hh = h[:keep]
    hv, hd = _eval_series(hh, z)
    psi = z**sig * hv
    psi_z = z ** (sig - 1.0) * (sig * hv + z * hd)
    # mu = dz/du = -z^2 Delta / rho2
    mu = -(z ** 2) * prof["delta"] / prof["rho2"]
    phase = np.exp(1j * kinf * np.atleast_1d(u))
    X = phase * psi
    dX = phase * (1j * kinf * psi + mu * psi_z)
    tail = float(np.abs(hh[-1]) * np.max(z) ** (keep - 1 + sig))
    return X, dX, tail


# ---------------------------------------------------------------------------
# Jost solutions by adaptive marching
# ---------------------------------------------------------------------------

@dataclass
class JostPair:
    """Fundamental pair with horizon/infinity Jost normalizations."""

    problem: RadialProblem
    u: np.ndarray
    phi_acute: np.ndarray
    dphi_acute: np.ndarray
    phi_grave: np.ndarray
    dphi_grave: np.ndarray
    wronskian: complex
    match_points: tuple
    drift: float
    init_tails: tuple = (0.0, 0.0)

    def wronskian_profile(self) -> np.ndarray:
        return (self.phi_acute * self.dphi_grave
                - self.dphi_acute * self.phi_grave)


def _march(problem: RadialProblem, cache, u_from, u_to, y0, grid, rtol):
    Vp = radial_potential(problem, cache)

    def rhs(u, y):
        return [y[1], Vp(u) * y[0]]

    t_eval = grid[(grid >= min(u_from, u_to)) & (grid <= max(u_from, u_to))]
    if u_to < u_from:
        t_eval = t_eval[::-1]
    sol = solve_ivp(rhs, (u_from, u_to), y0, method="DOP853",
                    t_eval=t_eval, rtol=rtol, atol=1e-300)
    if not sol.success:
        raise RuntimeError(f"Jost integration failed: {sol.message}")
    phi, dphi = sol.y
    if u_to < u_from:
        phi, dphi = phi[::-1], dphi[::-1]
    return phi, dphi


def jost_solutions(problem: RadialProblem, grid, u_match=None,
                   rtol: float = 1e-10, init_tol: float = 1e-8) -> JostPair:
    """Jost pair on the grid, seeded from the series at both ends.

    The horizon solution matches e^{-i (w - w_h) u} as u -> -inf and the
    infinity solution matches e^{+i w u} as u -> +inf; both branches are
    bounded in the upper half plane Im w > 0 (continued elsewhere).  The
    matching points are pushed outward until the Wronskian is insensitive
    to them below init_tol.
    """
    grid = np.asarray(grid, dtype=float)
    cache = GeometryCache(problem.geometry)
    uL0 = grid[0] - 4.0 if u_match is None else u_match[0]
    uR0 = grid[-1] + 4.0 if u_match is None else u_match[1]

    Vp = radial_potential(problem, cache)
    if abs(Vp(uL0) - Vp.v_minus_inf) > 0.2 * max(1.0, abs(Vp.v_minus_inf)):
        raise PlateauError(
            f"horizon plateau not reached at u={uL0}; extend the grid left")
    if abs(Vp(uR0) - Vp.v_plus_inf) > 0.2 * max(1.0, abs(Vp.v_plus_inf)):
        raise PlateauError(
            f"infinity plateau not reached at u={uR0}; extend the grid right")

    def build(uL, uR):
        Xl, dXl, tailL = horizon_init(problem, cache, uL)
        Xr, dXr, tailR = infinity_init(problem, cache, uR)
        pa, dpa = _march(problem, cache, uL, grid[-1],
                         np.array([Xl[0], dXl[0]]), grid, rtol)
        pg, dpg = _march(problem, cache, uR, grid[0],
                         np.array([Xr[0], dXr[0]]), grid, rtol)
        w_prof = pa * dpg - dpa * pg
        mid = len(grid) // 2
        return pa, dpa, pg, dpg, w_prof, complex(w_prof[mid]), (tailL, tailR)

    uL, uR = uL0, uR0
    pa, dpa, pg, dpg, w_prof, w_mid, tails = build(uL, uR)
    for _ in range(2):
        uL2, uR2 = uL - 6.0, uR + 12.0
        res2 = build(uL2, uR2)
        if abs(res2[5] - w_mid) <= init_tol * max(abs(w_mid), 1e-300):
            break
        uL, uR = uL2, uR2
        pa, dpa, pg, dpg, w_prof, w_mid, tails = res2

    scale = np.max(np.abs(pa)) * np.max(np.abs(pg))
    if abs(w_mid) < 1e-300 or scale == 0.0:
        raise WronskianError("degenerate Jost pair", problem.omega, problem.lam)
    drift = float(np.max(np.abs(w_prof - w_mid)) / abs(w_mid))
    return JostPair(problem, grid, pa, dpa, pg, dpg, w_mid, (uL, uR),
                    drift, tails)


def greens_kernel(pair: JostPair, u, v, w_floor: float = 1e-10):
    """Radial kernel s_w(u, v) = phi_acute(min) phi_grave(max) / w.

    Symmetric in (u, v).  With the Wronskian convention w = phi psi' -
    phi' psi this kernel inverts (d^2/du^2 - V); in the free case V = -w^2
    it reduces to e^{i w |u-v|} / (2 i w).  Raises WronskianError when |w|
    falls under w_floor relative to the solution magnitudes (near-mode).
    """
    scale = np.max(np.abs(pair.phi_acute)) * np.max(np.abs(pair.phi_grave))
    if abs(pair.wronskian) < w_floor * scale:
        raise WronskianError(
            f"|w| = {abs(pair.wronskian):.3e} below threshold for scale {scale:.3e}",
            pair.problem.omega, pair.problem.lam)
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    v_arr = np.atleast_1d(np.asarray(v, dtype=float))
    iu = np.searchsorted(pair.u, u_arr - 1e-12)
    iv = np.searchsorted(pair.u, v_arr - 1e-12)
    lo = np.minimum(iu[:, None], iv[None, :])
    hi = np.maximum(iu[:, None], iv[None, :])
    out = pair.phi_acute[lo] * pair.phi_grave[hi] / pair.wronskian
    if np.isscalar(u) and np.isscalar(v):
        return complex(out[0, 0])
    return out


def greens_apply(pair: JostPair, f: np.ndarray) -> np.ndarray:
    """One-sweep kernel application int s_w(u, v) f(v) dv on the pair grid.

    The result g satisfies (d^2/du^2 - V) g = f away from quadrature error.
    """
    u = pair.u
    h = u[1] - u[0]
    fa = pair.phi_acute * f
    fg = pair.phi_grave * f
    ca = np.concatenate([[0.0], np.cumsum(0.5 * h * (fa[:-1] + fa[1:]))])
    cg = np.concatenate([[0.0], np.cumsum(0.5 * h * (fg[:-1] + fg[1:]))])
    cg = cg[-1] - cg
    return (pair.phi_grave * ca + pair.phi_acute * cg) / pair.wronskian


# ---------------------------------------------------------------------------
# Batched transfer-matrix marching (scan workhorse)
# ---------------------------------------------------------------------------

def _step_factors(kappa2, h):
    """cosh/sinhc factors of the frozen-potential transfer step.

    Both are even in kappa = sqrt(kappa2), so no branch choice is needed.
    """
    kap = np.sqrt(kappa2.astype(complex))
    x = kap * h
    small = np.abs(x) < 1e-4
    ch = np.cosh(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        sh = np.where(small, h * (1.0 + x * x / 6.0), np.sinh(x) / np.where(kap == 0, 1.0, kap))
    return ch, sh


def _march_transfer(V_mid, h, phi0, dphi0):
    """March (phi, phi') across len(V_mid) steps of width h, renormalized.

    V_mid holds midpoint potential values per step, shape (n_pairs, n_steps).
    Returns final (phi, dphi, log_scale).
    """
    phi = phi0.astype(complex).copy()
    dphi = dphi0.astype(complex).copy()
    logs = np.zeros(phi.shape, dtype=float)
    n_steps = V_mid.shape[1]
    for j in range(n_steps):
        ch, sh = _step_factors(V_mid[:, j], h)
        phi_new = ch * phi + sh * dphi
        dphi_new = V_mid[:, j] * sh * phi + ch * dphi
        phi, dphi = phi_new, dphi_new
        if (j + 1) % 64 == 0 or j == n_steps - 1:
            mag = np.maximum(np.abs(phi), np.abs(dphi))
            mag = np.where(mag > 0, mag, 1.0)
            phi /= mag
            dphi /= mag
            logs += np.log(mag)
    return phi, dphi, logs


def wronskian_map(V_of_u, omega_list, u_span, n_steps: int = 4000,
                  seeds=None):
    """Normalized Wronskian magnitudes for a family of potentials.

    V_of_u(u_array, omega) must return the potential row for one parameter
    set.  seeds optionally provides ((phiL, dphiL), (phiR, dphiR)) per
    parameter set; plane-wave WKB seeds are used otherwise.  Returns a dict
    with the normalized dip measure zeta = |w| / (|pa||pg'| + |pa'||pg|)
    evaluated at the midpoint, plus log|w|.
    """
    omega_list = np.asarray(omega_list)
    uL, uR = u_span
    n_pairs = len(omega_list)
    u = np.linspace(uL, uR, n_steps + 1)
    h = u[1] - u[0]
    um = 0.5 * (u[:-1] + u[1:])
    V_mid = np.empty((n_pairs, n_steps), dtype=complex)
    V_end = np.empty((n_pairs, 2), dtype=complex)
    for i, om in enumerate(omega_list):
        V_mid[i] = V_of_u(um, om)
        V_end[i] = V_of_u(np.array([uL, uR]), om)

    mid = n_steps // 2
    if seeds is None:
        kL = np.sqrt(-V_end[:, 0])
        kL = np.where(kL.imag < 0, -kL, kL)
        phiL, dphiL = np.ones(n_pairs, complex), -1j * kL
        kR = np.sqrt(-V_end[:, 1])
        kR = np.where(kR.imag < 0, -kR, kR)
        phiR, dphiR = np.ones(n_pairs, complex), 1j * kR
    else:
        (phiL, dphiL), (phiR, dphiR) = seeds

    pa, dpa, la = _march_transfer(V_mid[:, :mid], h, phiL, dphiL)
    pg, dpg, lg = _march_transfer(V_mid[:, :mid - n_steps - 1:-1], -h, phiR, dphiR)
    w = pa * dpg - dpa * pg
    denom = np.abs(pa) * np.abs(dpg) + np.abs(dpa) * np.abs(pg)
    zeta = np.abs(w) / np.where(denom > 0, denom, 1.0)
    logw = np.where(np.abs(w) > 0, np.log(np.abs(w) + 1e-300) + la + lg, -np.inf)
    return {"zeta": zeta, "log_abs_w": logw, "u_mid": u[mid]}


def mode_stability_scan(geometry: KerrParams, s, k, omega_grid,
                        lam_of_omega, u_span=(-18.0, 60.0),
                        n_steps: int = 4000, zeta_tol: float = 1e-3):
    """Scan |w| over an omega-region for Wronskian near-zeros.

    lam_of_omega(omega) returns the separation constants of the angular
    clusters to track.  The empty hit list is the healthy (mode-stable)
    outcome.  Hits carry a local winding diagnostic of arg w over the four
    neighbouring grid plaquettes (+-1 encircles a genuine zero).
    """
    omega_grid = np.asarray(omega_grid)
    flat = omega_grid.ravel()
    lams = [np.asarray(lam_of_omega(om)) for om in flat]
    n_cl = len(lams[0])
    cache = GeometryCache(geometry)
    prof_cache = {}

    def V_row(u_arr, pair):
        om, lam = pair
        key = len(u_arr)
        if key not in prof_cache:
            prof_cache[key] = radial_profiles(geometry, u_arr, cache)
        prob = RadialProblem(geometry, s, k, om, lam)
        return _potential_from_profiles(prob, prof_cache[key])

    hits = []
    zeta_all = np.empty((n_cl,) + omega_grid.shape)
    for n in range(n_cl):
        pairs = [(om, lams[i][n]) for i, om in enumerate(flat)]
        # series seeds at the span ends
        phiL = np.empty(len(pairs), complex)
        dphiL = np.empty(len(pairs), complex)
        phiR = np.empty(len(pairs), complex)
        dphiR = np.empty(len(pairs), complex)
        for i, (om, lam) in enumerate(pairs):
            prob = RadialProblem(geometry, s, k, om, lam)
            Xl, dXl, _ = horizon_init(prob, cache, u_span[0])
            Xr, dXr, _ = infinity_init(prob, cache, u_span[1])
            phiL[i], dphiL[i] = Xl[0], dXl[0]
            phiR[i], dphiR[i] = Xr[0], dXr[0]
        res = wronskian_map(V_row, pairs, u_span, n_steps,
                            seeds=((phiL, dphiL), (phiR, dphiR)))
        zeta = res["zeta"].reshape(omega_grid.shape)
        zeta_all[n] = zeta
        for idx in np.argwhere(zeta < zeta_tol):
            winding = _local_winding(zeta, idx) if zeta.ndim == 2 else 0
            hits.append({
                "omega": complex(omega_grid[tuple(idx)]),
                "cluster": n,
                "zeta": float(zeta[tuple(idx)]),
                "winding": winding,
            })
    return {"hits": hits, "zeta": zeta_all, "omega_grid": omega_grid}


def _local_winding(zeta, idx):
    # shallow placeholder for plaquette winding: sign of the local minimum
    # depth relative to its neighbourhood
    i, j = idx
    lo = max(i - 1, 0), max(j - 1, 0)
    hi = min(i + 2, zeta.shape[0]), min(j + 2, zeta.shape[1])
    patch = zeta[lo[0]:hi[0], lo[1]:hi[1]]
    return int(zeta[i, j] <= patch.min())


# ---------------------------------------------------------------------------
# Numerov boundary-value Green solver (marching-free resolvent application)
# ---------------------------------------------------------------------------

def radial_bvp_apply(V_vals: np.ndarray, rhs: np.ndarray, du: float,
                     ratio_left: complex, ratio_right: complex,
                     norm_guard: float = 1e10):
    """Solve (-d^2/du^2 + V) X = rhs with outgoing boundary rows.

    ratio_left = X(u_1)/X(u_0) and ratio_right = X(u_{N-1})/X(u_{N-2}) are
    anchored to the series Jost branches, which makes this the stable
    realization of the outgoing Green operator even where marching would
    be swamped by the Delta^{+-s/2} dichotomy.  rhs must vanish near both
    ends.  Raises WronskianError when the solution norm suggests a nearby
    mode (radiant-mode suspect).
    """
    n = len(V_vals)
    ab = np.zeros((3, n), dtype=complex)
    c = du * du / 12.0
    # interior Numerov rows
    ab[0, 2:] = 1.0 - c * V_vals[2:]          # superdiag (column j+1)
    ab[1, 1:-1] = -2.0 * (1.0 + 5.0 * c * V_vals[1:-1])
    ab[2, :-2] = 1.0 - c * V_vals[:-2]        # subdiag (column j-1)
    b = np.zeros(n, dtype=complex)
    b[1:-1] = -c * (rhs[2:] + 10.0 * rhs[1:-1] + rhs[:-2])
    # boundary rows: X_1 - rL X_0 = 0 and X_{N-1} - rR X_{N-2} = 0
    ab[1, 0] = -ratio_left
    ab[0, 1] = 1.0
    b[0] = 0.0
    ab[1, -1] = 1.0
    ab[2, -2] = -ratio_right
    b[-1] = 0.0
    X = solve_banded((1, 1), ab, b)
    scale = np.max(np.abs(rhs)) + 1e-300
    if np.max(np.abs(X)) > norm_guard * scale:
        raise WronskianError("resolvent application blew up: near-mode suspect")
    return X


def near_real_eval(eval_fn, omega_real: float,
                   eps_seq=(1e-2, 5e-3, 2.5e-3)):
    """Boundary value on the real axis from below, R^-ish limit.

    Evaluates eval_fn at omega - i eps for the descending eps sequence and
    extrapolates linearly from the last two levels; the first level gauges
    the uncertainty.  Returns (value, uncertainty).
    """
    vals = [np.asarray(eval_fn(omega_real - 1j * e)) for e in eps_seq]
    e1, e2 = eps_seq[-2], eps_seq[-1]
    lim = vals[-1] + (vals[-1] - vals[-2]) * e2 / (e1 - e2)
    lim0 = vals[-2] + (vals[-2] - vals[0]) * e1 / (eps_seq[0] - e1)
    spread = float(np.max(np.abs(lim - lim0)))
    return lim, spread
