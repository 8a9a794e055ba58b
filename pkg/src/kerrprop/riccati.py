"""Invariant-disk certification for complex Riccati flows y' = V - y^2.

A moving disk with center m(u) and radius R(u) encloses the Riccati flow
whenever the radius grows fast enough against the center defect,
delta_R >= |delta_m|.  The radius equation is linear and is solved in the
closed quadrature form

    R(u) = e^{-2 int Re m} ( R0 + int e^{2 int Re m} delta_R ),

so certification reduces to bounding |delta_m| on every subinterval.
Defect bounds here are sampled-sup times a Lipschitz inflation, not formal
interval arithmetic: oracle-grade certification, with the containment
property itself under test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "Disk",
    "RiccatiProblem",
    "CertifiedEnclosure",
    "PoleError",
    "TurningPointError",
    "EnclosureBlowupError",
    "riccati_flow",
    "wkb_center",
    "disk_flow",
    "certify",
]


class PoleError(RuntimeError):
    """The Riccati solution blew up (zero of the underlying phi)."""

    def __init__(self, msg, bracket=None):
        super().__init__(msg)
        self.bracket = bracket


class TurningPointError(ValueError):
    """|V| dips below the WKB threshold inside the requested region."""


class EnclosureBlowupError(RuntimeError):
    """Disk radius exceeded the cap; the enclosure is uninformative."""

    def __init__(self, msg, enclosure=None):
        super().__init__(msg)
        self.enclosure = enclosure


@dataclass(frozen=True)
class Disk:
    m: complex
    R: float

    def __post_init__(self):
        if not (np.isfinite(self.R) and self.R >= 0.0):
            raise ValueError(f"disk radius must be finite and >= 0, got {self.R}")

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return abs(z - self.m) <= self.R + slack


@dataclass(frozen=True)
class RiccatiProblem:
    """Potential, interval, initial value and the initial disk around it."""

    V: callable
    u0: float
    u1: float
    y0: complex
    initial_disk: Disk

    def __post_init__(self):
        if not self.u1 > self.u0:
            raise ValueError("need u1 > u0")
        if not self.initial_disk.contains(self.y0, slack=1e-14):
            raise ValueError(
                f"y0={self.y0} outside the initial disk "
                f"(center {self.initial_disk.m}, radius {self.initial_disk.R})"
            )


def riccati_flow(problem: RiccatiProblem, grid, rtol: float = 1e-11,
                 pole_threshold: float = 1e8):
    """High-accuracy reference solution of y' = V - y^2 on the grid.

    This is the oracle a certified enclosure must contain.  A pole of y is
    detected by magnitude growth and reported with a bracketing interval.
    """
    grid = np.asarray(grid, dtype=float)
    V = problem.V

    def rhs(u, y):
        return [V(u) - y[0] * y[0]]

    def blowup(u, y):
        return abs(y[0]) - pole_threshold

    blowup.terminal = True
    sol = solve_ivp(rhs, (problem.u0, problem.u1),
                    np.array([problem.y0], dtype=complex),
                    method="DOP853", t_eval=grid, rtol=rtol, atol=1e-13,
                    events=blowup, dense_output=False)
    if sol.t_events[0].size:
        ue = float(sol.t_events[0][0])
        prev = grid[grid < ue]
        lo = float(prev[-1]) if prev.size else problem.u0
        raise PoleError(
            f"Riccati solution pole near u={ue:.6g}", bracket=(lo, ue)
        )
    if not sol.success:
        raise RuntimeError(f"Riccati integration failed: {sol.message}")
    return sol.y[0]


def _continuous_sqrt(V_vals: np.ndarray) -> np.ndarray:
    """Branch-tracked sqrt along a sampled path avoiding zero."""
    sq = np.sqrt(np.asarray(V_vals, dtype=complex))
    out = np.empty_like(sq)
    out[0] = sq[0]
    for i in range(1, len(sq)):
        out[i] = sq[i] if abs(sq[i] - out[i - 1]) <= abs(sq[i] + out[i - 1]) else -sq[i]
    return out


def wkb_center(V, grid, y0: complex | None = None,
               turning_threshold: float = 0.1):
    """First-order WKB center path m = -sqrt(V) - V'/(4V) on the grid.

    The branch is continuous along the grid and chosen at the first node to
    match the sign of Re y0 when given and nonzero.  Raises
    TurningPointError when |V| dips below turning_threshold * max|V|;
    the caller must split the region in that case.
    """
    grid = np.asarray(grid, dtype=float)
    V_vals = np.asarray(V(grid) if callable(V) else V, dtype=complex)
    mag = np.abs(V_vals)
    if np.min(mag) < turning_threshold * np.max(mag):
        bad = grid[int(np.argmin(mag))]
        raise TurningPointError(
            f"turning point inside grid near u={bad:.6g}: "
            f"|V| min {np.min(mag):.3e} below {turning_threshold} * max"
        )
    sq = _continuous_sqrt(V_vals)
    # pick the branch whose center start agrees in sign with Re y0
    if y0 is not None and y0.real != 0.0 and (-sq[0]).real * y0.real < 0.0:
        sq = -sq
    dV = np.gradient(V_vals, grid)
    return -sq - dV / (4.0 * V_vals)


def _interval_sup(a: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Sampled sup of a >= 0 per subinterval, Lipschitz-inflated."""
    h = np.diff(grid)
    slope = np.abs(np.diff(a)) / np.where(h > 0, h, 1.0)
    return np.maximum(a[:-1], a[1:]) + 0.5 * h * slope


def disk_flow(center_path, V, grid, R0: float = 0.0, margin: float = 0.05,
              max_iter: int = 40):
    """Defects and radius along a prescribed center path.

    delta_m = m' - (V - m^2 - R^2) with m' finite-differenced on the grid.
    The radius feed delta_R is piecewise constant per subinterval,
    (1 + margin) times the inflated sampled sup of |delta_m| there, so the
    growth criterion covers whole subintervals rather than nodes only.  R
    comes from the closed quadrature form of the linear radius equation;
    delta_m depends on R^2, so the pair is converged by fixed-point
    iteration (R enters weakly).

    Returns (delta_m, delta_R, R) on the grid; delta_R[i] is the value used
    on [u_i, u_{i+1}] with the last entry repeated.
    """
    grid = np.asarray(grid, dtype=float)
    m = np.asarray(center_path(grid) if callable(center_path) else center_path,
                   dtype=complex)
    V_vals = np.asarray(V(grid) if callable(V) else V, dtype=complex)
    dm = np.gradient(m, grid)

    # integrating factor E = exp(-2 int Re m), shifted to stay representable
    I = np.concatenate([[0.0], np.cumsum(
        0.5 * np.diff(grid) * (m.real[:-1] + m.real[1:]))])
    I -= I.min()
    E = np.exp(-2.0 * I)

    R = np.full(len(grid), R0, dtype=float)
    delta_m = dm - (V_vals - m * m - R * R)
    dR_iv = (1.0 + margin) * _interval_sup(np.abs(delta_m), grid)
    for _ in range(max_iter):
        g_iv = dR_iv * 0.5 * (1.0 / E[:-1] + 1.0 / E[1:]) * np.diff(grid)
        inner = np.concatenate([[0.0], np.cumsum(g_iv)])
        R_new = np.maximum(E * (R0 / E[0] + inner), 0.0)
        if not np.all(np.isfinite(R_new)):
            R = R_new
            break
        done = np.max(np.abs(R_new - R)) <= 1e-12 * max(1.0, np.max(np.abs(R_new)))
        R = R_new
        delta_m = dm - (V_vals - m * m - R * R)
        dR_iv = (1.0 + margin) * _interval_sup(np.abs(delta_m), grid)
        if done:
            break
    delta_R = np.concatenate([dR_iv, dR_iv[-1:]])
    return delta_m, delta_R, R


@dataclass
class CertifiedEnclosure:
    nodes: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    delta_m: np.ndarray
    delta_R: np.ndarray
    certified: bool
    failure_point: float | None = None

    def disks(self):
        return [Disk(m, R) for m, R in zip(self.centers, self.radii)]

    def contains(self, y_samples, slack_rel: float = 1e-9) -> bool:
        y = np.asarray(y_samples)
        slack = slack_rel * np.maximum(1.0, np.abs(self.centers))
        return bool(np.all(np.abs(y - self.centers) <= self.radii + slack))


def _default_grid(V, u0, u1, nodes_per_phase: int = 2000, n_min: int = 256):
    import math

    probe = np.linspace(u0, u1, 512)
    vv = np.asarray(V(probe) if callable(V) else V, dtype=complex)
    phase = np.trapezoid(np.sqrt(np.abs(vv)), probe) / (2.0 * np.pi)
    n = int(max(n_min, math.ceil(phase * nodes_per_phase)))
    return np.linspace(u0, u1, n)


def certify(problem: RiccatiProblem, center_path, grid=None,
            margin: float = 0.05, radius_cap: float = 1e3,
            refine: bool = True) -> CertifiedEnclosure:
    """Certified disk enclosure of the Riccati flow along a center path.

    On each subinterval the radius growth delta_R = (1+margin)|delta_m| is
    checked against a rigorous-grade bound on sup |delta_m| (sampled sup
    times a Lipschitz inflation).  Raises EnclosureBlowupError when the
    radius passes radius_cap.  The true flow from riccati_flow must lie in
    every disk whenever certified is True; that containment is the module's
    defining guarantee and is exercised by the test suite, not assumed.
    """
    if grid is None:
        grid = _default_grid(problem.V, problem.u0, problem.u1)
        if refine:
            prev = None
            for _ in range(4):
                dm_, dR_, R_ = disk_flow(center_path, problem.V, grid,
                                         problem.initial_disk.R, margin)
                if prev is not None and abs(R_[-1] - prev) <= 0.01 * max(prev, 1e-300):
                    break
                prev = R_[-1]
                grid = np.linspace(grid[0], grid[-1], 2 * len(grid) - 1)
    grid = np.asarray(grid, dtype=float)

    m = np.asarray(center_path(grid) if callable(center_path) else center_path,
                   dtype=complex)
    delta_m, delta_R, R = disk_flow(m, problem.V, grid,
                                    problem.initial_disk.R, margin)

    if np.max(R) > radius_cap or not np.all(np.isfinite(R)):
        idx = int(np.argmax(~(R <= radius_cap)))
        enc = CertifiedEnclosure(grid, m, R, delta_m, delta_R, False,
                                 failure_point=float(grid[idx]))
        raise EnclosureBlowupError(
            f"disk radius exceeded cap {radius_cap:g} at u={grid[idx]:.6g}",
            enclosure=enc,
        )

    # subinterval criterion: the delta_R actually fed into the radius
    # equation must dominate the inflated sup of |delta_m| there
    sup_est = _interval_sup(np.abs(delta_m), grid)
    ok = delta_R[:-1] >= sup_est * (1.0 - 1e-12)
    certified = bool(np.all(ok))
    failure = None if certified else float(grid[int(np.argmin(ok))])
    return CertifiedEnclosure(grid, m, R, delta_m, delta_R, certified, failure)
