"""Ground states Q of -(Laplacian)Q - lambda Q = Q^p on H^n, and the
mass-constrained minimization curve e(alpha).

The profile is found by shooting on the radial ODE

    Q'' + (n-1) coth(r) Q' + lambda Q + Q^p = 0,   Q'(0) = 0,

bisecting the initial amplitude between trajectories that cross zero
(amplitude too large) and trajectories that fail to decay to zero (too
small).  The sampled trajectory is then polished by Newton iteration on the
*discrete* stationary system L Q + lambda Q + Q^p = 0 built from the
divergence-form Laplacian, so the integral identities used as certificates
hold at solver tolerance rather than discretization tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .hypgeom import (
    RadialGrid,
    coth,
    laplacian_bands,
    quadrature,
    spectrum_bottom,
)
from . import functionals as fn


class NoGroundState(ValueError):
    """lambda at or above the spectral bottom: no positive H^1 solution."""


class ShootingFailure(RuntimeError):
    """No undershoot/overshoot bracket inside the amplitude search range."""


AMPLITUDE_RANGE = (1e-6, 1e6)
MATCH_LEVEL = 1e-9       # extend by the linear far field below this fraction of q0
TAIL_SPLICE_LEVEL = 1e-13  # below this fraction of q0 keep the analytic tail


def _admissible(n: int, p: float):
    if n == 3 and not (1.0 < p < 5.0):
        raise ValueError(f"n=3 requires 1 < p < 5, got p={p}")
    if n == 2 and not p > 1.0:
        raise ValueError(f"n=2 requires p > 1, got p={p}")
    if n not in (2, 3):
        raise ValueError(f"unsupported dimension n={n}")


def far_field_rate(n: int, lam: float) -> float:
    """Decay exponent of the ground state: rho + sqrt(rho^2 - lambda)."""
    rho = (n - 1) / 2.0
    return rho + math.sqrt(rho * rho - lam)


# ---------------------------------------------------------------------------
# shooting integrator
# ---------------------------------------------------------------------------

def _series_start(n: int, p: float, lam: float, a: float, r0: float):
    # regular expansion at the origin: Q = a + b r^2 + c r^4 + O(r^6)
    b = -(lam * a + a**p) / (2.0 * n)
    c = -b * (2.0 * (n - 1) / 3.0 + lam + p * a ** (p - 1.0)) / (4.0 * (n + 2.0))
    q = a + b * r0 * r0 + c * r0**4
    dq = 2.0 * b * r0 + 4.0 * c * r0**3
    return q, dq


def _integrate(n, p, lam, a, grid: RadialGrid, coth_half, record=False):
    """March the (Q, Q') system across the cell centers with fixed-step RK4.

    Returns (event, stop_index, profile, slope) where event is one of
    'crossed' (Q hit zero), 'turned' (Q' > 0 with Q > 0), or 'none'
    (reached r_max still positive and decreasing).  profile/slope are only
    filled when record=True.
    """
    h = grid.dr
    n_pts = grid.num_points
    cm1 = n - 1
    q, dq = _series_start(n, p, lam, a, 0.5 * h)
    prof = np.empty(n_pts) if record else None
    slope = np.empty(n_pts) if record else None
    if record:
        prof[0] = q
        slope[0] = dq

    def rhs(qv, pv, cidx):
        if qv >= 0.0:
            nl = qv**p
        else:
            nl = -((-qv) ** p)
        return pv, -(cm1 * coth_half[cidx] * pv + lam * qv + nl)

    half = 0.5 * h
    sixth = h / 6.0
    for j in range(n_pts - 1):
        base = 2 * j + 1
        try:
            k1q, k1p = rhs(q, dq, base)
            k2q, k2p = rhs(q + half * k1q, dq + half * k1p, base + 1)
            k3q, k3p = rhs(q + half * k2q, dq + half * k2p, base + 1)
            k4q, k4p = rhs(q + h * k3q, dq + h * k3p, base + 2)
            q = q + sixth * (k1q + 2.0 * (k2q + k3q) + k4q)
            dq = dq + sixth * (k1p + 2.0 * (k2p + k3p) + k4p)
        except OverflowError:
            return ("turned" if q > 0 else "crossed"), j, prof, slope
        if record:
            prof[j + 1] = q
            slope[j + 1] = dq
        if q <= 0.0:
            return "crossed", j + 1, prof, slope
        if dq > 0.0 or q > 2.0 * max(a, 1.0):
            return "turned", j + 1, prof, slope
    return "none", n_pts - 1, prof, slope


def _coth_half_lattice(grid: RadialGrid):
    radii = 0.5 * grid.dr * np.arange(1, 2 * grid.num_points + 2)
    return coth(radii).tolist()


def shooting_classifier(n, p, lam, a, grid, coth_half=None) -> int:
    """-1 when the trajectory crosses zero (amplitude too large), +1 else."""
    if coth_half is None:
        coth_half = _coth_half_lattice(grid)
    event, _, _, _ = _integrate(n, p, lam, a, grid, coth_half)
    return -1 if event == "crossed" else +1


def amplitude_scan(n, p, lam, grid, amplitudes):
    """Classifier signs over an amplitude list (uniqueness diagnostics)."""
    coth_half = _coth_half_lattice(grid)
    return np.array(
        [shooting_classifier(n, p, lam, a, grid, coth_half) for a in amplitudes]
    )


# ---------------------------------------------------------------------------
# discrete polish and certification
# ---------------------------------------------------------------------------

def _odd_pow(values: np.ndarray, p: float) -> np.ndarray:
    return np.sign(values) * np.abs(values) ** p


def _apply_bands(lower, diag, upper, v):
    out = diag * v
    out[:-1] += upper[:-1] * v[1:]
    out[1:] += lower[1:] * v[:-1]
    return out


def _newton_polish(profile, n, p, lam, grid, tol=1e-12, max_iter=40):
    """Newton iteration on L q + lambda q + q^p = 0 with Dirichlet far end."""
    lower, diag, upper = laplacian_bands(grid)
    q = profile.copy()
    qmax = float(np.max(q))
    scale = abs(lam) * qmax + qmax**p + qmax
    ab = np.zeros((3, grid.num_points))
    for _ in range(max_iter):
        res = _apply_bands(lower, diag, upper, q) + lam * q + _odd_pow(q, p)
        if float(np.max(np.abs(res))) < tol * scale:
            break
        ab[0, 1:] = upper[:-1]
        ab[1, :] = diag + lam + p * np.abs(q) ** (p - 1.0)
        ab[2, :-1] = lower[1:]
        q = q + solve_banded((1, 1), ab, -res)
    return q


def _far_field_extension(profile, j_start, n, lam, grid: RadialGrid):
    """Continue the profile beyond node j_start by the linearized decay."""
    r = grid.nodes
    rs = r[j_start]
    anchor = profile[j_start]
    out = profile.copy()
    if n == 3:
        nu = math.sqrt(spectrum_bottom(3) - lam)
        tail = np.exp(-nu * (r - rs)) * (math.sinh(rs) / np.sinh(r))
    else:
        kappa = far_field_rate(n, lam)
        tail = np.exp(-kappa * (r - rs))
    out[j_start:] = anchor * tail[j_start:]
    return out


@dataclass
class GroundState:
    n: int
    p: float
    lam: float
    grid: RadialGrid
    profile: np.ndarray
    q0: float
    hlam_sq: float
    lp1: float
    elam: float
    dlam: float
    residuals: dict = field(default_factory=dict)

    def field_on_grid(self) -> fn.RadialField:
        return fn.RadialField(grid=self.grid, values=self.profile.astype(complex))


def solve_ground_state(
    n: int, p: float, lam: float, grid: RadialGrid, tol: float = 1e-13
) -> GroundState:
    """Shooting + discrete Newton certification of the ground state."""
    _admissible(n, p)
    if grid.n != n:
        raise fn.ParameterMismatch("grid dimension differs from requested n")
    bottom = spectrum_bottom(n)
    if lam >= bottom:
        raise NoGroundState(
            f"lambda={lam} at or above the spectral bottom {bottom}: "
            "no positive decaying solution exists"
        )

    coth_half = _coth_half_lattice(grid)
    # geometric ladder for the initial bracket: the origin series (and the
    # ODE itself) is only meaningful while the crossing radius is resolved,
    # so walk up from small amplitudes instead of classifying the raw
    # endpoints of the search range
    a_min, a_max = AMPLITUDE_RANGE
    if shooting_classifier(n, p, lam, a_min, grid, coth_half) != +1:
        raise ShootingFailure(f"amplitude {a_min} already crosses zero")
    lo = a_min
    hi = None
    a = max(10.0 * a_min, 0.25)
    while a <= a_max:
        if shooting_classifier(n, p, lam, a, grid, coth_half) == -1:
            hi = a
            break
        lo = a
        a *= 4.0
    if hi is None:
        raise ShootingFailure(
            f"no zero-crossing amplitude found below {a_max}"
        )
    while hi - lo > tol * lo:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if shooting_classifier(n, p, lam, mid, grid, coth_half) == -1:
            hi = mid
        else:
            lo = mid
    q0 = 0.5 * (lo + hi)

    event, stop, prof, _ = _integrate(n, p, lam, q0, grid, coth_half, record=True)
    # matching index: where the trajectory is deep into the linear regime,
    # or just before the residual shooting error misbehaves
    candidates = np.nonzero(prof[: stop + 1] < MATCH_LEVEL * q0)[0]
    if candidates.size:
        j_match = int(candidates[0])
        profile = _far_field_extension(prof, j_match, n, lam, grid)
    elif event == "none":
        profile = prof.copy()
    else:
        profile = _far_field_extension(prof, max(stop - 1, 1), n, lam, grid)

    profile = _newton_polish(profile, n, p, lam, grid)
    # keep the strictly-decreasing analytic tail where the polished values
    # drop below roundoff significance
    deep = np.nonzero(profile < TAIL_SPLICE_LEVEL * q0)[0]
    if deep.size:
        profile = _far_field_extension(profile, int(deep[0]), n, lam, grid)

    u = fn.RadialField(grid=grid, values=profile)
    hlam_sq = fn.hlam_norm_sq(u, lam)
    lp1 = fn.lp1_functional(u, p)
    elam = fn.energy_lambda(u, lam, p)
    gval = fn.G_functional(u, p)
    ratio = (p - 1.0) / (2.0 * (p + 1.0))
    residuals = {
        "pohozaev": abs(hlam_sq - lp1) / hlam_sq,
        "energy_ratio": abs(elam - ratio * hlam_sq) / abs(elam),
        "g_value": abs(gval) / hlam_sq,
    }
    return GroundState(
        n=n,
        p=p,
        lam=lam,
        grid=grid,
        profile=profile,
        q0=q0,
        hlam_sq=hlam_sq,
        lp1=lp1,
        elam=elam,
        dlam=(lp1 ** (1.0 / (p + 1.0))) ** (1.0 - p),
        residuals=residuals,
    )


def verify_identities(gs: GroundState) -> dict:
    """Recompute the certificates through the functionals layer.

    Reports the Pohozaev gap, the energy-ratio gap, the virial value, and
    the far-field log-slope deviation from rho + sqrt(rho^2 - lambda).
    """
    u = gs.field_on_grid()
    hlam_sq = fn.hlam_norm_sq(u, gs.lam)
    lp1 = fn.lp1_functional(u, gs.p)
    elam = fn.energy_lambda(u, gs.lam, gs.p)
    gval = fn.G_functional(u, gs.p)
    ratio = (gs.p - 1.0) / (2.0 * (gs.p + 1.0))
    r = gs.grid.nodes
    lo = int(np.searchsorted(r, gs.grid.r_max / 2.0))
    hi = int(np.searchsorted(r, 0.75 * gs.grid.r_max))
    logq = np.log(gs.profile[lo:hi])
    slope = np.polyfit(r[lo:hi], logq, 1)[0]
    kappa = far_field_rate(gs.n, gs.lam)
    return {
        "pohozaev": abs(hlam_sq - lp1) / hlam_sq,
        "energy_ratio": abs(elam - ratio * hlam_sq) / abs(elam),
        "g_value": abs(gval) / hlam_sq,
        "logslope_dev": abs(slope + kappa) / kappa,
    }


# ---------------------------------------------------------------------------
# mass-constrained minimization
# ---------------------------------------------------------------------------

@dataclass
class FlowParams:
    tau: float = 0.25                # initial flow step
    tau_max: float = 2.0
    tol: float = 1e-8                # energy decrease per unit flow time,
    max_steps: int = 50000           # relative to 1 + |e|; Newton finishes
    backtrack: float = 0.5
    grow: float = 1.2
    zero_level: float = -1e-8        # limits above this report e(alpha) = 0


@dataclass
class MassCurvePoint:
    alpha: float
    e_alpha: float
    minimizer: Optional[fn.RadialField]
    lagrange_lambda: Optional[float]
    el_residual: Optional[float] = None
    iterations: int = 0


def _flow_energy(q, grid, p, lower, diag, upper, rho2):
    grad = -np.dot(_apply_bands(lower, diag, upper, q) * grid.vol_weights, q)
    m = np.dot(q * q, grid.vol_weights)
    nl = np.dot(np.abs(q) ** (p + 1.0), grid.vol_weights)
    return 0.5 * (grad - rho2 * m) - nl / (p + 1.0)


def _newton_polish_constrained(q, lam, alpha, grid, p, lower, diag, upper):
    """Newton on (-L q - lam q - |q|^{p-1}q, mass - alpha^2) via a bordered
    tridiagonal solve. Returns (q, lam) or None when the step is rejected."""
    w = grid.vol_weights
    nq = len(q)
    ab = np.zeros((3, nq))
    for it in range(30):
        f1 = -_apply_bands(lower, diag, upper, q) - lam * q - _odd_pow(q, p)
        f2 = 0.5 * (float(np.dot(q * q, w)) - alpha**2)
        scale = np.max(np.abs(q)) ** p + abs(lam) * np.max(np.abs(q)) + 1e-300
        if np.max(np.abs(f1)) < 1e-13 * scale and abs(f2) < 1e-13 * alpha**2:
            return q, lam
        ab[0, 1:] = -upper[:-1]
        ab[1, :] = -diag - lam - p * np.abs(q) ** (p - 1.0)
        ab[2, :-1] = -lower[1:]
        try:
            a = solve_banded((1, 1), ab, -f1)
            b = solve_banded((1, 1), ab, q)
        except Exception:
            return None
        wq = w * q
        denom = float(np.dot(wq, b))
        if denom == 0.0 or not np.isfinite(denom):
            return None
        dlam = (-f2 - float(np.dot(wq, a))) / denom
        dq = a + dlam * b
        if it == 0 and np.max(np.abs(dq)) > 0.5 * np.max(np.abs(q)):
            return None  # flow ended too far out for a safe polish
        q = q + dq
        lam = lam + dlam
        if not np.all(np.isfinite(q)):
            return None
    return q, lam


def mass_constrained_minimize(
    alpha: float,
    n: int,
    p: float,
    grid: RadialGrid,
    flow_params: FlowParams = None,
    start: Optional[np.ndarray] = None,
) -> MassCurvePoint:
    """Projected gradient flow for inf{ J(u) : |u|_{L^2} = alpha }.

    J(u) = 1/2 |u|_H^2 - 1/(p+1) |u|_{p+1}^{p+1}. The linear part of the
    flow is treated implicitly (a tridiagonal solve per step) so the step
    size is not pinned to dr^2; the nonlinearity stays explicit, with
    backtracking on energy increase and mass renormalization after every
    step. Deterministic Gaussian start unless a warm start is given (for
    continuation sweeps in alpha); fixed points are the Euler-Lagrange
    states of the constrained problem, sharpened by a bordered Newton
    solve when the flow lands in the negative-energy branch.
    """
    _admissible(n, p)
    if p >= 1.0 + 4.0 / n:
        raise ValueError(
            f"mass-constrained minimization requires p < 1 + 4/n = {1 + 4 / n}, got {p}"
        )
    if grid.n != n:
        raise fn.ParameterMismatch("grid dimension differs from requested n")
    fp = flow_params or FlowParams()
    rho2 = spectrum_bottom(n)
    lower, diag, upper = laplacian_bands(grid)

    if start is not None:
        q = np.asarray(start, dtype=float).copy()
        if q.shape != grid.nodes.shape:
            raise fn.ParameterMismatch("warm start does not match the grid")
    else:
        q = np.exp(-grid.nodes**2)
    q *= alpha / math.sqrt(np.dot(q * q, grid.vol_weights))
    tau = fp.tau
    energy_now = _flow_energy(q, grid, p, lower, diag, upper, rho2)
    steps = 0
    ab = np.zeros((3, grid.num_points))
    while steps < fp.max_steps:
        steps += 1
        # (1 + tau A) trial = q + tau q^p with A = -(L + rho^2)
        ab[0, 1:] = -tau * upper[:-1]
        ab[1, :] = 1.0 - tau * (diag + rho2)
        ab[2, :-1] = -tau * lower[1:]
        trial = solve_banded((1, 1), ab, q + tau * _odd_pow(q, p))
        trial *= alpha / math.sqrt(np.dot(trial * trial, grid.vol_weights))
        energy_trial = _flow_energy(trial, grid, p, lower, diag, upper, rho2)
        if energy_trial > energy_now:
            tau *= fp.backtrack
            if tau < 1e-12:
                break
            continue
        drop_rate = (energy_now - energy_trial) / tau
        q, energy_now = trial, energy_trial
        tau = min(tau * fp.grow, fp.tau_max)
        # the float noise floor of the energy difference scales with |e|
        if drop_rate < fp.tol * (1.0 + abs(energy_now)):
            break

    if energy_now >= fp.zero_level:
        return MassCurvePoint(
            alpha=alpha, e_alpha=0.0, minimizer=None, lagrange_lambda=None,
            iterations=steps,
        )
    q = np.abs(q)
    lap_q = _apply_bands(lower, diag, upper, q)
    m = float(np.dot(q * q, grid.vol_weights))
    lam_fit = float(np.dot((-lap_q - q**p) * grid.vol_weights, q)) / m
    polished = _newton_polish_constrained(
        q, lam_fit, alpha, grid, p, lower, diag, upper
    )
    if polished is not None:
        q, lam_fit = polished
        q = np.abs(q)
        energy_now = _flow_energy(q, grid, p, lower, diag, upper, rho2)
        lap_q = _apply_bands(lower, diag, upper, q)
        m = float(np.dot(q * q, grid.vol_weights))
        lam_fit = float(np.dot((-lap_q - q**p) * grid.vol_weights, q)) / m
    el = -lap_q - lam_fit * q - q**p
    # discrete H^{-1}-type norm: <el, (1 - L)^{-1} el> against the H^1 scale
    ab = np.zeros((3, grid.num_points))
    ab[0, 1:] = -upper[:-1]
    ab[1, :] = 1.0 - diag
    ab[2, :-1] = -lower[1:]
    w = solve_banded((1, 1), ab, el)
    h1 = float(np.dot(q * q, grid.vol_weights) - np.dot(lap_q * grid.vol_weights, q))
    residual = math.sqrt(abs(float(np.dot(el * grid.vol_weights, w)))) / math.sqrt(h1)
    return MassCurvePoint(
        alpha=alpha,
        e_alpha=float(energy_now),
        minimizer=fn.RadialField(grid=grid, values=q.astype(complex)),
        lagrange_lambda=lam_fit,
        el_residual=residual,
        iterations=steps,
    )
