"""Scalar functionals of radial waves on H^n.

Mass, energy, the spectrally shifted energy E_lambda and norm H_lambda, the
distance-to-ground-state gap delta_lambda, the virial functional G, its
localized variant with weight h_R = R^2 phi(r/R), the auxiliary functional of
the blow-up argument, sign/trapping detectors, and standalone positivity
scans for the two closed-form radial inequalities the virial analysis rests
on.

Conventions. For u radial on H^n:

    M(u)      = int |u|^2 dmu
    E(u)      = 1/2 int |grad u|^2 - 1/(p+1) int |u|^{p+1}
    |u|^2_Hl  = int |grad u|^2 - lambda int |u|^2        (lambda < (n-1)^2/4)
    |u|^2_H   = the lambda = (n-1)^2/4 case
    E_l(u)    = 1/2 |u|^2_Hl - 1/(p+1) int |u|^{p+1}
    G(u)      = 8 |u|^2_H + 2(n-1)(n-3) int |u|^2 W1 dmu
                - 4(p-1)/(p+1) int |u|^{p+1} W2 dmu

with W1 = (r cosh r - sinh r)/sinh^3 r and W2 = 1 + (n-1) r coth r.  G is
the right-hand side of d^2/dt^2 int |u|^2 r^2 dmu along the flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .hypgeom import (
    RadialGrid,
    build_weights,
    cached_weights,
    coth,
    dirichlet_energy,
    quadrature,
    spectrum_bottom,
    w1_weight,
)


class ParameterMismatch(ValueError):
    """Field and ground state (or grid) belong to different parameter sets."""


@dataclass(eq=False)
class RadialField:
    """A radial wavefunction sampled at the grid nodes (complex allowed)."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.nodes.shape:
            raise ValueError("values length does not match grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @classmethod
    def from_function(cls, grid: RadialGrid, fn) -> "RadialField":
        return cls(grid=grid, values=np.asarray(fn(grid.nodes), dtype=complex))

    def copy(self) -> "RadialField":
        return RadialField(grid=self.grid, values=self.values.copy())

    def boundary_deviation(self) -> float:
        """|u| at the last node relative to max |u| (Dirichlet diagnostic)."""
        amax = float(np.max(np.abs(self.values)))
        if amax == 0.0:
            return 0.0
        return float(np.abs(self.values[-1])) / amax


def _check_same_grid(u: RadialField, grid: RadialGrid):
    if not u.grid.same_as(grid):
        raise ParameterMismatch("field grid does not match")


# ---------------------------------------------------------------------------
# basic functionals
# ---------------------------------------------------------------------------

def mass(u: RadialField) -> float:
    return float(quadrature(np.abs(u.values) ** 2, u.grid))


def lp1_functional(u: RadialField, p: float) -> float:
    """int |u|^{p+1} dmu."""
    return float(quadrature(np.abs(u.values) ** (p + 1.0), u.grid))


def gradient_sq(u: RadialField) -> float:
    """int |grad u|^2 dmu (divergence-form discrete Dirichlet energy)."""
    return float(dirichlet_energy(u.values, u.grid))


def energy(u: RadialField, p: float) -> float:
    return 0.5 * gradient_sq(u) - lp1_functional(u, p) / (p + 1.0)


def hlam_norm_sq(u: RadialField, lam: float) -> float:
    """Squared H_lambda norm, |grad u|^2 - lambda |u|^2 integrals."""
    n = u.grid.n
    if lam > spectrum_bottom(n):
        raise ValueError(
            f"lambda={lam} at or above the spectral bottom {spectrum_bottom(n)}; "
            "H_lambda is not a norm there"
        )
    return gradient_sq(u) - lam * mass(u)


def h_norm_sq(u: RadialField) -> float:
    """Squared H norm: the shift sits exactly at the spectral bottom."""
    return gradient_sq(u) - spectrum_bottom(u.grid.n) * mass(u)


def h1_norm_sq(u: RadialField) -> float:
    """Plain Sobolev H^1 norm squared (gradient + mass)."""
    return gradient_sq(u) + mass(u)


def energy_lambda(u: RadialField, lam: float, p: float) -> float:
    n = u.grid.n
    if lam >= spectrum_bottom(n):
        raise ValueError(
            f"lambda={lam} at or above the spectral bottom {spectrum_bottom(n)}"
        )
    return 0.5 * hlam_norm_sq(u, lam) - lp1_functional(u, p) / (p + 1.0)


def delta_lambda(u: RadialField, gs) -> float:
    """Squared-norm gap |u|^2_{H_lambda} - |Q|^2_{H_lambda}."""
    _check_same_grid(u, gs.grid)
    return hlam_norm_sq(u, gs.lam) - gs.hlam_sq


# ---------------------------------------------------------------------------
# virial functionals
# ---------------------------------------------------------------------------

def G_functional(u: RadialField, p: float, lam_ignored: float = None) -> float:
    """Virial functional; the shift inside is always the spectral bottom.

    lam_ignored is accepted for call-site symmetry with the other
    functionals and has no effect (the sign analysis is anchored at the
    spectral-bottom norm regardless of the equation's lambda).
    """
    grid = u.grid
    n = grid.n
    usq = np.abs(u.values) ** 2
    up1 = np.abs(u.values) ** (p + 1.0)
    w = cached_weights(grid)
    out = 8.0 * h_norm_sq(u)
    if n != 3:
        out += 2.0 * (n - 1) * (n - 3) * float(quadrature(usq * w.w1, grid))
    out -= (4.0 * (p - 1.0) / (p + 1.0)) * float(quadrature(up1 * w.w2, grid))
    return out


def second_moment(u: RadialField) -> float:
    """int |u|^2 r^2 dmu, the virial weight before differentiation."""
    return float(quadrature(np.abs(u.values) ** 2 * u.grid.nodes**2, u.grid))


def H_aux(u: RadialField, gs) -> float:
    """G(u) - 16 E_lambda(u) + 16 E_lambda(Q), the blow-up comparison term."""
    _check_same_grid(u, gs.grid)
    return (
        G_functional(u, gs.p)
        - 16.0 * energy_lambda(u, gs.lam, gs.p)
        + 16.0 * gs.elam
    )


# ---------------------------------------------------------------------------
# localized virial
# ---------------------------------------------------------------------------

# Bridge polynomial on [1, 2] joining s^2 to the constant 41/18 with four
# continuous derivatives at both ends and second derivative capped at 2
# (attained on [0, 1]). Exact rational coefficients, ascending powers.
_BRIDGE_COEFFS = (
    169.0 / 18.0,
    0.0,
    -208.0,
    2240.0 / 3.0,
    -1260.0,
    1232.0,
    -735.0,
    264.0,
    -105.0 / 2.0,
    40.0 / 9.0,
)
_PLATEAU = 41.0 / 18.0


class CutoffProfile:
    """Radial virial cutoff phi: s^2 below 1, constant above 2, C^4 bridge.

    The localized weight is h_R(r) = R^2 phi(r/R). Required shape: phi = s^2
    for s <= 1, phi constant for s >= 2, phi'' <= 2 everywhere. Violations
    are rejected at validation time.
    """

    def __init__(self, derivs=None):
        if derivs is None:
            base = np.polynomial.Polynomial(_BRIDGE_COEFFS)
            self._bridge = [base.deriv(k) if k else base for k in range(5)]
        self._custom = derivs
        self.validate()

    def _eval(self, s, order: int):
        s = np.asarray(s, dtype=float)
        if self._custom is not None:
            return np.asarray(self._custom[order](s), dtype=float)
        inner = np.where(s < 1.0, s, 0.0)
        if order == 0:
            vals_in = inner * inner
            vals_out = np.full_like(s, _PLATEAU)
        elif order == 1:
            vals_in = 2.0 * inner
            vals_out = np.zeros_like(s)
        elif order == 2:
            vals_in = np.where(s < 1.0, 2.0, 0.0)
            vals_out = np.zeros_like(s)
        else:
            vals_in = np.zeros_like(s)
            vals_out = np.zeros_like(s)
        mid = (s >= 1.0) & (s < 2.0)
        out = np.where(s < 1.0, vals_in, vals_out)
        if np.any(mid):
            out = np.where(mid, self._bridge[order](np.where(mid, s, 1.5)), out)
        return out

    def phi(self, s):
        return self._eval(s, 0)

    def d1(self, s):
        return self._eval(s, 1)

    def d2(self, s):
        return self._eval(s, 2)

    def d3(self, s):
        return self._eval(s, 3)

    def d4(self, s):
        return self._eval(s, 4)

    def validate(self):
        s_lo = np.linspace(0.0, 1.0, 401)
        if np.max(np.abs(self.phi(s_lo) - s_lo**2)) > 1e-9:
            raise ValueError("cutoff must equal s^2 on [0, 1]")
        s_hi = np.linspace(2.0, 3.0, 101)
        if np.max(np.abs(self.d1(s_hi))) > 1e-9:
            raise ValueError("cutoff must be constant beyond s = 2")
        s_all = np.linspace(0.0, 2.5, 2001)
        if np.max(self.d2(s_all)) > 2.0 + 1e-9:
            raise ValueError("cutoff second derivative exceeds 2")
        # seam continuity through fourth derivative: exact one-sided values
        inner_at_1 = (1.0, 2.0, 2.0, 0.0, 0.0)
        outer_at_2 = (_PLATEAU, 0.0, 0.0, 0.0, 0.0)
        for order in range(5):
            if self._custom is not None:
                left_1 = float(self._eval(1.0 - 1e-9, order))
                mid_1 = float(self._eval(1.0 + 1e-9, order))
                mid_2 = float(self._eval(2.0 - 1e-9, order))
                right_2 = float(self._eval(2.0 + 1e-9, order))
            else:
                left_1, right_2 = inner_at_1[order], outer_at_2[order]
                mid_1 = float(self._bridge[order](1.0))
                mid_2 = float(self._bridge[order](2.0))
            for seam, a, b in ((1.0, left_1, mid_1), (2.0, mid_2, right_2)):
                if abs(a - b) > 1e-4:
                    raise ValueError(
                        f"cutoff derivative {order} jumps at s = {seam}"
                    )


_DEFAULT_CUTOFF: Optional[CutoffProfile] = None


def default_cutoff() -> CutoffProfile:
    global _DEFAULT_CUTOFF
    if _DEFAULT_CUTOFF is None:
        _DEFAULT_CUTOFF = CutoffProfile()
    return _DEFAULT_CUTOFF


def localized_virial_rhs(
    u: RadialField, R: float, phi: CutoffProfile = None, *, p: float
) -> float:
    """Right-hand side of the virial identity with weight h_R = R^2 phi(r/R).

    Evaluates int [ 4 |d_r u|^2 h_R'' - |u|^2 Lap^2 h_R
                    - 2 (p-1)/(p+1) |u|^{p+1} Lap h_R ] dmu.

    Inside r <= R the weight is exactly r^2 and the closed-form Laplacian
    weights are used (series-protected near 0); on the bridge R < r < 2R the
    chain-rule expressions in phi derivatives and coth are evaluated
    directly (safe: r >= R >= 1 there); beyond 2R every term vanishes.
    """
    if R < 1.0:
        raise ValueError("cutoff radius R must be >= 1")
    if phi is None:
        phi = default_cutoff()
    else:
        phi.validate()
    grid = u.grid
    n = grid.n
    r = grid.nodes
    s = r / R

    w = cached_weights(grid)
    inside = s <= 1.0
    bridge = (s > 1.0) & (s < 2.0)

    # node-based weights for the zeroth-order terms
    lap_h = np.where(inside, w.lap_r2, 0.0)
    bilap_h = np.where(inside, w.bilap_r2, 0.0)
    if np.any(bridge):
        rb = np.where(bridge, r, 2.0 * R)
        sb = rb / R
        cth = coth(rb)
        csch2 = cth * cth - 1.0
        p1 = phi.d1(sb)
        p2 = phi.d2(sb)
        p3 = phi.d3(sb)
        p4 = phi.d4(sb)
        lap_b = p2 + (n - 1) * cth * R * p1
        bilap_b = (
            p4 / R**2
            + 2.0 * (n - 1) * cth * p3 / R
            + ((n - 1) ** 2 * cth**2 - 2.0 * (n - 1) * csch2) * p2
            + (n - 1) * (3.0 - n) * cth * csch2 * R * p1
        )
        lap_h = np.where(bridge, lap_b, lap_h)
        bilap_h = np.where(bridge, bilap_b, bilap_h)

    usq = np.abs(u.values) ** 2
    up1 = np.abs(u.values) ** (p + 1.0)
    zero_term = float(quadrature(usq * bilap_h, grid))
    nl_term = float(quadrature(up1 * lap_h, grid))

    # gradient term on cell edges, matched to the discrete Dirichlet energy
    h = grid.dr
    edges_r = grid.edges[1:-1]
    d2_edges = phi.d2(edges_r / R)
    diffs = np.abs(np.diff(u.values)) ** 2
    grad_term = grid.sphere_area * (
        np.dot(grid.edge_density[1:-1] * d2_edges, diffs) / h
        + float(phi.d2(grid.r_max / R))
        * 2.0
        * grid.edge_density[-1]
        * abs(u.values[-1]) ** 2
        / h
    )

    return 4.0 * grad_term - zero_term - 2.0 * ((p - 1.0) / (p + 1.0)) * nl_term


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

DIAGNOSTICS_COLUMNS = (
    "t",
    "mass",
    "energy",
    "energy_lambda",
    "hlam_sq",
    "h_sq",
    "lp1",
    "delta_lambda",
    "G_value",
    "second_moment",
    "loc_virial",
    "h1_sq",
)


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    energy: float
    energy_lambda: float
    hlam_sq: float
    h_sq: float
    lp1: float
    delta_lambda: float
    G_value: float
    second_moment: float
    loc_virial: float
    h1_sq: float

    def row(self):
        return [getattr(self, c) for c in DIAGNOSTICS_COLUMNS]


def compute_diagnostics(
    t: float,
    u: RadialField,
    p: float,
    lam: float,
    gs=None,
    r_loc: float = 8.0,
    phi: CutoffProfile = None,
) -> DiagnosticsRecord:
    """Assemble the full per-time diagnostics row for a run."""
    m = mass(u)
    grad = gradient_sq(u)
    lp1 = lp1_functional(u, p)
    rho2 = spectrum_bottom(u.grid.n)
    hl = grad - lam * m
    e = 0.5 * grad - lp1 / (p + 1.0)
    dl = hl - gs.hlam_sq if gs is not None else float("nan")
    return DiagnosticsRecord(
        t=t,
        mass=m,
        energy=e,
        energy_lambda=e - 0.5 * lam * m,
        hlam_sq=hl,
        h_sq=grad - rho2 * m,
        lp1=lp1,
        delta_lambda=dl,
        G_value=G_functional(u, p),
        second_moment=second_moment(u),
        loc_virial=localized_virial_rhs(u, r_loc, phi, p=p),
        h1_sq=grad + m,
    )


# ---------------------------------------------------------------------------
# trapping detectors
# ---------------------------------------------------------------------------

@dataclass
class TrappingVerdict:
    kind: str  # constant_negative | constant_positive | violation
    t: Optional[float] = None

    def __str__(self):
        if self.kind == "violation":
            return f"violation(t={self.t})"
        return self.kind


def trapping_sign_check(series: Sequence[DiagnosticsRecord]) -> TrappingVerdict:
    """Did delta_lambda keep one strict sign along the run?

    Records with |delta_lambda| below a noise band (1e-8 of the initial
    hlam_sq scale) are treated as sign-neutral so that runs started exactly
    on the ground-state shell do not trip the detector on roundoff.
    """
    if not series:
        raise ValueError("empty diagnostics series")
    scale = max(abs(series[0].hlam_sq), 1.0)
    band = 1e-8 * scale
    sign = 0
    for rec in series:
        d = rec.delta_lambda
        if abs(d) <= band:
            continue
        s = 1 if d > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return TrappingVerdict(kind="violation", t=rec.t)
    if sign > 0:
        return TrappingVerdict(kind="constant_positive")
    return TrappingVerdict(kind="constant_negative")


def variational_bound_check(u: RadialField, gs) -> Optional[float]:
    """Residual of the trapped-regime norm comparison; None if not applicable.

    When E_l(u) <= E_l(Q) and |u|^2_{H_lambda} <= |Q|^2_{H_lambda}, the
    quantity (E_l(u)/E_l(Q)) |Q|^2_{H_lambda} - |u|^2_{H_lambda} must be
    nonnegative; its value is returned. Outside those hypotheses returns
    None.
    """
    _check_same_grid(u, gs.grid)
    if gs.elam <= 0:
        raise ValueError("ground state with nonpositive E_lambda is corrupted")
    el_u = energy_lambda(u, gs.lam, gs.p)
    hl_u = hlam_norm_sq(u, gs.lam)
    if el_u > gs.elam or hl_u > gs.hlam_sq:
        return None
    return (el_u / gs.elam) * gs.hlam_sq - hl_u


# ---------------------------------------------------------------------------
# closed-form inequality scans
# ---------------------------------------------------------------------------

def _quartic_series(n: int, r: np.ndarray) -> np.ndarray:
    # F(r) = 2(6n-5)/45 r^6 + 2(8n-7)/315 r^8 + 2(10n-9)/4725 r^10
    #        + 8(12n-11)/467775 r^12 + O(r^14); truncation negligible
    # against the 1e-12 acceptance floor for r < 1/4.
    r2 = r * r
    c6 = 2.0 * (6 * n - 5) / 45.0
    c8 = 2.0 * (8 * n - 7) / 315.0
    c10 = 2.0 * (10 * n - 9) / 4725.0
    c12 = 8.0 * (12 * n - 11) / 467775.0
    return r2**3 * (c6 + r2 * (c8 + r2 * (c10 + r2 * c12)))


def quartic_values(n: int, r_grid) -> np.ndarray:
    """F(r) = (2n-2) r^2 cosh^2 r + n r^2 - (3n-4) r cosh r sinh r - 2 sinh^2 r.

    A difference of exponentially large terms; evaluated in extended
    precision with a series fallback below r = 1/4 where cancellation is
    deepest.
    """
    r = np.asarray(r_grid, dtype=np.longdouble)
    ch = np.cosh(r)
    sh = np.sinh(r)
    direct = (
        (2 * n - 2) * r * r * ch * ch
        + n * r * r
        - (3 * n - 4) * r * ch * sh
        - 2 * sh * sh
    )
    return np.where(
        r < 0.25, _quartic_series(n, np.asarray(r_grid, dtype=float)), direct
    ).astype(float)


def quartic_inequality_scan(n: int, r_grid) -> tuple:
    """Minimum over the grid of the quartic virial-weight comparison.

    Returns (min value, argmin radius) of quartic_values.
    """
    values = quartic_values(n, r_grid)
    k = int(np.argmin(values))
    return float(values[k]), float(np.asarray(r_grid, dtype=float)[k])


def pm_coefficient_positivity(n: int, p: float, mu: float = -1.0, r_grid=None) -> float:
    """Minimum of the nonlinear-term coefficient of the weighted virial bound.

    coefficient(r) = (n-1) (r/sinh r)^2 ((p-1)(n-1) cosh^2 r + 2)
                     + 2 (n-1)(p-4) r coth r + p - 5

    Nonnegative exactly when p >= 1 + 4/n. The multiplier sign case mu is
    accepted for interface symmetry; the radial coefficient above does not
    depend on it.
    """
    if r_grid is None:
        r_grid = np.linspace(1e-4, 20.0, 100001)
    r = np.asarray(r_grid, dtype=np.longdouble)
    sh = np.sinh(r)
    ch = np.cosh(r)
    ratio = np.where(r > 0, r / np.where(sh == 0, 1.0, sh), 1.0)
    vals = (
        (n - 1) * ratio * ratio * ((p - 1) * (n - 1) * ch * ch + 2.0)
        + 2.0 * (n - 1) * (p - 4.0) * r * ch / np.where(sh == 0, 1.0, sh)
        + p
        - 5.0
    )
    return float(np.min(vals.astype(float)))
