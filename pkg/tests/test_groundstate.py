"""Shooting solver, certification identities, and the mass curve.

Central amplitudes q0 = Q(0) were frozen from an independent adaptive
integrator (solve_ivp RK45, rtol 1e-12, bisection to machine bracket) and
serve as cross-solver oracles; the n = 2, p = 3, lambda = 0 case also has
the closed form Q = sqrt(2)/cosh r.
"""

import math

import numpy as np
import pytest

import hypnls.functionals as fn
import hypnls.groundstate as gsm
import hypnls.hypgeom as hg

# independent shooting oracle (RK45, rtol 1e-12)
Q0_ORACLE = {
    (3, 3.0, 0.0): 4.89897948556,
    (3, 3.0, 0.5): 3.77351213237,
    (3, 3.0, 0.9): 2.38749173508,
    (2, 3.0, 0.0): 1.41421356245,  # exactly sqrt(2): Q = sqrt(2)/cosh r
    (2, 3.0, 0.2): 0.8951549925,
}


def test_far_field_rate():
    assert gsm.far_field_rate(3, 0.0) == 2.0
    assert abs(gsm.far_field_rate(3, 0.5) - (1.0 + math.sqrt(0.5))) < 1e-15
    assert gsm.far_field_rate(2, 0.0) == 1.0
    assert abs(gsm.far_field_rate(2, 0.2) - (0.5 + math.sqrt(0.05))) < 1e-15


def test_admissibility_guards(grid3):
    with pytest.raises(gsm.NoGroundState):
        gsm.solve_ground_state(3, 3.0, 1.0, grid3)
    with pytest.raises(gsm.NoGroundState):
        gsm.solve_ground_state(3, 3.0, 1.7, grid3)
    with pytest.raises(ValueError):
        gsm.solve_ground_state(3, 5.0, 0.0, grid3)
    with pytest.raises(ValueError):
        gsm.solve_ground_state(3, 1.0, 0.0, grid3)


def test_q0_against_independent_solver(grid3, grid2, gs3_zero, gs3_half, gs2_zero):
    solved = {
        (3, 3.0, 0.0): gs3_zero,
        (3, 3.0, 0.5): gs3_half,
        (3, 3.0, 0.9): gsm.solve_ground_state(3, 3.0, 0.9, grid3),
        (2, 3.0, 0.0): gs2_zero,
        (2, 3.0, 0.2): gsm.solve_ground_state(2, 3.0, 0.2, grid2),
    }
    for key, oracle in Q0_ORACLE.items():
        gs = solved[key]
        assert abs(gs.q0 - oracle) / oracle < 2e-3, key
        assert gs.profile[0] > 0.0
        assert np.all(np.isfinite(gs.profile))


def test_q0_refinement_toward_oracle():
    oracle = Q0_ORACLE[(3, 3.0, 0.5)]
    errs = []
    for num in (1000, 2000):
        grid = hg.build_grid(3, 20.0, num)
        errs.append(abs(gsm.solve_ground_state(3, 3.0, 0.5, grid).q0 - oracle))
    assert errs[1] < 0.5 * errs[0]


def test_closed_form_profile_h2(gs2_zero):
    exact = math.sqrt(2.0) / np.cosh(gs2_zero.grid.nodes)
    assert np.max(np.abs(gs2_zero.profile - exact)) < 5e-5


def test_certification_residuals(gs3_zero, gs3_half):
    for gs in (gs3_zero, gs3_half):
        assert gs.residuals["pohozaev"] < 1e-8
        assert gs.residuals["energy_ratio"] < 1e-8
        assert gs.residuals["g_value"] < 1e-4
        # Pohozaev: |Q|^2_{H_lambda} = |Q|^{p+1}_{p+1} for the polished state
        assert abs(gs.hlam_sq - gs.lp1) < 1e-7 * gs.hlam_sq
        # E_lambda(Q) = (p-1)/(2(p+1)) |Q|^2_{H_lambda}
        ratio = (gs.p - 1.0) / (2.0 * (gs.p + 1.0))
        assert abs(gs.elam - ratio * gs.hlam_sq) < 1e-7 * gs.elam


def test_ground_state_sits_on_its_own_shell(gs3_half):
    q = gs3_half.field_on_grid()
    assert abs(fn.delta_lambda(q, gs3_half)) < 1e-9 * gs3_half.hlam_sq


def test_verify_identities_matches_stored(gs3_half):
    report = gsm.verify_identities(gs3_half)
    assert set(report) == {"pohozaev", "energy_ratio", "g_value", "logslope_dev"}
    for key in ("pohozaev", "energy_ratio", "g_value"):
        assert report[key] == gs3_half.residuals[key]
    assert report["logslope_dev"] < 1e-3


def test_shooting_classifier_bracket(grid3):
    # q0 for lambda = 0.5 is ~3.77: smaller amplitudes decay, larger cross
    assert gsm.shooting_classifier(3, 3.0, 0.5, 2.0, grid3) == 1
    assert gsm.shooting_classifier(3, 3.0, 0.5, 5.0, grid3) == -1
    scan = gsm.amplitude_scan(3, 3.0, 0.5, grid3, [2.0, 3.0, 4.0, 5.0])
    assert list(scan) == [1, 1, -1, -1]


def test_mass_curve_guards(grid3, grid2):
    with pytest.raises(ValueError):
        gsm.mass_constrained_minimize(1.0, 3, 3.0, grid3)  # p >= 1 + 4/n
    with pytest.raises(fn.ParameterMismatch):
        gsm.mass_constrained_minimize(1.0, 3, 2.0, grid2)
    with pytest.raises(fn.ParameterMismatch):
        gsm.mass_constrained_minimize(
            1.0, 3, 2.0, grid3, start=np.ones(17)
        )


def test_mass_curve_small_mass_vanishes(grid3):
    pt = gsm.mass_constrained_minimize(0.5, 3, 2.0, grid3)
    assert pt.e_alpha == 0.0
    assert pt.minimizer is None
    assert pt.lagrange_lambda is None
    assert pt.iterations > 0


def test_mass_curve_negative_branch_and_warm_start(grid3):
    cold = gsm.mass_constrained_minimize(13.0, 3, 2.0, grid3)
    assert cold.e_alpha < 0.0
    assert cold.minimizer is not None
    assert cold.el_residual < 1e-4
    assert cold.lagrange_lambda < 1.0
    assert abs(fn.mass(cold.minimizer) - 13.0**2) < 1e-8 * 13.0**2
    warm = gsm.mass_constrained_minimize(
        16.0, 3, 2.0, grid3, start=cold.minimizer.values.real
    )
    assert warm.e_alpha < cold.e_alpha
    assert warm.el_residual < 1e-4
    assert warm.lagrange_lambda < 1.0
