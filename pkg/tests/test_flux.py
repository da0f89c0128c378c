import math

import numpy as np
import pytest
from oracles import axial_oracle, quadrant_oracle, radial_oracle, rel

from comboamb.config import PMRingSpec
from comboamb.errors import AmplifierLimitError, NumericalError
from comboamb.flux import (
    ConsistencyError,
    Excitation,
    FluxComponents,
    map_commands_to_mmf,
    radial_residuals,
    saturation_flags,
    solve_axial_control,
    solve_bias,
    solve_bias_symmetric,
    solve_quadrants,
    solve_radial_control,
    solve_tilt_control,
    superpose,
)
from comboamb.forces import solve
from comboamb.geometry import CENTERED, Pose
from comboamb.reluctance import ReluctanceSet, assemble

POSE = Pose(x=0.15e-3, y=-0.1e-3, z=0.05e-3, theta_x=math.radians(0.015), theta_y=math.radians(-0.01))


def toy_set(R=3e5):
    """All quadrants identical with alpha = beta = gamma = R."""
    return ReluctanceSet(
        ri=np.full(8, 16 * R / 3),
        ro=np.full(8, 16 * R / 3),
        t=np.full(4, 4 * R / 3),
        a1=np.full(4, 8 * R / 6),
        a2=np.full(4, 8 * R / 6),
        up_pm=R / 3,
        dw_pm=2 * R / 3,
        fa=R - R / 6,
        fr=R / 3,
    )


# ---------------------------------------------------------------------------
# Bias circuit
# ---------------------------------------------------------------------------


def test_toy_network_branch_sums():
    R = toy_set()
    assert R.alpha == pytest.approx(3e5) and R.beta == pytest.approx(3e5) and R.gamma == pytest.approx(3e5)


def test_toy_block_solve_matches_hand_mesh_analysis():
    R, F = toy_set(), 1e4
    sol = solve_quadrants(R, F, F)
    # three equal branches, equal sources: 2F/3R through the axial branch, F/3R through the others
    assert np.sum(sol.a) == pytest.approx(2 * F / (3 * 3e5), rel=1e-12)
    assert np.sum(sol.t) == pytest.approx(F / (3 * 3e5), rel=1e-12)
    assert sol.radial == pytest.approx(F / (3 * 3e5), rel=1e-12)


@pytest.mark.parametrize("pose", [CENTERED, POSE])
def test_bias_matches_dense_oracle(ref, pose):
    R = assemble(ref, pose)
    sol = solve_bias(R, ref.pm_upper, ref.pm_lower)
    a, t = quadrant_oracle(R, ref.pm_lower.mmf, ref.pm_upper.mmf)
    assert rel(sol.a, a) <= 1e-12 and rel(sol.t, t) <= 1e-12


def test_centered_block_matches_scalar_network(ref):
    R = assemble(ref, CENTERED)
    sol = solve_bias(R, ref.pm_upper, ref.pm_lower)
    phi_a, phi_t, phi_r = solve_bias_symmetric(R, ref.pm_upper.mmf, ref.pm_lower.mmf)
    assert np.sum(sol.a) == pytest.approx(phi_a, rel=1e-12)
    assert np.sum(sol.t) == pytest.approx(phi_t, rel=1e-12)
    assert sol.radial == pytest.approx(phi_r, rel=1e-12)


def test_centered_bias_is_symmetric(ref):
    sol = solve_bias(assemble(ref, CENTERED), ref.pm_upper, ref.pm_lower)
    assert np.ptp(sol.a) <= 1e-12 * abs(sol.a[0])
    assert np.ptp(sol.t) <= 1e-12 * abs(sol.t[0])


def test_stronger_upper_magnet_moves_flux_to_radial_poles(ref):
    R = assemble(ref, CENTERED)
    base = solve_bias(R, ref.pm_upper, ref.pm_lower)
    up = PMRingSpec(ref.pm_upper.thickness, ref.pm_upper.pole_area, ref.pm_upper.remanence * 1.1, ref.pm_upper.recoil_permeability)
    more = solve_bias(R, up, ref.pm_lower)
    assert more.radial > base.radial
    assert np.sum(more.t) < np.sum(base.t)


def test_singular_system_reports_condition():
    R = toy_set()
    bad = ReluctanceSet(R.ri, R.ro, np.zeros(4), np.zeros(4), np.zeros(4), 0.0, 0.0, 0.0, 0.0)
    with np.errstate(divide="ignore"), pytest.raises(NumericalError, match="cond"):
        solve_quadrants(bad, 1.0, 1.0)


# ---------------------------------------------------------------------------
# Control circuits
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("pose", [CENTERED, POSE])
def test_axial_control_matches_nodal_oracle(ref, pose):
    R = assemble(ref, pose)
    a1, a2, t = solve_axial_control(R, 900.0).totals
    o1, o2, ot = axial_oracle(R, 900.0)
    assert a1 == pytest.approx(o1, rel=1e-12)
    assert a2 == pytest.approx(o2, rel=1e-12)
    assert t == pytest.approx(ot, rel=1e-12)


def test_axial_control_zero_and_scaling(ref):
    R = assemble(ref, POSE)
    assert solve_axial_control(R, 0.0).totals == (0.0, 0.0, 0.0)
    one, two = solve_axial_control(R, 300.0), solve_axial_control(R, 600.0)
    for g in ("a1", "a2", "t"):
        assert rel(getattr(two, g), 2 * getattr(one, g)) <= 1e-14


def test_tilt_matches_dense_oracle(ref):
    R = assemble(ref, POSE)
    f = np.array([310.0, -120.0, 75.0, -400.0])
    sol = solve_tilt_control(R, f)
    a, t = quadrant_oracle(R, f, f)
    assert rel(sol.a, a) <= 1e-12 and rel(sol.t, t) <= 1e-12


def test_tilt_zero(ref):
    sol = solve_tilt_control(assemble(ref, POSE), np.zeros(4))
    assert not np.any(sol.a) and not np.any(sol.t)


def test_antisymmetric_tilt_has_no_net_axial_flux(ref):
    R = assemble(ref, CENTERED)
    sol = solve_tilt_control(R, [500.0, 200.0, -500.0, -200.0])
    assert abs(np.sum(sol.a)) <= 1e-12 * np.max(np.abs(sol.a))


def test_radial_matches_dense_oracle(ref):
    R = assemble(ref, POSE)
    f = np.linspace(-800, 650, 8)
    ri, ro = solve_radial_control(R, f)
    oi, oo = radial_oracle(R, f)
    assert rel(ri, oi) <= 1e-12 and rel(ro, oo) <= 1e-12


def test_radial_mesh_residuals(ref):
    R = assemble(ref, POSE)
    f = np.array([100.0, -300, 250, 40, -90, 600, -10, 5])
    ri, ro = solve_radial_control(R, f)
    loop, ret = radial_residuals(R, ri, ro, f)
    assert np.max(np.abs(loop)) <= 1e-12 * np.max(np.abs(f))
    assert np.max(np.abs(ret)) <= 1e-12 * np.max(np.abs(f))


def test_paired_radial_commands_leave_rest_of_circuit(ref):
    R = assemble(ref, CENTERED)
    mmf = map_commands_to_mmf(Excitation(radial_fx=400, radial_fy=-250), ref)
    ri, ro = solve_radial_control(R, mmf.radial)
    assert abs(np.sum(ri + ro)) <= 1e-12 * np.max(np.abs(ri))
    assert np.max(np.abs(ro)) <= 1e-12 * np.max(np.abs(ri))


# ---------------------------------------------------------------------------
# Commands, superposition, saturation
# ---------------------------------------------------------------------------


def test_command_mapping(ref):
    mmf = map_commands_to_mmf(Excitation(i_axial=2.0, tilt_mx=100, tilt_my=-50, radial_fx=10, radial_fy=20), ref)
    assert mmf.axial == pytest.approx(2.0 * ref.coil("axial").turns)
    assert np.allclose(mmf.tilt, 100 * np.array(ref.tilt_mx_pattern) - 50 * np.array(ref.tilt_my_pattern))
    assert np.allclose(mmf.radial, ref.radial_coeffs @ [10, 20])


def test_explicit_vectors_override(ref):
    mmf = map_commands_to_mmf(Excitation(tilt_mx=999, tilt_mmf=(1, 2, 3, 4), radial_mmf=tuple(range(8))), ref)
    assert list(mmf.tilt) == [1, 2, 3, 4] and list(mmf.radial) == list(range(8))


def test_amplifier_limit_names_coil(ref):
    with pytest.raises(AmplifierLimitError) as info:
        map_commands_to_mmf(Excitation(i_axial=ref.coil("axial").max_current * 1.01), ref)
    assert info.value.coil == "axial coil" and info.value.exit_code == 4
    with pytest.raises(AmplifierLimitError, match="tilt coil"):
        map_commands_to_mmf(Excitation(tilt_mx=800, tilt_my=800), ref)


def test_combined_rhs_equals_superposition(ref):
    R = assemble(ref, POSE)
    f_it = np.array([200.0, -150.0, 90.0, 30.0])
    combined = solve_quadrants(R, ref.pm_lower.mmf + f_it, ref.pm_upper.mmf + f_it)
    bias = solve_bias(R, ref.pm_upper, ref.pm_lower)
    tilt = solve_tilt_control(R, f_it)
    assert rel(combined.a, bias.a + tilt.a) <= 1e-12
    assert rel(combined.t, bias.t + tilt.t) <= 1e-12


def test_flux_state_totals(ref):
    sol = solve(ref, POSE, Excitation(i_axial=1.0, tilt_mx=100, radial_fy=50))
    total = sol.flux.total
    for g in FluxComponents.GROUPS:
        parts = sum(getattr(getattr(sol.flux, s), g) for s in sol.flux.SOURCES)
        assert np.array_equal(getattr(total, g), parts)
        assert np.all(np.isfinite(getattr(total, g)))


def test_mismatched_components_rejected():
    bad = FluxComponents(ri=np.zeros(7))
    with pytest.raises(ConsistencyError):
        superpose(FluxComponents(), FluxComponents(), FluxComponents(), bad)


def test_saturation_flags(ref):
    assert saturation_flags(ref, solve(ref).flux.total) == []
    hot = ref.replace(pm_upper=PMRingSpec(ref.pm_upper.thickness * 4, ref.pm_upper.pole_area, 1.4, 1.05))
    flags = saturation_flags(hot, solve(hot).flux.total)
    assert flags and all(abs(b) > 1.5 for _, b in flags)
