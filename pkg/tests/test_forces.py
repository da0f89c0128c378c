import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import midpoint_loads_extrapolated, printed

from comboamb.config import MU0
from comboamb.errors import ContactError
from comboamb.flux import Excitation
from comboamb.forces import (
    RADIAL_ARC_FACTOR,
    axial_pole_force,
    pole_moment,
    radial_pole_force,
    sector_loads,
    solve,
    stored_energy,
)
from comboamb.geometry import CENTERED, Pose, QuadDomain

Z0 = 1.143e-3
TILTED = Pose(z=-0.08e-3, theta_x=math.radians(0.025), theta_y=math.radians(0.03))
SECTOR = QuadDomain(0.4366, 0.553, math.pi, 1.5 * math.pi)


# ---------------------------------------------------------------------------
# Pole force laws
# ---------------------------------------------------------------------------


def test_radial_pole_force_hand_value():
    f = radial_pole_force(0.6 * 0.01, 0.01)
    assert f == pytest.approx(1.096e3, abs=printed(1.096e3))
    assert f == pytest.approx(RADIAL_ARC_FACTOR * 0.01 * 0.36 / (2 * MU0), rel=1e-15)
    assert radial_pole_force(0.0, 0.01) == 0.0


def test_radial_pole_force_is_quadratic():
    assert radial_pole_force(0.012, 0.01) == pytest.approx(4 * radial_pole_force(0.006, 0.01), rel=1e-15)


def test_axial_force_closed_form():
    dom = QuadDomain(0.4, 0.5, 0.0, 2 * 0.05 / (0.5**2 - 0.4**2))
    assert dom.area == pytest.approx(0.05, rel=1e-14)
    f = axial_pole_force(1000.0, dom, CENTERED, Z0)
    assert f == pytest.approx(MU0 * 1000.0**2 * 0.05 / (2 * Z0**2), rel=1e-13)
    assert f == pytest.approx(2.405e4, abs=printed(2.405e4))
    assert axial_pole_force(0.0, dom, CENTERED, Z0) == 0.0


def test_axial_force_energy_identity():
    f = axial_pole_force(750.0, SECTOR, CENTERED, Z0)
    b = MU0 * 750.0 / Z0
    assert f == pytest.approx(b**2 * SECTOR.area / (2 * MU0), rel=1e-14)


def test_tilted_loads_match_midpoint_loads_extrapolated():
    expected = midpoint_loads_extrapolated(SECTOR, TILTED, Z0, 850.0)
    f = axial_pole_force(850.0, SECTOR, TILTED, Z0)
    mx, my = pole_moment(850.0, SECTOR, TILTED, Z0)
    assert f == pytest.approx(expected[0], rel=1e-8)
    assert mx == pytest.approx(expected[1], rel=1e-8)
    assert my == pytest.approx(expected[2], rel=1e-8)
    assert sector_loads(850.0, SECTOR, TILTED, Z0) == pytest.approx((f, mx, my), rel=1e-15)


def test_single_quadrant_arm_ratio():
    dom = QuadDomain(0.4, 0.5, 0.0, math.pi / 2)
    mx, my = pole_moment(600.0, dom, CENTERED, Z0)
    # int sin = int cos over the first quadrant; Mx carries the minus sign of the y arm
    assert -mx / my == pytest.approx(1.0, rel=1e-13)


def test_full_ring_symmetric_mmf_has_no_moment():
    mx = my = 0.0
    for q in range(4):
        dmx, dmy = pole_moment(900.0, QuadDomain(0.4, 0.5, q * math.pi / 2, (q + 1) * math.pi / 2), CENTERED, Z0)
        mx, my = mx + dmx, my + dmy
    scale = axial_pole_force(900.0, QuadDomain(0.4, 0.5, 0, 2 * math.pi), CENTERED, Z0) * 0.5
    assert abs(mx) <= 1e-10 * scale and abs(my) <= 1e-10 * scale


def test_closing_gap_side_carries_more_force():
    # positive theta_x opens the +y side
    upper = QuadDomain(0.4, 0.5, 0.25 * math.pi, 0.75 * math.pi)
    lower = QuadDomain(0.4, 0.5, 1.25 * math.pi, 1.75 * math.pi)
    pose = Pose(theta_x=math.radians(0.02))
    assert axial_pole_force(500.0, upper, pose, Z0) < axial_pole_force(500.0, lower, pose, Z0)


def test_axial_force_contact():
    with pytest.raises(ContactError):
        axial_pole_force(500.0, SECTOR, Pose(z=-1.2e-3), Z0)


# ---------------------------------------------------------------------------
# Net wrench on the reference machine
# ---------------------------------------------------------------------------


def test_reference_lift(ref):
    w = solve(ref).wrench
    assert w.Fz == pytest.approx(53400.0, rel=1e-3)
    assert w.Fz == pytest.approx(ref.weight, rel=1e-3)


def test_centered_wrench_symmetry(ref):
    w = solve(ref).wrench
    assert abs(w.Fx) <= 1e-9 * w.Fz and abs(w.Fy) <= 1e-9 * w.Fz
    assert abs(w.Mx) <= 1e-9 * w.Fz * ref.r_out_max
    assert abs(w.My) <= 1e-9 * w.Fz * ref.r_out_max


def test_mirrored_pose(ref):
    a = solve(ref, Pose(x=0.2e-3)).wrench
    b = solve(ref, Pose(x=-0.2e-3)).wrench
    assert b.Fx == pytest.approx(-a.Fx, rel=1e-9)
    assert abs(a.Fy) <= 1e-9 * abs(a.Fx) and abs(b.Fy) <= 1e-9 * abs(a.Fx)
    assert b.Fz == pytest.approx(a.Fz, rel=1e-12)


def test_radial_offset_pulls_toward_closing_gap(ref):
    # an unstable (negative) position stiffness: offset in +x pulls further in +x
    assert solve(ref, Pose(x=0.1e-3)).wrench.Fx > 0
    assert solve(ref, Pose(y=-0.1e-3)).wrench.Fy < 0


def test_lift_falls_as_gap_opens(ref):
    fz = [solve(ref, Pose(z=z * 1e-3)).wrench.Fz for z in np.linspace(-0.5, 0.5, 21)]
    assert np.all(np.diff(fz) < 0)


@settings(max_examples=25, deadline=None)
@given(s=st.floats(0.2, 3.0))
def test_quadratic_scaling_of_all_sources(ref, s):
    base = solve(ref, TILTED, Excitation(i_axial=2.0, tilt_mx=100, radial_fy=80))
    scaled_cfg = ref.replace(
        pm_upper=type(ref.pm_upper)(ref.pm_upper.thickness, ref.pm_upper.pole_area, ref.pm_upper.remanence * s, ref.pm_upper.recoil_permeability),
        pm_lower=type(ref.pm_lower)(ref.pm_lower.thickness, ref.pm_lower.pole_area, ref.pm_lower.remanence * s, ref.pm_lower.recoil_permeability),
    )
    scaled = solve(scaled_cfg, TILTED, mmf=base.mmf.scaled(s))
    np.testing.assert_allclose(scaled.wrench.as_array(), s**2 * base.wrench.as_array(), rtol=1e-12, atol=1e-12 * abs(base.wrench.Fz))


# ---------------------------------------------------------------------------
# Stored energy
# ---------------------------------------------------------------------------


def test_stored_energy():
    inertia = 0.5 * 5443 * 1.0665**2
    assert inertia == pytest.approx(3.095e3, abs=printed(3.095e3))
    speed = math.sqrt(2 * 3.6e8 / inertia)
    assert speed == pytest.approx(482, abs=0.5)
    assert stored_energy(inertia, speed) == pytest.approx(3.6e8, rel=1e-14)
    assert stored_energy(inertia, 0.0) == 0.0
    assert stored_energy(inertia, 2 * speed) == pytest.approx(4 * 3.6e8, rel=1e-14)
