import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from comboamb.config import RADIAL_COEFFS
from comboamb.errors import ContactError
from comboamb.geometry import (
    CENTERED,
    Pose,
    QuadDomain,
    pole_domains,
    radial_gap_pairs,
    radial_gaps,
    sector_gap,
    sector_nodes,
    tilt_gap,
)

Z1 = 1.143e-3
small = st.floats(-0.9e-3, 0.9e-3)
angle = st.floats(-math.radians(0.1), math.radians(0.1))


def test_tilt_gap_zero_pose():
    r, psi = np.meshgrid(np.linspace(0, 0.55, 7), np.linspace(0, 2 * np.pi, 9))
    assert np.all(tilt_gap(r, psi, CENTERED) == 0)


@given(r=st.floats(0, 0.6), psi=st.floats(0, 2 * np.pi), tx=angle, ty=angle)
def test_tilt_gap_antisymmetric(r, psi, tx, ty):
    pose = Pose(theta_x=tx, theta_y=ty)
    assert tilt_gap(r, psi + np.pi, pose) == pytest.approx(-tilt_gap(r, psi, pose), abs=1e-18)


def test_tilt_gap_hand_value():
    g = tilt_gap(0.4, math.radians(90), Pose(theta_x=math.radians(0.04)))
    assert g == pytest.approx(2.793e-4, abs=0.0005e-4)


def test_tilt_gap_includes_translation():
    assert tilt_gap(0.3, 1.0, Pose(z=1e-4)) == pytest.approx(1e-4)


@given(r=st.floats(0, 0.6), psi=st.floats(0, 2 * np.pi), tx=angle, ty=angle, z=small)
def test_small_angle_consistency(r, psi, tx, ty, z):
    pose = Pose(z=z, theta_x=tx, theta_y=ty)
    tilt_lin = r * (tx * np.sin(psi) - ty * np.cos(psi))
    scale = r * (abs(tx) + abs(ty))
    assert abs(tilt_gap(r, psi, pose) - (z + tilt_lin)) <= 1e-6 * scale + 1e-18


def test_radial_gaps_centered():
    assert np.all(radial_gaps(CENTERED, Z1, RADIAL_COEFFS) == Z1)


def test_radial_gap_hand_value():
    g = radial_gaps(Pose(x=0.1e-3), Z1, RADIAL_COEFFS)
    assert g[0] * 1e3 == pytest.approx(1.181, abs=1e-12)


@given(x=small, y=small)
def test_opposite_pairs_sum(x, y):
    inner, outer = radial_gap_pairs(Pose(x=x * 0.5, y=y * 0.5), Z1, RADIAL_COEFFS)
    assert np.allclose(inner + np.roll(inner, 4), 2 * Z1, rtol=0, atol=1e-18)
    assert np.allclose(inner + outer, 2 * Z1, rtol=0, atol=1e-18)


def test_radial_gaps_affine_slope():
    h = 1e-6
    c = np.array(RADIAL_COEFFS)
    for k, axis in enumerate(("x", "y")):
        gp = radial_gaps(Pose(**{axis: h}), Z1, RADIAL_COEFFS)
        gm = radial_gaps(Pose(**{axis: -h}), Z1, RADIAL_COEFFS)
        assert np.allclose((gp - gm) / (2 * h), c[:, k], rtol=0, atol=1e-12)


def test_radial_contact_names_pole():
    with pytest.raises(ContactError) as info:
        radial_gaps(Pose(x=2e-3), Z1, RADIAL_COEFFS)
    assert info.value.pole.startswith("radial_")
    assert info.value.exit_code == 3


def test_sector_contact_names_pole(ref):
    dom = pole_domains(ref)[10]
    with pytest.raises(ContactError) as info:
        sector_gap(dom, Pose(theta_x=-math.radians(0.2)), ref.axial_gap, 8)
    assert info.value.pole == dom.pole


def test_pole_domains_reference(ref):
    doms = pole_domains(ref)
    assert len(doms) == 12
    for k in range(3):
        ring = doms[4 * k : 4 * k + 4]
        spans = sorted((d.psi_start, d.psi_end) for d in ring)
        assert all(abs(e - s - np.pi / 2) < 1e-15 for s, e in spans)
        assert spans[0][0] == pytest.approx(0) and spans[-1][1] == pytest.approx(2 * np.pi)
        assert all(a[1] == pytest.approx(b[0], abs=1e-15) for a, b in zip(spans, spans[1:]))
        d = ring[0]
        total = sum(x.area for x in ring)
        assert total == pytest.approx(np.pi * (d.r_out**2 - d.r_in**2), rel=1e-12)


def test_sector_weights_integrate_area():
    d = QuadDomain(0.35, 0.45, 0.3, 1.2)
    _, _, w = sector_nodes(d, 8)
    assert w.sum() == pytest.approx(d.area, rel=1e-14)


@settings(max_examples=30)
@given(tx=angle, ty=angle)
def test_tilt_field_integrates_to_zero(tx, ty):
    pose = Pose(theta_x=tx, theta_y=ty)
    total = 0.0
    for q in range(4):
        d = QuadDomain(0.36, 0.55, q * np.pi / 2, (q + 1) * np.pi / 2)
        r, psi, w = sector_nodes(d, 16)
        total += np.sum(w * tilt_gap(r, psi, pose))
    scale = np.pi * (0.55**2 - 0.36**2) * 0.55
    assert abs(total) <= 1e-10 * scale
