"""Pole forces, moments and the net wrench on the flywheel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import MU0
from .flux import ZERO, CoilMMF, FluxState, map_commands_to_mmf, solve_all
from .geometry import CENTERED, pole_domains, sector_gap
from .reluctance import DEFAULT_QUAD_ORDER, assemble

# projection of the curved radial pole face onto its axis
RADIAL_ARC_FACTOR = 0.765


@dataclass(frozen=True)
class Wrench:
    """Net load on the flywheel: N and N*m. ``Fz`` > 0 lifts (closes the axial gap)."""

    Fx: float = 0.0
    Fy: float = 0.0
    Fz: float = 0.0
    Mx: float = 0.0
    My: float = 0.0

    FIELDS = ("Fx", "Fy", "Fz", "Mx", "My")

    def as_array(self):
        return np.array([self.Fx, self.Fy, self.Fz, self.Mx, self.My])

    def __getitem__(self, name):
        return getattr(self, name)


def radial_pole_force(flux, area):
    b = np.asarray(flux) / area
    return RADIAL_ARC_FACTOR * area * b**2 / (2 * MU0)


def _pressure(mmf, gap):
    return MU0 * mmf**2 / (2 * gap**2)


def axial_pole_force(mmf, domain, pose, z0, order=DEFAULT_QUAD_ORDER):
    """Attraction of one axial/PM pole sector carrying gap MMF ``mmf``."""
    _, _, w, gap = sector_gap(domain, pose, z0, order)
    return float(np.sum(w * _pressure(mmf, gap)))


def pole_moment(mmf, domain, pose, z0, order=DEFAULT_QUAD_ORDER):
    """(Mx, My) of one sector's attraction about the bearing centre."""
    r, psi, w, gap = sector_gap(domain, pose, z0, order)
    p = w * _pressure(mmf, gap)
    # lift acts against the gap axis, so Mx = -sum(y f), My = +sum(x f)
    return float(-np.sum(p * r * np.sin(psi))), float(np.sum(p * r * np.cos(psi)))


def sector_loads(mmf, domain, pose, z0, order=DEFAULT_QUAD_ORDER):
    """(force, Mx, My) of one sector from a single quadrature pass."""
    r, psi, w, gap = sector_gap(domain, pose, z0, order)
    p = w * _pressure(mmf, gap)
    return float(np.sum(p)), float(-np.sum(p * r * np.sin(psi))), float(np.sum(p * r * np.cos(psi)))


def net_wrench(total, R, cfg, pose, order=DEFAULT_QUAD_ORDER):
    """Aggregate every pole's pull into the 5-axis wrench.

    ``total`` holds per-pole fluxes; sector gap MMFs are recovered as
    flux times gap reluctance.
    """
    fz = mx = my = 0.0
    gap_mmf = np.concatenate([total.t * R.t, total.a1 * R.a1, total.a2 * R.a2])
    for f, dom in zip(gap_mmf, pole_domains(cfg)):
        df, dmx, dmy = sector_loads(f, dom, pose, cfg.axial_gap, order)
        fz += df
        mx += dmx
        my += dmy

    angles = np.array([p.face_angle for p in cfg.radial_inner])
    u = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    a_in = np.array([p.area for p in cfg.radial_inner])
    a_out = np.array([p.area for p in cfg.radial_outer])
    # the outer pole pulls the ring outward along u, the inner pole inward
    pull = radial_pole_force(total.ro, a_out) - radial_pole_force(total.ri, a_in)
    fx, fy = pull @ u
    return Wrench(float(fx), float(fy), fz, mx, my)


@dataclass(frozen=True)
class Solution:
    pose: object
    mmf: CoilMMF
    reluctances: object
    flux: FluxState
    wrench: Wrench


def solve(cfg, pose=CENTERED, excitation=ZERO, quad_order=DEFAULT_QUAD_ORDER, mmf=None, check_limits=True):
    """Full forward model: reluctances, fluxes and the wrench at one operating point."""
    if mmf is None:
        mmf = map_commands_to_mmf(excitation, cfg, check_limits=check_limits)
    R = assemble(cfg, pose, quad_order)
    flux = solve_all(R, cfg.pm_upper, cfg.pm_lower, mmf)
    return Solution(pose, mmf, R, flux, net_wrench(flux.total, R, cfg, pose, quad_order))


def wrench_at(cfg, pose=CENTERED, excitation=ZERO, quad_order=DEFAULT_QUAD_ORDER):
    return solve(cfg, pose, excitation, quad_order).wrench


def stored_energy(inertia, speed):
    return 0.5 * inertia * speed**2
