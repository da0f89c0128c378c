"""Flywheel pose and the air gap at every pole face."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ContactError


@dataclass(frozen=True)
class Pose:
    """Rigid-body offset of the flywheel from its nominal position.

    ``z`` is positive when every axial gap opens. Tilts are right-handed about
    +x and +y in a frame whose third axis points from the bearing toward the
    flywheel, so a positive ``theta_x`` opens the gap on the +y side.
    """

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    theta_x: float = 0.0
    theta_y: float = 0.0

    @classmethod
    def from_boundary(cls, x_mm=0.0, y_mm=0.0, z_mm=0.0, theta_x_deg=0.0, theta_y_deg=0.0):
        return cls(x_mm * 1e-3, y_mm * 1e-3, z_mm * 1e-3, math.radians(theta_x_deg), math.radians(theta_y_deg))

    def with_axis(self, axis, value):
        return Pose(**{**self.__dict__, axis: value})


CENTERED = Pose()


@dataclass(frozen=True)
class QuadDomain:
    r_in: float
    r_out: float
    psi_start: float
    psi_end: float
    pole: str = ""

    @property
    def area(self):
        return 0.5 * (self.psi_end - self.psi_start) * (self.r_out**2 - self.r_in**2)


def tilt_gap(r, psi, pose):
    """Axial gap change at polar point (r, psi): translation plus tilt field."""
    return pose.z + r * (math.sin(pose.theta_x) * np.sin(psi) - math.sin(pose.theta_y) * np.cos(psi))


def radial_gaps(pose, z1, coeffs):
    """Inner-pole gaps of the eight radial pairs.

    ``coeffs`` holds the (cx, cy) row of each pair; the gap between the inner
    pole and the rotor ring opens as the ring moves along the pole axis. The
    outer-pole gap of the same pair is ``2*z1 - gap``.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    gaps = z1 + coeffs[:, 0] * pose.x + coeffs[:, 1] * pose.y
    _check_radial_contact(gaps, 2 * z1 - gaps)
    return gaps


def radial_gap_pairs(pose, z1, coeffs):
    inner = radial_gaps(pose, z1, coeffs)
    return inner, 2 * z1 - inner


def _check_radial_contact(inner, outer):
    for j, (gi, go) in enumerate(zip(inner, outer)):
        if gi <= 0:
            raise ContactError(f"radial_inner[{j + 1}] contacts the rotor (gap {gi * 1e3:.4f} mm)", pole=f"radial_inner[{j + 1}]")
        if go <= 0:
            raise ContactError(f"radial_outer[{j + 1}] contacts the rotor (gap {go * 1e3:.4f} mm)", pole=f"radial_outer[{j + 1}]")


def pole_domains(cfg):
    """One integration domain per PM / axial pole sector, in ``cfg.sectors`` order."""
    return tuple(QuadDomain(p.r_in, p.r_out, p.psi_start, p.psi_end, pole=p.label) for p in cfg.sectors)


@lru_cache(maxsize=16)
def _gauss_legendre(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def sector_nodes(domain, order):
    """Tensor Gauss-Legendre nodes on a sector.

    Returns ``(r, psi, weights)`` flattened; the weights include the polar
    Jacobian ``r``, so ``sum(weights * f)`` approximates the area integral.
    """
    x, w = _gauss_legendre(order)
    hr = 0.5 * (domain.r_out - domain.r_in)
    hp = 0.5 * (domain.psi_end - domain.psi_start)
    r = domain.r_in + hr * (x + 1.0)
    psi = domain.psi_start + hp * (x + 1.0)
    R, P = np.meshgrid(r, psi, indexing="ij")
    W = np.outer(w * hr, w * hp) * R
    return R.ravel(), P.ravel(), W.ravel()


def sector_gap(domain, pose, z0, order):
    """Gap at every quadrature node of ``domain``, with contact checking."""
    r, psi, w = sector_nodes(domain, order)
    gap = z0 + tilt_gap(r, psi, pose)
    if np.any(gap <= 0):
        raise ContactError(f"{domain.pole or 'sector'} contacts the flywheel (min gap {gap.min() * 1e3:.4f} mm)", pole=domain.pole)
    return r, psi, w, gap


def max_tilt(z0, r_out):
    """Tilt at which the gap at radius ``r_out`` first closes."""
    return math.asin(min(1.0, z0 / r_out))
