"""Gap and magnet reluctances, and the pose-dependent reluctance set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import MU0
from .errors import ContactError
from .geometry import pole_domains, radial_gap_pairs, sector_gap

DEFAULT_QUAD_ORDER = 16


def radial_reluctance(gap, area):
    gap = np.asarray(gap, dtype=float)
    if np.any(gap <= 0):
        raise ContactError("radial gap must be positive")
    return gap / (MU0 * area)


def sector_permeance(domain, pose, z0, order=DEFAULT_QUAD_ORDER):
    _, _, w, gap = sector_gap(domain, pose, z0, order)
    return float(np.sum(w * MU0 / gap))


def sector_reluctance(domain, pose, z0, order=DEFAULT_QUAD_ORDER):
    """Reciprocal of the gap permeance integrated over a tilted annular sector."""
    if order < 2:
        raise ValueError("quadrature order must be >= 2")
    return 1.0 / sector_permeance(domain, pose, z0, order)


def pm_ring_reluctance(spec):
    return spec.thickness / (MU0 * spec.recoil_permeability * spec.pole_area)


def parallel(values):
    return 1.0 / np.sum(1.0 / np.asarray(values, dtype=float))


def series_parallel(a, b):
    return a * b / (a + b)


@dataclass(frozen=True)
class ReluctanceSet:
    """All reluctances of the circuit at one pose (AT/Wb).

    Per-quadrant magnet and fixed-path elements are the full-ring values split
    into four equal parallel elements, i.e. four times the full-ring value.
    """

    ri: np.ndarray  # inner radial poles, 8
    ro: np.ndarray  # outer radial poles, 8
    t: np.ndarray  # PM poles, 4
    a1: np.ndarray  # inner axial poles, 4
    a2: np.ndarray  # outer axial poles, 4
    up_pm: float  # full upper ring
    dw_pm: float  # full lower ring
    fa: float
    fr: float

    # -- parallel totals ----------------------------------------------------
    @property
    def r_total(self):
        return parallel(np.concatenate([self.ri, self.ro]))

    @property
    def t_total(self):
        return parallel(self.t)

    @property
    def a1_total(self):
        return parallel(self.a1)

    @property
    def a2_total(self):
        return parallel(self.a2)

    @property
    def a_quadrant(self):
        return 1.0 / (1.0 / self.a1 + 1.0 / self.a2)

    @property
    def a_total(self):
        return parallel(self.a_quadrant)

    # -- branch sums of the three-branch bias network -----------------------
    @property
    def alpha(self):
        return self.a_total + self.fa

    @property
    def beta(self):
        return self.t_total + self.dw_pm

    @property
    def gamma(self):
        return self.r_total + self.up_pm + self.fr

    @property
    def L(self):
        a, b, g = self.alpha, self.beta, self.gamma
        return a * b + b * g + g * a

    # -- per-quadrant diagonals used by the block solves ---------------------
    @property
    def alpha_q(self):
        return self.a_quadrant + 4.0 * self.fa

    @property
    def beta_q(self):
        return self.t + 4.0 * self.dw_pm

    @property
    def up_q(self):
        return np.full(4, 4.0 * self.up_pm)

    @property
    def dw_q(self):
        return np.full(4, 4.0 * self.dw_pm)

    @property
    def non_radial(self):
        """Reluctance closing the radial control flux outside the radial poles.

        Taken as the bias network seen from the radial terminals: upper magnet
        and flywheel path in series with the axial and PM branches in parallel.
        """
        return self.up_pm + self.fr + series_parallel(self.alpha, self.beta)


def assemble(cfg, pose, quad_order=DEFAULT_QUAD_ORDER):
    """Evaluate every reluctance of ``cfg`` at ``pose``."""
    inner, outer = radial_gap_pairs(pose, cfg.radial_gap, cfg.radial_coeffs)
    a_in = np.array([p.area for p in cfg.radial_inner])
    a_out = np.array([p.area for p in cfg.radial_outer])
    sector = np.array([sector_reluctance(d, pose, cfg.axial_gap, quad_order) for d in pole_domains(cfg)])
    return ReluctanceSet(
        ri=radial_reluctance(inner, a_in),
        ro=radial_reluctance(outer, a_out),
        t=sector[0:4],
        a1=sector[4:8],
        a2=sector[8:12],
        up_pm=pm_ring_reluctance(cfg.pm_upper),
        dw_pm=pm_ring_reluctance(cfg.pm_lower),
        fa=cfg.fixed_reluctance_axial,
        fr=cfg.fixed_reluctance_radial,
    )
