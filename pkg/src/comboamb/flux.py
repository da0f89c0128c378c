"""Linear magnetic-circuit solves and their superposition.

Circuit variables follow the loop orientations of the network equations:
bias/tilt axial-pole flux enters the flywheel, PM-pole flux leaves it, and the
combined radial bias flux leaves it through the radial poles. :class:`FluxState`
re-expresses everything per pole face with one convention: positive flux
crosses the gap from the stator pole face into the flywheel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AmplifierLimitError, NumericalError
from .reluctance import ReluctanceSet, series_parallel

COND_LIMIT = 1e12


class ConsistencyError(NumericalError):
    pass


def _solve(matrix, rhs, what):
    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NumericalError(f"{what}: system is singular or ill-conditioned (cond = {cond:.3e})")
    return np.linalg.solve(matrix, rhs)


# ---------------------------------------------------------------------------
# Excitation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Excitation:
    """Axis-level commands. Explicit per-coil MMF vectors override the mapping."""

    i_axial: float = 0.0  # A
    tilt_mx: float = 0.0  # AT
    tilt_my: float = 0.0  # AT
    radial_fx: float = 0.0  # AT
    radial_fy: float = 0.0  # AT
    tilt_mmf: tuple | None = None  # 4 x AT
    radial_mmf: tuple | None = None  # 8 x AT

    def with_axis(self, axis, value):
        return Excitation(**{**self.__dict__, axis: value})


ZERO = Excitation()


@dataclass(frozen=True)
class CoilMMF:
    axial: float
    tilt: np.ndarray
    radial: np.ndarray

    def scaled(self, s):
        return CoilMMF(self.axial * s, self.tilt * s, self.radial * s)


def map_commands_to_mmf(ex, cfg, check_limits=True):
    """Per-coil MMFs for an :class:`Excitation`."""
    axial = cfg.coil("axial").turns * ex.i_axial
    if ex.tilt_mmf is not None:
        tilt = np.asarray(ex.tilt_mmf, dtype=float)
    else:
        tilt = ex.tilt_mx * np.asarray(cfg.tilt_mx_pattern) + ex.tilt_my * np.asarray(cfg.tilt_my_pattern)
    if ex.radial_mmf is not None:
        radial = np.asarray(ex.radial_mmf, dtype=float)
    else:
        c = cfg.radial_coeffs
        radial = c[:, 0] * ex.radial_fx + c[:, 1] * ex.radial_fy
    if tilt.shape != (4,) or radial.shape != (8,):
        raise ValueError("tilt MMF needs 4 entries and radial MMF 8")
    if check_limits:
        _check_limit("axial coil", abs(axial), cfg.coil("axial").max_mmf)
        for i, f in enumerate(tilt):
            _check_limit(f"tilt coil {i + 1}", abs(f), cfg.coils_of("tilt")[i].max_mmf)
        for j, f in enumerate(radial):
            _check_limit(f"radial coil {j + 1}", abs(f), cfg.coils_of("radial")[j].max_mmf)
    return CoilMMF(float(axial), tilt, radial)


def _check_limit(coil, mmf, limit):
    if mmf > limit * (1 + 1e-12):
        raise AmplifierLimitError(f"{coil}: {mmf:.1f} AT exceeds the amplifier limit {limit:.1f} AT", coil=coil)


# ---------------------------------------------------------------------------
# Bias and tilt circuit (shared block matrix)
# ---------------------------------------------------------------------------


def quadrant_matrix(R: ReluctanceSet):
    """8x8 block matrix coupling per-quadrant axial and PM-pole fluxes."""
    J = np.ones((4, 4)) * (R.r_total + R.fr)
    up = np.diag(R.up_q)
    return np.block(
        [
            [np.diag(R.alpha_q), np.diag(R.beta_q)],
            [np.diag(R.alpha_q) + up + J, -up - J],
        ]
    )


@dataclass(frozen=True)
class QuadrantFlux:
    """Per-quadrant circuit fluxes: ``a`` into, ``t`` out of the flywheel."""

    a: np.ndarray
    t: np.ndarray

    @property
    def radial(self):
        return float(np.sum(self.a - self.t))


def solve_quadrants(R, f_lower, f_upper, what="quadrant circuit"):
    rhs = np.concatenate([np.broadcast_to(f_lower, 4), np.broadcast_to(f_upper, 4)]).astype(float)
    sol = _solve(quadrant_matrix(R), rhs, what)
    return QuadrantFlux(sol[:4], sol[4:])


def solve_bias(R, pm_up, pm_dw):
    return solve_quadrants(R, pm_dw.mmf, pm_up.mmf, "bias circuit")


def solve_bias_symmetric(R, f_up, f_dw):
    """Scalar three-branch network; valid when all quadrants are identical.

    Returns total (axial, PM-pole, radial) bias fluxes.
    """
    a, b, g, L = R.alpha, R.beta, R.gamma, R.L
    phi_a = (g * f_dw + b * f_up) / L
    phi_t = (f_dw * (a + g) - a * f_up) / L
    phi_r = ((a + b) * f_up - a * f_dw) / L
    return phi_a, phi_t, phi_r


def solve_tilt_control(R, f_tilt):
    f_tilt = np.asarray(f_tilt, dtype=float)
    return solve_quadrants(R, f_tilt, f_tilt, "tilt circuit")


# ---------------------------------------------------------------------------
# Axial control: two coils in the axial pole group, closed form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AxialControlFlux:
    a1: np.ndarray
    a2: np.ndarray
    t: np.ndarray  # leaves the flywheel

    @property
    def totals(self):
        return float(np.sum(self.a1)), float(np.sum(self.a2)), float(np.sum(self.t))


def solve_axial_control(R, f_axial):
    """Fluxes driven by the axial coil pair (same MMF in each coil).

    The return branch is the PM pole in parallel with the radial path, in
    series with the flywheel path. Totals are split over quadrants in
    proportion to each pole's permeance.
    """
    ra1, ra2 = R.a1_total, R.a2_total
    bg = series_parallel(R.beta, R.gamma)
    ret = bg + R.fa
    den = ret * ra1 + ra2 * ra1 + ra2 * ret
    phi_a1 = f_axial * (ra2 - ret) / den
    phi_a2 = f_axial * (2 * ra1 + ret) / den
    phi_t = (phi_a1 + phi_a2) * bg / R.beta
    return AxialControlFlux(
        a1=phi_a1 * ra1 / R.a1,
        a2=phi_a2 * ra2 / R.a2,
        t=phi_t * R.t_total / R.t,
    )


# ---------------------------------------------------------------------------
# Radial control: 16 x 16 pair system
# ---------------------------------------------------------------------------


def radial_matrix(R):
    """Rows 0-7: loop law of each pair; rows 8-15: return through the non-radial path."""
    J = np.ones((8, 8)) * R.non_radial
    return np.block(
        [
            [np.diag(R.ri), -np.diag(R.ro)],
            [J, J + np.diag(R.ro)],
        ]
    )


def solve_radial_control(R, f_radial):
    f_radial = np.asarray(f_radial, dtype=float)
    sol = _solve(radial_matrix(R), np.concatenate([f_radial, np.zeros(8)]), "radial circuit")
    return sol[:8], sol[8:]


def radial_residuals(R, ri, ro, f_radial):
    """Residuals of both equation families of the radial circuit."""
    total = np.sum(ri + ro)
    loop = ri * R.ri - ro * R.ro - f_radial
    ret = R.non_radial * total + ro * R.ro
    return loop, ret


# ---------------------------------------------------------------------------
# Superposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FluxComponents:
    """Flux per pole face (Wb), positive from stator face into flywheel."""

    a1: np.ndarray = field(default_factory=lambda: np.zeros(4))
    a2: np.ndarray = field(default_factory=lambda: np.zeros(4))
    t: np.ndarray = field(default_factory=lambda: np.zeros(4))
    ri: np.ndarray = field(default_factory=lambda: np.zeros(8))
    ro: np.ndarray = field(default_factory=lambda: np.zeros(8))

    GROUPS = ("a1", "a2", "t", "ri", "ro")

    def __add__(self, other):
        for g in self.GROUPS:
            if np.shape(getattr(self, g)) != np.shape(getattr(other, g)):
                raise ConsistencyError(f"pole group {g} has mismatched sizes")
        return FluxComponents(**{g: getattr(self, g) + getattr(other, g) for g in self.GROUPS})

    def __mul__(self, s):
        return FluxComponents(**{g: getattr(self, g) * s for g in self.GROUPS})

    __rmul__ = __mul__

    def as_vector(self):
        return np.concatenate([getattr(self, g) for g in self.GROUPS])


@dataclass(frozen=True)
class FluxState:
    pm: FluxComponents
    ia: FluxComponents
    it: FluxComponents
    ir: FluxComponents

    SOURCES = ("pm", "ia", "it", "ir")

    @property
    def total(self):
        return self.pm + self.ia + self.it + self.ir


def bias_components(R, bias: QuadrantFlux):
    split = R.a_quadrant
    phi_r = bias.radial
    return FluxComponents(
        a1=bias.a * split / R.a1,
        a2=bias.a * split / R.a2,
        t=-bias.t,
        ri=-phi_r * R.r_total / R.ri,
        ro=-phi_r * R.r_total / R.ro,
    )


def tilt_components(R, tilt: QuadrantFlux):
    split = R.a_quadrant
    return FluxComponents(a1=tilt.a * split / R.a1, a2=tilt.a * split / R.a2, t=-tilt.t)


def axial_components(ax: AxialControlFlux):
    return FluxComponents(a1=ax.a1, a2=ax.a2, t=-ax.t)


def radial_components(ri, ro):
    return FluxComponents(ri=np.asarray(ri), ro=np.asarray(ro))


def superpose(pm, ia, it, ir):
    """Total per-pole flux as the sum of the four source contributions."""
    state = FluxState(pm=pm, ia=ia, it=it, ir=ir)
    state.total  # raises on mismatched pole sets
    return state


def solve_all(R, pm_up, pm_dw, mmf: CoilMMF):
    bias = solve_bias(R, pm_up, pm_dw)
    ax = solve_axial_control(R, mmf.axial)
    tilt = solve_tilt_control(R, mmf.tilt)
    ri, ro = solve_radial_control(R, mmf.radial)
    return superpose(
        bias_components(R, bias),
        axial_components(ax),
        tilt_components(R, tilt),
        radial_components(ri, ro),
    )


# ---------------------------------------------------------------------------
# Flux densities and the saturation check
# ---------------------------------------------------------------------------


def pole_areas(cfg):
    sec = {kind: np.array([p.sector_area for p in cfg.poles_of(kind)]) for kind in ("pm", "axial_inner", "axial_outer")}
    return FluxComponents(
        a1=sec["axial_inner"],
        a2=sec["axial_outer"],
        t=sec["pm"],
        ri=np.array([p.area for p in cfg.radial_inner]),
        ro=np.array([p.area for p in cfg.radial_outer]),
    )


def flux_densities(cfg, comps: FluxComponents):
    areas = pole_areas(cfg)
    return FluxComponents(**{g: getattr(comps, g) / getattr(areas, g) for g in FluxComponents.GROUPS})


POLE_LABELS = {"a1": "axial_inner", "a2": "axial_outer", "t": "pm", "ri": "radial_inner", "ro": "radial_outer"}


def saturation_flags(cfg, comps: FluxComponents):
    """Poles whose mean flux density exceeds the bearing steel saturation level."""
    limit = cfg.bearing_material.saturation_flux_density
    b = flux_densities(cfg, comps)
    flags = []
    for g in FluxComponents.GROUPS:
        for k, val in enumerate(getattr(b, g)):
            if abs(val) > limit:
                flags.append((f"{POLE_LABELS[g]}[{k + 1}]", float(val)))
    return flags
