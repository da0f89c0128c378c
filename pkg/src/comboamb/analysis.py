"""Sweeps, stiffness extraction, coupling maps, calibration and the virtual rig.

Boundary units (mm, deg, A, AT, N/mm, Nm/deg) appear only in the public
specs and reports; every computation runs in SI.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .errors import AmplifierLimitError, CalibrationError, ConfigError, RegressionError
from .flux import ZERO, Excitation, flux_densities
from .forces import solve
from .geometry import CENTERED, Pose
from .reluctance import DEFAULT_QUAD_ORDER

# ---------------------------------------------------------------------------
# Axes
# ---------------------------------------------------------------------------

# swept variable -> (kind, SI scale of one boundary unit, boundary unit)
SWEEP_AXES = {
    "x": ("pose", 1e-3, "mm"),
    "y": ("pose", 1e-3, "mm"),
    "z": ("pose", 1e-3, "mm"),
    "theta_x": ("pose", math.pi / 180, "deg"),
    "theta_y": ("pose", math.pi / 180, "deg"),
    "i_axial": ("excitation", 1.0, "A"),
    "tilt_mx": ("excitation", 1.0, "AT"),
    "tilt_my": ("excitation", 1.0, "AT"),
    "radial_fx": ("excitation", 1.0, "AT"),
    "radial_fy": ("excitation", 1.0, "AT"),
}
AXIS_ALIASES = {"tilt_cmd": "tilt_mx", "radial_cmd": "radial_fx"}


def _axis(name):
    name = AXIS_ALIASES.get(name, name)
    if name not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {name!r}; choose from {sorted(SWEEP_AXES)}")
    return name


@dataclass(frozen=True)
class StiffnessAxis:
    """One controlled degree of freedom.

    ``force_sign`` is +1 when the wrench component points along the pose
    coordinate (radial, tilt) and -1 when it opposes it (axial lift vs the
    gap-opening ``z``). Position stiffness is reported as
    ``-force_sign * dF/dq``, so destabilising attraction gives K_p < 0.
    """

    name: str
    pose: str
    command: str
    component: str
    coil: str
    force_sign: float
    force_unit: str
    length_unit: str
    length_scale: float  # SI per boundary length unit

    def current_per_command(self, cfg):
        """Amperes per unit of the excitation command."""
        return 1.0 if self.command == "i_axial" else 1.0 / cfg.coil(self.coil).turns


STIFFNESS_AXES = {
    "axial": StiffnessAxis("axial", "z", "i_axial", "Fz", "axial", -1.0, "N", "mm", 1e-3),
    "tilt_x": StiffnessAxis("tilt_x", "theta_x", "tilt_mx", "Mx", "tilt", 1.0, "Nm", "deg", math.pi / 180),
    "tilt_y": StiffnessAxis("tilt_y", "theta_y", "tilt_my", "My", "tilt", 1.0, "Nm", "deg", math.pi / 180),
    "radial_x": StiffnessAxis("radial_x", "x", "radial_fx", "Fx", "radial", 1.0, "N", "mm", 1e-3),
    "radial_y": StiffnessAxis("radial_y", "y", "radial_fy", "Fy", "radial", 1.0, "N", "mm", 1e-3),
}
PUBLISHED_AXES = ("axial", "tilt_x", "radial_x")

# EMCM column of the published stiffness table, boundary units
PUBLISHED_EMCM = {
    ("axial", "current"): 4114.0,
    ("tilt_x", "current"): 576.0,
    ("radial_x", "current"): 390.0,
    ("axial", "position"): -28211.0,
    ("tilt_x", "position"): -77134.0,
    ("radial_x", "position"): -2023.0,
}


def stiffness_axis_for(swept):
    swept = _axis(swept)
    for ax in STIFFNESS_AXES.values():
        if swept in (ax.pose, ax.command):
            return ax
    raise ValueError(f"no stiffness axis uses {swept!r}")


def _apply(axis, value_si, pose, excitation):
    if SWEEP_AXES[axis][0] == "pose":
        return pose.with_axis(axis, value_si), excitation
    return pose, excitation.with_axis(axis, value_si)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """A 1-D sweep in boundary units (mm, deg, A or AT)."""

    axis: str
    start: float
    stop: float
    samples: int
    pose: Pose = CENTERED
    excitation: Excitation = ZERO
    quad_order: int = DEFAULT_QUAD_ORDER

    def __post_init__(self):
        object.__setattr__(self, "axis", _axis(self.axis))
        if int(self.samples) != self.samples or self.samples < 3:
            raise ValueError("a sweep needs at least 3 samples")

    @property
    def unit(self):
        return SWEEP_AXES[self.axis][2]

    @property
    def values(self):
        return np.linspace(self.start, self.stop, int(self.samples))

    @property
    def values_si(self):
        return self.values * SWEEP_AXES[self.axis][1]


@dataclass(frozen=True)
class SweepTable:
    spec: SweepSpec
    values: np.ndarray  # boundary units
    wrenches: tuple

    def column(self, component):
        return np.array([w[component] for w in self.wrenches])

    @property
    def values_si(self):
        return self.values * SWEEP_AXES[self.spec.axis][1]


def sweep(spec: SweepSpec, cfg):
    """One full solve per sample, in sample order."""
    out = []
    for k, (v, v_si) in enumerate(zip(spec.values, spec.values_si)):
        pose, ex = _apply(spec.axis, v_si, spec.pose, spec.excitation)
        try:
            out.append(solve(cfg, pose, ex, spec.quad_order).wrench)
        except Exception as exc:
            exc.sample_index = k  # callers report the offending sample
            raise
    return SweepTable(spec, spec.values, tuple(out))


# ---------------------------------------------------------------------------
# Stiffness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StiffnessReport:
    """A stiffness in SI plus its boundary-unit rendering.

    ``kind`` is ``"current"`` (N/A or Nm/A) or ``"position"`` (SI: N/m or
    Nm/rad; boundary: N/mm or Nm/deg).
    """

    axis: str
    kind: str
    value: float
    r_squared: float
    method: str
    boundary_value: float
    unit: str

    def target(self):
        return PUBLISHED_EMCM.get((self.axis, self.kind))


def _report(ax: StiffnessAxis, kind, value, r2, method):
    if kind == "current":
        return StiffnessReport(ax.name, kind, value, r2, method, value, f"{ax.force_unit}/A")
    return StiffnessReport(ax.name, kind, value, r2, method, value * ax.length_scale, f"{ax.force_unit}/{ax.length_unit}")


def _ols(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(np.unique(x)) < 3:
        raise RegressionError("need at least 3 distinct abscissae")
    fit = stats.linregress(x, y)
    ss_res = np.sum((y - (fit.intercept + fit.slope * x)) ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return fit.slope, r2


def _to_stiffness(ax, cfg, swept, slope_si):
    """Convert d(component)/d(swept, SI) into (kind, stiffness SI)."""
    if swept == ax.pose:
        return "position", -ax.force_sign * slope_si
    return "current", slope_si / ax.current_per_command(cfg)


def extract_stiffness(table: SweepTable, cfg, axis=None):
    """OLS slope and R^2 of a sweep, as a stiffness of ``axis``."""
    ax = STIFFNESS_AXES[axis] if axis else stiffness_axis_for(table.spec.axis)
    if table.spec.axis not in (ax.pose, ax.command):
        raise ValueError(f"sweep over {table.spec.axis!r} does not belong to axis {ax.name!r}")
    slope, r2 = _ols(table.values_si, table.column(ax.component))
    kind, k = _to_stiffness(ax, cfg, table.spec.axis, slope)
    return _report(ax, kind, k, r2, "regression")


def fd_stiffness(cfg, pose, excitation, axis, kind, step=None, quad_order=DEFAULT_QUAD_ORDER):
    """Central-difference stiffness (SI) about ``pose``/``excitation``.

    ``step`` is in SI units of the perturbed variable; defaults are small
    against the gap (1e-7 m, 1e-5 deg) or the coil rating (1e-4 of it).
    """
    ax = STIFFNESS_AXES[axis]
    var = ax.pose if kind == "position" else ax.command
    if step is None:
        if kind == "position":
            step = 1e-7 if ax.pose in ("x", "y", "z") else math.radians(1e-5)
        else:
            step = 1e-4 * (cfg.coil(ax.coil).max_current if var == "i_axial" else cfg.coil(ax.coil).max_mmf)
    base = getattr(pose, var) if kind == "position" else getattr(excitation, var)
    f = []
    for v in (base + step, base - step):
        p, e = _apply(var, v, pose, excitation)
        f.append(solve(cfg, p, e, quad_order, check_limits=False).wrench[ax.component])
    _, k = _to_stiffness(ax, cfg, var, (f[0] - f[1]) / (2 * step))
    return k


def stiffness_table(cfg, position_half_range=None, current_half_range=None, samples=11, quad_order=DEFAULT_QUAD_ORDER):
    """Regression K_i and K_p for the axes of the published table.

    Sweeps are symmetric about the centre. Default half ranges: 0.05 mm
    axial, 0.02 deg tilt, 0.25 mm radial; a quarter of each coil's rating.
    """
    position_half_range = position_half_range or {"axial": 0.05, "tilt_x": 0.02, "radial_x": 0.25}
    reports = []
    for name in PUBLISHED_AXES:
        ax = STIFFNESS_AXES[name]
        if current_half_range and name in current_half_range:
            hc = current_half_range[name]
        else:
            coil = cfg.coil(ax.coil)
            hc = 0.25 * (coil.max_current if ax.command == "i_axial" else coil.max_mmf)
        hp = position_half_range[name]
        for var, h in ((ax.command, hc), (ax.pose, hp)):
            table = sweep(SweepSpec(var, -h, h, samples, quad_order=quad_order), cfg)
            reports.append(extract_stiffness(table, cfg, name))
    return reports


# ---------------------------------------------------------------------------
# Coupling maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CouplingMap:
    """Relative change of ``component`` against its value at the origin."""

    axes: tuple
    grid_a: np.ndarray
    grid_b: np.ndarray
    component: str
    nominal: float
    values: np.ndarray  # absolute, shape (len(grid_a), len(grid_b))

    @property
    def relative(self):
        return self.values / self.nominal - 1.0

    def at(self, a, b):
        i = int(np.argmin(np.abs(self.grid_a - a)))
        j = int(np.argmin(np.abs(self.grid_b - b)))
        return float(self.relative[i, j])


def _coupling(cfg, axis_a, grid_a, axis_b, grid_b, component, pose, excitation, quad_order, relative_to):
    axis_a, axis_b = _axis(axis_a), _axis(axis_b)
    ga = np.asarray(grid_a, dtype=float)
    gb = np.asarray(grid_b, dtype=float)
    sa, sb = SWEEP_AXES[axis_a][1], SWEEP_AXES[axis_b][1]
    nominal = solve(cfg, pose, excitation, quad_order).wrench[component]
    if relative_to is not None:
        nominal = relative_to
    vals = np.empty((len(ga), len(gb)))
    for i, a in enumerate(ga):
        p, e = _apply(axis_a, a * sa, pose, excitation)
        for j, b in enumerate(gb):
            pp, ee = _apply(axis_b, b * sb, p, e)
            vals[i, j] = solve(cfg, pp, ee, quad_order).wrench[component]
    return CouplingMap((axis_a, axis_b), ga, gb, component, nominal, vals)


def coupling_position(cfg, axis_a, grid_a, axis_b, grid_b, component, quad_order=DEFAULT_QUAD_ORDER, relative_to=None):
    """Wrench component over a grid of two pose axes (boundary units)."""
    for ax in (axis_a, axis_b):
        if SWEEP_AXES[_axis(ax)][0] != "pose":
            raise ValueError(f"{ax!r} is not a pose axis")
    return _coupling(cfg, axis_a, grid_a, axis_b, grid_b, component, CENTERED, ZERO, quad_order, relative_to)


def coupling_current(cfg, axis_a, grid_a, axis_b, grid_b, component, quad_order=DEFAULT_QUAD_ORDER, relative_to=None):
    """Wrench component over a grid of two excitation axes (A or AT)."""
    for ax in (axis_a, axis_b):
        if SWEEP_AXES[_axis(ax)][0] != "excitation":
            raise ValueError(f"{ax!r} is not an excitation axis")
    return _coupling(cfg, axis_a, grid_a, axis_b, grid_b, component, CENTERED, ZERO, quad_order, relative_to)


# ---------------------------------------------------------------------------
# Magnet thickness study
# ---------------------------------------------------------------------------

GROUP_COLUMNS = ("B_radial_inner", "B_radial_outer", "B_pm", "B_axial_inner", "B_axial_outer")


def bias_densities(cfg, quad_order=DEFAULT_QUAD_ORDER):
    """Mean |B| per pole group at the centred pose with zero current."""
    b = flux_densities(cfg, solve(cfg, quad_order=quad_order).flux.pm)
    return dict(zip(GROUP_COLUMNS, (float(np.mean(np.abs(getattr(b, g)))) for g in ("ri", "ro", "t", "a1", "a2"))))


def pm_thickness_study(cfg, t_up_mm, t_dw_mm, quad_order=DEFAULT_QUAD_ORDER):
    """Bias flux densities over a grid of upper/lower magnet thicknesses (mm)."""
    rows = []
    for tu in np.asarray(t_up_mm, dtype=float):
        for td in np.asarray(t_dw_mm, dtype=float):
            if not (tu > 0 and td > 0):
                raise ConfigError("magnet thickness must be positive", key="pm.thickness_mm")
            c = cfg.replace(
                pm_upper=_with(cfg.pm_upper, thickness=tu * 1e-3),
                pm_lower=_with(cfg.pm_lower, thickness=td * 1e-3),
            )
            rows.append({"t_up_mm": float(tu), "t_dw_mm": float(td), **bias_densities(c, quad_order)})
    return rows


def _with(obj, **changes):
    return dataclasses.replace(obj, **changes)


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FreeParameter:
    name: str
    x0: float = 1.0
    lo: float = 1e-3
    hi: float = 1e3


@dataclass(frozen=True)
class Target:
    """``metric`` should equal ``value`` within ``tol`` (absolute, or relative if ``relative``).

    ``driver`` names the free parameter the metric responds to monotonically;
    it is used for the bisection stage.
    """

    metric: str
    value: float
    tol: float
    driver: str
    relative: bool = False

    def residual(self, metrics):
        r = metrics[self.metric] - self.value
        return r / abs(self.value) if self.relative else r

    def met(self, metrics):
        return abs(self.residual(metrics)) <= self.tol


@dataclass(frozen=True)
class CalibrationResult:
    parameters: dict
    residuals: dict
    metrics: dict
    converged: bool
    evaluations: int
    config: object = None
    message: str = ""


MAX_CALIBRATION_ITER = 200


class _BudgetExhausted(Exception):
    pass


def fit_targets(model, params, targets, max_iter=MAX_CALIBRATION_ITER, sweeps=2, bisect_steps=24):
    """Coordinate bisection on monotone targets, then a damped least-squares polish.

    ``model(values: dict) -> dict`` of metrics. All parameters are searched
    in log space inside their bounds. ``max_iter`` caps the total number of
    model evaluations.

    Returns ``(values, metrics, residuals, converged, evaluations)``.
    """
    names = [p.name for p in params]
    lo = np.log([p.lo for p in params])
    hi = np.log([p.hi for p in params])
    x = np.log([p.x0 for p in params])
    count = [0]

    def evaluate(xv):
        if count[0] >= max_iter:
            raise _BudgetExhausted
        count[0] += 1
        try:
            return model(dict(zip(names, np.exp(xv))))
        except Exception:  # infeasible point
            return None

    def g(xv, t):
        m = evaluate(xv)
        return None if m is None else t.residual(m)

    best = {"x": x, "cost": np.inf}

    def resid(xv):
        m = evaluate(xv)
        r = np.full(len(targets), 1e6) if m is None else np.array([t.residual(m) / t.tol for t in targets])
        cost = float(np.sum(r**2))
        if cost < best["cost"]:
            best.update(x=np.array(xv, dtype=float), cost=cost)
        return r

    try:
        # bisection stage: each target drives its own parameter
        for _ in range(sweeps):
            for t in targets:
                k = names.index(t.driver)

                def at(v):
                    xv = x.copy()
                    xv[k] = v
                    return g(xv, t)

                # a local bracket first, the full bounds if it does not straddle the root
                bracket = None
                for a, b in ((max(lo[k], x[k] - 0.5), min(hi[k], x[k] + 0.5)), (lo[k], hi[k])):
                    ga, gb = at(a), at(b)
                    if ga is not None and gb is not None and np.sign(ga) != np.sign(gb):
                        bracket = a, b
                        break
                if bracket is None:
                    continue
                a, b = bracket
                for _ in range(bisect_steps):
                    mid = 0.5 * (a + b)
                    gm = at(mid)
                    if gm is None:
                        break
                    if np.sign(gm) == np.sign(ga):
                        a, ga = mid, gm
                    else:
                        b = mid
                    if abs(gm) <= 0.01 * t.tol or b - a < 1e-13:
                        break
                x[k] = 0.5 * (a + b)

        # polish, keeping the best point seen if the budget runs out
        resid(x)
        optimize.least_squares(resid, x, bounds=(lo, hi), xtol=1e-14, ftol=1e-14, gtol=1e-14)
    except _BudgetExhausted:
        pass
    if np.isfinite(best["cost"]):
        x = best["x"]

    values = dict(zip(names, np.exp(x)))
    metrics = model(values)
    residuals = {t.metric: t.residual(metrics) for t in targets}
    converged = all(t.met(metrics) for t in targets)
    return values, metrics, residuals, converged, count[0]


def scale_sector_area(pole, s):
    """Keep ``r_in``; move ``r_out`` so the sector area scales by ``s``."""
    r_out = math.sqrt(pole.r_in**2 + s * (pole.r_out**2 - pole.r_in**2))
    return _with(pole, r_out=r_out)


def apply_scales(cfg, pm_scale=1.0, axial_area_scale=1.0, radial_area_scale=1.0):
    """Config with scaled magnet MMF (via remanence) and pole areas."""
    poles = []
    for p in cfg.poles:
        if p.kind in ("axial_inner", "axial_outer"):
            poles.append(scale_sector_area(p, axial_area_scale))
        elif p.kind in ("radial_inner", "radial_outer"):
            poles.append(_with(p, area=p.area * radial_area_scale))
        else:
            poles.append(p)
    return cfg.replace(
        pm_upper=_with(cfg.pm_upper, remanence=cfg.pm_upper.remanence * pm_scale),
        pm_lower=_with(cfg.pm_lower, remanence=cfg.pm_lower.remanence * pm_scale),
        poles=tuple(poles),
    )


def default_targets(cfg, b_axial=0.8, b_radial=0.55):
    return [
        Target("Fz", cfg.weight, 1e-3, "pm_scale", relative=True),
        Target("B_axial", b_axial, 0.05, "axial_area_scale"),
        Target("B_radial", b_radial, 0.05, "radial_area_scale"),
    ]


def calibration_metrics(cfg, quad_order=DEFAULT_QUAD_ORDER):
    sol = solve(cfg, quad_order=quad_order)
    b = flux_densities(cfg, sol.flux.pm)
    return {
        "Fz": sol.wrench.Fz,
        "B_axial": float(np.mean(np.abs(np.concatenate([b.a1, b.a2])))),
        "B_radial": float(np.mean(np.abs(np.concatenate([b.ri, b.ro])))),
    }


def calibrate_to_targets(cfg, targets=None, max_iter=MAX_CALIBRATION_ITER, quad_order=DEFAULT_QUAD_ORDER, strict=False):
    """Fit magnet MMF and pole-area scales so the bias targets hold.

    Default targets: weight balance within 0.1 %, mean axial-pole B of
    0.8 T and mean radial-pole B of 0.55 T, both within 0.05 T. The fit
    bisects each target on the parameter it responds to, then polishes
    all of them jointly.
    """
    targets = targets or default_targets(cfg)
    params = [FreeParameter("pm_scale", 1.0, 0.5, 1.2), FreeParameter("axial_area_scale", 1.0, 0.05, 20.0),
              FreeParameter("radial_area_scale", 1.0, 0.05, 20.0)]

    def model(v):
        return calibration_metrics(apply_scales(cfg, **v), quad_order)

    values, metrics, residuals, converged, n = fit_targets(model, params, targets, max_iter)
    fitted = apply_scales(cfg, **values)
    msg = "" if converged else "targets not reached: " + ", ".join(f"{k} residual {v:+.4g}" for k, v in residuals.items())
    result = CalibrationResult(values, residuals, metrics, converged, n, fitted, msg)
    if strict and not converged:
        raise CalibrationError(msg, residuals=residuals)
    return result


# ---------------------------------------------------------------------------
# Virtual measurement rig
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RigRecord:
    """Recorded channels of one identification run (SI).

    ``force`` is the applied external load, balanced by the change of the
    bearing's wrench component; ``displacement`` is measured against that
    component's positive direction, so that ``force = K_i*current + K_p*displacement``.
    """

    axis: str
    mode: str
    force: np.ndarray
    current: np.ndarray
    displacement: np.ndarray
    seed: int | None
    noise: float
    gain: float = 0.0
    k_i: float | None = None


RIG_MODES = ("current_stiffness", "position_stiffness")


def _rig_force(cfg, ax, pose_q, cmd, f0, quad_order):
    pose = CENTERED.with_axis(ax.pose, pose_q)
    ex = ZERO.with_axis(ax.command, cmd)
    return solve(cfg, pose, ex, quad_order, check_limits=False).wrench[ax.component] - f0


def virtual_measurement(
    cfg,
    axis,
    mode,
    probes,
    noise=0.0,
    seed=None,
    k_i=None,
    gain=0.0,
    probe_kind="force",
    quad_order=DEFAULT_QUAD_ORDER,
):
    """Simulate the load-rig identification of one axis.

    ``current_stiffness``: the flywheel is held at its neutral position and
    each probe load is balanced by a control current; the slope of load vs
    current is K_i. ``position_stiffness``: the flywheel is displaced by each
    probe (a load, or an imposed displacement when ``probe_kind`` is
    ``"displacement"``, in SI); the controller responds with
    ``current = -gain * displacement`` and K_p is fitted from
    ``force - K_i*current`` vs displacement. ``k_i`` defaults to a noise-free
    current-stiffness run.

    Gaussian noise is added to every recorded channel with a standard
    deviation of ``noise`` times that channel's full scale.
    """
    ax = STIFFNESS_AXES[axis]
    if mode not in RIG_MODES:
        raise ValueError(f"mode must be one of {RIG_MODES}")
    probes = np.asarray(probes, dtype=float)
    f0 = solve(cfg, quad_order=quad_order).wrench[ax.component]
    per_cmd = ax.current_per_command(cfg)
    i_max = cfg.coil(ax.coil).max_current
    n = len(probes)
    force = np.empty(n)
    current = np.zeros(n)
    disp = np.zeros(n)

    if mode == "current_stiffness":
        for k, f in enumerate(probes):
            g = lambda i: _rig_force(cfg, ax, 0.0, i / per_cmd, f0, quad_order) - f
            if np.sign(g(-i_max)) == np.sign(g(i_max)):
                raise AmplifierLimitError(
                    f"probe {k}: load {f:g} needs more than the {ax.coil} coil's {i_max:g} A", coil=f"{ax.coil} coil"
                )
            current[k] = optimize.brentq(g, -i_max, i_max, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
            force[k] = f
    else:
        if k_i is None:
            k_i = _noise_free_k_i(cfg, ax, quad_order)
        q_max = 0.9 * (cfg.axial_gap if ax.pose == "z" else cfg.radial_gap)
        if ax.pose.startswith("theta"):
            q_max = 0.9 * math.asin(cfg.axial_gap / cfg.r_out_max)
        for k, p in enumerate(probes):
            if probe_kind == "displacement":
                q = -ax.force_sign * p
                i = -gain * p
                _check_rig_current(i, i_max, k, ax)
                force[k] = _rig_force(cfg, ax, q, i / per_cmd, f0, quad_order)
                current[k], disp[k] = i, p
            else:
                def g(d):
                    i = -gain * d
                    return _rig_force(cfg, ax, -ax.force_sign * d, i / per_cmd, f0, quad_order) - p

                d = optimize.brentq(g, -q_max, q_max, xtol=1e-18, rtol=4 * np.finfo(float).eps, maxiter=300)
                i = -gain * d
                _check_rig_current(i, i_max, k, ax)
                force[k], current[k], disp[k] = p, i, d

    record = add_channel_noise(RigRecord(axis, mode, force, current, disp, None, 0.0, gain, k_i), noise, seed)
    return record, fit_rig(record, cfg)


def add_channel_noise(record: RigRecord, noise, seed=None):
    """Copy of ``record`` with seeded Gaussian noise on every channel.

    The standard deviation is ``noise`` times the channel's full scale
    (largest magnitude); channels that are identically zero stay clean.
    """
    rng = np.random.default_rng(seed)
    channels = []
    for ch in (record.force, record.current, record.displacement):
        ch = np.array(ch, dtype=float)
        scale = np.max(np.abs(ch)) if len(ch) else 0.0
        if noise and scale > 0:
            ch += rng.normal(0.0, noise * scale, len(ch))
        channels.append(ch)
    return dataclasses.replace(record, force=channels[0], current=channels[1], displacement=channels[2],
                               seed=seed, noise=noise)


def default_probes(cfg, axis, mode, n=50, fraction=1e-3, quad_order=DEFAULT_QUAD_ORDER):
    """Symmetric probe loads spanning ``fraction`` of the axis' working range.

    Current mode: up to ``fraction`` of the coil's rated current times K_i.
    Position mode: up to ``fraction`` of the nominal gap (or of the contact
    tilt) times |K_p|. Small probes keep the load-current and
    load-displacement records inside the linear neighbourhood of the centre.
    """
    ax = STIFFNESS_AXES[axis]
    if mode == "current_stiffness":
        k = fd_stiffness(cfg, CENTERED, ZERO, axis, "current", quad_order=quad_order)
        amp = fraction * abs(k) * cfg.coil(ax.coil).max_current
    else:
        k = fd_stiffness(cfg, CENTERED, ZERO, axis, "position", quad_order=quad_order)
        if ax.pose.startswith("theta"):
            q_ref = math.asin(cfg.axial_gap / cfg.r_out_max)
        else:
            q_ref = cfg.axial_gap if ax.pose == "z" else cfg.radial_gap
        amp = fraction * abs(k) * q_ref
    return np.linspace(-amp, amp, int(n))


def _check_rig_current(i, i_max, k, ax):
    if abs(i) > i_max:
        raise AmplifierLimitError(f"probe {k}: controller current {i:g} A exceeds the {ax.coil} coil's {i_max:g} A",
                                  coil=f"{ax.coil} coil")


def _noise_free_k_i(cfg, ax, quad_order):
    f_scale = 0.01 * cfg.coil(ax.coil).max_current
    i = np.linspace(-f_scale, f_scale, 5)
    f0 = solve(cfg, quad_order=quad_order).wrench[ax.component]
    y = [_rig_force(cfg, ax, 0.0, v / ax.current_per_command(cfg), f0, quad_order) for v in i]
    return _ols(i, y)[0]


def fit_rig(record: RigRecord, cfg):
    """Stiffness report from a rig record (load-current or load-displacement regression)."""
    ax = STIFFNESS_AXES[record.axis]
    if record.mode == "current_stiffness":
        k, r2 = _ols(record.current, record.force)
        return _report(ax, "current", k, r2, "rig")
    k, r2 = _ols(record.displacement, record.force - record.k_i * record.current)
    return _report(ax, "position", k, r2, "rig")
