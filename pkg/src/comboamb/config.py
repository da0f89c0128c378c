"""Machine description, config file I/O and validation.

Everything inside a :class:`MachineConfig` is SI. The config file uses the
boundary units listed in :data:`SCHEMA` (mm, mm^2, deg, A, AT/Wb, kg) and is
converted on load.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .errors import ConfigError

MU0 = 4e-7 * math.pi

MM = 1e-3
MM2 = 1e-6

# Two-decimal direction cosines of the radial pole axes, pole-pair order 1..8.
RADIAL_COEFFS = (
    (0.38, -0.92),
    (-0.38, -0.92),
    (-0.92, 0.38),
    (-0.92, -0.38),
    (-0.38, 0.92),
    (0.38, 0.92),
    (0.92, -0.38),
    (0.92, 0.38),
)

N_RADIAL_PAIRS = 8
N_QUADRANTS = 4
SECTOR_KINDS = ("pm", "axial_inner", "axial_outer")
COIL_COUNTS = {"axial": 1, "tilt": 4, "radial": 8}


@dataclass(frozen=True)
class MaterialSpec:
    name: str
    relative_permeability: float
    saturation_flux_density: float  # T


@dataclass(frozen=True)
class PMRingSpec:
    thickness: float  # m, along the magnetisation direction
    pole_area: float  # m^2, magnet face area of the full ring
    remanence: float  # T
    recoil_permeability: float

    @property
    def coercivity(self):
        """Coercive field of the linear recoil line, A/m."""
        return self.remanence / (self.recoil_permeability * MU0)

    @property
    def mmf(self):
        return self.coercivity * self.thickness

    @property
    def internal_reluctance(self):
        return self.thickness / (MU0 * self.recoil_permeability * self.pole_area)


@dataclass(frozen=True)
class CoilSpec:
    turns: float
    max_current: float  # A
    role: str  # axial | tilt | radial

    @property
    def max_mmf(self):
        return self.turns * self.max_current


@dataclass(frozen=True)
class PoleGeometry:
    """One pole face.

    Radial poles carry ``area`` and the direction cosines ``(cx, cy)``;
    axial and PM poles are annular sectors ``r_in..r_out`` x ``psi_start..psi_end``.
    """

    kind: str
    index: int
    area: float = 0.0
    cx: float = 0.0
    cy: float = 0.0
    r_in: float = 0.0
    r_out: float = 0.0
    psi_start: float = 0.0
    psi_end: float = 0.0

    @property
    def face_angle(self):
        return math.atan2(self.cy, self.cx)

    @property
    def sector_area(self):
        return 0.5 * (self.psi_end - self.psi_start) * (self.r_out**2 - self.r_in**2)

    @property
    def label(self):
        return f"{self.kind}[{self.index + 1}]"


@dataclass(frozen=True)
class MachineConfig:
    name: str
    axial_gap: float  # z0, m
    radial_gap: float  # z1, m
    fixed_reluctance_axial: float  # R_fa, AT/Wb
    fixed_reluctance_radial: float  # R_fr, AT/Wb
    flywheel_mass: float
    gravity: float
    flywheel_material: MaterialSpec
    bearing_material: MaterialSpec
    pm_upper: PMRingSpec
    pm_lower: PMRingSpec
    coils: tuple
    poles: tuple
    # quadrant sign patterns of the tilt-command -> coil-MMF map
    tilt_mx_pattern: tuple = (1.0, 1.0, -1.0, -1.0)
    tilt_my_pattern: tuple = (1.0, -1.0, -1.0, 1.0)

    # -- pole / coil access -------------------------------------------------
    def poles_of(self, kind):
        return tuple(sorted((p for p in self.poles if p.kind == kind), key=lambda p: p.index))

    @property
    def radial_inner(self):
        return self.poles_of("radial_inner")

    @property
    def radial_outer(self):
        return self.poles_of("radial_outer")

    @property
    def radial_coeffs(self):
        return np.array([[p.cx, p.cy] for p in self.radial_inner])

    @property
    def sectors(self):
        """PM, inner-axial and outer-axial sectors, in that order (12 total)."""
        return tuple(p for kind in SECTOR_KINDS for p in self.poles_of(kind))

    def coils_of(self, role):
        return tuple(c for c in self.coils if c.role == role)

    def coil(self, role):
        return self.coils_of(role)[0]

    @property
    def weight(self):
        return self.flywheel_mass * self.gravity

    @property
    def r_out_max(self):
        return max((p.r_out for p in self.sectors), default=0.0)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def digest(self):
        """Stable content hash of the SI-normalised configuration."""
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Config file schema
# ---------------------------------------------------------------------------

SCHEMA = """\
# Machine configuration schema (TOML). All keys are required unless noted.
# Units at this boundary are fixed: lengths mm, areas mm^2, angles deg,
# currents A, reluctances AT/Wb, mass kg. Everything is SI internally.

[machine]
name = "text"
flywheel_mass_kg = 0.0                   # > 0
gravity_m_s2 = 9.81                      # > 0
axial_gap_mm = 0.0                       # nominal axial gap z0, > 0
radial_gap_mm = 0.0                      # nominal radial gap z1, > 0
fixed_reluctance_axial_AT_per_Wb = 0.0   # flywheel path axial -> PM poles, >= 0
fixed_reluctance_radial_AT_per_Wb = 0.0  # flywheel path PM -> radial poles, >= 0

[materials.flywheel]                     # and [materials.bearing]
name = "text"
relative_permeability = 1.0              # >= 1
saturation_flux_density_T = 0.0          # > 0

[pm.upper]                               # and [pm.lower]
thickness_mm = 0.0                       # > 0
pole_area_mm2 = 0.0                      # full-ring magnet face area, > 0
remanence_T = 0.0                        # > 0
recoil_permeability = 1.0                # >= 1

[coils.axial]                            # and [coils.tilt], [coils.radial]
turns = 0                                # > 0
max_current_A = 0.0                      # > 0
count = 1                                # axial 1, tilt 4, radial 8

[[radial_pair]]                          # exactly 8, pole-pair order
cx = 0.0                                 # direction cosines of the pole axis
cy = 0.0
inner_area_mm2 = 0.0                     # > 0
outer_area_mm2 = 0.0                     # > 0

[rings.pm]                               # and [rings.axial_inner], [rings.axial_outer]
r_in_mm = 0.0                            # 0 < r_in < r_out
r_out_mm = 0.0

[[quadrant]]                             # exactly 4
psi_start_deg = 0.0                      # 0 < psi_end - psi_start <= 90
psi_end_deg = 0.0
mx_sign = 1.0                            # tilt-x command -> quadrant MMF sign
my_sign = 1.0                            # tilt-y command -> quadrant MMF sign
"""


def _require(table, key, where):
    if not isinstance(table, dict) or key not in table:
        raise ConfigError("missing key", key=f"{where}.{key}" if where else key)
    return table[key]


def _num(table, key, where, positive=False, nonneg=False):
    path = f"{where}.{key}"
    value = _require(table, key, where)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("expected a number", key=path)
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError("must be finite", key=path)
    if positive and value <= 0:
        raise ConfigError("must be positive", key=path)
    if nonneg and value < 0:
        raise ConfigError("must be non-negative", key=path)
    return value


def _material(doc, which):
    where = f"materials.{which}"
    table = _require(_require(doc, "materials", ""), which, "materials")
    return MaterialSpec(
        name=str(_require(table, "name", where)),
        relative_permeability=_num(table, "relative_permeability", where, positive=True),
        saturation_flux_density=_num(table, "saturation_flux_density_T", where, positive=True),
    )


def _pm(doc, which):
    where = f"pm.{which}"
    table = _require(_require(doc, "pm", ""), which, "pm")
    return PMRingSpec(
        thickness=_num(table, "thickness_mm", where, positive=True) * MM,
        pole_area=_num(table, "pole_area_mm2", where, positive=True) * MM2,
        remanence=_num(table, "remanence_T", where, positive=True),
        recoil_permeability=_num(table, "recoil_permeability", where, positive=True),
    )


def _coils(doc):
    coils = []
    for role, expected in COIL_COUNTS.items():
        where = f"coils.{role}"
        table = _require(_require(doc, "coils", ""), role, "coils")
        turns = _num(table, "turns", where, positive=True)
        current = _num(table, "max_current_A", where, positive=True)
        count = int(_num(table, "count", where, positive=True))
        if count != expected:
            raise ConfigError(f"expected {expected} {role} coil(s), got {count}", key=f"{where}.count")
        coils += [CoilSpec(turns=turns, max_current=current, role=role)] * count
    return tuple(coils)


def _poles(doc):
    pairs = doc.get("radial_pair")
    if not isinstance(pairs, list):
        raise ConfigError("missing key", key="radial_pair")
    if len(pairs) != N_RADIAL_PAIRS:
        raise ConfigError(f"expected {N_RADIAL_PAIRS} radial pole pairs, got {len(pairs)}", key="radial_pair")
    poles = []
    for j, pair in enumerate(pairs):
        where = f"radial_pair[{j}]"
        cx, cy = _num(pair, "cx", where), _num(pair, "cy", where)
        a_in = _num(pair, "inner_area_mm2", where, positive=True) * MM2
        a_out = _num(pair, "outer_area_mm2", where, positive=True) * MM2
        poles.append(PoleGeometry("radial_inner", j, area=a_in, cx=cx, cy=cy))
        poles.append(PoleGeometry("radial_outer", j, area=a_out, cx=cx, cy=cy))

    quads = doc.get("quadrant")
    if not isinstance(quads, list):
        raise ConfigError("missing key", key="quadrant")
    if len(quads) != N_QUADRANTS:
        raise ConfigError(f"expected {N_QUADRANTS} quadrants, got {len(quads)}", key="quadrant")
    spans, mx, my = [], [], []
    for i, q in enumerate(quads):
        where = f"quadrant[{i}]"
        spans.append((math.radians(_num(q, "psi_start_deg", where)), math.radians(_num(q, "psi_end_deg", where))))
        mx.append(_num(q, "mx_sign", where))
        my.append(_num(q, "my_sign", where))

    rings = _require(doc, "rings", "")
    for kind in SECTOR_KINDS:
        where = f"rings.{kind}"
        table = _require(rings, kind, "rings")
        r_in = _num(table, "r_in_mm", where, positive=True) * MM
        r_out = _num(table, "r_out_mm", where, positive=True) * MM
        for i, (a, b) in enumerate(spans):
            poles.append(PoleGeometry(kind, i, r_in=r_in, r_out=r_out, psi_start=a, psi_end=b))
    return tuple(poles), tuple(mx), tuple(my)


def config_from_dict(doc):
    """Build a validated :class:`MachineConfig` from a parsed config document."""
    m = _require(doc, "machine", "")
    poles, mx, my = _poles(doc)
    cfg = MachineConfig(
        name=str(m.get("name", "unnamed")),
        axial_gap=_num(m, "axial_gap_mm", "machine") * MM,
        radial_gap=_num(m, "radial_gap_mm", "machine") * MM,
        fixed_reluctance_axial=_num(m, "fixed_reluctance_axial_AT_per_Wb", "machine"),
        fixed_reluctance_radial=_num(m, "fixed_reluctance_radial_AT_per_Wb", "machine"),
        flywheel_mass=_num(m, "flywheel_mass_kg", "machine"),
        gravity=_num(m, "gravity_m_s2", "machine"),
        flywheel_material=_material(doc, "flywheel"),
        bearing_material=_material(doc, "bearing"),
        pm_upper=_pm(doc, "upper"),
        pm_lower=_pm(doc, "lower"),
        coils=_coils(doc),
        poles=poles,
        tilt_mx_pattern=mx,
        tilt_my_pattern=my,
    )
    errors = [issue for issue in validate(cfg) if issue.level == "error"]
    if errors:
        raise ConfigError(errors[0].message, key=errors[0].key)
    return cfg


def loads_config(text):
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"not valid TOML: {exc}") from exc
    return config_from_dict(doc)


def load_config(path):
    return loads_config(Path(path).read_text(encoding="utf-8"))


def _invert(si, forward, guess):
    """Boundary value ``b`` near ``guess`` with ``forward(b) == si`` exactly, if one exists."""
    lo = hi = guess
    candidates = [guess]
    for _ in range(4):
        lo, hi = math.nextafter(lo, -math.inf), math.nextafter(hi, math.inf)
        candidates += [lo, hi]
    for b in candidates:
        if forward(b) == si:
            return b
    return guess


def _unscale(si, scale):
    return _invert(si, lambda b: b * scale, si / scale)


def _undeg(rad):
    return _invert(rad, math.radians, math.degrees(rad))


def config_to_dict(cfg):
    def pm(spec):
        return {
            "thickness_mm": _unscale(spec.thickness, MM),
            "pole_area_mm2": _unscale(spec.pole_area, MM2),
            "remanence_T": spec.remanence,
            "recoil_permeability": spec.recoil_permeability,
        }

    def mat(spec):
        return {
            "name": spec.name,
            "relative_permeability": spec.relative_permeability,
            "saturation_flux_density_T": spec.saturation_flux_density,
        }

    coils = {}
    for role in COIL_COUNTS:
        group = cfg.coils_of(role)
        coils[role] = {"turns": group[0].turns, "max_current_A": group[0].max_current, "count": len(group)}

    pairs = [
        {
            "cx": pi.cx,
            "cy": pi.cy,
            "inner_area_mm2": _unscale(pi.area, MM2),
            "outer_area_mm2": _unscale(po.area, MM2),
        }
        for pi, po in zip(cfg.radial_inner, cfg.radial_outer)
    ]
    rings = {}
    for kind in SECTOR_KINDS:
        first = cfg.poles_of(kind)[0]
        rings[kind] = {"r_in_mm": _unscale(first.r_in, MM), "r_out_mm": _unscale(first.r_out, MM)}
    quads = [
        {
            "psi_start_deg": _undeg(p.psi_start),
            "psi_end_deg": _undeg(p.psi_end),
            "mx_sign": cfg.tilt_mx_pattern[p.index],
            "my_sign": cfg.tilt_my_pattern[p.index],
        }
        for p in cfg.poles_of("pm")
    ]
    return {
        "machine": {
            "name": cfg.name,
            "flywheel_mass_kg": cfg.flywheel_mass,
            "gravity_m_s2": cfg.gravity,
            "axial_gap_mm": _unscale(cfg.axial_gap, MM),
            "radial_gap_mm": _unscale(cfg.radial_gap, MM),
            "fixed_reluctance_axial_AT_per_Wb": cfg.fixed_reluctance_axial,
            "fixed_reluctance_radial_AT_per_Wb": cfg.fixed_reluctance_radial,
        },
        "materials": {"flywheel": mat(cfg.flywheel_material), "bearing": mat(cfg.bearing_material)},
        "pm": {"upper": pm(cfg.pm_upper), "lower": pm(cfg.pm_lower)},
        "coils": coils,
        "radial_pair": pairs,
        "rings": rings,
        "quadrant": quads,
    }


def dumps_config(cfg):
    return tomli_w.dumps(config_to_dict(cfg))


def dump_config(cfg, path):
    Path(path).write_text(dumps_config(cfg), encoding="utf-8")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    level: str  # "error" | "warning"
    message: str
    key: str = ""

    def __str__(self):
        return f"{self.level}: {self.key + ': ' if self.key else ''}{self.message}"


def validate(cfg):
    """Return the list of violated invariants (empty when the config is sound)."""
    issues = []

    def err(msg, key=""):
        issues.append(Issue("error", msg, key))

    def warn(msg, key=""):
        issues.append(Issue("warning", msg, key))

    if not cfg.axial_gap > 0:
        err("nominal gap must be positive", "machine.axial_gap_mm")
    if not cfg.radial_gap > 0:
        err("nominal gap must be positive", "machine.radial_gap_mm")
    if cfg.fixed_reluctance_axial < 0 or cfg.fixed_reluctance_radial < 0:
        err("fixed reluctances must be non-negative", "machine.fixed_reluctance")
    if not cfg.flywheel_mass > 0:
        err("flywheel mass must be positive", "machine.flywheel_mass_kg")
    if not cfg.gravity > 0:
        err("gravity must be positive", "machine.gravity_m_s2")

    for which, mat in (("flywheel", cfg.flywheel_material), ("bearing", cfg.bearing_material)):
        if mat.relative_permeability < 1:
            err("relative permeability must be >= 1", f"materials.{which}.relative_permeability")
        if not mat.saturation_flux_density > 0:
            err("saturation flux density must be positive", f"materials.{which}.saturation_flux_density_T")

    for which, pm in (("upper", cfg.pm_upper), ("lower", cfg.pm_lower)):
        for attr in ("thickness", "pole_area", "remanence"):
            if not getattr(pm, attr) > 0:
                err(f"{attr} must be positive", f"pm.{which}.{attr}")
        if pm.recoil_permeability < 1:
            err("recoil permeability must be >= 1", f"pm.{which}.recoil_permeability")

    for role, expected in COIL_COUNTS.items():
        group = cfg.coils_of(role)
        if len(group) != expected:
            err(f"expected {expected} {role} coil(s), got {len(group)}", f"coils.{role}")
        for c in group:
            if not (c.turns > 0 and c.max_current > 0):
                err("turns and max current must be positive", f"coils.{role}")
                break

    inner, outer = cfg.radial_inner, cfg.radial_outer
    if len(inner) != N_RADIAL_PAIRS or len(outer) != N_RADIAL_PAIRS:
        err(f"expected {N_RADIAL_PAIRS} radial pole pairs", "radial_pair")
    for p in inner + outer:
        if not p.area > 0:
            err("pole area must be positive", f"radial_pair[{p.index}]")
    # the validator cross-checks the printed coefficients against exact trig
    exact = {(round(math.cos(a), 6), round(math.sin(a), 6)) for a in np.radians(22.5 + 45.0 * np.arange(8))}
    for p in inner:
        if not any(abs(p.cx - ex) <= 1e-2 and abs(p.cy - ey) <= 1e-2 for ex, ey in exact):
            warn(f"direction cosines ({p.cx}, {p.cy}) off the 22.5+45k deg pattern", f"radial_pair[{p.index}]")
        elif not any(abs(abs(p.cx) - a) <= 1e-3 and abs(abs(p.cy) - b) <= 1e-3 for a, b in ((0.38, 0.92), (0.92, 0.38))):
            warn(f"direction cosines ({p.cx}, {p.cy}) differ from (+-0.38, +-0.92) pattern", f"radial_pair[{p.index}]")
    if len(inner) == N_RADIAL_PAIRS:
        for j, p in enumerate(inner):
            q = inner[(j + 4) % 8]
            if abs(p.cx + q.cx) > 1e-9 or abs(p.cy + q.cy) > 1e-9:
                warn(f"pair {j + 1} is not opposite pair {(j + 4) % 8 + 1}", f"radial_pair[{j}]")

    for kind in SECTOR_KINDS:
        group = cfg.poles_of(kind)
        if len(group) != N_QUADRANTS:
            err(f"expected {N_QUADRANTS} {kind} quadrants", f"rings.{kind}")
            continue
        for p in group:
            if not (p.r_out > p.r_in > 0):
                err("need r_out > r_in > 0", f"rings.{kind}")
                break
        for p in group:
            span = p.psi_end - p.psi_start
            if not (0 < span <= math.pi / 2 + 1e-12):
                err("quadrant span must be in (0, 90] deg", f"quadrant[{p.index}]")
                break
        total = sum(p.psi_end - p.psi_start for p in group)
        if abs(total - 2 * math.pi) > 1e-9:
            warn("quadrants do not tile the full circle", "quadrant")
    if len(cfg.tilt_mx_pattern) != N_QUADRANTS or len(cfg.tilt_my_pattern) != N_QUADRANTS:
        err("tilt patterns need one sign per quadrant", "quadrant")
    else:
        if abs(sum(cfg.tilt_mx_pattern)) > 1e-12 or abs(sum(cfg.tilt_my_pattern)) > 1e-12:
            warn("tilt pattern does not sum to zero (tilt command would change axial force)", "quadrant")
    return issues


def reference_config():
    """The shipped configuration (reconstructed geometry, see README)."""
    text = resources.files("comboamb").joinpath("data/reference.toml").read_text(encoding="utf-8")
    return loads_config(text)
