"""Command-line front end.

Every CSV starts with ``#`` header lines carrying the run manifest digest,
and numbers are written with 9 significant digits, so identical inputs give
byte-identical files. The JSON summary opens with the manifest, including
a timestamp taken from ``SOURCE_DATE_EPOCH`` when that is set.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path

import numpy as np

from . import analysis as an
from .config import SCHEMA, dumps_config, load_config, reference_config
from .errors import AMBError, CalibrationError
from .flux import (
    POLE_LABELS,
    Excitation,
    FluxComponents,
    flux_densities,
    saturation_flags,
)
from .forces import Wrench, solve
from .geometry import Pose
from .reluctance import DEFAULT_QUAD_ORDER

FMT = "%.8e"


def tool_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_digest: str
    parameters: dict
    version: str
    timestamp: str

    @property
    def digest(self):
        """Content hash of everything except the timestamp."""
        blob = json.dumps([self.command, self.config_digest, self.parameters, self.version], sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def header(self):
        return (
            f"# comboamb {self.version} {self.command}\n"
            f"# manifest {self.digest} config {self.config_digest}\n"
        )

    def as_dict(self):
        return {
            "command": self.command,
            "config_digest": self.config_digest,
            "manifest_digest": self.digest,
            "parameters": self.parameters,
            "version": self.version,
            "timestamp": self.timestamp,
        }


def _timestamp():
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return FMT % (float(v) + 0.0)  # + 0.0 folds -0.0 into 0.0


def write_csv(path, manifest, columns, rows):
    lines = [manifest.header(), ",".join(columns) + "\n"]
    lines += [",".join(_fmt(v) for v in row) + "\n" for row in rows]
    Path(path).write_text("".join(lines), encoding="utf-8", newline="\n")


def write_summary(path, manifest, body):
    # JSON has no comments, so the manifest is the first key instead of a header
    doc = {"manifest": manifest.as_dict(), **body}
    Path(path).write_text(json.dumps(doc, indent=2, default=_json_default) + "\n", encoding="utf-8", newline="\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------


def _pose(args):
    return Pose.from_boundary(args.x, args.y, args.z, args.theta_x, args.theta_y)


def _excitation(args):
    return Excitation(
        i_axial=args.i_axial,
        tilt_mx=args.tilt_mx,
        tilt_my=args.tilt_my,
        radial_fx=args.radial_fx,
        radial_fy=args.radial_fy,
    )


def _load(args):
    return load_config(args.config) if args.config else reference_config()


def _manifest(args, cfg, params):
    return RunManifest(args.command, cfg.digest(), params, tool_version(), _timestamp())


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _operating_point_params(args):
    keys = ("x", "y", "z", "theta_x", "theta_y", "i_axial", "tilt_mx", "tilt_my", "radial_fx", "radial_fy")
    return {k: getattr(args, k) for k in keys}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

FLUX_COLUMNS = ("pole", "index", "pm_Wb", "ia_Wb", "it_Wb", "ir_Wb", "total_Wb", "B_total_T")
WRENCH_COLUMNS = ("Fx_N", "Fy_N", "Fz_N", "Mx_Nm", "My_Nm")


def cmd_solve(args):
    cfg = _load(args)
    pose, ex = _pose(args), _excitation(args)
    sol = solve(cfg, pose, ex, args.quad_order)
    manifest = _manifest(args, cfg, {**_operating_point_params(args), "quad_order": args.quad_order})

    total = sol.flux.total
    b_total = flux_densities(cfg, total)
    rows = []
    for g in FluxComponents.GROUPS:
        parts = [getattr(getattr(sol.flux, s), g) for s in sol.flux.SOURCES]
        for k in range(len(getattr(total, g))):
            rows.append((POLE_LABELS[g], k + 1, *(p[k] for p in parts), getattr(total, g)[k], getattr(b_total, g)[k]))

    out = _outdir(args)
    write_csv(out / "fluxes.csv", manifest, FLUX_COLUMNS, rows)
    write_csv(out / "wrench.csv", manifest, WRENCH_COLUMNS, [tuple(sol.wrench.as_array())])
    flags = saturation_flags(cfg, total)
    write_summary(
        out / "summary.json",
        manifest,
        {
            "wrench": dict(zip(Wrench.FIELDS, sol.wrench.as_array())),
            "weight_N": cfg.weight,
            "bias_flux_density_T": an.bias_densities(cfg, args.quad_order),
            "saturation_flags": [{"pole": p, "B_T": b} for p, b in flags],
        },
    )
    w = sol.wrench
    print(f"Fx {w.Fx:.4f} N  Fy {w.Fy:.4f} N  Fz {w.Fz:.2f} N  Mx {w.Mx:.4f} Nm  My {w.My:.4f} Nm")
    for p, b in flags:
        print(f"warning: {p} at {b:.3f} T exceeds the bearing steel saturation level")
    return 0


def cmd_sweep(args):
    cfg = _load(args)
    spec = an.SweepSpec(args.axis, args.start, args.stop, args.samples, _pose(args), _excitation(args), args.quad_order)
    table = an.sweep(spec, cfg)
    manifest = _manifest(
        args,
        cfg,
        {"axis": spec.axis, "start": args.start, "stop": args.stop, "samples": args.samples,
         "quad_order": args.quad_order, **_operating_point_params(args)},
    )
    rows = [(v, *w.as_array()) for v, w in zip(table.values, table.wrenches)]
    out = _outdir(args)
    write_csv(out / "sweep.csv", manifest, (f"{spec.axis}_{spec.unit}", *WRENCH_COLUMNS), rows)
    body = {}
    try:
        rep = an.extract_stiffness(table, cfg)
        body["stiffness"] = _report_dict(rep)
        print(f"{rep.axis} {rep.kind} stiffness {rep.boundary_value:.6g} {rep.unit} (R^2 {rep.r_squared:.6f})")
    except (ValueError, AMBError):
        pass
    write_summary(out / "summary.json", manifest, body)
    return 0


def _report_dict(rep):
    return {
        "axis": rep.axis,
        "kind": rep.kind,
        "value": rep.boundary_value,
        "unit": rep.unit,
        "r_squared": rep.r_squared,
        "method": rep.method,
        "published_emcm": rep.target(),
    }


STIFFNESS_COLUMNS = ("axis", "kind", "method", "computed", "published_emcm", "ratio", "r_squared", "unit")


def cmd_stiffness(args):
    cfg = _load(args)
    reports = an.stiffness_table(cfg, samples=args.samples, quad_order=args.quad_order)
    manifest = _manifest(args, cfg, {"samples": args.samples, "quad_order": args.quad_order})
    rows = []
    print(f"{'axis':9s} {'kind':9s} {'computed':>12s} {'EMCM':>10s} {'ratio':>7s}  unit")
    for r in reports:
        target = r.target()
        rows.append((r.axis, r.kind, r.method, r.boundary_value, target, r.boundary_value / target, r.r_squared, r.unit))
        print(f"{r.axis:9s} {r.kind:9s} {r.boundary_value:12.1f} {target:10.0f} {r.boundary_value / target:7.3f}  {r.unit}")
    out = _outdir(args)
    write_csv(out / "stiffness.csv", manifest, STIFFNESS_COLUMNS, rows)
    write_summary(out / "summary.json", manifest, {"stiffness": [_report_dict(r) for r in reports]})
    return 0


def cmd_coupling(args):
    cfg = _load(args)
    fn = an.coupling_position if args.kind == "position" else an.coupling_current
    ga = np.linspace(*args.range_a[:2], int(args.range_a[2]))
    gb = np.linspace(*args.range_b[:2], int(args.range_b[2]))
    cmap = fn(cfg, args.axis_a, ga, args.axis_b, gb, args.component, args.quad_order)
    manifest = _manifest(
        args,
        cfg,
        {"kind": args.kind, "axis_a": cmap.axes[0], "range_a": list(args.range_a), "axis_b": cmap.axes[1],
         "range_b": list(args.range_b), "component": args.component, "quad_order": args.quad_order},
    )
    rows = [(a, b, cmap.values[i, j], cmap.relative[i, j]) for i, a in enumerate(ga) for j, b in enumerate(gb)]
    ua, ub = an.SWEEP_AXES[cmap.axes[0]][2], an.SWEEP_AXES[cmap.axes[1]][2]
    out = _outdir(args)
    write_csv(out / "coupling.csv", manifest, (f"{cmap.axes[0]}_{ua}", f"{cmap.axes[1]}_{ub}", args.component, "relative_change"), rows)
    write_summary(out / "summary.json", manifest, {"nominal": cmap.nominal, "max_abs_relative_change": float(np.max(np.abs(cmap.relative)))})
    print(f"{args.component} nominal {cmap.nominal:.6g}; largest relative change {np.max(np.abs(cmap.relative)) * 100:.3f} %")
    return 0


def cmd_calibrate(args):
    cfg = _load(args)
    result = an.calibrate_to_targets(cfg, max_iter=args.max_iter, quad_order=args.quad_order)
    manifest = _manifest(args, cfg, {"max_iter": args.max_iter, "quad_order": args.quad_order})
    out = _outdir(args)
    rows = [(k, v) for k, v in result.parameters.items()]
    write_csv(out / "calibration.csv", manifest, ("parameter", "value"), rows)
    write_summary(
        out / "summary.json",
        manifest,
        {"parameters": result.parameters, "residuals": result.residuals, "metrics": result.metrics,
         "converged": result.converged, "evaluations": result.evaluations, "message": result.message},
    )
    if not result.converged:
        raise CalibrationError(result.message, residuals=result.residuals)
    text = manifest.header() + dumps_config(result.config)
    (out / "calibrated.toml").write_text(text, encoding="utf-8", newline="\n")
    print(f"converged in {result.evaluations} evaluations: " + ", ".join(f"{k} {v:.6f}" for k, v in result.parameters.items()))
    return 0


RIG_COLUMNS = ("probe", "force", "current_A", "displacement")


def cmd_measure(args):
    cfg = _load(args)
    mode = {"current": "current_stiffness", "position": "position_stiffness"}.get(args.mode, args.mode)
    probes = an.default_probes(cfg, args.axis, mode, args.probes, args.fraction, args.quad_order)
    noise = args.noise / 100.0
    record, report = an.virtual_measurement(
        cfg, args.axis, mode, probes, noise=noise, seed=args.seed, gain=args.gain, quad_order=args.quad_order
    )
    manifest = _manifest(
        args,
        cfg,
        {"axis": args.axis, "mode": mode, "probes": args.probes, "fraction": args.fraction, "noise_pct": args.noise,
         "seed": args.seed, "gain": args.gain, "quad_order": args.quad_order},
    )
    rows = [(k, f, i, d) for k, (f, i, d) in enumerate(zip(record.force, record.current, record.displacement))]
    out = _outdir(args)
    write_csv(out / "rig.csv", manifest, RIG_COLUMNS, rows)
    write_csv(
        out / "report.csv",
        manifest,
        ("axis", "kind", "method", "value", "unit", "r_squared"),
        [(report.axis, report.kind, report.method, report.boundary_value, report.unit, report.r_squared)],
    )
    write_summary(out / "summary.json", manifest, {"report": _report_dict(report)})
    print(f"{report.axis} {report.kind} stiffness {report.boundary_value:.6g} {report.unit} (R^2 {report.r_squared:.6f})")
    return 0


def cmd_print_schema(args):
    sys.stdout.write(SCHEMA)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _common(p, out=True):
    p.add_argument("--config", help="machine config (TOML); defaults to the shipped reference machine")
    if out:
        p.add_argument("--out", default=".", help="output directory (default: current directory)")
    p.add_argument("--quad-order", type=int, default=DEFAULT_QUAD_ORDER, help="Gauss-Legendre order per dimension")


def _operating_point(p):
    g = p.add_argument_group("operating point (boundary units)")
    for name, unit in (("x", "mm"), ("y", "mm"), ("z", "mm"), ("theta-x", "deg"), ("theta-y", "deg")):
        g.add_argument(f"--{name}", type=float, default=0.0, help=unit)
    g.add_argument("--i-axial", type=float, default=0.0, help="axial coil current, A")
    for name in ("tilt-mx", "tilt-my", "radial-fx", "radial-fy"):
        g.add_argument(f"--{name}", type=float, default=0.0, help="command, AT")


def _samples(v):
    n = int(v)
    if n < 3:
        raise argparse.ArgumentTypeError("needs at least 3 samples")
    return n


def build_parser():
    parser = argparse.ArgumentParser(prog="comboamb", description="Circuit model of a PM-biased 5-axis combination magnetic bearing.")
    parser.add_argument("--print-schema", action="store_true", help="print the config schema and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("solve", help="solve one operating point")
    _common(p)
    _operating_point(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="sweep one pose or excitation axis")
    _common(p)
    _operating_point(p)
    p.add_argument("--axis", required=True, choices=sorted(set(an.SWEEP_AXES) | set(an.AXIS_ALIASES)))
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--samples", type=_samples, default=21)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stiffness", help="current and position stiffness vs the published EMCM values")
    _common(p)
    p.add_argument("--samples", type=_samples, default=11)
    p.set_defaults(func=cmd_stiffness)

    p = sub.add_parser("coupling", help="coupling map over two pose or two excitation axes")
    _common(p)
    p.add_argument("--kind", choices=("position", "current"), default="position")
    p.add_argument("--axis-a", default="theta_x")
    p.add_argument("--axis-b", default="theta_y")
    p.add_argument("--range-a", nargs=3, type=float, default=(0.0, 0.04, 5), metavar=("START", "STOP", "N"))
    p.add_argument("--range-b", nargs=3, type=float, default=(0.0, 0.04, 5), metavar=("START", "STOP", "N"))
    p.add_argument("--component", choices=Wrench.FIELDS, default="Fz")
    p.set_defaults(func=cmd_coupling)

    p = sub.add_parser("calibrate", help="fit magnet MMF and pole areas to the bias targets")
    _common(p)
    p.add_argument("--max-iter", type=int, default=an.MAX_CALIBRATION_ITER)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("measure", help="virtual load-rig identification of one axis")
    _common(p)
    p.add_argument("--axis", choices=sorted(an.STIFFNESS_AXES), default="axial")
    p.add_argument("--mode", choices=("current", "position", *an.RIG_MODES), default="current")
    p.add_argument("--probes", type=_samples, default=50)
    p.add_argument("--fraction", type=float, default=1e-3, help="probe amplitude as a fraction of the working range")
    p.add_argument("--noise", type=float, default=0.0, help="channel noise, percent of full scale")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gain", type=float, default=0.0, help="position-mode controller gain, A per SI unit")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("print-schema", help="print the config schema")
    p.set_defaults(func=cmd_print_schema)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_schema:
        return cmd_print_schema(args)
    if not args.command:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except AMBError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
