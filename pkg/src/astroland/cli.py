"""Command-line entry point: ``astroland run|field|validate-mesh|gains``."""
from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import controller as ctl
from .gravity import G_UNIVERSAL, GravityError, GravityModel
from .rigid_body import inertia_from_dumbbell
from .scenario import (
    BUILTIN_PREFIX, ConfigError, Termination, export, load_config, resolve_mesh_path, run_scenario,
)
from .shape_model import EulerCharacteristicWarning, MeshError, build_topology, load_mesh

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TERMINATED = 3
EXIT_NUMERICAL = 4

_EXIT_FOR = {
    Termination.COMPLETED: EXIT_OK,
    Termination.COLLISION: EXIT_TERMINATED,
    Termination.COMMAND_BELOW_SURFACE: EXIT_TERMINATED,
    Termination.NUMERICAL_ABORT: EXIT_NUMERICAL,
}


def _point(text):
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}") from None
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    return np.array(values)


def _mesh_arg(value):
    return resolve_mesh_path(value, ".") if value.startswith(BUILTIN_PREFIX) else value


def _print_json(obj, stream=None):
    stream = stream or sys.stdout
    stream.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_run(args):
    cfg = load_config(args.config)
    log = run_scenario(cfg)
    if args.seed is not None:
        log.summary["seed"] = args.seed
    csv_path = args.csv or cfg.output_csv
    json_path = args.json or cfg.output_json
    if csv_path:
        export(log, "csv", csv_path)
    if json_path:
        export(log, "json", json_path)
    reason = Termination(log.summary["termination_reason"])
    if not args.quiet:
        _print_json({k: log.summary[k] for k in (
            "termination_reason", "termination_detail", "n_records", "t_final",
            "final_e_x", "final_Psi", "integral_u_f", "integral_u_m",
        )})
    return _EXIT_FOR[reason]


def cmd_field(args):
    mesh = load_mesh(_mesh_arg(args.mesh), units=args.units)
    model = GravityModel.from_mesh(mesh, args.density, args.G)
    ev = model.evaluate(args.point)
    out = ev.to_dict()
    out["point"] = args.point.tolist()
    _print_json(out)
    return EXIT_OK


def cmd_validate_mesh(args):
    mesh = load_mesh(_mesh_arg(args.mesh), units=args.units)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", EulerCharacteristicWarning)
        topo = build_topology(mesh)
    _print_json({
        "valid": True,
        "vertices": mesh.n_vertices,
        "faces": mesh.n_faces,
        "edges": topo.n_edges,
        "euler_characteristic": topo.euler_characteristic,
        "volume_m3": mesh.signed_volume(),
        "max_radius_m": mesh.max_radius(),
        "warnings": [str(w.message) for w in caught],
    })
    return EXIT_OK


def cmd_gains(args):
    k_x, k_v = ctl.second_order_gains(args.mass, args.zeta, args.wn)
    out = {"k_x": k_x, "k_v": k_v}
    inertia = args.inertia
    if inertia is None and args.length is not None:
        half = 0.5 * args.length * np.array([1.0, 0.0, 0.0])
        J = inertia_from_dumbbell(0.5 * args.mass, 0.5 * args.mass, half, -half, args.sphere_radius)
        inertia = float(np.linalg.eigvalsh(J).max())
    if inertia is not None:
        wn_att = args.wn_attitude if args.wn_attitude is not None else args.wn
        k_R, k_Om = ctl.second_order_gains(inertia, args.zeta, wn_att)
        out.update({"k_R": k_R, "k_Omega": k_Om, "inertia": inertia})
    _print_json(out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="astroland", description="Asteroid landing simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario config")
    p.add_argument("config")
    p.add_argument("--csv", help="CSV output path (overrides output.csv)")
    p.add_argument("--json", help="JSON output path (overrides output.json)")
    p.add_argument("--seed", type=int, help="recorded in the summary; the core has no randomness")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("field", help="evaluate the polyhedron field at one point")
    p.add_argument("--mesh", default=BUILTIN_PREFIX + "itokawa_64.obj")
    p.add_argument("--point", type=_point, required=True, help="body-frame point x,y,z in meters")
    p.add_argument("--density", type=float, default=1900.0, help="kg/m^3")
    p.add_argument("--G", type=float, default=G_UNIVERSAL)
    p.add_argument("--units", choices=("m", "km"), help="override the mesh length unit")
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("validate-mesh", help="check that a mesh is a closed oriented surface")
    p.add_argument("mesh")
    p.add_argument("--units", choices=("m", "km"))
    p.set_defaults(func=cmd_validate_mesh)

    p = sub.add_parser("gains", help="controller gains from damping ratio and natural frequency")
    p.add_argument("--mass", type=float, required=True, help="total mass, kg")
    p.add_argument("--zeta", type=float, default=ctl.DEFAULT_ZETA)
    p.add_argument("--wn", type=float, required=True, help="translational natural frequency, rad/s")
    p.add_argument("--inertia", type=float, help="largest principal inertia, kg m^2")
    p.add_argument("--length", type=float, help="dumbbell length, m (inertia from equal masses)")
    p.add_argument("--sphere-radius", type=float, default=0.5)
    p.add_argument("--wn-attitude", type=float, help="attitude natural frequency, rad/s (default --wn)")
    p.set_defaults(func=cmd_gains)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MeshError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GravityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
