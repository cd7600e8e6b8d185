"""Compare the numba and numpy backends on the two hot paths: one polyhedron
field evaluation and one dumbbell RK4 step.

    python3 benchmarks/bench_gravity.py [--mesh builtin:itokawa_64.obj] [--repeat 2000]
"""
import argparse
import time

import numpy as np

from astroland.gravity import GravityModel
from astroland.rigid_body import AsteroidModel, DumbbellParams, SpacecraftState, WrenchInput, step_dumbbell
from astroland.scenario import resolve_mesh_path
from astroland.shape_model import ellipsoid_mesh, load_mesh
from astroland.so3 import axis_angle


def timed(fn, repeat):
    fn()  # warm-up, includes JIT compile
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mesh", default="builtin:itokawa_64.obj")
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--large", action="store_true", help="also time a 1984-face ellipsoid")
    args = ap.parse_args()

    meshes = [(args.mesh, load_mesh(resolve_mesh_path(args.mesh, ".")))]
    if args.large:
        meshes.append(("ellipsoid 1984 faces", ellipsoid_mesh((300.0, 200.0, 150.0), 32, 32)))

    for name, mesh in meshes:
        g = GravityModel.from_mesh(mesh, 1900.0)
        point = np.array([900.0, -400.0, 250.0])
        ast = AsteroidModel(g, 2 * np.pi / 43560)
        params = DumbbellParams.symmetric(500.0, 3.0, 0.5)
        state = SpacecraftState(point, np.zeros(3), axis_angle([0, 0, 1], 0.3), np.zeros(3), 0.0)
        wrench = WrenchInput.zero()
        print(f"{name}: {mesh.n_faces} faces")
        rows = {}
        for backend in ("numba", "numpy"):
            field = timed(lambda: g.evaluate(point, backend=backend), args.repeat)
            step = timed(lambda: step_dumbbell(state, ast, params, wrench, 1.0, backend=backend),
                         max(1, args.repeat // 10))
            rows[backend] = (field, step)
            print(f"  {backend:6s} field {field * 1e6:9.1f} us   step {step * 1e6:9.1f} us")
        f = rows["numpy"][0] / rows["numba"][0]
        s = rows["numpy"][1] / rows["numba"][1]
        print(f"  speedup field x{f:.1f}  step x{s:.1f}")


if __name__ == "__main__":
    main()
