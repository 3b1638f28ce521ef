"""Four cones and nontrivial loop holonomy on a torus of revolution.

Cones of 3pi/2 and 5pi/2 sit in two pairs; the two homology loops are
asked to rotate by +pi/2 and -pi/2. After convergence the metric is laid
out in the plane and written as an OBJ with one texture coordinate per
corner.
"""
import sys
import tempfile
from pathlib import Path

import numpy as np

from seamless_penner import HolonomySignature, lay_out, newton_solve, rmsre, seamlessness_report
from seamless_penner import torus_of_revolution
from seamless_penner.layout import write_obj_with_uv
from seamless_penner.mesh import log_lengths
from seamless_penner.metric import corner_angles
from seamless_penner.solver import SolveOptions

mesh, P = torus_of_revolution()
lam0 = log_lengths(mesh, P)
k = np.full(mesh.n_vertices, 4)
k[[0, 20, 10, 30]] = [3, 5, 3, 5]
sig = HolonomySignature(k, [1, -1])

res = newton_solve(mesh, lam0, sig, SolveOptions(max_iterations=100))
print(f"{res.status} in {res.iterations} iterations, max|F| = {res.max_residual:.2e}")
print("steps:", res.steps)

tr = res.trace
alpha = corner_angles(tr.mesh, tr.lam)
layout = lay_out(tr.mesh, tr.lam)
rep = seamlessness_report(tr.constraints, alpha, layout, tr.lam)
print("loop deviations:", rep.loop_deviation)
print("layout edge length error:", f"{rep.layout_length_error:.2e}")
print("cut edges:", int(layout.cut.sum()), "of", tr.mesh.n_edges)

# distortion against the input metric, on the input edges
ell, ell0 = np.exp(res.lam / 2), np.exp(lam0 / 2)
print("RMSRE:", f"{rmsre(ell, ell0):.4f}")

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
write_obj_with_uv(out / "torus_uv.obj", tr.mesh, layout)
print("wrote", out / "torus_uv.obj")
