"""Newton iteration on the octahedron: five right-angle cones.

Every vertex of the regular octahedron carries 4pi/3 of angle. We ask for
pi/2 at five vertices and let the sixth take the rest. The quarter-turn
total is 8, not the 16 that Gauss-Bonnet needs on a sphere, so the
signature is flagged invalid and we have to acknowledge that to solve.
The solver still converges: the sixth vertex is not constrained.
"""
import numpy as np

from seamless_penner import HolonomySignature, newton_solve, octahedron, validate_signature
from seamless_penner.holonomy import gauss_bonnet_total
from seamless_penner.mesh import log_lengths
from seamless_penner.metric import corner_angles, vertex_angle_sums
from seamless_penner.solver import SolveOptions

mesh, P = octahedron()
lam0 = log_lengths(mesh, P)
sig = HolonomySignature([1, 1, 1, 1, 1, 3])

report = validate_signature(mesh, sig)
print("valid:", report.valid, report.reasons)
print("quarter turns:", sig.k_vertex.sum(), "needed:", gauss_bonnet_total(mesh))

res = newton_solve(mesh, lam0, sig, SolveOptions(eps_c=1e-12, acknowledge_invalid=True))
print(f"\n{res.status} after {res.iterations} iterations")
print(" it   max|F|       step   flips")
for i, r in enumerate(res.max_residuals):
    step = res.steps[i] if i < len(res.steps) else float("nan")
    print(f"{i:3d}  {r:.3e}  {step:5.3g}  {res.flip_counts[i]:4d}")

tr = res.trace
sums = vertex_angle_sums(tr.mesh, corner_angles(tr.mesh, tr.lam))
print("\nangle sums / (pi/2):", np.round(sums / (np.pi / 2), 12))
print("the dropped vertex absorbed", f"{sums[-1]:.6f} rad")
