"""Pulling a badly shaped metric toward the flat one before solving.

A squashed torus has thin triangles. Interpolation scales the Penner coordinates
by beta^n until the Delaunay triangulation has no angle below alpha_min,
then shifts them back to the original mean.
"""
import numpy as np

from seamless_penner import HolonomySignature, newton_solve, torus_of_revolution
from seamless_penner.mesh import log_lengths
from seamless_penner.preprocess import PreprocessOptions, delaunay_min_angle, interpolate_metric

mesh, P = torus_of_revolution()
lam0 = log_lengths(mesh, P * np.array([1.0, 1.0, 0.08]))
print(f"input min Delaunay angle: {np.degrees(delaunay_min_angle(mesh, lam0)):.2f} deg")

for amin in (10, 20, 30, 40):
    out = interpolate_metric(mesh, lam0, PreprocessOptions(alpha_min=np.radians(amin), beta=0.9))
    print(f"alpha_min {amin:2d} deg -> n = {out.steps:2d}, min angle {np.degrees(out.min_angle):.2f} deg")

out = interpolate_metric(mesh, lam0, PreprocessOptions(alpha_min=np.radians(30)))
k = np.full(mesh.n_vertices, 4)
k[[0, 20, 10, 30]] = [3, 5, 3, 5]
res = newton_solve(mesh, out.lam, HolonomySignature(k, [0, 0]))
print(f"solve from the interpolated metric: {res.status}, {res.iterations} iterations")
