"""Conformal scale factors versus the full Penner-coordinate Newton solve.

Both reach the same angle targets. The conformal solve only moves one
scale factor per vertex, so its change to the edge coordinates is
structured (lam_ij changes by u_i + u_j); the full solve takes the least
norm step in all edge coordinates and ends much closer to the input.
"""
import numpy as np

from seamless_penner import HolonomySignature, conformal_solve, newton_solve, octahedron
from seamless_penner.layout import symmetric_stretch
from seamless_penner.mesh import log_lengths
from seamless_penner.solver import SolveOptions

mesh, P = octahedron()
lam0 = log_lengths(mesh, P)
sig = HolonomySignature([1, 1, 1, 1, 1, 3])
opts = SolveOptions(acknowledge_invalid=True)

full = newton_solve(mesh, lam0, sig, opts)
conf = conformal_solve(mesh, lam0, sig, opts)
for name, r in (("full", full), ("conformal", conf)):
    stretch = symmetric_stretch(np.exp(r.lam / 2), np.exp(lam0 / 2))
    print(f"{name:10s} {r.iterations:2d} it  max|F| {r.max_residual:.1e}  "
          f"|lam - lam0| {np.linalg.norm(r.lam - lam0):7.4f}  max stretch {stretch.max():.3f}")
print("scale factors u:", np.round(conf.u, 4))
