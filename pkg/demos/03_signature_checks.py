"""Signatures that no metric can realize are caught before solving."""
import numpy as np

from seamless_penner import HolonomySignature, torus_of_revolution, validate_signature
from seamless_penner import tetrahedron

torus, _ = torus_of_revolution()
sphere, _ = tetrahedron()
nv = torus.n_vertices


def show(name, mesh, sig):
    rep = validate_signature(mesh, sig)
    print(f"{name:28s} valid={rep.valid!s:5s} {'; '.join(rep.messages)}")


k = np.full(nv, 4)
show("flat torus", torus, HolonomySignature(k, [0, 0]))
show("flat torus, turning loop", torus, HolonomySignature(k, [1, 0]))
k2 = k.copy()
k2[[0, 7]] = [3, 5]
show("torus, one 3 and one 5 cone", torus, HolonomySignature(k2, [0, 0]))
k4 = k.copy()
k4[[0, 7, 20, 27]] = [3, 5, 3, 5]
show("torus, four cones", torus, HolonomySignature(k4, [0, 1]))
show("tetrahedron, pi at corners", sphere, HolonomySignature([2, 2, 2, 2]))
show("tetrahedron, wrong total", sphere, HolonomySignature([2, 2, 2, 3]))
show("tetrahedron, zero cone", sphere, HolonomySignature([0, 2, 3, 3]))
