"""Extended Newton iteration on Penner coordinates.

Each iteration retriangulates to the Delaunay connectivity, evaluates the
constraint residual ``F = C alpha - theta`` there, and takes the least-norm
step ``d = J^T (J J^T)^{-1} (-F)`` with ``J = C dalpha/dlam~ D``, where
``D`` is the Jacobian of the flip sequence. Step sizes come from a
backtracking search that keeps ``||F||`` from increasing and ``F`` from
reversing direction.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import (
    InvalidSignature,
    LinearSolveFailed,
    LineSearchStalled,
    SeamlessError,
)
from .holonomy import (
    ConstraintSystem,
    HolonomySignature,
    build_constraints,
    homology_basis,
    validate_signature,
)
from .mesh import Mesh
from .metric import EPS_DELAUNAY, FlipTrace, angles_and_gradient, corner_angles, make_delaunay

logger = logging.getLogger(__name__)

CONVERGED = "Converged"
MAX_ITERATIONS = "MaxIterations"
LINE_SEARCH_STALLED = "LineSearchStalled"
LINEAR_SOLVE_FAILED = "LinearSolveFailed"

MODES = ("full", "naive", "conformal")


@dataclass
class SolveOptions:
    eps_c: float = 1e-10
    max_iterations: int = 50
    backtrack: float = 0.5
    min_step: float = 1e-16
    mode: str = "full"
    eps_delaunay: float = EPS_DELAUNAY
    regularization: float = 0.0
    fallback_regularization: float = 1e-12
    acknowledge_invalid: bool = False
    callback: Callable | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not (self.eps_c > 0 and self.eps_delaunay > 0 and self.min_step > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")


@dataclass
class SolveResult:
    lam: np.ndarray
    trace: FlipTrace
    constraints: ConstraintSystem
    status: str
    iterations: int = 0
    max_residuals: list[float] = field(default_factory=list)
    l2_residuals: list[float] = field(default_factory=list)
    residuals: list[np.ndarray] = field(default_factory=list)
    steps: list[float] = field(default_factory=list)
    flip_counts: list[int] = field(default_factory=list)
    solve_times: list[float] = field(default_factory=list)
    mode: str = "full"
    u: np.ndarray | None = None
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def residual(self) -> np.ndarray:
        return self.residuals[-1]

    @property
    def max_residual(self) -> float:
        return self.max_residuals[-1]


# residual evaluation ---------------------------------------------------------------

@dataclass
class _State:
    F: np.ndarray
    trace: FlipTrace
    J: sp.csr_matrix | None = None


def _evaluate(mesh: Mesh, lam, constraints: ConstraintSystem, mode: str, eps_d: float,
              jacobian: bool) -> _State:
    if mode == "naive":
        cs = constraints
        trace = FlipTrace(mesh, np.asarray(lam, dtype=float), [], None, list(constraints.loops),
                          constraints)
        D = sp.identity(mesh.n_edges, format="csr")
    else:
        trace = make_delaunay(mesh, lam, eps_d, loops=constraints.loops, jacobian=jacobian)
        cs = constraints.rebuilt(trace.mesh, trace.loops)
        trace.constraints = cs
        D = trace.D
    if jacobian:
        alpha, G = angles_and_gradient(trace.mesh, trace.lam)
        J = (cs.C @ G @ D).tocsr()
    else:
        alpha, J = corner_angles(trace.mesh, trace.lam), None
    return _State(cs.C @ alpha - cs.theta, trace, J)


def constraint_residual(mesh: Mesh, lam, constraints: ConstraintSystem,
                        eps: float = EPS_DELAUNAY, order: str = "fifo"):
    """``F(lam) = C alpha(Del(M0, lam)) - theta`` and the flip trace it used."""
    trace = make_delaunay(mesh, lam, eps, order=order, loops=constraints.loops)
    cs = constraints.rebuilt(trace.mesh, trace.loops)
    trace.constraints = cs
    F = cs.C @ corner_angles(trace.mesh, trace.lam) - cs.theta
    return F, trace


def constraint_jacobian(mesh: Mesh, lam, constraints: ConstraintSystem,
                        eps: float = EPS_DELAUNAY):
    """``(F, J, trace)`` with ``J = C dalpha/dlam~ D`` (rows: constraints, cols: edges of M0)."""
    st = _evaluate(mesh, lam, constraints, "full", eps, True)
    return st.F, st.J, st.trace


# linear algebra ------------------------------------------------------------------

def gram_solve(grad_F, rhs, delta: float = 0.0, fallback: float = 1e-12) -> np.ndarray:
    """Solve ``(J J^T) mu = rhs`` by Cholesky.

    ``delta`` (times the mean diagonal) is added up front; if factorization
    fails, one retry adds ``fallback`` times the mean diagonal.
    """
    J = grad_F.toarray() if sp.issparse(grad_F) else np.asarray(grad_F, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    L = J @ J.T
    scale = float(np.mean(np.diag(L))) if len(L) else 1.0
    if not np.isfinite(scale) or scale <= 0:
        raise LinearSolveFailed("Gram matrix has no positive diagonal")
    n = len(L)
    attempts = [delta] + ([delta + fallback] if fallback > 0 else [])
    for reg in attempts:
        A = L + reg * scale * np.eye(n) if reg else L
        try:
            factor = sla.cho_factor(A, lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError):
            continue
        mu = sla.cho_solve(factor, rhs)
        if np.all(np.isfinite(mu)) and (
                np.linalg.norm(A @ mu - rhs) <= 1e-8 * max(np.linalg.norm(rhs), 1e-300)):
            return mu
    raise LinearSolveFailed("Gram matrix is not positive definite")


def line_search(lam, d, residual: Callable, options: SolveOptions | None = None,
                F0=None) -> float:
    """Largest ``beta`` in {1, 1/2, ...} with ``||F(lam + beta d)|| <= ||F(lam)||``
    and ``F(lam) . F(lam + beta d) >= 0``.

    ``residual`` maps coordinates to the residual vector; a trial where it
    raises a ``SeamlessError`` is rejected.
    """
    options = options or SolveOptions()
    lam = np.asarray(lam, dtype=float)
    d = np.asarray(d, dtype=float)
    if not np.all(np.isfinite(d)):
        raise LineSearchStalled("non-finite search direction")
    F0 = residual(lam) if F0 is None else np.asarray(F0)
    n0 = np.linalg.norm(F0)
    beta = 1.0
    while beta >= options.min_step:
        try:
            F1 = residual(lam + beta * d)
        except SeamlessError:
            F1 = None
        if F1 is not None and np.linalg.norm(F1) <= n0 and float(F0 @ F1) >= 0:
            return beta
        beta *= options.backtrack
    raise LineSearchStalled(f"no acceptable step above {options.min_step:g}")


# Newton drivers ------------------------------------------------------------------

def _prepare(mesh, signature, loops, options, vertex_only=False):
    if vertex_only:
        sig = HolonomySignature(signature.k_vertex, np.zeros(2 * mesh.genus, dtype=np.int64))
        report = validate_signature(mesh, sig)
        if not report.valid and not options.acknowledge_invalid:
            raise InvalidSignature(report.reasons)
        return build_constraints(mesh, HolonomySignature(signature.k_vertex), [], check=False)
    if loops is None:
        loops = homology_basis(mesh)
    report = validate_signature(mesh, signature)
    if not report.valid and not options.acknowledge_invalid:
        raise InvalidSignature(report.reasons)
    return build_constraints(mesh, signature, loops, check=False)


def newton_solve(mesh: Mesh, lam0, signature: HolonomySignature,
                 options: SolveOptions | None = None, loops=None) -> SolveResult:
    """Drive ``max |F| <= eps_c`` from the initial coordinates ``lam0``.

    ``loops`` default to the tree-cotree basis of ``mesh``. The signature
    is validated unless ``options.acknowledge_invalid`` is set.
    """
    options = options or SolveOptions()
    if options.mode == "conformal":
        return conformal_solve(mesh, lam0, signature, options)
    constraints = _prepare(mesh, signature, loops, options)
    mode, eps_d = options.mode, options.eps_delaunay
    lam = np.array(lam0, dtype=float)
    res = SolveResult(lam, None, constraints, MAX_ITERATIONS, mode=mode)

    def residual(x):
        return _evaluate(mesh, x, constraints, mode, eps_d, False).F

    while True:
        st = _evaluate(mesh, lam, constraints, mode, eps_d, True)
        F = st.F
        _record(res, st, F)
        fmax = res.max_residuals[-1]
        logger.debug("iter %d  max|F|=%.3e  flips=%d", res.iterations, fmax, st.trace.n_flips)
        if fmax <= options.eps_c:
            res.status = CONVERGED
            break
        if res.iterations >= options.max_iterations:
            res.status = MAX_ITERATIONS
            break
        t0 = time.perf_counter()
        try:
            mu = gram_solve(st.J, -F, options.regularization, options.fallback_regularization)
        except LinearSolveFailed as exc:
            res.status, res.message = LINEAR_SOLVE_FAILED, str(exc)
            break
        res.solve_times.append(time.perf_counter() - t0)
        d = st.J.T @ mu
        try:
            beta = line_search(lam, d, residual, options, F0=F)
        except LineSearchStalled as exc:
            res.status, res.message = LINE_SEARCH_STALLED, str(exc)
            break
        lam = lam + beta * d
        res.steps.append(beta)
        res.iterations += 1
        if options.callback is not None:
            options.callback(res.iterations, fmax, beta, st.trace.n_flips)
    res.lam = lam
    res.trace = st.trace
    if res.converged:
        _reverify(mesh, lam, constraints, mode, options)
    return res


def _record(res: SolveResult, st: _State, F):
    res.residuals.append(F)
    res.max_residuals.append(float(np.max(np.abs(F))) if len(F) else 0.0)
    res.l2_residuals.append(float(np.linalg.norm(F)))
    res.flip_counts.append(st.trace.n_flips)


def _reverify(mesh, lam, constraints, mode, options):
    F = _evaluate(mesh, lam, constraints, mode, options.eps_delaunay, False).F
    if len(F) and np.max(np.abs(F)) > options.eps_c:
        raise SeamlessError("converged state failed independent re-evaluation")


def vertex_edge_incidence(mesh: Mesh) -> sp.csr_matrix:
    """``B^T``: (N_e, N_v), one entry per edge endpoint."""
    ev = mesh.edge_vertices()
    ne = mesh.n_edges
    rows = np.repeat(np.arange(ne), 2)
    return sp.csr_matrix((np.ones(2 * ne), (rows, ev.reshape(-1))),
                         shape=(ne, mesh.n_vertices))


def conformal_solve(mesh: Mesh, lam0, signature, options: SolveOptions | None = None) -> SolveResult:
    """Newton on per-vertex log scale factors ``u``: ``lam = lam0 + B^T u``.

    Only vertex targets are used; ``u`` at the dropped (last) vertex stays 0.
    """
    options = options or SolveOptions(mode="conformal")
    if not isinstance(signature, HolonomySignature):
        signature = HolonomySignature(signature)
    constraints = _prepare(mesh, signature, None, options, vertex_only=True)
    eps_d = options.eps_delaunay
    lam0 = np.asarray(lam0, dtype=float)
    Bt = vertex_edge_incidence(mesh)
    free = np.arange(mesh.n_vertices - 1)
    Bf = Bt[:, free]
    u = np.zeros(mesh.n_vertices)
    res = SolveResult(lam0.copy(), None, constraints, MAX_ITERATIONS, mode="conformal")

    def lam_of(uf):
        return lam0 + Bf @ uf

    def residual(uf):
        return _evaluate(mesh, lam_of(uf), constraints, "full", eps_d, False).F

    uf = u[free]
    while True:
        st = _evaluate(mesh, lam_of(uf), constraints, "full", eps_d, True)
        F = st.F
        _record(res, st, F)
        fmax = res.max_residuals[-1]
        if fmax <= options.eps_c:
            res.status = CONVERGED
            break
        if res.iterations >= options.max_iterations:
            res.status = MAX_ITERATIONS
            break
        t0 = time.perf_counter()
        H = (st.J @ Bf).toarray()
        # -H is the Hessian of a convex energy: symmetric positive definite
        Hs = -0.5 * (H + H.T)
        try:
            du = sla.cho_solve(sla.cho_factor(Hs, lower=True), F)
        except (np.linalg.LinAlgError, ValueError) as exc:
            res.status, res.message = LINEAR_SOLVE_FAILED, str(exc)
            break
        res.solve_times.append(time.perf_counter() - t0)
        try:
            beta = line_search(uf, du, residual, options, F0=F)
        except LineSearchStalled as exc:
            res.status, res.message = LINE_SEARCH_STALLED, str(exc)
            break
        uf = uf + beta * du
        res.steps.append(beta)
        res.iterations += 1
        if options.callback is not None:
            options.callback(res.iterations, fmax, beta, st.trace.n_flips)
    u[free] = uf
    res.u = u
    res.lam = lam_of(uf)
    res.trace = st.trace
    if res.converged:
        _reverify(mesh, res.lam, constraints, "full", options)
    return res
