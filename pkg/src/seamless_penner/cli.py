"""Command-line driver: ``seamless-penner {solve,validate,stats}``.

Exit codes: 0 success, 2 parse error, 3 invalid signature, 4 solver
failure, 5 I/O error. Set ``SEAMLESS_PENNER_LOG`` (e.g. ``DEBUG``) for logs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fixtures
from .errors import (
    DegenerateFace,
    InterpolationFailed,
    InvalidSignature,
    MeshError,
    SeamlessError,
)
from .holonomy import (
    HolonomySignature,
    auto_trivial_signature,
    homology_basis,
    parse_signature,
    signature_document,
    validate_signature,
)
from .layout import (
    lay_out,
    rmsre,
    seamlessness_report,
    symmetric_stretch,
    write_deviation_csv,
    write_obj_with_uv,
    write_stretch_csv,
)
from .mesh import Mesh, build_mesh, log_lengths, read_obj
from .metric import corner_angles, vertex_angle_sums
from .preprocess import PreprocessOptions, interpolate_metric
from .solver import CONVERGED, SolveOptions, newton_solve

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4, 5
SCHEMA = "seamless-penner-result/v1"
FIXTURES = ("tetrahedron", "octahedron", "torus_grid", "torus_of_revolution", "genus2")

logger = logging.getLogger("seamless_penner")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    mesh: str
    signature: str = "auto-trivial"
    out: str = "out"
    solve: SolveOptions = field(default_factory=SolveOptions)
    preprocess: PreprocessOptions = field(default_factory=PreprocessOptions)
    schema: str = SCHEMA


# input -----------------------------------------------------------------------------

def load_mesh(spec: str) -> tuple[Mesh, np.ndarray | None, np.ndarray]:
    """Mesh, positions (or None) and initial Penner coordinates.

    ``spec`` is an OBJ path or ``fixture:<name>``.
    """
    if spec.startswith("fixture:"):
        name = spec.split(":", 1)[1]
        if name not in FIXTURES:
            raise CliError(EXIT_PARSE, f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
        out = getattr(fixtures, name)()
        if isinstance(out, Mesh):
            return out, None, np.zeros(out.n_edges)
        mesh, pos = out
        return mesh, pos, log_lengths(mesh, pos)
    try:
        verts, faces = read_obj(spec)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read mesh: {exc}") from exc
    except (ValueError, IndexError, MeshError) as exc:
        raise CliError(EXIT_PARSE, f"cannot parse mesh {spec}: {exc}") from exc
    try:
        mesh = build_mesh(faces)
    except MeshError as exc:
        raise CliError(EXIT_PARSE, f"unsupported mesh {spec}: {type(exc).__name__}: {exc}") from exc
    if len(verts) != mesh.n_vertices:
        raise CliError(EXIT_PARSE, "vertex count does not match face indices")
    return mesh, verts, log_lengths(mesh, verts)


def load_signature(spec: str, mesh: Mesh, lam0) -> tuple[HolonomySignature, list]:
    if spec == "auto-trivial":
        sums = vertex_angle_sums(mesh, corner_angles(mesh, lam0))
        return auto_trivial_signature(mesh, sums), homology_basis(mesh)
    try:
        with open(spec) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read signature: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_PARSE, f"signature is not valid JSON: {exc}") from exc
    try:
        return parse_signature(doc, mesh)
    except (ValueError, KeyError, TypeError, MeshError) as exc:
        raise CliError(EXIT_PARSE, f"bad signature document: {exc}") from exc


# report serialization ----------------------------------------------------------------

_FLOAT_TAG = "\x00f:"


def _tag_floats(obj):
    if isinstance(obj, dict):
        return {k: _tag_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tag_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _tag_floats(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return _FLOAT_TAG + format(x, ".17g") if math.isfinite(x) else None
    return obj


def dumps_report(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    text = json.dumps(_tag_floats(obj), indent=2, sort_keys=True)
    return re.sub(r'"\\u0000f:([^"]*)"', r"\1", text)


def content_digest(report: dict) -> str:
    body = {k: v for k, v in report.items() if k not in ("timings", "content_sha256")}
    return hashlib.sha256(dumps_report(body).encode()).hexdigest()


# commands ----------------------------------------------------------------------------

def cmd_solve(config: RunConfig) -> int:
    t_start = time.perf_counter()
    mesh, pos, lam0 = load_mesh(config.mesh)
    sig, loops = load_signature(config.signature, mesh, lam0)
    report = validate_signature(mesh, sig)
    if not report.valid and not config.solve.acknowledge_invalid:
        for r, m in zip(report.reasons, report.messages):
            print(f"invalid signature: {r}: {m}", file=sys.stderr)
        return EXIT_INVALID
    try:
        interp = interpolate_metric(mesh, lam0, config.preprocess)
    except InterpolationFailed as exc:
        print(f"preprocessing failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    t_solve = time.perf_counter()
    try:
        res = newton_solve(mesh, interp.lam, sig, config.solve, loops=loops)
    except InvalidSignature as exc:
        print(f"invalid signature: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SeamlessError as exc:
        print(f"solver failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    t_done = time.perf_counter()

    trace = res.trace
    final_cs = trace.constraints
    alpha = corner_angles(trace.mesh, trace.lam)
    seam = seamlessness_report(final_cs, alpha)
    ell, ell0 = np.exp(0.5 * res.lam), np.exp(0.5 * lam0)
    stretch = symmetric_stretch(ell, ell0)
    layout, layout_msg = None, ""
    try:
        layout = lay_out(trace.mesh, trace.lam)
        seam = seamlessness_report(final_cs, alpha, layout, trace.lam)
    except DegenerateFace as exc:
        layout_msg = str(exc)

    doc = {
        "schema": config.schema,
        "status": res.status,
        "converged": res.converged,
        "message": res.message or layout_msg,
        "mode": res.mode,
        "input": {
            "mesh": config.mesh,
            "signature": signature_document(sig),
            "n_vertices": mesh.n_vertices,
            "n_edges": mesh.n_edges,
            "n_faces": mesh.n_faces,
            "genus": mesh.genus,
            "signature_valid": report.valid,
            "signature_reasons": report.reasons,
        },
        "options": {
            "eps_c": config.solve.eps_c,
            "max_iterations": config.solve.max_iterations,
            "eps_delaunay": config.solve.eps_delaunay,
            "alpha_min": config.preprocess.alpha_min,
            "interp_beta": config.preprocess.beta,
        },
        "preprocess": {"steps": interp.steps, "min_angle": interp.min_angle},
        "iterations": res.iterations,
        "max_residual": res.max_residual,
        "max_residual_history": res.max_residuals,
        "l2_residual_history": res.l2_residuals,
        "step_sizes": res.steps,
        "flip_counts": res.flip_counts,
        "final_flips": trace.n_flips,
        "rmsre": rmsre(ell, ell0),
        "max_stretch": float(stretch.max()),
        "lambda_change_l2": float(np.linalg.norm(res.lam - lam0)),
        "seamlessness": seam.as_dict(),
        "layout": {"ok": layout is not None, "cut_edges": int(layout.cut.sum()) if layout else None},
    }
    doc["content_sha256"] = content_digest(doc)
    doc["timings"] = {
        "total_seconds": time.perf_counter() - t_start,
        "solve_seconds": t_done - t_solve,
        "linear_solve_seconds": res.solve_times,
        "mean_linear_solve_seconds": float(np.mean(res.solve_times)) if res.solve_times else 0.0,
    }

    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "result.json").write_text(dumps_report(doc) + "\n")
        write_stretch_csv(out / "lambda.csv", mesh, res.lam, lam0)
        write_deviation_csv(out / "deviations.csv", final_cs, alpha)
        if layout is not None:
            write_obj_with_uv(out / "layout.obj", trace.mesh, layout, pos)
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{res.status}: {res.iterations} iterations, max|F| = {res.max_residual:.3e}, "
          f"RMSRE = {doc['rmsre']:.6g}; wrote {out}")
    return EXIT_OK if res.status == CONVERGED else EXIT_SOLVER


def cmd_validate(config: RunConfig) -> int:
    mesh, _, lam0 = load_mesh(config.mesh)
    sig, _ = load_signature(config.signature, mesh, lam0)
    report = validate_signature(mesh, sig)
    if report.valid:
        print("valid")
        return EXIT_OK
    for r, m in zip(report.reasons, report.messages):
        print(f"{r}: {m}")
    return EXIT_INVALID


STATS_FIELDS = ["record", "path", "status", "failure", "iterations", "max_residual", "rmsre",
                "mean_linear_solve_seconds", "bin_low", "bin_high", "count"]


def cmd_stats(paths, out, bins: int = 10) -> int:
    if not paths:
        print("stats: no reports given", file=sys.stderr)
        return EXIT_IO
    rows = []
    for p in paths:
        try:
            with open(p) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"stats: cannot read {p}: {exc}", file=sys.stderr)
            return EXIT_IO
        status = doc.get("status", "")
        rows.append({
            "record": "run", "path": str(p), "status": status,
            "failure": "" if status == CONVERGED else status,
            "iterations": doc.get("iterations"),
            "max_residual": doc.get("max_residual"),
            "rmsre": doc.get("rmsre"),
            "mean_linear_solve_seconds": doc.get("timings", {}).get("mean_linear_solve_seconds"),
        })
    its = np.array([r["iterations"] for r in rows if r["iterations"] is not None], dtype=float)
    if len(its):
        counts, edges = np.histogram(its, bins=bins)
        for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
            rows.append({"record": "iterations_histogram", "bin_low": lo, "bin_high": hi,
                         "count": int(c)})
    try:
        with open(out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=STATS_FIELDS)
            w.writeheader()
            w.writerows(rows)
    except OSError as exc:
        print(f"stats: cannot write {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{len(paths)} reports -> {out}")
    return EXIT_OK


# argument parsing ----------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seamless-penner",
                                description="Seamless parametrization metrics by Newton in Penner coordinates.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--mesh", required=True, help="OBJ file or fixture:<name>")
        sp.add_argument("--signature", default="auto-trivial",
                        help="signature JSON file or 'auto-trivial' (default)")

    s = sub.add_parser("solve", help="solve for a metric with prescribed holonomy")
    common(s)
    s.add_argument("--eps-c", type=float, default=1e-10, help="residual tolerance (max norm)")
    s.add_argument("--max-iter", type=int, default=50)
    s.add_argument("--alpha-min", type=float, default=0.0,
                   help="minimum Delaunay angle in degrees for interpolation (0 disables)")
    s.add_argument("--interp", type=float, default=0.9,
                   help="interpolation factor beta in (0, 1)")
    s.add_argument("--mode", choices=("full", "naive", "conformal"), default="full")
    s.add_argument("--acknowledge-invalid", action="store_true",
                   help="solve even if the signature fails validation")
    s.add_argument("--out", default="out", help="output directory")

    v = sub.add_parser("validate", help="check a signature without solving")
    common(v)

    st = sub.add_parser("stats", help="aggregate result.json reports into a CSV")
    st.add_argument("reports", nargs="*")
    st.add_argument("--out", default="stats.csv")
    st.add_argument("--bins", type=int, default=10)
    return p


def main(argv=None) -> int:
    level = os.environ.get("SEAMLESS_PENNER_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_PARSE
    try:
        if args.command == "stats":
            return cmd_stats(args.reports, args.out, args.bins)
        if args.command == "validate":
            return cmd_validate(RunConfig(args.mesh, args.signature))

        def progress(it, fmax, beta, flips):
            logger.info("iteration %d  max|F|=%.3e  step=%g  flips=%d", it, fmax, beta, flips)

        try:
            solve = SolveOptions(eps_c=args.eps_c, max_iterations=args.max_iter, mode=args.mode,
                                 acknowledge_invalid=args.acknowledge_invalid, callback=progress)
            pre = PreprocessOptions(alpha_min=math.radians(args.alpha_min), beta=args.interp)
        except ValueError as exc:
            raise CliError(EXIT_PARSE, str(exc)) from exc
        return cmd_solve(RunConfig(args.mesh, args.signature, args.out, solve, pre))
    except CliError as exc:
        print(exc, file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
