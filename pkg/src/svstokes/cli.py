"""Command-line front door.

Subcommands: gen, analyze, verify-fields, infsup, spline-dim.

Exit codes: 0 = analysis completed (findings, including K >= 1, live in
the JSON report), 2 = input error, 3 = numerical indeterminacy (no clean
singular-value gap), 4 = internal invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import __version__, solver
from .classify import Tolerances, classify_mesh
from .fields import (FieldError, boundary_interpolant, local_interpolant,
                     verify_field)
from .mesh import (MeshError, MeshFormatError, PRESETS, Triangulation,
                   build_topology, dump_mesh, enumerate_patch, generate,
                   load_mesh)
from .trees import build_tree_cover, check_hypotheses, tree_stats

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INDETERMINATE = 3
EXIT_INTERNAL = 4

# CLI-friendly aliases for the generator presets.
PRESET_ALIASES = {
    "crossed": "crossed",
    "type1": "type1_diagonal",
    "type1_diagonal": "type1_diagonal",
    "three_lines": "three_lines",
    "three-lines": "three_lines",
    "ngon": "ngon_patch",
    "ngon_patch": "ngon_patch",
    "perturbed_grid": "perturbed_grid",
    "perturbed-grid": "perturbed_grid",
}

# Fixed SVG palette: vertex classes by fill color, spurious-mode triangle
# signs by hue (positive red, negative blue).
CLASS_COLORS = {
    "SingularLI": "#7b2d8b",
    "OddLI": "#2d8b57",
    "EvenLI": "#2d578b",
    "NotLI": "#c0392b",
    "BoundaryNonSingular": "#888888",
}


class _InputError(Exception):
    pass


def _load(path: str) -> Triangulation:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return load_mesh(fh.read())
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc
    except (MeshFormatError, MeshError) as exc:
        raise _InputError(f"{path}: {exc}") from exc


def _tolerances(args) -> Tolerances:
    return Tolerances(singular=args.tol_singular, rank=args.tol_rank,
                      accept=args.tol_accept)


def _write_out(text: str, out_path: str | None):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


# ---------------------------------------------------------------------------
# analysis pipeline

def analyze_mesh(mesh: Triangulation, tol: Tolerances,
                 skip_solver: bool = False) -> dict:
    """Full classify -> trees -> solver pipeline as a JSON-ready dict."""
    topology = build_topology(mesh)
    reports, summary = classify_mesh(topology, tol)
    cover = build_tree_cover(topology, reports, tol)
    verdict, narrative = check_hypotheses(topology, reports, cover)

    report = {
        "mesh": {
            "T": topology.T, "E": topology.E, "E0": topology.E0,
            "V": topology.V, "V0": topology.V0,
            "euler_ok": bool(topology.euler_ok),
        },
        "vertices": {
            "summary": summary,
            "reports": [dataclasses.asdict(r) for r in reports],
        },
        "trees": {
            "verdict": verdict,
            "narrative": narrative,
            "complete": cover.complete,
            "rho_bar": cover.rho_bar,
            "upsilon_bar": cover.upsilon_bar,
            "uncovered": sorted(cover.uncovered),
            "trees": [
                {"root": t.root, "vertices": sorted(t.vertices),
                 **tree_stats(t)}
                for t in cover.trees
            ],
        },
        "divergence": {"skipped": True},
        "spline": {"skipped": True},
        "meta": {
            "version": __version__,
            "tolerances": dataclasses.asdict(tol),
        },
    }
    if skip_solver:
        return report

    dofmap = solver.number_dofs(topology)
    B = solver.assemble_divergence(topology, dofmap)
    A, M = solver.assemble_norms(topology, dofmap)
    rank = solver.divergence_rank(B, topology, summary["sigma"], tol)
    N = solver.constrained_basis(topology, reports)
    beta, eigenvalues = solver.infsup_constant(A, B, M, N)
    modes = solver.spurious_modes(B, M, N, tol)
    dims = solver.strang_dimensions(topology, summary["sigma"],
                                    summary["sigma_i"], summary["sigma_b"],
                                    rank.K)
    nullity = solver.nullity_crosscheck(rank, topology, summary["sigma"])
    report["divergence"] = {
        "skipped": False,
        "velocity_dofs": dofmap.n_velocity,
        "pressure_dofs": dofmap.n_pressure,
        "rank": rank.rank,
        "nullity": rank.nullity,
        "expected_dim": rank.expected_dim,
        "K": rank.K,
        "gap": rank.gap if np.isfinite(rank.gap) else None,
        "beta": beta,
        "spurious_mode_count": len(modes),
        "spurious_checkerboard": [
            bool(solver.checkerboard_signature(topology, m)) for m in modes
        ],
        "nullity_crosscheck": nullity,
    }
    report["spline"] = {"skipped": False, **dataclasses.asdict(dims)}
    report["_modes"] = modes   # internal, stripped before serialization
    return report


def render_svg(mesh: Triangulation, report: dict, width: int = 640) -> str:
    """Mesh rendering with vertex-class markers and, when present, the
    first spurious pressure mode as signed triangle fills."""
    pts = mesh.vertices
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = max(float((hi - lo).max()), 1e-30)
    pad = 0.06 * span
    scale = width / (span + 2 * pad)

    def xy(p):
        return ((p[0] - lo[0] + pad) * scale,
                (span + 2 * pad - (p[1] - lo[1] + pad)) * scale)

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{width}" viewBox="0 0 {width} {width}">']
    modes = report.get("_modes") or []
    if modes:
        mode = modes[0]
        mscale = max(float(np.abs(mode).max()), 1e-30)
        for t, tri in enumerate(mesh.triangles):
            vals = mode[6 * t:6 * t + 3]
            mean = float(vals.mean())
            hue = "#d94141" if mean >= 0 else "#4169d9"
            opacity = min(abs(mean) / mscale, 1.0) * 0.6
            corners = " ".join(f"{x:.2f},{y:.2f}"
                               for x, y in (xy(pts[v]) for v in tri))
            lines.append(f'<polygon points="{corners}" fill="{hue}" '
                         f'fill-opacity="{opacity:.3f}" stroke="none"/>')
    drawn = set()
    for tri in mesh.triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            if key in drawn:
                continue
            drawn.add(key)
            (x1, y1), (x2, y2) = xy(pts[a]), xy(pts[b])
            lines.append(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" '
                         f'y2="{y2:.2f}" stroke="#333" stroke-width="1"/>')
    for r in report["vertices"]["reports"]:
        x, y = xy(pts[r["vertex"]])
        color = CLASS_COLORS.get(r["status"], "#000")
        lines.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" '
                     f'fill="{color}"><title>v{r["vertex"]}: '
                     f'{r["status"]}</title></circle>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# field verification suites

def run_field_suites(mesh: Triangulation, tol: Tolerances, samples: int,
                     seed: int) -> tuple[list, bool]:
    """Random-target interpolation property suite; deterministic per seed."""
    topology = build_topology(mesh)
    reports, _ = classify_mesh(topology, tol)
    rng = np.random.default_rng(seed)
    lines = []
    all_ok = True
    for r in reports:
        patch = enumerate_patch(topology, r.vertex)
        kind = r.status
        n_fail = 0
        for _ in range(samples):
            target = rng.standard_normal(patch.N)
            if r.singular and patch.N > 1:
                signs = np.array([(-1.0) ** j for j in range(patch.N)])
                target -= signs * (signs @ target) / patch.N
            elif r.singular:
                target[:] = 0.0
            try:
                if r.boundary:
                    result = boundary_interpolant(patch, target, topology,
                                                  tol)
                    divs = {(t, patch.z): target[j]
                            for j, t in enumerate(patch.tris)}
                    divs.update(result.side_effects)
                    check = verify_field(result.field, vertex_divs=divs,
                                         mean_zero=True)
                elif r.local_interpolating:
                    field = local_interpolant(patch, target, topology, tol)
                    divs = {(t, patch.z): target[j]
                            for j, t in enumerate(patch.tris)}
                    check = verify_field(field, vertex_divs=divs,
                                         mean_zero=True)
                else:
                    continue
                if not check.ok:
                    n_fail += 1
            except FieldError:
                n_fail += 1
        if r.boundary or r.local_interpolating:
            ok = n_fail == 0
            all_ok = all_ok and ok
            lines.append(f"vertex {r.vertex:4d} [{kind}]: "
                         f"{'pass' if ok else f'FAIL ({n_fail}/{samples})'}")
    return lines, all_ok


# ---------------------------------------------------------------------------
# subcommands

def cmd_gen(args) -> int:
    preset = PRESET_ALIASES.get(args.preset)
    if preset is None:
        raise _InputError(f"unknown preset {args.preset!r}; choose from "
                          f"{sorted(PRESET_ALIASES)}")
    params = {}
    if args.n is not None:
        params["n" if preset != "ngon_patch" else "N"] = args.n
    if args.N is not None:
        params["N"] = args.N
    if args.L is not None:
        params["L" if preset != "ngon_patch" else "radius"] = args.L
    if args.seed is not None and preset == "perturbed_grid":
        params["seed"] = args.seed
    try:
        mesh = generate(preset, **params)
    except (MeshError, TypeError, ValueError) as exc:
        raise _InputError(f"generator error: {exc}") from exc
    _write_out(dump_mesh(mesh), args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    mesh = _load(args.mesh)
    tol = _tolerances(args)
    report = analyze_mesh(mesh, tol, skip_solver=args.skip_solver)
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(render_svg(mesh, report))
    report.pop("_modes", None)
    _write_out(json.dumps(report, indent=2, default=_json_default,
                          sort_keys=True), args.out)
    return EXIT_OK


def cmd_verify_fields(args) -> int:
    mesh = _load(args.mesh)
    tol = _tolerances(args)
    lines, ok = run_field_suites(mesh, tol, args.samples, args.seed)
    _write_out("\n".join(lines + [f"overall: {'pass' if ok else 'FAIL'}"])
               + "\n", args.out)
    return EXIT_OK if ok else EXIT_INTERNAL


def cmd_infsup(args) -> int:
    mesh = _load(args.mesh)
    tol = _tolerances(args)
    topology = build_topology(mesh)
    reports, summary = classify_mesh(topology, tol)
    dofmap = solver.number_dofs(topology)
    B = solver.assemble_divergence(topology, dofmap)
    A, M = solver.assemble_norms(topology, dofmap, seminorm=args.seminorm)
    N = solver.constrained_basis(topology, reports)
    beta, eigenvalues = solver.infsup_constant(A, B, M, N)
    out = {
        "beta": beta,
        "smallest_eigenvalues": sorted(eigenvalues)[:8],
        "constrained_dim": int(N.shape[1]),
        "velocity_dofs": dofmap.n_velocity,
        "seminorm": bool(args.seminorm),
        "meta": {"version": __version__,
                 "tolerances": dataclasses.asdict(tol)},
    }
    _write_out(json.dumps(out, indent=2, default=_json_default,
                          sort_keys=True), args.out)
    return EXIT_OK


def cmd_spline_dim(args) -> int:
    mesh = _load(args.mesh)
    tol = _tolerances(args)
    topology = build_topology(mesh)
    reports, summary = classify_mesh(topology, tol)
    dofmap = solver.number_dofs(topology)
    B = solver.assemble_divergence(topology, dofmap)
    rank = solver.divergence_rank(B, topology, summary["sigma"], tol)
    dims = solver.strang_dimensions(topology, summary["sigma"],
                                    summary["sigma_i"], summary["sigma_b"],
                                    rank.K)
    nullity = solver.nullity_crosscheck(rank, topology, summary["sigma"])
    out = {
        "spline": dataclasses.asdict(dims),
        "K": rank.K,
        "rank": rank.rank,
        "nullity_crosscheck": nullity,
        "sigma": summary["sigma"],
        "sigma_i": summary["sigma_i"],
        "sigma_b": summary["sigma_b"],
        "meta": {"version": __version__,
                 "tolerances": dataclasses.asdict(tol)},
    }
    _write_out(json.dumps(out, indent=2, default=_json_default,
                          sort_keys=True), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svstokes",
        description="Divergence-stability toolkit for cubic Lagrange "
                    "Stokes elements on 2D triangulations.")
    parser.add_argument("--version", action="version",
                        version=f"svstokes {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mesh_required=True):
        if mesh_required:
            p.add_argument("--mesh", required=True, help="mesh file path")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--tol-singular", type=float,
                       default=Tolerances.singular,
                       help="straight-line detector threshold")
        p.add_argument("--tol-rank", type=float, default=Tolerances.rank,
                       help="relative singular-value threshold")
        p.add_argument("--tol-accept", type=float, default=Tolerances.accept,
                       help="edge-weight acceptability threshold")

    g = sub.add_parser("gen", help="generate a preset mesh")
    g.add_argument("preset", help=f"one of {sorted(PRESET_ALIASES)}")
    g.add_argument("--n", type=int, help="grid subdivisions")
    g.add_argument("--N", type=int, help="polygon valence (ngon)")
    g.add_argument("--L", type=float, help="length scale")
    g.add_argument("--seed", type=int, help="perturbation seed")
    g.add_argument("--out", help="output path (default: stdout)")
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("analyze", help="full analysis pipeline")
    common(a)
    a.add_argument("--svg", help="write an SVG overlay rendering")
    a.add_argument("--skip-solver", action="store_true",
                   help="topology/classification/trees only")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("verify-fields",
                       help="run the field-lemma property suites")
    common(v)
    v.add_argument("--samples", type=int, default=10,
                   help="random targets per vertex")
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify_fields)

    i = sub.add_parser("infsup", help="inf-sup constant only")
    common(i)
    i.add_argument("--seminorm", action="store_true",
                   help="use the H1 seminorm in the denominator")
    i.set_defaults(func=cmd_infsup)

    s = sub.add_parser("spline-dim", help="spline dimension identities")
    common(s)
    s.set_defaults(func=cmd_spline_dim)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MeshError as exc:
        # mesh defects discovered mid-pipeline are still input problems
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except solver.RankIndeterminateError as exc:
        print(f"indeterminate: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE
    except (solver.SolverError, FieldError) as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
