"""Command line front end: ``lmgcurl solve | verify | mesh-info``."""
import argparse
import logging
import sys

from .adaptive import run_adaptive, write_rows
from .assembly import export_matrix_market
from .exceptions import ConfigurationError, InvalidMeshError
from .mesh import read_mesh, write_mesh
from .problems import PRESETS, get_preset
from .solver import SolveReport, write_solve_reports
from .verify import SUITES, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit code 3)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _positive_int(s):
    v = int(s)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser():
    p = _Parser(prog="lmgcurl", description="Adaptive edge element solver with local multigrid.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="run the adaptive loop on a preset problem")
    s.add_argument("--problem", choices=sorted(PRESETS), default="lshape")
    s.add_argument("--theta", type=float, default=0.5)
    s.add_argument("--mg-reduction", type=float, default=1e-8)
    s.add_argument("--max-elems", type=_positive_int, default=100_000)
    s.add_argument("--pre", type=int, default=0)
    s.add_argument("--post", type=int, default=1)
    s.add_argument("--mode", choices=["iteration", "pcg"], default="iteration")
    s.add_argument("--out", default="report.csv")
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--initial-refinements", type=int, default=3)
    s.add_argument("--max-iter", type=_positive_int, default=200)
    s.add_argument("--no-contraction", action="store_true", help="skip the power iteration")
    s.add_argument("--no-hybrid", action="store_true", help="ablation: edge smoothing only")
    s.add_argument("--solve-report", help="also write per-stage solver rows to this CSV")
    s.add_argument("--export-matrix", help="write the last stage matrix (Matrix Market)")
    s.add_argument("--export-mesh", help="write the final leaf mesh (ASCII format)")

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", help=f"one of {', '.join(SUITES)} or all")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--problem", choices=sorted(PRESETS), default="lshape")
    v.add_argument("--levels", type=_positive_int, default=5)

    m = sub.add_parser("mesh-info", help="statistics of a preset or ASCII mesh")
    src = m.add_mutually_exclusive_group()
    src.add_argument("--problem", choices=sorted(PRESETS), default="lshape")
    src.add_argument("--mesh", help="ASCII mesh file")
    m.add_argument("--refine", type=int, default=0, help="uniform refinements before reporting")
    m.add_argument("--out", help="write the (refined) mesh here")
    return p


def _cmd_solve(a):
    if not 0.0 < a.theta <= 1.0:
        raise ConfigurationError("--theta must lie in (0, 1]")
    if not 0.0 < a.mg_reduction < 1.0:
        raise ConfigurationError("--mg-reduction must lie in (0, 1)")
    if a.pre < 0 or a.post < 0 or a.pre + a.post == 0:
        raise ConfigurationError("--pre/--post must be non-negative with a positive sum")
    if a.initial_refinements < 0:
        raise ConfigurationError("--initial-refinements must be non-negative")
    preset = get_preset(a.problem)
    last = {}

    def show(row, stage):
        print(",".join(str(x) for x in row.csv_row()), flush=True)
        last["stage"] = stage

    print(f"# seed={a.seed}")
    print("n_it,n_el,n_dofs,e_rel,eta_h,mg_iters,contraction,work_units")
    rows, mesh = run_adaptive(
        preset,
        theta=a.theta,
        reduction=a.mg_reduction,
        max_elems=a.max_elems,
        pre=a.pre,
        post=a.post,
        mode=a.mode,
        seed=a.seed,
        initial_refinements=a.initial_refinements,
        max_iter=a.max_iter,
        hybrid=not a.no_hybrid,
        contraction=not a.no_contraction,
        callback=show,
    )
    write_rows(a.out, rows, a.seed)
    if a.solve_report:
        reps = [
            SolveReport(
                level=r.levels - 1, n_elements=r.n_el, n_dofs=r.n_dofs, iters=r.mg_iters,
                converged=r.converged, residuals=[], contraction_estimate=r.contraction,
                work_units=r.work_units,
            )
            for r in rows
        ]
        write_solve_reports(a.solve_report, reps)
    if a.export_matrix:
        export_matrix_market(a.export_matrix, last["stage"].system.A, comment=f"{a.problem} stage {rows[-1].n_it}")
    if a.export_mesh:
        write_mesh(mesh, a.export_mesh)
    bad = [r.n_it for r in rows if not r.converged]
    if bad:
        logging.getLogger("lmgcurl").warning("direct-solve fallback used at stages %s", bad)
    return EXIT_OK


def _cmd_verify(a):
    if a.suite != "all" and a.suite not in SUITES:
        raise ConfigurationError(f"unknown suite {a.suite!r}; choose from {', '.join(SUITES)} or all")
    checks = run_suite(a.suite, seed=a.seed, problem=a.problem, levels=a.levels)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def _cmd_mesh_info(a):
    if a.refine < 0:
        raise ConfigurationError("--refine must be non-negative")
    mesh = read_mesh(a.mesh) if a.mesh else get_preset(a.problem).build_mesh()
    mesh.refine_uniform(a.refine)
    q = mesh.quality()
    ok = mesh.check_conformity()
    print(f"vertices       {mesh.n_vertices}")
    print(f"leaves         {mesh.n_leaves}")
    print(f"max level      {mesh.max_level}")
    print(f"volume         {mesh.leaf_volumes().sum():.12g}")
    print(f"rho max        {q.rho_max:.6g}")
    print(f"shape classes  {mesh.similarity_classes()}")
    print(f"conforming     {bool(ok)}")
    print(f"dirichlet      {len(mesh.boundary_faces())} faces")
    if a.out:
        write_mesh(mesh, a.out)
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {"solve": _cmd_solve, "verify": _cmd_verify, "mesh-info": _cmd_mesh_info}
    try:
        return handlers[a.command](a)
    except (ConfigurationError, InvalidMeshError, FileNotFoundError) as exc:
        print(f"lmgcurl: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
