"""Adaptive solve, estimate, mark and refine loop."""
import csv
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import assemble
from .estimator import estimate, mark
from .quadrature import tet_rule
from .solver import LocalMultigrid
from .space import DofMap, evaluate_edge_field

__all__ = ["Stage", "ExperimentRow", "run_adaptive", "relative_error", "write_rows", "CSV_COLUMNS"]

log = logging.getLogger(__name__)

CSV_COLUMNS = ["n_it", "n_el", "n_dofs", "e_rel", "eta_h", "mg_iters", "contraction", "work_units"]


@dataclass
class Stage:
    """Objects of one adaptive stage, handed to the ``callback`` of :func:`run_adaptive`."""

    dofmap: object
    system: object
    solver: object
    coef: np.ndarray
    estimate: object


@dataclass
class ExperimentRow:
    n_it: int
    n_el: int
    n_dofs: int
    e_rel: float
    eta_h: float
    mg_iters: int
    contraction: float
    work_units: int
    eta_max: float = float("nan")
    levels: int = 0
    converged: bool = True

    def csv_row(self):
        return [
            self.n_it,
            self.n_el,
            self.n_dofs,
            f"{self.e_rel:.6e}",
            f"{self.eta_h:.6e}",
            self.mg_iters,
            f"{self.contraction:.4f}",
            self.work_units,
        ]


def relative_error(dm, coef, preset, degree=5):
    """``||u - u_h||_H(curl) / ||u||_H(curl)`` by element quadrature."""
    bary, w = tet_rule(degree)
    x = dm.tet_coords()
    _, vol = dm.geometry()
    pts = np.einsum("qk,nkd->nqd", bary, x).reshape(-1, 3)
    uh, curl = evaluate_edge_field(dm, coef, bary)
    u = preset.u(pts).reshape(uh.shape)
    cu = preset.curl_u(pts).reshape(uh.shape)
    err = np.sum(w * np.sum((u - uh) ** 2, axis=2), axis=1) + np.sum(
        w * np.sum((cu - curl[:, None, :]) ** 2, axis=2), axis=1
    )
    ref = np.sum(w * np.sum(u**2 + cu**2, axis=2), axis=1)
    return float(np.sqrt(np.sum(err * vol) / np.sum(ref * vol)))


def run_adaptive(
    preset,
    theta=0.5,
    reduction=1e-8,
    max_elems=100_000,
    pre=0,
    post=1,
    mode="iteration",
    seed=42,
    initial_refinements=3,
    max_iter=200,
    hybrid=True,
    contraction=True,
    max_stages=None,
    callback=None,
):
    """Run the adaptive loop on ``preset`` until the element budget is reached.

    The initial mesh is the preset's coarse mesh refined uniformly
    ``initial_refinements`` times. A stage is solved only if its leaf count
    does not exceed ``max_elems``; the first stage is always solved.
    ``callback(row, stage)`` is invoked after every stage.

    Returns
    -------
    rows : list of ExperimentRow
    mesh : Mesh
        The final mesh (possibly one refinement past the last solved stage).
    """
    mesh = preset.build_mesh()
    mesh.refine_uniform(initial_refinements)
    rows = []
    n_it = 0
    while True:
        dm = DofMap.build(mesh)
        system = assemble(dm, preset.f)
        g = preset.dirichlet_values(dm)
        rhs = system.rhs(g)
        mg = LocalMultigrid(
            pre_smooth=pre, post_smooth=post, hybrid=hybrid, mode=mode,
            reduction=reduction, max_iter=max_iter,
        ).fit(mesh, system.A)
        x, rep = mg.solve(rhs)
        if not rep.converged:
            log.warning("stage %d: multigrid did not converge, using a direct solve", n_it)
            x = spla.spsolve(system.A.tocsc(), rhs)
        rho = mg.estimate_contraction(seed=seed + n_it) if contraction else float("nan")
        coef = np.empty(len(dm.edges))
        coef[dm.edge_active] = x
        coef[~dm.edge_active] = g
        est = estimate(dm, coef, preset.f, preset.div_f)
        row = ExperimentRow(
            n_it=n_it,
            n_el=dm.n_tets,
            n_dofs=dm.n_edges,
            e_rel=relative_error(dm, coef, preset),
            eta_h=est.eta_h,
            mg_iters=rep.iters,
            contraction=rho,
            work_units=mg.work_units_,
            eta_max=est.eta_max,
            levels=mg.n_levels_,
            converged=rep.converged,
        )
        rows.append(row)
        log.info("%s", row)
        if callback is not None:
            callback(row, Stage(dofmap=dm, system=system, solver=mg, coef=coef, estimate=est))
        if mesh.n_leaves >= max_elems or (max_stages is not None and len(rows) >= max_stages):
            break
        marked = mark(est, theta)
        if len(marked) == 0:
            break
        mesh.refine(marked)
        if mesh.n_leaves > max_elems:
            break
        n_it += 1
    return rows, mesh


def write_rows(path, rows, seed):
    """CSV with a seed comment line and the fixed column set."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# seed={seed}\n")
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow(r.csv_row())
