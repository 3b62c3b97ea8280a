"""Self-checks run by ``lmgcurl verify``."""
from dataclasses import dataclass

import numpy as np

from .analysis import greedy_coloring, measure_scs, subspace_cosine
from .assembly import assemble, assemble_nodal_laplacian
from .estimator import estimate, mark
from .exceptions import ConfigurationError
from .mesh import LOCAL_EDGES, kuhn_box, lshape_mesh
from .problems import get_preset
from .solver import LocalMultigrid
from .space import (
    DofMap,
    build_gradient_map,
    edge_interpolate,
    edge_shape,
    level_dof_sets,
    nodal_interpolate,
    quasi_interpolate,
)
from .quadrature import gauss_segment

__all__ = ["Check", "SUITES", "run_suite", "graded_mesh"]


@dataclass
class Check:
    name: str
    value: float
    limit: float

    @property
    def passed(self):
        return bool(np.isfinite(self.value) and self.value <= self.limit)

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.value:.3e} (limit {self.limit:.1e})"


def graded_mesh(rounds=3, radius=0.5, base=None, uniform=1):
    """L-shape refined uniformly and then towards the reentrant edge."""
    m = lshape_mesh() if base is None else base
    m.refine_uniform(uniform)
    for _ in range(rounds):
        lv = m.leaves()
        c = m.coords[m.tets[lv]].mean(axis=1)
        m.refine(lv[np.hypot(c[:, 0], c[:, 1]) < radius])
    return m


def _rel(a, b):
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))


def suite_cdp(rng, **_):
    m = graded_mesh()
    dm = DofMap.build(m)
    u = lambda p: p[:, 0] ** 2 + p[:, 1] * p[:, 2]
    gu = lambda p: np.column_stack([2 * p[:, 0], p[:, 2], p[:, 1]])
    G = build_gradient_map(dm, active_only=False)
    lhs = G @ nodal_interpolate(dm, u, active_only=False)
    checks = [Check("cdp edge(grad u) = G nodal(u)", _rel(lhs, edge_interpolate(dm, gu, active_only=False)), 1e-12)]

    x = rng.standard_normal((4, 3)) + np.eye(4, 3) * 3
    t, w = gauss_segment(5)
    D = np.empty((6, 6))
    for k, (i, j) in enumerate(LOCAL_EDGES):
        pts = x[i] + t[:, None] * (x[j] - x[i])
        for e in range(6):
            D[k, e] = w @ (edge_shape(x, e, pts) @ (x[j] - x[i]))
    checks.append(Check("edge duality matrix = I", float(np.abs(D - np.eye(6)).max()), 1e-13))

    mo = graded_mesh(rounds=2, base=kuhn_box((2, 2, 2), dirichlet="none"))
    dmo = DofMap.build(mo)
    vals = rng.standard_normal(len(dmo.vertices))
    q = quasi_interpolate(dmo, vals)
    checks.append(Check("quasi-interpolation projection", _rel(q, vals[dmo.vertex_active]), 1e-12))
    return checks


def suite_kernel(rng, **_):
    m = graded_mesh()
    dm = DofMap.build(m)
    S = assemble(dm)
    G = build_gradient_map(dm)
    x = rng.standard_normal(G.shape[1])
    nA = abs(S.A_curl).max()
    checks = [
        Check("|A_curl G x| / (|A_curl| |x|)", float(np.linalg.norm(S.A_curl @ (G @ x)) / (nA * np.linalg.norm(x))), 1e-12),
        Check("symmetry of A", float(abs(S.A - S.A.T).max() / abs(S.A).max()), 1e-13),
    ]
    N1 = assemble_nodal_laplacian(S.A, G)
    N2 = assemble_nodal_laplacian(S.M, G)
    checks.append(Check("G^T A G = G^T M G", float(abs(N1 - N2).max() / abs(N2).max()), 1e-12))

    # a single-space SSC step (L = 0) is a direct solve
    m0 = lshape_mesh()
    dm0 = DofMap.build(m0)
    S0 = assemble(dm0)
    mg = LocalMultigrid().fit(m0, S0.A)
    b = rng.standard_normal(S0.A.shape[0])
    x1 = mg.ssc_step(np.zeros_like(b), b)
    xs = np.linalg.solve(S0.A.toarray(), b)
    checks.append(Check("single-space SSC step exact", _rel(x1, xs), 1e-12))
    return checks


def suite_prolongation(rng, **_):
    m = graded_mesh()
    dm = DofMap.build(m)
    mg = LocalMultigrid().fit(m, assemble(dm).A)
    h = mg.hierarchy_
    worst_e, worst_g = 0.0, 0.0
    for l in range(h.L):
        lo, hi = h.levels[l], h.levels[l + 1]
        v = rng.standard_normal(lo.n_dofs)
        Pv = lo.P @ v
        e_c = v @ (lo.A @ v)
        A_fine = assemble(hi.dofmap).A
        worst_e = max(worst_e, abs(Pv @ (A_fine @ Pv) - e_c) / e_c)
        w = rng.standard_normal(lo.G.shape[1])
        worst_g = max(worst_g, _rel(hi.G @ (lo.Pv @ w), lo.P @ (lo.G @ w)))
    return [
        Check("energy identity a(Pv, Pv) = v^T A_l v", worst_e, 1e-12),
        Check("G_{l+1} P^V = P G_l", worst_g, 1e-12),
    ]


def _five_level():
    m = graded_mesh(rounds=2, uniform=2)
    dm = DofMap.build(m)
    return LocalMultigrid().fit(m, assemble(dm).A).hierarchy_


def suite_scs(rng, seed=0, **_):
    h = _five_level()
    res = measure_scs(h, samples=12, seed=seed)
    # two single edge functions of the finest level with disjoint supports
    fine = h.fine
    dm = fine.dofmap
    c = dm.mesh.coords[dm.active_edges].mean(axis=1)
    i, j = int(np.argmin(c[:, 0] + c[:, 1])), int(np.argmax(c[:, 0] + c[:, 1]))
    n = fine.n_dofs
    U = np.zeros((n, 1))
    V = np.zeros((n, 1))
    U[i] = V[j] = 1.0
    return [
        Check("fitted cosine decay q", res.q_hat, 0.95),
        Check("disjoint-support cosine", subspace_cosine(fine.A, U, V), 1e-12),
    ]


def suite_coloring(rng, **_):
    h = _five_level()
    dms = [lev.dofmap for lev in h.levels]
    col = greedy_coloring(dms, level_dof_sets(h.hierarchy, dms))
    return [
        Check("coloring invalid", 0.0 if col.is_valid(dms) else 1.0, 0.0),
        Check("vertex colors", float(col.n_vertex_colors), 64),
        Check("edge colors", float(col.n_edge_colors), 64),
    ]


def suite_contraction(rng, problem="lshape", levels=5, seed=0, **_):
    from .adaptive import run_adaptive

    rows, _ = run_adaptive(get_preset(problem), max_stages=levels, seed=seed)
    return [Check(f"contraction stage {r.n_it} (L={r.levels - 1})", r.contraction, 0.95) for r in rows]


def suite_estimator(rng, **_):
    m = kuhn_box((2, 2, 2), dirichlet="none")
    m.refine_uniform(2)
    dm = DofMap.build(m)
    c = np.array([0.3, -1.0, 2.0])
    f = lambda p: np.tile(c, (len(p), 1))
    div0 = lambda p: np.zeros(len(p))
    coef = edge_interpolate(dm, f, active_only=False)
    r0 = estimate(dm, coef, f, div0)
    g = lambda p: np.column_stack([np.sin(p[:, 0]), p[:, 2] ** 2, p[:, 0] * p[:, 1]])
    cg = edge_interpolate(dm, g, active_only=False)
    r1 = estimate(dm, cg, g, lambda p: np.cos(p[:, 0]))
    r2 = estimate(dm, -3.0 * cg, lambda p: -3.0 * g(p), lambda p: -3.0 * np.cos(p[:, 0]))
    sel = mark(r1, 1.0)
    return [
        Check("eta for constant field", r0.eta_h, 1e-12),
        Check("homogeneity |eta(s u) - |s| eta(u)|", _rel(r2.eta, 3.0 * r1.eta), 1e-12),
        Check("theta=1 marks only maxima", float(np.any(r1.eta[np.isin(r1.tets, sel)] < r1.eta_max)), 0.0),
    ]


SUITES = {
    "cdp": suite_cdp,
    "prolongation": suite_prolongation,
    "kernel": suite_kernel,
    "scs": suite_scs,
    "coloring": suite_coloring,
    "contraction": suite_contraction,
    "estimator": suite_estimator,
}


def run_suite(name, seed=0, **kw):
    """Run one suite (or ``"all"``) and return its checks."""
    names = list(SUITES) if name == "all" else [name]
    out = []
    for n in names:
        if n not in SUITES:
            raise ConfigurationError(f"unknown suite {n!r}; choose from {sorted(SUITES)}")
        out.extend(SUITES[n](np.random.default_rng(seed), seed=seed, **kw))
    return out
