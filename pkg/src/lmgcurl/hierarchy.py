"""Virtual refinement hierarchy extracted from a bisection forest.

Level ``l`` of the hierarchy contains every forest tetrahedron of level ``l``
together with the leaves of level below ``l``. Consecutive levels differ by a
single bisection of some level-``l`` tetrahedra.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import HierarchyError

__all__ = ["MeshHierarchy", "virtual_hierarchy", "refinement_zone"]


@dataclass
class MeshHierarchy:
    """Nested conforming meshes ``T_0 < T_1 < ... < T_L``.

    Attributes
    ----------
    mesh : Mesh
        The forest the levels were extracted from.
    levels : list of ndarray
        Forest tet ids of each virtual mesh, ascending.
    zones : list of ndarray
        Leaf ids of the refinement zone of each level (leaves of level >= l).
    theta_hat : float
        Fitted per-level decay factor of the element diameters.
    """

    mesh: object
    levels: list
    zones: list
    theta_hat: float
    version: int

    @property
    def L(self):
        return len(self.levels) - 1

    def check(self):
        """Verify conformity of every level and nesting of consecutive levels."""
        m = self.mesh
        if m.version != self.version:
            raise HierarchyError("mesh changed since the hierarchy was extracted")
        ch = m.children
        lev = m.levels
        for l, tl in enumerate(self.levels):
            m.check_conformity(tl)
            if np.any(lev[tl] > l):
                raise HierarchyError(f"level {l} contains a finer element")
            if l == self.L:
                continue
            nxt = self.levels[l + 1]
            gone = np.setdiff1d(tl, nxt)
            kids = ch[gone].ravel()
            if np.any(kids < 0) or not np.all(np.isin(kids, nxt)):
                raise HierarchyError(f"level {l + 1} is not nested in level {l}")
            if len(nxt) != len(tl) + len(gone):
                raise HierarchyError(f"level {l + 1} has extra elements")
        return True


def virtual_hierarchy(mesh):
    """Extract the virtual refinement hierarchy of ``mesh``.

    Returns
    -------
    MeshHierarchy
    """
    lev = mesh.levels
    alive = mesh.alive
    L = int(lev[alive].max()) if alive.any() else 0
    levels = [np.flatnonzero((lev == l) | (alive & (lev < l))) for l in range(L + 1)]
    leaves = np.flatnonzero(alive)
    zones = [leaves[lev[leaves] >= l] for l in range(L + 1)]
    return MeshHierarchy(
        mesh=mesh,
        levels=levels,
        zones=zones,
        theta_hat=_fit_decay(mesh),
        version=mesh.version,
    )


def refinement_zone(hierarchy, l):
    """Leaves forming the refinement zone of level ``l``."""
    if not 0 <= l <= hierarchy.L:
        raise ValueError(f"level {l} outside 0..{hierarchy.L}")
    return hierarchy.zones[l]


def _fit_decay(mesh):
    from .mesh import LOCAL_EDGES

    lev = mesh.levels
    x = mesh.coords[mesh.tets]
    loc = np.array(LOCAL_EDGES)
    diam = np.linalg.norm(x[:, loc[:, 0]] - x[:, loc[:, 1]], axis=2).max(axis=1)
    ls = np.unique(lev)
    if len(ls) < 2:
        return float("nan")
    hmax = np.array([diam[lev == l].max() for l in ls])
    slope = np.polyfit(ls, np.log(hmax), 1)[0]
    return float(np.exp(slope))
