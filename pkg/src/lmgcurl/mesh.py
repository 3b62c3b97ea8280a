"""Tetrahedral meshes refined by recursive bisection.

The mesh keeps the complete refinement forest: every tetrahedron ever created
stays in the tables, and the current triangulation is the set of leaves.
Bisection follows the Kossaczky scheme: the refinement edge of a tetrahedron is
always the edge between its local vertices 0 and 1, the new midpoint becomes
local vertex 3 of both children, and the children inherit ``(type + 1) % 3``.

Examples
--------
>>> from lmgcurl.mesh import kuhn_box
>>> m = kuhn_box()
>>> m.n_leaves
6
>>> report = m.refine(m.leaves())
>>> m.n_leaves
12
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidMeshError, RefinementError

__all__ = [
    "Mesh",
    "RefineReport",
    "MeshQuality",
    "LOCAL_EDGES",
    "kuhn_box",
    "kuhn_cells",
    "lshape_mesh",
    "crack_mesh",
    "read_mesh",
    "write_mesh",
    "tet_volumes",
]

#: local edges of a tetrahedron; edge 0 is the refinement edge
LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

#: local faces, face j is opposite local vertex j
LOCAL_FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))

#: local edges lying in face j
FACE_EDGES = tuple(
    tuple(e for e, (a, b) in enumerate(LOCAL_EDGES) if j not in (a, b)) for j in range(4)
)

# parent local vertex indices of the children, 4 denotes the new midpoint
_CHILD0 = (0, 2, 3, 4)
_CHILD1_T0 = (1, 3, 2, 4)
_CHILD1_TN = (1, 2, 3, 4)

INTERIOR, NEUMANN, DIRICHLET = -1, 0, 1


def _child_faces(child):
    """Map child face j to the parent face containing it (-1 for the new face)."""
    out = []
    for j in range(4):
        s = set(child) - {child[j]}
        if 4 not in s:
            out.append(({0, 1, 2, 3} - s).pop())
            continue
        t = (s - {4}) | {0, 1}
        out.append(({0, 1, 2, 3} - t).pop() if len(t) == 3 else -1)
    return tuple(out)


_FACE_MAP = {c: _child_faces(c) for c in (_CHILD0, _CHILD1_T0, _CHILD1_TN)}


def tet_volumes(coords, tets, signed=False):
    """Volumes of the tetrahedra ``tets`` (n, 4) over vertex array ``coords``."""
    x = coords[tets]
    d = x[:, 1:, :] - x[:, :1, :]
    v = np.einsum("ij,ij->i", d[:, 0], np.cross(d[:, 1], d[:, 2])) / 6.0
    return v if signed else np.abs(v)


@dataclass
class RefineReport:
    """Outcome of one :meth:`Mesh.refine` call."""

    new_tets: list = field(default_factory=list)
    new_vertices: list = field(default_factory=list)
    bisections: int = 0
    max_depth: int = 0


@dataclass
class MeshQuality:
    """Shape statistics of the leaves of a mesh."""

    rho: np.ndarray
    h: np.ndarray

    @property
    def rho_max(self):
        return float(self.rho.max())


class Mesh:
    """Refinement forest of tetrahedra.

    Parameters
    ----------
    vertices : array_like, shape (nv, 3)
    tets : array_like, shape (nt, 4)
        Vertex ids in local order; local vertices 0 and 1 span the refinement
        edge.
    types : array_like, optional
        Bisection types in {0, 1, 2}; zero by default.
    dirichlet : iterable of (tet, local_face), optional
        Boundary faces carrying Dirichlet conditions. ``None`` marks the whole
        boundary as Dirichlet.
    """

    def __init__(self, vertices, tets, types=None, dirichlet=None):
        vertices = np.asarray(vertices, dtype=float)
        tets = np.asarray(tets, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise InvalidMeshError("vertices must have shape (n, 3)")
        if tets.ndim != 2 or tets.shape[1] != 4:
            raise InvalidMeshError("tets must have shape (n, 4)")
        if not np.all(np.isfinite(vertices)):
            raise InvalidMeshError("non-finite vertex coordinates")
        if tets.size and (tets.min() < 0 or tets.max() >= len(vertices)):
            raise InvalidMeshError("tet references unknown vertex")
        if any(len(set(t)) != 4 for t in tets.tolist()):
            raise InvalidMeshError("tet with repeated vertex")
        if np.any(tet_volumes(vertices, tets) <= 1e-14 * max(1.0, np.ptp(vertices) ** 3)):
            raise InvalidMeshError("degenerate tetrahedron")
        nt = len(tets)
        types = np.zeros(nt, dtype=np.int64) if types is None else np.asarray(types)
        if np.any((types < 0) | (types > 2)):
            raise InvalidMeshError("types must lie in {0, 1, 2}")

        self._coords = [list(map(float, v)) for v in vertices]
        self._verts = [tuple(t) for t in tets.tolist()]
        self._type = [int(t) for t in types]
        self._level = [0] * nt
        self._parent = [-1] * nt
        self._children = [None] * nt
        self._alive = [True] * nt
        self._bflag = [[INTERIOR] * 4 for _ in range(nt)]
        self._midpoints = {}
        self._edge_leaves = {}
        self._version = 0
        self._cache = {}
        for k, t in enumerate(self._verts):
            for a, b in LOCAL_EDGES:
                self._edge_leaves.setdefault(_key(t[a], t[b]), set()).add(k)

        counts = {}
        for k, t in enumerate(self._verts):
            for j, face in enumerate(LOCAL_FACES):
                counts.setdefault(_fkey(t, face), []).append((k, j))
        for owners in counts.values():
            if len(owners) > 2:
                raise InvalidMeshError("face shared by more than two tetrahedra")
            if len(owners) == 1:
                k, j = owners[0]
                self._bflag[k][j] = NEUMANN if dirichlet is not None else DIRICHLET
        if dirichlet is not None:
            for k, j in dirichlet:
                if self._bflag[k][j] == INTERIOR:
                    raise InvalidMeshError(f"face ({k}, {j}) is not a boundary face")
                self._bflag[k][j] = DIRICHLET
        self._root_volume = float(tet_volumes(vertices, tets).sum())
        self._max_level = 0

    # ------------------------------------------------------------------
    # basic accessors

    @property
    def version(self):
        """Counter bumped on every mutation; used to invalidate caches."""
        return self._version

    @property
    def n_vertices(self):
        return len(self._coords)

    @property
    def n_tets(self):
        """Number of tetrahedra in the whole forest."""
        return len(self._verts)

    @property
    def n_leaves(self):
        return int(self._arrays()["alive"].sum())

    @property
    def max_level(self):
        return self._max_level

    @property
    def root_volume(self):
        return self._root_volume

    def _arrays(self):
        c = self._cache.get("arrays")
        if c is None or c["version"] != self._version:
            c = {
                "version": self._version,
                "coords": np.array(self._coords, dtype=float).reshape(-1, 3),
                "tets": np.array(self._verts, dtype=np.int64).reshape(-1, 4),
                "type": np.array(self._type, dtype=np.int64),
                "level": np.array(self._level, dtype=np.int64),
                "parent": np.array(self._parent, dtype=np.int64),
                "children": np.array(
                    [ch if ch is not None else (-1, -1) for ch in self._children], dtype=np.int64
                ).reshape(-1, 2),
                "alive": np.array(self._alive, dtype=bool),
                "bflag": np.array(self._bflag, dtype=np.int64).reshape(-1, 4),
            }
            self._cache = {"arrays": c}
        return c

    @property
    def coords(self):
        return self._arrays()["coords"]

    @property
    def tets(self):
        """Vertex ids of all forest tetrahedra, shape (n_tets, 4)."""
        return self._arrays()["tets"]

    @property
    def types(self):
        return self._arrays()["type"]

    @property
    def levels(self):
        return self._arrays()["level"]

    @property
    def parents(self):
        return self._arrays()["parent"]

    @property
    def children(self):
        return self._arrays()["children"]

    @property
    def alive(self):
        return self._arrays()["alive"]

    @property
    def face_flags(self):
        """Per tet and local face: -1 interior, 0 Neumann, 1 Dirichlet."""
        return self._arrays()["bflag"]

    def leaves(self):
        """Ids of the current leaf tetrahedra, ascending."""
        return np.flatnonzero(self.alive)

    def refinement_edge(self, k):
        t = self._verts[k]
        return _key(t[0], t[1])

    def forest_tables(self):
        """Global edge numbering over the whole forest.

        Returns a dict with ``tet_edges`` (n_tets, 6) global edge ids,
        ``edge_verts`` (n_edges, 2) sorted vertex pairs, and boolean
        ``edge_dirichlet`` / ``vertex_dirichlet`` masks.
        """
        arr = self._arrays()
        tab = arr.get("forest")
        if tab is not None:
            return tab
        tets = arr["tets"]
        loc = np.array(LOCAL_EDGES)
        pairs = np.sort(tets[:, loc], axis=2).reshape(-1, 2)
        nv = self.n_vertices
        keys = pairs[:, 0] * nv + pairs[:, 1]
        ukeys, inv = np.unique(keys, return_inverse=True)
        edge_verts = np.column_stack([ukeys // nv, ukeys % nv])
        tet_edges = inv.reshape(-1, 6)

        flags = arr["bflag"]
        kk, jj = np.nonzero(flags == DIRICHLET)
        fe = np.array(FACE_EDGES)[jj]
        edge_dir = np.zeros(len(ukeys), dtype=bool)
        edge_dir[tet_edges[kk[:, None], fe].ravel()] = True
        vert_dir = np.zeros(nv, dtype=bool)
        fv = np.array(LOCAL_FACES)[jj]
        vert_dir[tets[kk[:, None], fv].ravel()] = True
        tab = {
            "tet_edges": tet_edges,
            "edge_verts": edge_verts,
            "edge_dirichlet": edge_dir,
            "vertex_dirichlet": vert_dir,
        }
        arr["forest"] = tab
        return tab

    # ------------------------------------------------------------------
    # refinement

    def _midpoint(self, a, b, report):
        key = _key(a, b)
        m = self._midpoints.get(key)
        if m is None:
            xa, xb = self._coords[a], self._coords[b]
            self._coords.append([0.5 * (xa[i] + xb[i]) for i in range(3)])
            m = len(self._coords) - 1
            self._midpoints[key] = m
            report.new_vertices.append(m)
        return m

    def bisect(self, k, report=None):
        """Bisect leaf ``k`` across its refinement edge.

        This does not restore conformity; use :meth:`refine` for that.

        Returns
        -------
        (child0, child1) : tuple of int
        """
        if not (0 <= k < len(self._verts)) or not self._alive[k]:
            raise RefinementError(f"tetrahedron {k} is not a leaf")
        report = RefineReport() if report is None else report
        t = self._verts[k]
        m = self._midpoint(t[0], t[1], report)
        full = t + (m,)
        ty = self._type[k]
        patterns = (_CHILD0, _CHILD1_T0 if ty == 0 else _CHILD1_TN)
        for a, b in LOCAL_EDGES:
            s = self._edge_leaves[_key(t[a], t[b])]
            s.discard(k)
            if not s:
                del self._edge_leaves[_key(t[a], t[b])]
        ids = []
        for pat in patterns:
            cv = tuple(full[i] for i in pat)
            cid = len(self._verts)
            self._verts.append(cv)
            self._type.append((ty + 1) % 3)
            self._level.append(self._level[k] + 1)
            self._parent.append(k)
            self._children.append(None)
            self._alive.append(True)
            self._bflag.append(
                [INTERIOR if pf < 0 else self._bflag[k][pf] for pf in _FACE_MAP[pat]]
            )
            for a, b in LOCAL_EDGES:
                self._edge_leaves.setdefault(_key(cv[a], cv[b]), set()).add(cid)
            ids.append(cid)
            report.new_tets.append(cid)
        self._children[k] = tuple(ids)
        self._alive[k] = False
        self._max_level = max(self._max_level, self._level[k] + 1)
        report.bisections += 1
        self._version += 1
        self._cache = {}
        return ids[0], ids[1]

    def refine(self, marked, max_depth=None):
        """Bisect every marked leaf at least once, keeping the mesh conforming.

        An edge is split only when it is the refinement edge of every leaf
        sharing it; leaves around the edge whose refinement edge differs are
        refined first, recursively.

        Parameters
        ----------
        marked : iterable of int
            Leaf ids.
        max_depth : int, optional
            Bound on the closure recursion depth. Defaults to
            ``3 * (max_level + 4)``.

        Raises
        ------
        RefinementError
            If a marked id is not a leaf or the closure exceeds the depth bound.
        """
        marked = sorted(set(int(k) for k in marked))
        for k in marked:
            if not (0 <= k < len(self._verts)) or not self._alive[k]:
                raise RefinementError(f"tetrahedron {k} is not a leaf")
        report = RefineReport()
        for k in marked:
            if self._alive[k]:
                self._refine_one(k, report, max_depth)
        return report

    def _refine_one(self, k, report, max_depth):
        cap = max_depth if max_depth is not None else 3 * (self._max_level + 4)
        stack = [k]
        while stack:
            t = stack[-1]
            if not self._alive[t]:
                stack.pop()
                continue
            edge = self.refinement_edge(t)
            patch = sorted(self._edge_leaves[edge])
            bad = next((s for s in patch if self.refinement_edge(s) != edge), None)
            if bad is not None:
                if len(stack) >= cap:
                    raise RefinementError(
                        f"refinement closure exceeded depth {cap}; the initial mesh "
                        "is likely incompatible with recursive bisection"
                    )
                stack.append(bad)
                report.max_depth = max(report.max_depth, len(stack))
                continue
            for s in patch:
                self.bisect(s, report)
            stack.pop()

    def refine_uniform(self, times=1):
        """Bisect all leaves ``times`` times."""
        for _ in range(times):
            self.refine(self.leaves())
        return self

    # ------------------------------------------------------------------
    # checks and statistics

    def leaf_volumes(self):
        lv = self.leaves()
        return tet_volumes(self.coords, self.tets[lv])

    def check_conformity(self, tets=None):
        """Face-pairing scan of a set of tetrahedra (leaves by default).

        Every interior face must be shared by exactly two tetrahedra with the
        same vertex triple; every unpaired face must be a boundary face.

        Raises
        ------
        InvalidMeshError
        """
        tets = self.leaves() if tets is None else np.asarray(tets)
        faces, owner, local = _face_table(self.tets[tets])
        _, inv, cnt = np.unique(_face_keys(faces), return_inverse=True, return_counts=True)
        inv = inv.ravel()
        if np.any(cnt > 2):
            raise InvalidMeshError("face shared by more than two tetrahedra")
        flags = self.face_flags[tets[owner], local]
        single = cnt[inv] == 1
        if np.any(flags[single] == INTERIOR):
            raise InvalidMeshError("hanging face: unpaired face inside the domain")
        if np.any(flags[~single] != INTERIOR):
            raise InvalidMeshError("boundary face shared by two tetrahedra")
        vol = tet_volumes(self.coords, self.tets[tets]).sum()
        if abs(vol - self._root_volume) > 1e-12 * self._root_volume:
            raise InvalidMeshError("tetrahedra do not tile the domain")
        return True

    def check_face_levels(self):
        """Verify the level relations across interior faces of the leaves.

        For two leaves sharing a face: if each contains the refinement edge of
        the other, the refinement edges coincide; if the face holds both
        refinement edges the levels agree; if it holds only the refinement
        edge of one, that one is exactly one level finer; if it holds neither,
        the levels agree.
        """
        lv = self.leaves()
        tets = self.tets[lv]
        levels = self.levels[lv]
        faces, owner, local = _face_table(tets)
        order = np.lexsort(faces.T[::-1])
        f = faces[order]
        same = np.all(f[1:] == f[:-1], axis=1)
        i = order[:-1][same]
        j = order[1:][same]
        ka, kb = owner[i], owner[j]
        ja, jb = local[i], local[j]
        ina = ja >= 2  # face contains the refinement edge of ka
        inb = jb >= 2
        la, lb = levels[ka], levels[kb]
        ok = np.where(
            ina & inb,
            la == lb,
            np.where(ina, la == lb + 1, np.where(inb, lb == la + 1, la == lb)),
        )
        ra = np.sort(tets[ka][:, :2], axis=1)
        rb = np.sort(tets[kb][:, :2], axis=1)
        ta, tb = tets[ka], tets[kb]
        a_has_rb = (ta == rb[:, :1]).any(axis=1) & (ta == rb[:, 1:]).any(axis=1)
        b_has_ra = (tb == ra[:, :1]).any(axis=1) & (tb == ra[:, 1:]).any(axis=1)
        mutual = a_has_rb & b_has_ra
        ok &= ~mutual | np.all(ra == rb, axis=1)
        if not np.all(ok):
            bad = np.flatnonzero(~ok)[0]
            raise InvalidMeshError(
                f"face level relation violated between leaves {lv[ka[bad]]} and {lv[kb[bad]]}"
            )
        return True

    def quality(self):
        """Shape regularity ``diam / inradius`` and diameter of every leaf."""
        lv = self.leaves()
        return _quality(self.coords, self.tets[lv])

    def similarity_classes(self, decimals=8):
        """Number of distinct leaf shapes up to congruence and scaling."""
        x = self.coords[self.tets[self.leaves()]]
        loc = np.array(LOCAL_EDGES)
        ln = np.linalg.norm(x[:, loc[:, 0]] - x[:, loc[:, 1]], axis=2)
        ln = np.sort(ln / ln.max(axis=1, keepdims=True), axis=1)
        return len(np.unique(np.round(ln, decimals), axis=0))

    def boundary_faces(self, flag=DIRICHLET, tets=None):
        """(tet, local_face) pairs of leaves carrying ``flag``."""
        tets = self.leaves() if tets is None else np.asarray(tets)
        k, j = np.nonzero(self.face_flags[tets] == flag)
        return np.column_stack([tets[k], j])

    def __repr__(self):
        return (
            f"Mesh(n_vertices={self.n_vertices}, n_leaves={self.n_leaves}, "
            f"n_tets={self.n_tets}, max_level={self.max_level})"
        )


def _key(a, b):
    return (a, b) if a < b else (b, a)


def _fkey(t, face):
    return tuple(sorted(t[i] for i in face))


def _face_table(tets):
    faces = np.sort(tets[:, np.array(LOCAL_FACES)], axis=2).reshape(-1, 3)
    owner = np.repeat(np.arange(len(tets)), 4)
    local = np.tile(np.arange(4), len(tets))
    return faces, owner, local


def _face_keys(faces):
    """One integer per sorted vertex triple (rows of a structured view if ids are huge)."""
    faces = np.ascontiguousarray(faces, dtype=np.int64)
    if faces.size == 0 or faces.max() < (1 << 21):
        return (faces[:, 0] << 42) | (faces[:, 1] << 21) | faces[:, 2]
    return faces.view([("a", np.int64), ("b", np.int64), ("c", np.int64)]).ravel()


def _quality(coords, tets):
    x = coords[tets]
    vol = tet_volumes(coords, tets)
    if np.any(vol <= 0):
        raise InvalidMeshError("degenerate tetrahedron")
    loc = np.array(LOCAL_EDGES)
    diam = np.linalg.norm(x[:, loc[:, 0]] - x[:, loc[:, 1]], axis=2).max(axis=1)
    area = np.zeros(len(tets))
    for face in LOCAL_FACES:
        a, b, c = (x[:, i] for i in face)
        area += 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    inradius = 3.0 * vol / area
    return MeshQuality(rho=diam / inradius, h=diam)


# ----------------------------------------------------------------------
# initial meshes


def _kuhn_cube(v):
    """Six tetrahedra of the Kuhn triangulation of one cube.

    ``v`` maps corner bits (i, j, k) to vertex ids. Each tetrahedron follows a
    monotone path x0 -> x1 -> x2 -> x3 from corner (0,0,0) to (1,1,1) and is
    stored in the local order (x0, x3, x2, x1) so that the main diagonal is
    the refinement edge.
    """
    from itertools import permutations

    out = []
    for perm in permutations(range(3)):
        p = [0, 0, 0]
        path = [v[tuple(p)]]
        for axis in perm:
            p[axis] = 1
            path.append(v[tuple(p)])
        x0, x1, x2, x3 = path
        out.append((x0, x3, x2, x1))
    return out


def kuhn_cells(cells, origin=(0.0, 0.0, 0.0), h=1.0, split=None, dirichlet="all"):
    """Kuhn-triangulated union of axis-aligned cubes.

    Parameters
    ----------
    cells : iterable of (i, j, k)
        Integer cube positions; cube ``(i, j, k)`` occupies
        ``origin + h * [i, i+1] x [j, j+1] x [k, k+1]``.
    split : callable, optional
        ``split(cell, corner_point) -> bool``; when true for a corner, cells
        for which ``split`` is true get their own copy of that vertex. Used
        to cut slits into the domain.
    dirichlet : "all" or "none"
    """
    cells = [tuple(c) for c in cells]
    origin = np.asarray(origin, dtype=float)
    ids = {}
    coords = []
    tets = []
    for c in cells:
        v = {}
        for bits in np.ndindex(2, 2, 2):
            g = tuple(c[i] + bits[i] for i in range(3))
            x = origin + h * np.asarray(g, dtype=float)
            tag = bool(split(c, x)) if split is not None else False
            key = (g, tag)
            if key not in ids:
                ids[key] = len(coords)
                coords.append(x)
            v[bits] = ids[key]
        tets.extend(_kuhn_cube(v))
    return Mesh(np.array(coords), np.array(tets), dirichlet=None if dirichlet == "all" else [])


def kuhn_box(n=(1, 1, 1), lower=(0.0, 0.0, 0.0), h=1.0, dirichlet="all"):
    """Kuhn triangulation of an ``n[0] x n[1] x n[2]`` block of cubes."""
    cells = list(np.ndindex(*n))
    return kuhn_cells(cells, origin=lower, h=h, dirichlet=dirichlet)


def lshape_mesh():
    """(-1, 1)^3 minus (0, 1) x (-1, 0) x (-1, 1), 36 tetrahedra."""
    cells = [c for c in np.ndindex(2, 2, 2) if not (c[0] == 1 and c[1] == 0)]
    return kuhn_cells(cells, origin=(-1.0, -1.0, -1.0))


def crack_mesh():
    """(-1, 1)^3 cut along the slit {y = 0, 0 <= x < 1}, 48 tetrahedra.

    Vertices on the open slit are duplicated: cells below the slit (y < 0)
    reference their own copies, so both crack faces are boundary faces. The
    crack front x = 0 is not duplicated.
    """

    def split(cell, x):
        return cell[1] == 0 and abs(x[1]) < 1e-12 and x[0] > 1e-12

    return kuhn_cells(list(np.ndindex(2, 2, 2)), origin=(-1.0, -1.0, -1.0), split=split)


# ----------------------------------------------------------------------
# ASCII format


def write_mesh(mesh, path):
    """Write the leaves of ``mesh`` in the ASCII mesh format.

    The file holds ``vertices N`` followed by coordinates, ``tets M`` followed
    by ``v0 v1 v2 v3 type`` and ``dirichlet F`` followed by ``tet localface``
    lines. Tet indices in the Dirichlet section refer to the written tets.
    """
    lv = mesh.leaves()
    coords = mesh.coords
    used = np.unique(mesh.tets[lv])
    renum = -np.ones(mesh.n_vertices, dtype=np.int64)
    renum[used] = np.arange(len(used))
    lines = [f"vertices {len(used)}"]
    lines += ["%.17g %.17g %.17g" % tuple(coords[v]) for v in used]
    lines.append(f"tets {len(lv)}")
    tt = renum[mesh.tets[lv]]
    ty = mesh.types[lv]
    lines += [f"{a} {b} {c} {d} {t}" for (a, b, c, d), t in zip(tt.tolist(), ty.tolist())]
    k, j = np.nonzero(mesh.face_flags[lv] == DIRICHLET)
    lines.append(f"dirichlet {len(k)}")
    lines += [f"{a} {b}" for a, b in zip(k.tolist(), j.tolist())]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path):
    """Read a mesh written by :func:`write_mesh`; leaves become roots."""
    with open(path) as fh:
        tokens = [ln.split() for ln in fh if ln.strip()]
    pos = 0

    def section(name):
        nonlocal pos
        head = tokens[pos]
        if len(head) != 2 or head[0] != name:
            raise InvalidMeshError(f"expected '{name} <count>' at line {pos + 1}")
        n = int(head[1])
        rows = tokens[pos + 1 : pos + 1 + n]
        if len(rows) != n:
            raise InvalidMeshError(f"section '{name}' truncated")
        pos += n + 1
        return rows

    try:
        verts = np.array([[float(x) for x in r] for r in section("vertices")]).reshape(-1, 3)
        trows = np.array([[int(x) for x in r] for r in section("tets")], dtype=np.int64).reshape(-1, 5)
        drows = [(int(a), int(b)) for a, b in section("dirichlet")]
    except (IndexError, ValueError) as exc:
        raise InvalidMeshError(f"malformed mesh file: {exc}") from exc
    return Mesh(verts, trows[:, :4], types=trows[:, 4], dirichlet=drows)
