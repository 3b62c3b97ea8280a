"""Benchmark problems with a singular gradient-field solution.

Both presets use ``u = grad psi`` with ``psi = r^(1/2) sin(phi/2)`` in
cylindrical coordinates around the z axis. Then ``curl u = 0``, so ``f = u``
and ``div f = div u = 0`` away from the axis.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import ConfigurationError
from .mesh import crack_mesh, lshape_mesh

__all__ = ["ProblemPreset", "get_preset", "PRESETS", "potential", "gradient_field"]


def _polar(p):
    p = np.atleast_2d(p)
    r = np.hypot(p[:, 0], p[:, 1])
    phi = np.mod(np.arctan2(p[:, 1], p[:, 0]), 2.0 * np.pi)
    return r, phi


def potential(p):
    """``r^(1/2) sin(phi/2)``; on the slit it is zero from both sides."""
    r, phi = _polar(p)
    return np.sqrt(r) * np.sin(0.5 * phi)


def gradient_field(p):
    r, phi = _polar(p)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = 0.5 / np.sqrt(r)
    out = np.zeros((len(r), 3))
    out[:, 0] = -s * np.sin(0.5 * phi)
    out[:, 1] = s * np.cos(0.5 * phi)
    return out


def _zero_vec(p):
    return np.zeros((len(np.atleast_2d(p)), 3))


def _zero(p):
    return np.zeros(len(np.atleast_2d(p)))


@dataclass
class ProblemPreset:
    """Domain, exact solution and data of a model problem."""

    name: str
    build_mesh: Callable
    u: Callable
    curl_u: Callable
    f: Callable
    div_f: Callable
    potential: Callable

    def dirichlet_values(self, dm):
        """Edge dofs of ``u`` on the Dirichlet edges of ``dm``.

        Since ``u`` is a gradient its path integral along ``[p, q]`` is
        ``psi(q) - psi(p)``, which stays exact up to the singular axis and
        on both sheets of a slit.
        """
        ev = dm.edge_verts[~dm.edge_active]
        x = dm.mesh.coords
        return self.potential(x[ev[:, 1]]) - self.potential(x[ev[:, 0]])

    def strong_residual(self, pts, h=1e-5):
        """``curl curl u + u - f`` at ``pts`` by central differences of ``curl u``."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        cc = np.zeros((len(pts), 3))
        d = []
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            d.append((self.curl_u(pts + e) - self.curl_u(pts - e)) / (2 * h))
        cc[:, 0] = d[1][:, 2] - d[2][:, 1]
        cc[:, 1] = d[2][:, 0] - d[0][:, 2]
        cc[:, 2] = d[0][:, 1] - d[1][:, 0]
        return cc + self.u(pts) - self.f(pts)

    def curl_of_u_numeric(self, pts, h=1e-5):
        """Central-difference curl of ``u``, used to confirm ``curl u = 0``."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d = []
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            d.append((self.u(pts + e) - self.u(pts - e)) / (2 * h))
        return np.column_stack([
            d[1][:, 2] - d[2][:, 1],
            d[2][:, 0] - d[0][:, 2],
            d[0][:, 1] - d[1][:, 0],
        ])


PRESETS = {
    "lshape": ProblemPreset(
        name="lshape",
        build_mesh=lshape_mesh,
        u=gradient_field,
        curl_u=_zero_vec,
        f=gradient_field,
        div_f=_zero,
        potential=potential,
    ),
    "crack": ProblemPreset(
        name="crack",
        build_mesh=crack_mesh,
        u=gradient_field,
        curl_u=_zero_vec,
        f=gradient_field,
        div_f=_zero,
        potential=potential,
    ),
}


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown problem {name!r}; choose from {sorted(PRESETS)}") from None
