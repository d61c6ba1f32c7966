"""Benchmark solution with a known closed form for convergence studies.

The field u = (x^2+y^2-1)(x^2+y^2-4) sin(pi z) sin(7xy) vanishes on every
face of the quarter annulus with radii 1..2 and height 1 (the radial
factor kills r=1 and r=2, sin(7xy) kills the two straight sides, and
sin(pi z) the top and bottom), so the associated Poisson problem has
homogeneous Dirichlet data everywhere.  The load is derived symbolically
and compiled once on first use.
"""

import functools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ManufacturedSolution:
    """Exact solution, physical gradient, and matching Poisson load.

    All three are vectorized over point arrays of shape (..., 3); ``grad``
    returns shape (..., 3).
    """

    u: object
    grad: object
    f: object

    def parametric_load(self, geo):
        """The load pulled back to the parametric cube through ``geo``."""
        return lambda etas: self.f(geo.F(etas))


@functools.lru_cache(maxsize=1)
def poisson_benchmark():
    import sympy as sym

    x, y, z = sym.symbols("x y z")
    r2 = x**2 + y**2
    u = (r2 - 1) * (r2 - 4) * sym.sin(sym.pi * z) * sym.sin(7 * x * y)
    grad = [sym.diff(u, v) for v in (x, y, z)]
    f = -sum(sym.diff(g, v) for g, v in zip(grad, (x, y, z)))

    u_fn = sym.lambdify((x, y, z), u, modules="numpy")
    g_fn = [sym.lambdify((x, y, z), g, modules="numpy") for g in grad]
    f_fn = sym.lambdify((x, y, z), sym.simplify(f), modules="numpy")

    def split(pts):
        pts = np.asarray(pts, dtype=float)
        return pts[..., 0], pts[..., 1], pts[..., 2]

    def u_eval(pts):
        return u_fn(*split(pts))

    def grad_eval(pts):
        xs = split(pts)
        return np.stack([np.broadcast_to(g(*xs), xs[0].shape) for g in g_fn],
                        axis=-1)

    def f_eval(pts):
        return f_fn(*split(pts))

    return ManufacturedSolution(u_eval, grad_eval, f_eval)
