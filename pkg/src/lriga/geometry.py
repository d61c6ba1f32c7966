"""Analytic geometry maps from the unit cube to physical patches.

Each map supplies vectorized evaluators for F and its Jacobian; the solver
only ever consumes the pointwise metric Q = det(J) J^-1 J^-T and the
weight det(J), so analytic maps with closed-form Jacobians are sufficient.
Custom polynomial maps can be loaded from a small text format (see
:func:`load_polynomial_map`).
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P


class GeometryError(RuntimeError):
    """Raised for singular or orientation-reversing Jacobians."""


@dataclass(frozen=True)
class GeometryMap:
    """Bundle of map and Jacobian evaluators.

    Attributes:
        name: preset tag.
        F: callable mapping points (..., 3) -> (..., 3).
        jac: callable mapping points (..., 3) -> (..., 3, 3); column a is
            the derivative of F with respect to eta_a.
    """

    name: str
    F: object
    jac: object


def _cube_F(eta):
    return np.array(eta, dtype=float, copy=True)


def _cube_jac(eta):
    eta = np.asarray(eta)
    return np.broadcast_to(np.eye(3), eta.shape[:-1] + (3, 3)).copy()


def _annulus_F(eta):
    eta = np.asarray(eta, dtype=float)
    e1, e2, e3 = eta[..., 0], eta[..., 1], eta[..., 2]
    rad = 1.0 + e1
    ang = 0.5 * np.pi * e2
    return np.stack([rad * np.cos(ang), rad * np.sin(ang), e3], axis=-1)


def _annulus_jac(eta):
    eta = np.asarray(eta, dtype=float)
    e1, e2 = eta[..., 0], eta[..., 1]
    rad = 1.0 + e1
    ang = 0.5 * np.pi * e2
    c, s = np.cos(ang), np.sin(ang)
    J = np.zeros(eta.shape[:-1] + (3, 3))
    J[..., 0, 0] = c
    J[..., 1, 0] = s
    J[..., 0, 1] = -rad * 0.5 * np.pi * s
    J[..., 1, 1] = rad * 0.5 * np.pi * c
    J[..., 2, 2] = 1.0
    return J


# shear applied after the spherical coordinates; it couples the directions so
# that every entry of the metric is active
_SHELL_L = np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


def _shell_angles(eta):
    eta = np.asarray(eta, dtype=float)
    rho = 1.0 + eta[..., 2]
    phi = 0.25 * np.pi + 0.5 * np.pi * eta[..., 0]
    theta = 0.5 * np.pi * eta[..., 1]
    return rho, phi, theta


def _shell_F(eta):
    rho, phi, theta = _shell_angles(eta)
    xyz = np.stack(
        [
            rho * np.sin(phi) * np.cos(theta),
            rho * np.sin(phi) * np.sin(theta),
            rho * np.cos(phi),
        ],
        axis=-1,
    )
    return xyz @ _SHELL_L.T


def _shell_jac(eta):
    rho, phi, theta = _shell_angles(eta)
    sp_, cp = np.sin(phi), np.cos(phi)
    st, ct = np.sin(theta), np.cos(theta)
    J = np.empty(np.asarray(eta).shape[:-1] + (3, 3))
    # d/d eta1 = rho * phi' * (cos phi cos th, cos phi sin th, -sin phi)
    J[..., 0, 0] = rho * 0.5 * np.pi * cp * ct
    J[..., 1, 0] = rho * 0.5 * np.pi * cp * st
    J[..., 2, 0] = -rho * 0.5 * np.pi * sp_
    # d/d eta2 = rho sin phi * theta' * (-sin th, cos th, 0)
    J[..., 0, 1] = -rho * sp_ * 0.5 * np.pi * st
    J[..., 1, 1] = rho * sp_ * 0.5 * np.pi * ct
    J[..., 2, 1] = 0.0
    # d/d eta3 = (sin phi cos th, sin phi sin th, cos phi)
    J[..., 0, 2] = sp_ * ct
    J[..., 1, 2] = sp_ * st
    J[..., 2, 2] = cp
    return np.einsum("ab,...bc->...ac", _SHELL_L, J)


_COLUMN_C = 0.1


def _column_F(eta):
    eta = np.asarray(eta, dtype=float)
    e1, e2, e3 = eta[..., 0], eta[..., 1], eta[..., 2]
    bulge = 4.0 * e3 * (1.0 - e3)
    return np.stack(
        [e1 + _COLUMN_C * bulge * (2.0 * e1 - 1.0), e2, e3], axis=-1
    )


def _column_jac(eta):
    eta = np.asarray(eta, dtype=float)
    e1, e3 = eta[..., 0], eta[..., 2]
    J = np.zeros(eta.shape[:-1] + (3, 3))
    J[..., 0, 0] = 1.0 + 2.0 * _COLUMN_C * 4.0 * e3 * (1.0 - e3)
    J[..., 0, 2] = _COLUMN_C * (4.0 - 8.0 * e3) * (2.0 * e1 - 1.0)
    J[..., 1, 1] = 1.0
    J[..., 2, 2] = 1.0
    return J


PRESETS = {
    "unit_cube": GeometryMap("unit_cube", _cube_F, _cube_jac),
    "quarter_annulus": GeometryMap("quarter_annulus", _annulus_F, _annulus_jac),
    "spherical_shell": GeometryMap("spherical_shell", _shell_F, _shell_jac),
    "deformed_column": GeometryMap("deformed_column", _column_F, _column_jac),
}


def get_geometry(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise GeometryError(
            "unknown geometry %r (available: %s)" % (name, ", ".join(sorted(PRESETS)))
        ) from None


def metric_data(geo, etas):
    """Vectorized metric: Q = det(J) J^-1 J^-T and det(J).

    Raises:
        GeometryError: if det(J) <= 0 anywhere in the sample.
    """
    J = geo.jac(etas)
    det = np.linalg.det(J)
    if np.any(det <= 1e-13):
        raise GeometryError(
            "geometry %r has non-positive Jacobian determinant (min %g)"
            % (geo.name, float(np.min(det)))
        )
    Jinv = np.linalg.inv(J)
    Q = det[..., None, None] * np.einsum("...ij,...kj->...ik", Jinv, Jinv)
    return Q, det


def metric_and_weight(geo, eta, f=None):
    """Pointwise (Q, omega) with omega = det(J) * f(eta) (f omitted: det)."""
    Q, det = metric_data(geo, np.asarray(eta, dtype=float))
    omega = det if f is None else det * f(eta)
    return Q, omega


def validate_geometry(geo, n_samples=1000, seed=0):
    """det(J) > 0 and Q symmetric positive definite on a random sample."""
    rng = np.random.default_rng(seed)
    etas = rng.uniform(0.0, 1.0, (n_samples, 3))
    Q, det = metric_data(geo, etas)
    assert np.all(det > 0)
    sym = np.max(np.abs(Q - np.swapaxes(Q, -1, -2)))
    eigs = np.linalg.eigvalsh(Q)
    return float(np.min(det)), float(sym), float(np.min(eigs))


def load_polynomial_map(path):
    """Load a polynomial map from a text file.

    Format (whitespace separated, '#' comments): first three integers are
    the degrees (d1, d2, d3); then, for each of the three physical
    components, (d1+1)(d2+1)(d3+1) monomial coefficients c[i,j,k] of
    eta1^i eta2^j eta3^k with i fastest.
    """
    with open(path) as fh:
        tokens = []
        for line in fh:
            line = line.split("#", 1)[0]
            tokens.extend(line.split())
    if len(tokens) < 3:
        raise GeometryError("polynomial map file %r: missing degree triple" % path)
    d = [int(t) for t in tokens[:3]]
    count = (d[0] + 1) * (d[1] + 1) * (d[2] + 1)
    vals = [float(t) for t in tokens[3:]]
    if len(vals) != 3 * count:
        raise GeometryError(
            "polynomial map file %r: expected %d coefficients, found %d"
            % (path, 3 * count, len(vals))
        )
    coefs = [
        np.reshape(vals[a * count : (a + 1) * count], (d[0] + 1, d[1] + 1, d[2] + 1), order="F")
        for a in range(3)
    ]
    dcoefs = [[P.polyder(c, axis=ax) for ax in range(3)] for c in coefs]

    def F(eta):
        eta = np.asarray(eta, dtype=float)
        e1, e2, e3 = eta[..., 0], eta[..., 1], eta[..., 2]
        return np.stack([P.polyval3d(e1, e2, e3, c) for c in coefs], axis=-1)

    def jac(eta):
        eta = np.asarray(eta, dtype=float)
        e1, e2, e3 = eta[..., 0], eta[..., 1], eta[..., 2]
        J = np.empty(eta.shape[:-1] + (3, 3))
        for a in range(3):
            for b in range(3):
                J[..., a, b] = P.polyval3d(e1, e2, e3, dcoefs[a][b])
        return J

    return GeometryMap("polynomial", F, jac)
