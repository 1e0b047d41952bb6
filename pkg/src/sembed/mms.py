"""Manufactured solutions, error measures, and the asymptotic cascade.

The manufactured field is u = cos(k pi x / Lx) sin(k pi y / Ly) + 2x - y
with k = 5 by default (k = 1 kept as a preset). It is globally smooth, so
it doubles as the analytic extension of all boundary data outside the
domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import BoundaryProblem, DirichletBC, NeumannBC, assemble
from .refelem import build_reference_element
from .solve import solve_direct


@dataclass(frozen=True)
class ManufacturedSolution:
    lx: float = 1.0
    ly: float = 1.0
    wavenumber: int = 5

    @property
    def _ab(self):
        return (
            self.wavenumber * np.pi / self.lx,
            self.wavenumber * np.pi / self.ly,
        )

    def u(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        a, b = self._ab
        return (
            np.cos(a * x[:, 0]) * np.sin(b * x[:, 1])
            + 2.0 * x[:, 0]
            - x[:, 1]
        )

    def grad(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        a, b = self._ab
        g = np.empty_like(x)
        g[:, 0] = -a * np.sin(a * x[:, 0]) * np.sin(b * x[:, 1]) + 2.0
        g[:, 1] = b * np.cos(a * x[:, 0]) * np.cos(b * x[:, 1]) - 1.0
        return g

    def laplacian(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        a, b = self._ab
        return -(a * a + b * b) * np.cos(a * x[:, 0]) * np.sin(b * x[:, 1])

    def forcing(self, alpha: float = 0.0):
        def f(x):
            return -self.laplacian(x) + alpha * self.u(x)

        return f

    def normal_derivative(self, geometry=None):
        """Flux data q_N = grad(u) . n. The returned callable accepts the
        quadrature normals, falling back to the geometry's analytic normal
        when called with points only."""

        def q(x, n=None):
            if n is None:
                n = geometry.normal(x)
            return (self.grad(x) * np.asarray(n)).sum(axis=1)

        return q


def nodal_interpolant(system, exact_u) -> np.ndarray:
    return np.asarray(exact_u(system.dof_coords), dtype=float)


def l1_error(domain, system, u_vec, exact_u) -> float:
    """Integral of |u_h - u| over the active elements by cubature."""
    mesh = domain.mesh
    elem = build_reference_element(domain.order)
    rs = np.column_stack([elem.cub_r, elem.cub_s])
    total = 0.0
    for row, n in enumerate(domain.active):
        uh = elem.cub_basis @ u_vec[system.loc2glob[row]]
        xq = mesh.to_physical(n, rs)
        ue = np.asarray(exact_u(xq), dtype=float)
        total += abs(mesh.jacobian[n]) * float(elem.cub_w @ np.abs(uh - ue))
    return total


def max_nodal_error(system, u_vec, exact_u) -> float:
    return float(np.abs(u_vec - nodal_interpolant(system, exact_u)).max())


def residual_l1(system, u_vec) -> float:
    """The truncation-error measure: sum_i |(A u - b)_i|."""
    return float(np.abs(system.matrix @ u_vec - system.rhs).sum())


def _record_normal_derivative(domain, system, u_vec):
    """Per-edge arrays of grad(u_h) . n at the mapped points, taken from the
    owning element's polynomial."""
    mesh = domain.mesh
    elem = build_reference_element(domain.order)
    row_of = {n: i for i, n in enumerate(domain.active)}
    out = {}
    for rec in domain.records:
        binv = mesh.affine_b_inv[rec.elem]
        gr, gs = elem.eval_basis_grad(rec.rs_map[:, 0], rec.rs_map[:, 1])
        gx = gr * binv[0, 0] + gs * binv[1, 0]
        gy = gr * binv[0, 1] + gs * binv[1, 1]
        local = u_vec[system.loc2glob[row_of[rec.elem]]]
        out[rec.edge] = (gx @ local) * rec.n[:, 0] + (gy @ local) * rec.n[:, 1]
    return out


def _record_trace(domain, system, u_vec):
    """Per-edge arrays of u_h at the mapped points."""
    elem = build_reference_element(domain.order)
    row_of = {n: i for i, n in enumerate(domain.active)}
    out = {}
    for rec in domain.records:
        v = elem.eval_basis(rec.rs_map[:, 0], rec.rs_map[:, 1])
        out[rec.edge] = v @ u_vec[system.loc2glob[row_of[rec.elem]]]
    return out


def ap_cascade(
    domain,
    u_data,
    q_data,
    forcing,
    alpha: float = 0.0,
    limit: str = "dirichlet",
    m_max: int = 2,
    gamma: float | None = None,
):
    """Asymptotic expansion modes u_0, u_1, u_2 of the Robin problem.

    Dirichlet limit (eps -> 0): u_0 solves the Dirichlet problem with data
    u_RD; u_m (m >= 1, zero forcing) with data q_RN - dn(u_0) then -u_1's
    normal derivative. Neumann limit (1/eps -> 0) is the dual cascade on
    the Neumann data. Returns the list of mode vectors and the reference
    system (for error evaluation).
    """
    if m_max > 2:
        raise ValueError("cascade depth is limited to m_max = 2")
    if limit not in ("dirichlet", "neumann"):
        raise ValueError(f"unknown limit {limit!r}")

    modes = []
    base = None
    for m in range(m_max + 1):
        f = forcing if m == 0 else 0.0
        if limit == "dirichlet":
            if m == 0:
                data = u_data
            elif m == 1:
                dn0 = _record_normal_derivative(domain, base, modes[0])
                qs = {
                    rec.edge: np.asarray(q_data(rec.x), dtype=float)
                    if callable(q_data)
                    else np.full(rec.x.shape[0], float(q_data))
                    for rec in domain.records
                }
                data = {e: qs[e] - dn0[e] for e in dn0}
            else:
                dn1 = _record_normal_derivative(domain, base, modes[1])
                data = {e: -dn1[e] for e in dn1}
            problem = BoundaryProblem(
                conditions=[DirichletBC(data, form="aubin")],
                forcing=f,
                alpha=alpha,
                gamma=gamma,
            )
        else:
            if m == 0:
                data = q_data
            elif m == 1:
                tr0 = _record_trace(domain, base, modes[0])
                us = {
                    rec.edge: np.asarray(u_data(rec.x), dtype=float)
                    if callable(u_data)
                    else np.full(rec.x.shape[0], float(u_data))
                    for rec in domain.records
                }
                data = {e: us[e] - tr0[e] for e in tr0}
            else:
                tr1 = _record_trace(domain, base, modes[1])
                data = {e: -tr1[e] for e in tr1}
            problem = BoundaryProblem(
                conditions=[NeumannBC(data, form="standard")],
                forcing=f,
                alpha=alpha if alpha > 0 else 1.0,
                gamma=gamma,
            )
        system = assemble(domain, problem)
        report = solve_direct(system, compute_cond=False)
        modes.append(report.u)
        if base is None:
            base = system
    return modes, base
