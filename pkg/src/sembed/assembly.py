"""Global assembly of the Poisson-reaction system with weak boundary
conditions on a (surrogate or conformal) domain.

One assembly path serves every method: conformal records have x = x_bar and
d = 0, so the shifted terms degenerate to the body-fitted ones entrywise.
Trial traces u(x) and grad(u)(x) . n are the owning element's polynomial
evaluated at the mapped point; test traces live at x_bar except where a
formulation explicitly pairs with v(x).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .embedding import SurrogateDomain
from .refelem import build_reference_element

DIRICHLET_FORMS = ("nitsche_nonsym", "nitsche_sym", "aubin")
NEUMANN_FORMS = ("standard", "with_symmetric_penalty")
ROBIN_FORMS = (
    "inconsistent",
    "nitsche_corrected_coeffs",
    "nitsche_full_condition",
    "aubin",
)

EXTRAPOLATION_GUARD = 10.0
MIN_NORMAL_ALIGNMENT = 0.05


@dataclass(frozen=True)
class DirichletBC:
    data: object  # callable(x)->values, per-edge dict, or scalar
    form: str = "nitsche_nonsym"
    where: object = None  # None, segment id, or predicate on midpoints

    def __post_init__(self):
        if self.form not in DIRICHLET_FORMS:
            raise ValueError(f"unknown Dirichlet form {self.form!r}")


@dataclass(frozen=True)
class NeumannBC:
    data: object
    form: str = "standard"
    where: object = None

    def __post_init__(self):
        if self.form not in NEUMANN_FORMS:
            raise ValueError(f"unknown Neumann form {self.form!r}")


@dataclass(frozen=True)
class RobinBC:
    u_data: object
    q_data: object
    eps: object  # positive scalar or callable(x)
    form: str = "nitsche_full_condition"
    where: object = None

    def __post_init__(self):
        if self.form not in ROBIN_FORMS:
            raise ValueError(f"unknown Robin form {self.form!r}")


@dataclass(frozen=True)
class BoundaryProblem:
    conditions: tuple
    forcing: object = 0.0
    alpha: float = 0.0
    gamma: float | None = None  # default resolves to h_avg / 2
    gamma_scaling: str = "avg"  # 'avg' or 'local'
    pin: tuple | None = None  # ((x, y), value) single-point Dirichlet pin

    def __post_init__(self):
        object.__setattr__(self, "conditions", tuple(self.conditions))
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.gamma_scaling not in ("avg", "local"):
            raise ValueError("gamma_scaling must be 'avg' or 'local'")
        essential = any(
            isinstance(c, (DirichletBC, RobinBC)) for c in self.conditions
        )
        if not essential and self.alpha == 0.0 and self.pin is None:
            raise ValueError(
                "pure Neumann problem needs alpha > 0 or a pinned point"
            )


@dataclass
class AssembledSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dof_coords: np.ndarray
    loc2glob: np.ndarray  # (n_active, n_ep) global DOF per element-local node
    active: np.ndarray
    h_avg: float
    gamma: float
    n_dof: int = field(init=False)

    def __post_init__(self):
        self.n_dof = self.rhs.size

    def export_matrix_market(self, path):
        from scipy.io import mmwrite

        mmwrite(path, self.matrix.tocoo())


def build_dof_map(domain: SurrogateDomain):
    """C0 global numbering: element-local nodes merged by geometric hash."""
    mesh = domain.mesh
    elem = build_reference_element(domain.order)
    rs = np.column_stack([elem.r, elem.s])
    tol = max(1e-10 * mesh.h_min, 1e-14)
    inv_cell = 1.0 / tol

    table: dict[tuple[int, int], int] = {}
    coords: list[np.ndarray] = []
    loc2glob = np.empty((domain.n_active, elem.n_points), dtype=np.int64)
    for row, n in enumerate(domain.active):
        pts = mesh.to_physical(n, rs)
        for k, p in enumerate(pts):
            ci = int(np.floor(p[0] * inv_cell))
            cj = int(np.floor(p[1] * inv_cell))
            found = -1
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    g = table.get((ci + di, cj + dj))
                    if g is not None and np.linalg.norm(coords[g] - p) <= tol:
                        found = g
                        break
                if found >= 0:
                    break
            if found < 0:
                found = len(coords)
                coords.append(p)
                table[(ci, cj)] = found
            loc2glob[row, k] = found
    return loc2glob, np.array(coords)


def _eval_field(data, rec, points):
    if callable(data):
        return np.asarray(data(points), dtype=float)
    if isinstance(data, dict):
        return np.asarray(data[rec.edge], dtype=float)
    return np.full(points.shape[0], float(data))


def _eval_flux(data, rec):
    """Flux data q = grad(u) . n; callables may take (x, n) so the conformal
    path gets the surrogate normal and the shifted path the true one."""
    if callable(data):
        try:
            return np.asarray(data(rec.x, rec.n), dtype=float)
        except TypeError:
            return np.asarray(data(rec.x), dtype=float)
    return _eval_field(data, rec, rec.x)


def _barycentric(rs):
    return np.stack(
        [
            -(rs[:, 0] + rs[:, 1]) / 2.0,
            (1.0 + rs[:, 0]) / 2.0,
            (1.0 + rs[:, 1]) / 2.0,
        ],
        axis=1,
    )


class _Accumulator:
    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []

    def add(self, gdofs, block):
        r, c = np.meshgrid(gdofs, gdofs, indexing="ij")
        self.rows.append(r.ravel())
        self.cols.append(c.ravel())
        self.vals.append(block.ravel())

    def matrix(self, n):
        if not self.rows:
            return sp.csr_matrix((n, n))
        a = sp.coo_matrix(
            (
                np.concatenate(self.vals),
                (np.concatenate(self.rows), np.concatenate(self.cols)),
            ),
            shape=(n, n),
        )
        return a.tocsr()


def _elem_traces(domain, elem, rec):
    """Basis values/normal derivatives at x_bar and at the mapped x."""
    mesh = domain.mesh
    binv = mesh.affine_b_inv[rec.elem]

    vbar = elem.eval_basis(rec.rs_bar[:, 0], rec.rs_bar[:, 1])
    vmap = elem.eval_basis(rec.rs_map[:, 0], rec.rs_map[:, 1])
    gr, gs = elem.eval_basis_grad(rec.rs_bar[:, 0], rec.rs_bar[:, 1])
    gx = gr * binv[0, 0] + gs * binv[1, 0]
    gy = gr * binv[0, 1] + gs * binv[1, 1]
    gbarn = gx * rec.nbar[0] + gy * rec.nbar[1]
    gr, gs = elem.eval_basis_grad(rec.rs_map[:, 0], rec.rs_map[:, 1])
    gx = gr * binv[0, 0] + gs * binv[1, 0]
    gy = gr * binv[0, 1] + gs * binv[1, 1]
    gmapn = gx * rec.n[:, 0:1] + gy * rec.n[:, 1:2]
    return vbar, vmap, gbarn, gmapn


def _match_condition(problem, rec):
    mid = rec.x.mean(axis=0)
    seg = int(rec.segment[rec.segment.size // 2])
    for cond in problem.conditions:
        w = cond.where
        if w is None:
            return cond
        if isinstance(w, (int, np.integer)):
            if seg == w:
                return cond
        elif callable(w) and w(mid):
            return cond
    return None


def assemble(
    domain: SurrogateDomain, problem: BoundaryProblem
) -> AssembledSystem:
    """Assemble A, b over the active set of `domain`.

    Volume terms: (grad u, grad v) + alpha (u, v) - (f, v). Boundary terms
    follow each condition's formulation with polynomial-correction traces.
    """
    mesh = domain.mesh
    elem = build_reference_element(domain.order)
    loc2glob, dof_coords = build_dof_map(domain)
    n_dof = dof_coords.shape[0]

    acc = _Accumulator()
    rhs = np.zeros(n_dof)

    phi = elem.cub_basis
    cw = elem.cub_w
    rs_cub = np.column_stack([elem.cub_r, elem.cub_s])
    for row, n in enumerate(domain.active):
        binv = mesh.affine_b_inv[n]
        jac = abs(mesh.jacobian[n])
        gx = elem.cub_dr * binv[0, 0] + elem.cub_ds * binv[1, 0]
        gy = elem.cub_dr * binv[0, 1] + elem.cub_ds * binv[1, 1]
        block = jac * (
            (gx * cw[:, None]).T @ gx
            + (gy * cw[:, None]).T @ gy
            + problem.alpha * (phi * cw[:, None]).T @ phi
        )
        acc.add(loc2glob[row], block)
        xq = mesh.to_physical(n, rs_cub)
        fq = (
            np.asarray(problem.forcing(xq), dtype=float)
            if callable(problem.forcing)
            else np.full(xq.shape[0], float(problem.forcing))
        )
        rhs[loc2glob[row]] += jac * phi.T @ (cw * fq)

    h_avg = domain.h_avg
    gamma_global = problem.gamma if problem.gamma is not None else h_avg / 2.0
    row_of = {n: i for i, n in enumerate(domain.active)}

    untagged = []
    for rec in domain.records:
        cond = _match_condition(problem, rec)
        if cond is None:
            untagged.append(rec.edge)
            continue

        lam = _barycentric(rec.rs_map)
        if np.abs(lam).max() > EXTRAPOLATION_GUARD:
            raise ValueError(
                f"edge {rec.edge}: mapped point far outside element "
                f"{rec.elem} (barycentric magnitude "
                f"{np.abs(lam).max():.2f} > {EXTRAPOLATION_GUARD})"
            )

        if problem.gamma_scaling == "local":
            c_gamma = problem.gamma if problem.gamma is not None else 0.5
            gamma = c_gamma * float(mesh.h_elem[rec.elem])
        else:
            gamma = gamma_global

        vbar, vmap, gbarn, gmapn = _elem_traces(domain, elem, rec)
        gdofs = loc2glob[row_of[rec.elem]]
        w = rec.w
        block = np.zeros((elem.n_points, elem.n_points))
        bvec = np.zeros(elem.n_points)

        if isinstance(cond, DirichletBC):
            ud = _eval_field(cond.data, rec, rec.x)
            block -= (vbar * w[:, None]).T @ gbarn
            if cond.form == "nitsche_nonsym":
                block += (vbar * w[:, None]).T @ vmap / gamma
                block -= (gbarn * w[:, None]).T @ vmap
                bvec += vbar.T @ (w * ud) / gamma - gbarn.T @ (w * ud)
            elif cond.form == "nitsche_sym":
                block += (vmap * w[:, None]).T @ vmap / gamma
                block -= (gbarn * w[:, None]).T @ vmap
                bvec += vmap.T @ (w * ud) / gamma - gbarn.T @ (w * ud)
            else:  # aubin
                block += (vbar * w[:, None]).T @ vmap / gamma
                bvec += vbar.T @ (w * ud) / gamma

        elif isinstance(cond, NeumannBC):
            qn = _eval_flux(cond.data, rec)
            nn = (rec.nbar * rec.n).sum(axis=1)
            block -= (vbar * w[:, None]).T @ gbarn
            block += (vbar * (w * nn)[:, None]).T @ gmapn
            bvec += vbar.T @ (w * nn * qn)
            if cond.form == "with_symmetric_penalty":
                block -= gamma * (gbarn * (w * nn)[:, None]).T @ gmapn
                bvec -= gamma * gbarn.T @ (w * nn * qn)

        elif isinstance(cond, RobinBC):
            ud = _eval_field(cond.u_data, rec, rec.x)
            qn = _eval_flux(cond.q_data, rec)
            eps = _eval_field(cond.eps, rec, rec.x)
            if np.any(eps <= 0):
                raise ValueError("Robin eps must be positive on the boundary")
            nn = (rec.nbar * rec.n).sum(axis=1)

            test = vmap / gamma
            if cond.form != "aubin":
                test = test - gbarn
            block -= (vbar * w[:, None]).T @ gbarn

            if cond.form == "inconsistent":
                c1 = gamma / (gamma + eps)
                c2 = gamma * eps / (gamma + eps) * nn
                qdat = c2 * qn
            elif cond.form == "nitsche_corrected_coeffs":
                if np.any(nn < MIN_NORMAL_ALIGNMENT):
                    raise ValueError(
                        "corrected-coefficients Robin needs nbar.n >= "
                        f"{MIN_NORMAL_ALIGNMENT}; use nitsche_full_condition"
                    )
                gb = nn * gamma
                c1 = gb / (gb + eps)
                c2 = gb * eps / (gb + eps)
                qdat = c2 * qn
            else:  # nitsche_full_condition, aubin
                c1 = gamma / (gamma + eps)
                c2 = gamma * eps / (gamma + eps)
                qdat = c2 * qn

            block += (test * (w * c1)[:, None]).T @ vmap
            block += (test * (w * c2)[:, None]).T @ gmapn
            bvec += test.T @ (w * c1 * ud) + test.T @ (w * qdat)

        acc.add(gdofs, block)
        rhs[gdofs] += bvec

    if untagged:
        raise ValueError(
            f"surrogate boundary edges without a boundary condition: "
            f"{sorted(untagged)}"
        )

    matrix = acc.matrix(n_dof)
    if problem.pin is not None:
        (px, py), value = problem.pin
        k = int(np.argmin(np.linalg.norm(dof_coords - (px, py), axis=1)))
        matrix = matrix.tolil()
        matrix.rows[k] = [k]
        matrix.data[k] = [1.0]
        matrix = matrix.tocsr()
        rhs[k] = value

    return AssembledSystem(
        matrix=matrix,
        rhs=rhs,
        dof_coords=dof_coords,
        loc2glob=loc2glob,
        active=domain.active,
        h_avg=h_avg,
        gamma=gamma_global,
    )
