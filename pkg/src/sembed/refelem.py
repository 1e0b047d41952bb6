"""Order-P polynomial machinery on the reference triangle.

The reference triangle is R = {(r, s) : r >= -1, s >= -1, r + s <= 0}.
Nodes are Gauss-Lobatto-type warp-and-blend points, the modal basis is the
orthonormal Koornwinder-Dubiner family, and cubature is a collapsed-coordinate
Gauss rule exact well beyond degree 2P.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_jacobi

MAX_ORDER = 10

# Blending exponents minimizing the interpolation Lebesgue constant for the
# warped node sets, indexed by P-1.
_ALPHA_OPT = [
    0.0000, 0.0000, 1.4152, 0.1001, 0.2751,
    0.9800, 1.0999, 1.2832, 1.3648, 1.4773,
    1.4959, 1.5743, 1.5770, 1.6223, 1.6258,
]


def _jacobi_norm_log(n: int, alpha: float, beta: float) -> float:
    # log of ||P_n^{(a,b)}||_{L2(-1,1; (1-x)^a (1+x)^b)}^2
    return (
        (alpha + beta + 1) * np.log(2.0)
        - np.log(2 * n + alpha + beta + 1)
        + gammaln(n + alpha + 1)
        + gammaln(n + beta + 1)
        - gammaln(n + alpha + beta + 1)
        - gammaln(n + 1)
    )


def jacobi_p(x: np.ndarray, alpha: float, beta: float, n: int) -> np.ndarray:
    """Orthonormal Jacobi polynomial of degree n on [-1, 1]."""
    x = np.asarray(x, dtype=float)
    # three-term recurrence on the orthonormal family
    p0 = np.full_like(x, np.exp(-0.5 * _jacobi_norm_log(0, alpha, beta)))
    if n == 0:
        return p0
    f1 = 0.5 * np.sqrt((alpha + beta + 3) / ((alpha + 1) * (beta + 1)))
    p1 = p0 * f1 * ((alpha + beta + 2) * x + alpha - beta)
    if n == 1:
        return p1
    aold = (
        2.0 / (2 + alpha + beta)
        * np.sqrt((alpha + 1) * (beta + 1) / (alpha + beta + 3))
    )
    for i in range(1, n):
        h1 = 2 * i + alpha + beta
        anew = (
            2.0 / (h1 + 2)
            * np.sqrt(
                (i + 1)
                * (i + 1 + alpha + beta)
                * (i + 1 + alpha)
                * (i + 1 + beta)
                / ((h1 + 1) * (h1 + 3))
            )
        )
        bnew = -(alpha * alpha - beta * beta) / (h1 * (h1 + 2))
        pnew = ((x - bnew) * p1 - aold * p0) / anew
        p0, p1 = p1, pnew
        aold = anew
    return p1


def grad_jacobi_p(x: np.ndarray, alpha: float, beta: float, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.zeros_like(x)
    return np.sqrt(n * (n + alpha + beta + 1)) * jacobi_p(x, alpha + 1, beta + 1, n - 1)


def gauss_lobatto_1d(n_points: int) -> np.ndarray:
    """Gauss-Lobatto nodes on [-1, 1] (endpoints included)."""
    if n_points < 2:
        raise ValueError("Gauss-Lobatto rule needs at least 2 points")
    if n_points == 2:
        return np.array([-1.0, 1.0])
    interior, _ = roots_jacobi(n_points - 2, 1.0, 1.0)
    return np.concatenate(([-1.0], np.sort(interior), [1.0]))


def vandermonde_1d(order: int, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    return np.column_stack([jacobi_p(points, 0.0, 0.0, j) for j in range(order + 1)])


def _rs_to_ab(r: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    denom = np.where(np.abs(1.0 - s) > 1e-14, 1.0 - s, 1.0)
    a = np.where(np.abs(1.0 - s) > 1e-14, 2.0 * (1.0 + r) / denom - 1.0, -1.0)
    return a, s.copy()


def simplex_2d(a: np.ndarray, b: np.ndarray, i: int, j: int) -> np.ndarray:
    h1 = jacobi_p(a, 0.0, 0.0, i)
    h2 = jacobi_p(b, 2.0 * i + 1.0, 0.0, j)
    return np.sqrt(2.0) * h1 * h2 * (1.0 - b) ** i


def grad_simplex_2d(a, b, i, j):
    fa = jacobi_p(a, 0.0, 0.0, i)
    dfa = grad_jacobi_p(a, 0.0, 0.0, i)
    gb = jacobi_p(b, 2.0 * i + 1.0, 0.0, j)
    dgb = grad_jacobi_p(b, 2.0 * i + 1.0, 0.0, j)

    dmodedr = dfa * gb
    if i > 0:
        dmodedr = dmodedr * ((0.5 * (1.0 - b)) ** (i - 1))
    dmodeds = dfa * (gb * (0.5 * (1.0 + a)))
    if i > 0:
        dmodeds = dmodeds * ((0.5 * (1.0 - b)) ** (i - 1))
    tmp = dgb * ((0.5 * (1.0 - b)) ** i)
    if i > 0:
        tmp = tmp - 0.5 * i * gb * ((0.5 * (1.0 - b)) ** (i - 1))
    dmodeds = dmodeds + fa * tmp

    norm = 2.0 ** (i + 0.5)
    return norm * dmodedr, norm * dmodeds


def modal_basis(order: int, r: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Orthonormal modal basis evaluated at (r, s); columns ordered (i, j)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    a, b = _rs_to_ab(r, s)
    cols = []
    for i in range(order + 1):
        for j in range(order - i + 1):
            cols.append(simplex_2d(a, b, i, j))
    return np.column_stack(cols)


def modal_basis_grad(order: int, r: np.ndarray, s: np.ndarray):
    r = np.atleast_1d(np.asarray(r, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    a, b = _rs_to_ab(r, s)
    cols_r, cols_s = [], []
    for i in range(order + 1):
        for j in range(order - i + 1):
            dr, ds = grad_simplex_2d(a, b, i, j)
            cols_r.append(dr)
            cols_s.append(ds)
    return np.column_stack(cols_r), np.column_stack(cols_s)


def _warp_factor(order: int, rout: np.ndarray) -> np.ndarray:
    lgl = gauss_lobatto_1d(order + 1)
    req = np.linspace(-1.0, 1.0, order + 1)
    veq = vandermonde_1d(order, req)
    pmat = np.column_stack([jacobi_p(rout, 0.0, 0.0, i) for i in range(order + 1)])
    lmat = np.linalg.solve(veq.T, pmat.T)
    warp = lmat.T @ (lgl - req)
    zerof = (np.abs(rout) < 1.0 - 1e-10).astype(float)
    sf = 1.0 - (zerof * rout) ** 2
    return warp / sf + warp * (zerof - 1.0)


def warp_blend_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Warp-and-blend nodal set on the reference triangle, (r, s) arrays."""
    alpha = _ALPHA_OPT[order - 1] if order <= len(_ALPHA_OPT) else 5.0 / 3.0
    n_p = (order + 1) * (order + 2) // 2

    l1 = np.empty(n_p)
    l3 = np.empty(n_p)
    k = 0
    for i in range(order + 1):
        for j in range(order + 1 - i):
            l1[k] = i / order
            l3[k] = j / order
            k += 1
    l2 = 1.0 - l1 - l3

    x = -l2 + l3
    y = (-l2 - l3 + 2.0 * l1) / np.sqrt(3.0)

    blend1 = 4.0 * l2 * l3
    blend2 = 4.0 * l1 * l3
    blend3 = 4.0 * l1 * l2

    warpf1 = _warp_factor(order, l3 - l2)
    warpf2 = _warp_factor(order, l1 - l3)
    warpf3 = _warp_factor(order, l2 - l1)

    warp1 = blend1 * warpf1 * (1.0 + (alpha * l1) ** 2)
    warp2 = blend2 * warpf2 * (1.0 + (alpha * l2) ** 2)
    warp3 = blend3 * warpf3 * (1.0 + (alpha * l3) ** 2)

    x = x + 1.0 * warp1 + np.cos(2 * np.pi / 3) * warp2 + np.cos(4 * np.pi / 3) * warp3
    y = y + 0.0 * warp1 + np.sin(2 * np.pi / 3) * warp2 + np.sin(4 * np.pi / 3) * warp3

    # equilateral -> reference coordinates
    l1e = (np.sqrt(3.0) * y + 1.0) / 3.0
    l2e = (-3.0 * x - np.sqrt(3.0) * y + 2.0) / 6.0
    l3e = (3.0 * x - np.sqrt(3.0) * y + 2.0) / 6.0
    r = -l2e + l3e - l1e
    s = -l2e - l3e + l1e
    return r, s


def triangle_cubature(degree: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Collapsed-coordinate Gauss rule on R exact for total degree >= `degree`.

    Tensor Gauss-Legendre x Gauss-Jacobi(1,0) through the Duffy map; positive
    weights at any order.
    """
    n = max(1, (degree + 2) // 2 + 1)
    ga, wa = np.polynomial.legendre.leggauss(n)
    gb, wb = roots_jacobi(n, 1.0, 0.0)
    a, b = np.meshgrid(ga, gb, indexing="ij")
    r = 0.5 * (1.0 + a) * (1.0 - b) - 1.0
    s = b
    w = np.outer(wa, wb) * 0.5
    return r.ravel(), s.ravel(), w.ravel()


@dataclass(frozen=True)
class ReferenceElement:
    """Immutable order-P nodal/modal toolkit on the reference triangle."""

    order: int
    r: np.ndarray
    s: np.ndarray
    vandermonde: np.ndarray
    vandermonde_inv: np.ndarray
    d_r: np.ndarray
    d_s: np.ndarray
    cub_r: np.ndarray
    cub_s: np.ndarray
    cub_w: np.ndarray
    edge_q: np.ndarray  # 1D Gauss points on [-1, 1]
    edge_w: np.ndarray
    # cached basis/derivative tables at the cubature points
    cub_basis: np.ndarray = field(repr=False, default=None)
    cub_dr: np.ndarray = field(repr=False, default=None)
    cub_ds: np.ndarray = field(repr=False, default=None)

    @property
    def n_points(self) -> int:
        return (self.order + 1) * (self.order + 2) // 2

    def eval_basis(self, r, s) -> np.ndarray:
        """Nodal Lagrange basis values at arbitrary (r, s), including points
        outside the reference triangle (extrapolation is first-class)."""
        return modal_basis(self.order, r, s) @ self.vandermonde_inv

    def eval_basis_grad(self, r, s) -> tuple[np.ndarray, np.ndarray]:
        vr, vs = modal_basis_grad(self.order, r, s)
        return vr @ self.vandermonde_inv, vs @ self.vandermonde_inv


@lru_cache(maxsize=None)
def build_reference_element(order: int) -> ReferenceElement:
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in [1, {MAX_ORDER}], got {order}")
    r, s = warp_blend_nodes(order)
    v = modal_basis(order, r, s)
    v_inv = np.linalg.inv(v)
    vr, vs = modal_basis_grad(order, r, s)
    d_r = vr @ v_inv
    d_s = vs @ v_inv
    cr, cs, cw = triangle_cubature(2 * order + 1)
    eq, ew = np.polynomial.legendre.leggauss(order + 2)
    elem = ReferenceElement(
        order=order,
        r=r,
        s=s,
        vandermonde=v,
        vandermonde_inv=v_inv,
        d_r=d_r,
        d_s=d_s,
        cub_r=cr,
        cub_s=cs,
        cub_w=cw,
        edge_q=eq,
        edge_w=ew,
        cub_basis=modal_basis(order, cr, cs) @ v_inv,
        cub_dr=(modal_basis_grad(order, cr, cs)[0]) @ v_inv,
        cub_ds=(modal_basis_grad(order, cr, cs)[1]) @ v_inv,
    )
    return elem


def _lattice_interior(density: int) -> tuple[np.ndarray, np.ndarray]:
    n = int(2 * density)
    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    keep = ii + jj <= n
    r = -1.0 + 2.0 * ii[keep] / n
    s = -1.0 + 2.0 * jj[keep] / n
    return r, s


def _lattice_annulus(density: int, radius: float, center: tuple[float, float]):
    cr, cs = center
    radii = np.arange(0.0, radius + 0.5 / density, 1.0 / density)
    pts_r, pts_s = [], []
    for rad in radii:
        n_theta = max(8, int(np.ceil(2 * np.pi * rad * density)))
        theta = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
        pts_r.append(cr + rad * np.cos(theta))
        pts_s.append(cs + rad * np.sin(theta))
    r = np.concatenate(pts_r)
    s = np.concatenate(pts_s)
    outside_tri = (r < -1.0) | (s < -1.0) | (r + s > 0.0)
    return r[outside_tri], s[outside_tri]


def _lebesgue_function(elem: ReferenceElement, r: np.ndarray, s: np.ndarray) -> np.ndarray:
    total = np.empty(r.size)
    chunk = 200_000
    for lo in range(0, r.size, chunk):
        hi = min(lo + chunk, r.size)
        total[lo:hi] = np.abs(elem.eval_basis(r[lo:hi], s[lo:hi])).sum(axis=1)
    return total


def lebesgue_constant(
    elem: ReferenceElement,
    domain: str = "interior",
    radius: float = 1.75,
    center: tuple[float, float] = (-1.0 / 3.0, -1.0 / 3.0),
    density: int = 400,
) -> float:
    """Max of the Lebesgue function over the reference triangle (interior) or
    over the circle-minus-triangle region (extrap_circle)."""
    if domain == "interior":
        r, s = _lattice_interior(density)
    elif domain == "extrap_circle":
        r, s = _lattice_annulus(density, radius, center)
    else:
        raise ValueError(f"unknown domain {domain!r}")

    vals = _lebesgue_function(elem, r, s)
    best = vals.argmax()
    best_val = vals[best]
    r0, s0 = r[best], s[best]

    # local polish around the lattice argmax
    h = 1.0 / density
    for _ in range(3):
        rr = np.linspace(r0 - h, r0 + h, 21)
        ss = np.linspace(s0 - h, s0 + h, 21)
        gr, gs = np.meshgrid(rr, ss, indexing="ij")
        gr, gs = gr.ravel(), gs.ravel()
        if domain == "interior":
            keep = (gr >= -1.0) & (gs >= -1.0) & (gr + gs <= 0.0)
        else:
            inside_circle = (gr - center[0]) ** 2 + (gs - center[1]) ** 2 <= radius**2
            outside_tri = (gr < -1.0) | (gs < -1.0) | (gr + gs > 0.0)
            keep = inside_circle & outside_tri
        gr, gs = gr[keep], gs[keep]
        if gr.size == 0:
            break
        vals = _lebesgue_function(elem, gr, gs)
        k = vals.argmax()
        if vals[k] > best_val:
            best_val = vals[k]
            r0, s0 = gr[k], gs[k]
        h /= 8.0
    return float(best_val)


def vandermonde_shift_study_1d(order: int, shift: float) -> float:
    """2-norm condition number of the 1D Gauss-Lobatto Vandermonde after the
    right endpoint node is moved to 1 + shift. Returns inf when the shifted
    node lands on a retained node."""
    if not 1 <= order <= 9:
        raise ValueError("order must be in [1, 9]")
    if not -2.0 <= shift <= 2.0:
        raise ValueError("shift must be in [-2, 2]")
    nodes = gauss_lobatto_1d(order + 1).copy()
    shifted = 1.0 + shift
    if np.min(np.abs(shifted - nodes[:-1])) < 1e-12:
        return np.inf
    nodes[-1] = shifted
    v = vandermonde_1d(order, nodes)
    sv = np.linalg.svd(v, compute_uv=False)
    if sv[-1] < 1e-300:
        return np.inf
    return float(sv[0] / sv[-1])
