"""Scripted verification experiments with CSV/JSON artifacts.

Each experiment runs a family of solves on bundled fixtures (an embedded
circle of radius 0.375, or a square-with-hole geometry) and emits one row
per (mesh, order, method, form) cell. Row order is canonical (sorted by the
loop nesting below), independent of any scheduling, and re-running a spec
with the same seed reproduces the CSV bytes; timestamps live only in the
JSON metadata.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, asdict

import numpy as np

from .assembly import (
    BoundaryProblem,
    DirichletBC,
    NeumannBC,
    RobinBC,
    DIRICHLET_FORMS,
    NEUMANN_FORMS,
    ROBIN_FORMS,
    assemble,
)
from .embedding import build_surrogate, conformal_surrogate
from .geometry import Circle, Rectangle, Difference
from .meshing import generate_structured_disk, generate_structured_square
from .mms import ManufacturedSolution, l1_error, ap_cascade
from .refelem import (
    MAX_ORDER,
    build_reference_element,
    lebesgue_constant,
    vandermonde_shift_study_1d,
)
from .solve import solve_direct

SCHEMA_VERSION = 1

KINDS = (
    "h_convergence",
    "p_convergence",
    "conditioning",
    "aligned_verification",
    "random_embedding_assessment",
    "robin_consistency_delta",
    "robin_limits",
    "mixed_dirichlet_neumann",
    "ap_cascade",
    "lebesgue_table",
    "vandermonde_1d",
)

# method -> (active-set mode, mapping kind, mesh radius offset in units of l_c)
METHODS = {
    "cbm": None,
    "sbm-e": ("extrapolation", "closest_point", -0.25),
    "sbm-ei": ("interpolation", "closest_point", 0.25),
    "sbm-i": ("interpolation", "in_element_equidistant", 0.25),
}

# CLI-level form names resolve to the assembly form per condition type.
_DIRICHLET_ALIAS = {"nitsche": "nitsche_nonsym", "aubin": "aubin"}
_NEUMANN_ALIAS = {"nitsche": "with_symmetric_penalty", "aubin": "standard"}
_ROBIN_ALIAS = {"nitsche": "nitsche_full_condition", "aubin": "aubin"}

FIXTURE_RADIUS = 0.375
FIXTURE_CENTER = (0.5, 0.5)

CSV_COLUMNS = (
    "kind",
    "method",
    "form",
    "order",
    "lc",
    "n_elm",
    "n_dof",
    "h_min",
    "h_avg",
    "h_max",
    "l1_error",
    "residual_inf",
    "cond",
    "extra",
    "wall_time",
)


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    method: str = "sbm-i"
    form: str = "nitsche"
    bc: str = "dirichlet"
    eps: float = 1.0
    lc_ladder: tuple = (0.2, 0.1, 0.05)
    p_ladder: tuple = (2,)
    seed: int = 0
    gamma: float | None = None
    gamma_scaling: str = "avg"
    wavenumber: int = 1
    out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "lc_ladder", tuple(self.lc_ladder))
        object.__setattr__(self, "p_ladder", tuple(self.p_ladder))
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.method not in METHODS:
            raise ValueError(
                f"unknown method {self.method!r}; choose from {sorted(METHODS)}"
            )
        if self.bc not in ("dirichlet", "neumann", "robin"):
            raise ValueError(f"unknown bc {self.bc!r}")
        if not self.lc_ladder or not self.p_ladder:
            raise ValueError("mesh and order ladders must be nonempty")
        if any(p < 1 or p > MAX_ORDER for p in self.p_ladder):
            raise ValueError(f"orders must lie in [1, {MAX_ORDER}]")
        self.resolve_form()  # validate eagerly

    def resolve_form(self) -> str:
        alias = {
            "dirichlet": _DIRICHLET_ALIAS,
            "neumann": _NEUMANN_ALIAS,
            "robin": _ROBIN_ALIAS,
        }[self.bc]
        if self.form in alias:
            return alias[self.form]
        full = {
            "dirichlet": DIRICHLET_FORMS,
            "neumann": NEUMANN_FORMS,
            "robin": ROBIN_FORMS,
        }[self.bc]
        if self.form in full:
            return self.form
        raise ValueError(
            f"form {self.form!r} is not valid for {self.bc} conditions "
            f"(choose from {sorted(set(alias) | set(full))})"
        )


def disk_fixture(method, lc, order, radius=FIXTURE_RADIUS, center=FIXTURE_CENTER):
    """Aligned circle fixture: a structured disk mesh sized per method."""
    geometry = Circle(center, radius)
    if method == "cbm":
        mesh = generate_structured_disk(lc, radius, center)
        return conformal_surrogate(mesh, geometry, order)
    mode, mapping, offset = METHODS[method]
    mesh = generate_structured_disk(lc, radius + offset * lc, center)
    return build_surrogate(mesh, geometry, mode, mapping, order)


def _make_problem(spec, mms, geometry, form):
    q = mms.normal_derivative(geometry)
    if spec.bc == "dirichlet":
        cond = DirichletBC(mms.u, form=form)
        alpha = 0.0
    elif spec.bc == "neumann":
        cond = NeumannBC(q, form=form)
        alpha = 1.0
    else:
        cond = RobinBC(mms.u, q, eps=spec.eps, form=form)
        alpha = 0.0
    return BoundaryProblem(
        conditions=[cond],
        forcing=mms.forcing(alpha),
        alpha=alpha,
        gamma=spec.gamma,
        gamma_scaling=spec.gamma_scaling,
    )


def _solve_row(spec, mms, geometry, method, form, order, lc, compute_cond):
    t0 = time.perf_counter()
    domain = disk_fixture(method, lc, order)
    problem = _make_problem(spec, mms, geometry, form)
    system = assemble(domain, problem)
    report = solve_direct(system, compute_cond=compute_cond)
    h_min, h_avg, h_max = domain.h_stats()
    err = l1_error(domain, system, report.u, mms.u)
    return {
        "kind": spec.kind,
        "method": method,
        "form": form,
        "order": order,
        "lc": lc,
        "n_elm": domain.n_active,
        "n_dof": system.rhs.size,
        "h_min": h_min,
        "h_avg": h_avg,
        "h_max": h_max,
        "l1_error": err,
        "residual_inf": report.residual_inf,
        "cond": report.cond if compute_cond else np.nan,
        "extra": "",
        "wall_time": time.perf_counter() - t0,
    }


def fitted_rate(h_values, errors) -> float:
    """Least-squares slope of log error vs log h over the last 3 points."""
    h = np.asarray(h_values, dtype=float)[-3:]
    e = np.asarray(errors, dtype=float)[-3:]
    if h.size < 2 or np.any(e <= 0):
        return float("nan")
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def _h_convergence(spec):
    geometry = Circle(FIXTURE_CENTER, FIXTURE_RADIUS)
    mms = ManufacturedSolution(wavenumber=spec.wavenumber)
    form = spec.resolve_form()
    want_cond = spec.kind == "conditioning"
    rows = []
    rates = {}
    for order in spec.p_ladder:
        cells = [
            _solve_row(spec, mms, geometry, spec.method, form, order, lc, want_cond)
            for lc in spec.lc_ladder
        ]
        rows.extend(cells)
        hs = [c["h_avg"] for c in cells]
        rates[f"l1_rate_P{order}"] = fitted_rate(hs, [c["l1_error"] for c in cells])
        if want_cond:
            rates[f"cond_slope_P{order}"] = fitted_rate(hs, [c["cond"] for c in cells])
    return rows, rates


def _p_convergence(spec):
    geometry = Circle(FIXTURE_CENTER, FIXTURE_RADIUS)
    mms = ManufacturedSolution(wavenumber=spec.wavenumber)
    form = spec.resolve_form()
    rows = []
    for lc in spec.lc_ladder:
        for order in spec.p_ladder:
            rows.append(
                _solve_row(spec, mms, geometry, spec.method, form, order, lc, False)
            )
    return rows, {}


def aligned_degeneration(lc=0.2, order=2, bc="dirichlet", form=None):
    """Max entrywise matrix/rhs gap between each degenerate SBM assembly
    and the conformal assembly on the same boundary-aligned mesh.

    All mapping distances are forced to zero (records replaced by their
    conformal counterparts), so every variant must reproduce the conformal
    operator exactly.
    """
    import dataclasses

    geometry = Circle(FIXTURE_CENTER, FIXTURE_RADIUS)
    mesh = generate_structured_disk(lc, FIXTURE_RADIUS, FIXTURE_CENTER)
    mms = ManufacturedSolution(wavenumber=1)
    if form is None:
        form = {"dirichlet": "nitsche_nonsym", "neumann": "standard",
                "robin": "nitsche_full_condition"}[bc]
    q = mms.normal_derivative(geometry)
    if bc == "dirichlet":
        cond = DirichletBC(mms.u, form=form)
    elif bc == "neumann":
        cond = NeumannBC(q, form=form)
    else:
        cond = RobinBC(mms.u, q, eps=1.0, form=form)
    alpha = 1.0 if bc == "neumann" else 0.0
    problem = BoundaryProblem(
        conditions=[cond], forcing=mms.forcing(alpha), alpha=alpha
    )

    reference = assemble(conformal_surrogate(mesh, geometry, order), problem)
    ref = reference.matrix.toarray()
    scale = np.abs(ref).max()
    gaps = {}
    for method, setup in METHODS.items():
        if method == "cbm":
            continue
        mode, mapping, _ = setup
        domain = build_surrogate(mesh, geometry, mode, mapping, order)
        degenerate = tuple(
            dataclasses.replace(
                rec, x=rec.xbar, d=np.zeros_like(rec.d),
                n=np.broadcast_to(rec.nbar, rec.n.shape).copy(),
                rs_map=rec.rs_bar,
            )
            for rec in domain.records
        )
        domain = dataclasses.replace(domain, records=degenerate)
        system = assemble(domain, problem)
        gap_a = np.abs(system.matrix.toarray() - ref).max() / scale
        gap_b = np.abs(system.rhs - reference.rhs).max() / max(
            np.abs(reference.rhs).max(), 1.0
        )
        gaps[method] = max(gap_a, gap_b)
    return gaps


def _aligned_verification(spec):
    rows = []
    for order in spec.p_ladder:
        for bc in ("dirichlet", "neumann", "robin"):
            gaps = aligned_degeneration(spec.lc_ladder[0], order, bc)
            for method, gap in sorted(gaps.items()):
                rows.append({
                    "kind": spec.kind, "method": method, "form": bc,
                    "order": order, "lc": spec.lc_ladder[0],
                    "n_elm": 0, "n_dof": 0,
                    "h_min": np.nan, "h_avg": np.nan, "h_max": np.nan,
                    "l1_error": gap, "residual_inf": np.nan, "cond": np.nan,
                    "extra": "degeneration_gap", "wall_time": 0.0,
                })
    return rows, {}


def random_embedding_assessment(
    n_circles=100,
    radius=FIXTURE_RADIUS,
    square=2.0,
    lc=0.15,
    seed=0,
    orders=(3, 5),
    wavenumber=1,
    max_resample=50,
):
    """Random circles in a fixed background square: error and conditioning
    statistics per SBM variant.

    Centers are drawn uniformly so the circle stays inside the square with
    a margin of 2 lc, from a PCG64 generator seeded explicitly, so the
    assessment reproduces across platforms. Returns per-(method, order)
    medians and variances of log10 L1 error and log10 cond, plus the raw
    samples.
    """
    rng = np.random.default_rng(np.random.PCG64(seed))
    mesh = generate_structured_square(lc, square, square, origin=(0.0, 0.0))
    mms = ManufacturedSolution(wavenumber=wavenumber)
    lo = radius + 2.0 * lc
    hi = square - radius - 2.0 * lc

    samples = {(m, p): {"log_err": [], "log_cond": []}
               for m in ("sbm-e", "sbm-ei", "sbm-i") for p in orders}
    centers = []
    accepted = 0
    attempts = 0
    while accepted < n_circles:
        if attempts > max_resample + n_circles:
            raise RuntimeError("too many degenerate embeddings resampled")
        attempts += 1
        center = rng.uniform(lo, hi, size=2)
        geometry = Circle(tuple(center), radius)
        try:
            domains = {
                m: build_surrogate(mesh, geometry, *METHODS[m][:2], 1)
                for m in ("sbm-e", "sbm-ei", "sbm-i")
            }
        except ValueError:
            # empty or disconnected active set; resample (logged by caller)
            continue
        centers.append(center)
        accepted += 1
        for method in ("sbm-e", "sbm-ei", "sbm-i"):
            mode, mapping, _ = METHODS[method]
            for order in orders:
                domain = build_surrogate(mesh, geometry, mode, mapping, order)
                problem = BoundaryProblem(
                    conditions=[DirichletBC(mms.u, form="nitsche_nonsym")],
                    forcing=mms.forcing(0.0),
                )
                system = assemble(domain, problem)
                report = solve_direct(system)
                err = l1_error(domain, system, report.u, mms.u)
                cell = samples[(method, order)]
                cell["log_err"].append(np.log10(max(err, 1e-300)))
                cell["log_cond"].append(np.log10(report.cond))

    stats = {}
    for (method, order), cell in samples.items():
        le = np.array(cell["log_err"])
        lk = np.array(cell["log_cond"])
        stats[(method, order)] = {
            "median_log_err": float(np.median(le)),
            "var_log_err": float(np.var(le)),
            "median_log_cond": float(np.median(lk)),
            "var_log_cond": float(np.var(lk)),
        }
    return stats, samples, np.array(centers)


def _random_embedding(spec):
    orders = tuple(spec.p_ladder)
    n = 30  # desk-scale default; call the function directly for other sizes
    stats, _, _ = random_embedding_assessment(
        n_circles=n, seed=spec.seed, orders=orders, wavenumber=spec.wavenumber
    )
    rows = []
    for (method, order) in sorted(stats):
        s = stats[(method, order)]
        rows.append({
            "kind": spec.kind, "method": method, "form": "nitsche_nonsym",
            "order": order, "lc": 0.15, "n_elm": n, "n_dof": 0,
            "h_min": np.nan, "h_avg": np.nan, "h_max": np.nan,
            "l1_error": 10.0 ** s["median_log_err"],
            "residual_inf": np.nan,
            "cond": 10.0 ** s["median_log_cond"],
            "extra": json.dumps(s, sort_keys=True),
            "wall_time": 0.0,
        })
    return rows, {}


def embedded_disk_fixture(method, lc, order, radius=FIXTURE_RADIUS,
                          center=FIXTURE_CENTER):
    """Circle embedded in a non-aligned unit-square background mesh.

    Unlike the aligned disk fixture, surrogate edges here are genuinely
    oblique to the boundary (1 - nbar.n = O(h)), which is what the
    consistency studies probe.
    """
    geometry = Circle(center, radius)
    mesh = generate_structured_square(lc, 1.0, 1.0, (0.0, 0.0))
    mode, mapping, _ = METHODS[method]
    return build_surrogate(mesh, geometry, mode, mapping, order)


def robin_delta_study(
    method="sbm-i",
    lc_ladder=(0.2, 0.1, 0.05),
    orders=range(1, 9),
    delta=1.0,
    eps=1.0,
    wavenumber=1,
):
    """p-convergence with Robin data perturbed by (u_RD - delta,
    q_RN + delta/eps); the combined Robin condition is unchanged, so only
    an inconsistent formulation feels the perturbation.

    Returns the L1 error table errors[form][lc] -> list over orders.
    """
    geometry = Circle(FIXTURE_CENTER, FIXTURE_RADIUS)
    mms = ManufacturedSolution(wavenumber=wavenumber)
    q = mms.normal_derivative(geometry)

    def u_pert(x):
        return mms.u(x) - delta

    def q_pert(x, n=None):
        return q(x, n) + delta / eps

    forms = ("inconsistent", "nitsche_full_condition", "aubin")
    errors = {f: {} for f in forms}
    h_avg = {}
    for lc in lc_ladder:
        for form in forms:
            errs = []
            for order in orders:
                domain = embedded_disk_fixture(method, lc, order)
                problem = BoundaryProblem(
                    conditions=[RobinBC(u_pert, q_pert, eps=eps, form=form)],
                    forcing=mms.forcing(0.0),
                )
                system = assemble(domain, problem)
                report = solve_direct(system, compute_cond=False)
                errs.append(l1_error(domain, system, report.u, mms.u))
                h_avg[lc] = domain.h_stats()[1]
            errors[form][lc] = errs
    return errors, h_avg


def _robin_consistency_delta(spec):
    orders = spec.p_ladder if len(spec.p_ladder) > 1 else tuple(range(1, 9))
    errors, h_avg = robin_delta_study(
        spec.method, spec.lc_ladder, orders, wavenumber=spec.wavenumber
    )
    rows = []
    for form in sorted(errors):
        for lc in spec.lc_ladder:
            for order, err in zip(orders, errors[form][lc]):
                rows.append({
                    "kind": spec.kind, "method": spec.method, "form": form,
                    "order": order, "lc": lc, "n_elm": 0, "n_dof": 0,
                    "h_min": np.nan, "h_avg": h_avg[lc], "h_max": np.nan,
                    "l1_error": err, "residual_inf": np.nan, "cond": np.nan,
                    "extra": "delta=1", "wall_time": 0.0,
                })
    plateau = [min(errors["inconsistent"][lc]) for lc in spec.lc_ladder]
    hs = [h_avg[lc] for lc in spec.lc_ladder]
    rates = {"inconsistent_plateau_slope": fitted_rate(hs, plateau)}
    return rows, rates


def robin_limit_gaps(method="cbm", lc=0.1, orders=(2, 5), form="aubin",
                     wavenumber=1):
    """Relative gap between extreme-eps Robin solves and the pure
    Dirichlet / Neumann solves on one fixed mesh per order."""
    geometry = Circle(FIXTURE_CENTER, FIXTURE_RADIUS)
    mms = ManufacturedSolution(wavenumber=wavenumber)
    q = mms.normal_derivative(geometry)
    gaps = {}
    for order in orders:
        domain = disk_fixture(method, lc, order)

        def solve(problem):
            system = assemble(domain, problem)
            return solve_direct(system, compute_cond=False).u

        dirichlet = solve(BoundaryProblem(
            conditions=[DirichletBC(mms.u, form="aubin")],
            forcing=mms.forcing(0.0),
        ))
        neumann = solve(BoundaryProblem(
            conditions=[NeumannBC(q, form="standard")],
            forcing=mms.forcing(1.0), alpha=1.0,
        ))
        robin_d = solve(BoundaryProblem(
            conditions=[RobinBC(mms.u, q, eps=1e-10, form=form)],
            forcing=mms.forcing(0.0),
        ))
        robin_n = solve(BoundaryProblem(
            conditions=[RobinBC(mms.u, q, eps=1e10, form=form)],
            forcing=mms.forcing(1.0), alpha=1.0,
        ))
        norm_d = np.abs(dirichlet).max()
        norm_n = np.abs(neumann).max()
        gaps[order] = {
            "dirichlet": float(np.abs(robin_d - dirichlet).max() / norm_d),
            "neumann": float(np.abs(robin_n - neumann).max() / norm_n),
        }
    return gaps


def _robin_limits(spec):
    form = spec.resolve_form() if spec.bc == "robin" else "aubin"
    gaps = robin_limit_gaps(spec.method, spec.lc_ladder[0], spec.p_ladder,
                            form, spec.wavenumber)
    rows = []
    for order in sorted(gaps):
        for limit in ("dirichlet", "neumann"):
            rows.append({
                "kind": spec.kind, "method": spec.method, "form": form,
                "order": order, "lc": spec.lc_ladder[0], "n_elm": 0,
                "n_dof": 0, "h_min": np.nan, "h_avg": np.nan, "h_max": np.nan,
                "l1_error": gaps[order][limit], "residual_inf": np.nan,
                "cond": np.nan, "extra": f"limit={limit}", "wall_time": 0.0,
            })
    return rows, {}


def ap_cascade_slopes(
    method="sbm-i",
    lc=0.0625,
    order=6,
    eps_values=(1e-2, 1e-3, 1e-4),
    limit="dirichlet",
    wavenumber=1,
    gamma=None,
    q_offset=1.0,
):
    """Fitted slopes of ||u_eps - sum_{k<=m} eps^k u_k||_L1 vs eps.

    u_eps solves the full Robin problem (Aubin form); the cascade modes come
    from the recursive limit problems. The flux data carries a constant
    offset so the data pair is not mutually consistent (otherwise every
    correction mode vanishes and the expansion is trivial). Expected slopes
    1, 2, 3 for m = 0, 1, 2, with the cubic fit allowed to sit on the
    discretization floor at the smallest eps.
    """
    geometry = Circle(FIXTURE_CENTER, FIXTURE_RADIUS)
    mms = ManufacturedSolution(wavenumber=wavenumber)
    q_mms = mms.normal_derivative(geometry)

    def q(x, n=None):
        # spatially varying data mismatch; a constant would make u_1
        # constant and kill the higher correction modes
        x = np.asarray(x, dtype=float)
        return q_mms(x, n) + q_offset * np.cos(
            2.0 * np.pi * (x[..., 0] - x[..., 1])
        )

    domain = disk_fixture(method, lc, order)
    modes, base = ap_cascade(
        domain, mms.u, q, mms.forcing(0.0), alpha=0.0, limit=limit,
        m_max=2, gamma=gamma,
    )

    residuals = np.empty((len(eps_values), 3))
    for i, eps in enumerate(eps_values):
        problem = BoundaryProblem(
            conditions=[RobinBC(mms.u, q, eps=eps, form="aubin")],
            forcing=mms.forcing(0.0), gamma=gamma,
        )
        system = assemble(domain, problem)
        u_eps = solve_direct(system, compute_cond=False).u
        partial = np.zeros_like(u_eps)
        for m, mode in enumerate(modes):
            partial = partial + (eps ** m) * mode
            diff = u_eps - partial
            # L1 of the gap field via the cascade's reference system layout
            residuals[i, m] = l1_error(domain, base, diff, lambda x: 0.0 * x[..., 0])
    log_eps = np.log(np.asarray(eps_values))
    slopes = []
    for m in range(3):
        r = residuals[:, m]
        # drop points that sit on the discretization floor
        keep = r > 10.0 * r.min() if m == 2 else np.ones_like(r, bool)
        if keep.sum() < 2:
            keep = np.ones_like(r, bool)
        slopes.append(float(np.polyfit(log_eps[keep], np.log(r[keep]), 1)[0]))
    return slopes, residuals


def _ap_cascade(spec):
    order = spec.p_ladder[-1]
    slopes, residuals = ap_cascade_slopes(
        spec.method, spec.lc_ladder[0], order, wavenumber=spec.wavenumber,
        gamma=spec.gamma,
    )
    rows = []
    eps_values = (1e-2, 1e-3, 1e-4)
    for i, eps in enumerate(eps_values):
        for m in range(3):
            rows.append({
                "kind": spec.kind, "method": spec.method, "form": "aubin",
                "order": order, "lc": spec.lc_ladder[0], "n_elm": 0,
                "n_dof": 0, "h_min": np.nan, "h_avg": np.nan, "h_max": np.nan,
                "l1_error": residuals[i, m], "residual_inf": np.nan,
                "cond": np.nan, "extra": f"eps={eps:g} m={m}",
                "wall_time": 0.0,
            })
    rates = {f"ap_slope_m{m}": slopes[m] for m in range(3)}
    return rows, rates


def square_with_hole_fixture(method, lc, order, square=2.0,
                             plate=1.5, radius=FIXTURE_RADIUS):
    """Plate-with-hole geometry embedded in a square background mesh."""
    margin = (square - plate) / 2.0
    outer = Rectangle((margin, margin), (margin + plate, margin + plate))
    inner = Circle((square / 2.0, square / 2.0), radius)
    geometry = Difference(outer, inner)
    mesh = generate_structured_square(lc, square, square, origin=(0.0, 0.0))
    if method == "cbm":
        raise ValueError("square-with-hole fixture is embedded only")
    mode, mapping, _ = METHODS[method]
    return build_surrogate(mesh, geometry, mode, mapping, order), geometry


def mixed_dirichlet_neumann(
    method="sbm-i",
    lc=0.125,
    orders=(2, 4, 6),
    form="aubin",
    wavenumber=1,
    swap=False,
):
    """Square-with-hole solved with Robin conditions only: eps = 1e-10 on
    the outer boundary (Dirichlet-like) and 1e10 on the hole
    (Neumann-like), or the reverse with swap=True."""
    mms = ManufacturedSolution(wavenumber=wavenumber)
    eps_outer, eps_inner = (1e10, 1e-10) if swap else (1e-10, 1e10)
    errors = {}
    for order in orders:
        domain, geometry = square_with_hole_fixture(method, lc, order)
        q = mms.normal_derivative(geometry)
        center = np.array([1.0, 1.0])
        split = 0.5 * (FIXTURE_RADIUS + 0.75)  # between hole and plate edge
        inner = RobinBC(
            mms.u, q, eps=eps_inner, form=form,
            where=lambda mid: np.hypot(*(mid - center)) < split,
        )
        outer = RobinBC(mms.u, q, eps=eps_outer, form=form)
        alpha = 1.0 if swap else 0.0  # swapped outer Neumann needs reaction
        problem = BoundaryProblem(
            conditions=[inner, outer], forcing=mms.forcing(alpha), alpha=alpha
        )
        system = assemble(domain, problem)
        report = solve_direct(system, compute_cond=False)
        errors[order] = l1_error(domain, system, report.u, mms.u)
    return errors


def _mixed(spec):
    form = spec.resolve_form() if spec.bc == "robin" else "aubin"
    errors = mixed_dirichlet_neumann(
        spec.method, spec.lc_ladder[0], spec.p_ladder, form, spec.wavenumber
    )
    rows = []
    for order in sorted(errors):
        rows.append({
            "kind": spec.kind, "method": spec.method, "form": form,
            "order": order, "lc": spec.lc_ladder[0], "n_elm": 0, "n_dof": 0,
            "h_min": np.nan, "h_avg": np.nan, "h_max": np.nan,
            "l1_error": errors[order], "residual_inf": np.nan,
            "cond": np.nan, "extra": "", "wall_time": 0.0,
        })
    return rows, {}


def _lebesgue_table(spec):
    rows = []
    for order in range(1, MAX_ORDER + 1):
        elem = build_reference_element(order)
        interior = lebesgue_constant(elem, "interior")
        extrap = lebesgue_constant(elem, "extrap_circle")
        rows.append({
            "kind": spec.kind, "method": "-", "form": "-", "order": order,
            "lc": np.nan, "n_elm": 0, "n_dof": elem.n_points,
            "h_min": np.nan, "h_avg": np.nan, "h_max": np.nan,
            "l1_error": interior, "residual_inf": np.nan, "cond": extrap,
            "extra": "interior|extrapolation", "wall_time": 0.0,
        })
    return rows, {}


def _vandermonde_1d(spec):
    shifts = np.linspace(0.1, 2.0, 20)
    rows = []
    for order in range(1, 10):
        for shift in shifts:
            kappa = vandermonde_shift_study_1d(order, shift)
            rows.append({
                "kind": spec.kind, "method": "-", "form": "-", "order": order,
                "lc": np.nan, "n_elm": 0, "n_dof": order + 1,
                "h_min": np.nan, "h_avg": np.nan, "h_max": np.nan,
                "l1_error": np.nan, "residual_inf": np.nan, "cond": kappa,
                "extra": f"shift={shift:.3f}", "wall_time": 0.0,
            })
    return rows, {}


_DISPATCH = {
    "h_convergence": _h_convergence,
    "p_convergence": _p_convergence,
    "conditioning": _h_convergence,
    "aligned_verification": _aligned_verification,
    "random_embedding_assessment": _random_embedding,
    "robin_consistency_delta": _robin_consistency_delta,
    "robin_limits": _robin_limits,
    "mixed_dirichlet_neumann": _mixed,
    "ap_cascade": _ap_cascade,
    "lebesgue_table": _lebesgue_table,
    "vandermonde_1d": _vandermonde_1d,
}


def run(spec: ExperimentSpec):
    """Execute a spec; returns (rows, rates) and writes CSV + JSON when
    spec.out is set."""
    rows, rates = _DISPATCH[spec.kind](spec)
    if spec.out is not None:
        write_artifacts(spec, rows, rates)
    return rows, rates


run_experiment = run  # package-level alias


def write_artifacts(spec, rows, rates):
    base = str(spec.out)
    if base.endswith(".csv"):
        base = base[:-4]
    with open(base + ".csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in CSV_COLUMNS})
    meta = {
        "schema_version": SCHEMA_VERSION,
        "spec": asdict(spec),
        "seed": spec.seed,
        "rates": rates,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    with open(base + ".json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
