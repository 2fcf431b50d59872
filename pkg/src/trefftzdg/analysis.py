"""Error norms, energy accounting, and convergence-rate fits.

The mesh-dependent DG norm collects the dissipative skeleton terms:
half-weighted time jumps and initial/final traces, penalty-weighted
space jumps, and the lateral boundary traces in the weights induced by
the boundary condition. The discrete energy identity decomposes the
final energy into the data energy minus quadratic losses; its audit is
a strong consistency check of solver, assembly, and quadrature at
once.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .assembly import DIRICHLET, PEC, ROBIN
from .basis import BasisSpec, element_basis, embedding_indices
from .errors import (
    AmbiguousTrace,
    DimensionMismatch,
    InsufficientSamples,
    MismatchedDomain,
    NonpositiveError,
    UnsupportedBC,
)
from .quadrature import gauss_rule, map_to_segment
from .reference import ZeroField
from .solver import SolutionField


def _max_degree(sol):
    spec = sol.spec
    if isinstance(spec.degree, int):
        return spec.degree
    return max(spec.degree_for(i) for i in range(sol.mesh.n_elements))


def _slab_groups(mesh, spec, slab):
    """Group a slab's elements by local signature for shared basis tables."""
    groups = {}
    for i in mesh.elem_grid[slab]:
        e = mesh.elements[i]
        key = (e.hx, e.ht, e.eps, e.mu, spec.degree_for(i))
        groups.setdefault(key, []).append(i)
    return groups


def _local_tensor(e, n):
    xi, w = gauss_rule(n)
    dx = np.repeat(0.5 * e.hx * xi, n)
    dt = np.tile(0.5 * e.ht * xi, n)
    W = np.repeat(0.5 * e.hx * w, n) * np.tile(0.5 * e.ht * w, n)
    return dx, dt, W


def l2_relative_error(sol, reference, quad_order=None):
    """Relative space-time L2 error of (E, H) against a reference field.

    sqrt of the integral of the squared field mismatch over the whole
    cylinder divided by the squared reference norm.
    """
    mesh, spec = sol.mesh, sol.spec
    n = quad_order if quad_order is not None else _max_degree(sol) + 6
    num = 0.0
    den = 0.0
    for j in range(mesh.n_slabs):
        for key, ids in _slab_groups(mesh, spec, j).items():
            e0 = mesh.elements[ids[0]]
            basis = element_basis(spec, e0)
            dx, dt, W = _local_tensor(e0, n)
            fields = basis.eval_local(dx, dt)
            C = np.stack([sol.element_coefficients(i) for i in ids])
            E = C @ fields["E"]
            H = C @ fields["H"]
            xc = np.array([0.5 * (mesh.elements[i].x0 + mesh.elements[i].x1) for i in ids])
            tc = np.array([0.5 * (mesh.elements[i].t0 + mesh.elements[i].t1) for i in ids])
            X = xc[:, None] + dx[None, :]
            T = tc[:, None] + dt[None, :]
            Er, Hr = reference.evaluate(X, T)
            num += float(np.sum(W * ((Er - E) ** 2 + (Hr - H) ** 2)))
            den += float(np.sum(W * (Er**2 + Hr**2)))
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return math.sqrt(num / den)


def _sol_edge(sol, element_index, xq, vertical_side):
    """Discrete trace on a horizontal edge; vertical_side +-1 selects top/bottom."""
    e = sol.mesh.elements[element_index]
    basis = sol.basis_for(element_index)
    dx = xq - 0.5 * (e.x0 + e.x1)
    dt = np.full_like(dx, vertical_side * 0.5 * e.ht)
    f = basis.eval_local(dx, dt)
    c = sol.element_coefficients(element_index)
    return c @ f["E"], c @ f["H"]


def _sol_side(sol, element_index, tq, horizontal_side):
    """Discrete trace on a vertical edge; horizontal_side +-1 selects right/left."""
    e = sol.mesh.elements[element_index]
    basis = sol.basis_for(element_index)
    tc = 0.5 * (e.t0 + e.t1)
    dt = tq - tc
    dx = np.full_like(dt, horizontal_side * 0.5 * e.hx)
    f = basis.eval_local(dx, dt)
    c = sol.element_coefficients(element_index)
    return c @ f["E"], c @ f["H"]


def _ref_trace(reference, x, t, side):
    if hasattr(reference, "trace"):
        return reference.trace(x, t, side=side)
    return reference.evaluate(x, t)


def dg_error(sol, reference, flux=None, quad_order=None):
    """Mesh-dependent DG norm of the error field against a reference.

    The reference may be a closed-form profile or another piecewise
    field (its one-sided traces are used on the skeleton). The lateral
    weights follow the solution's boundary condition: penalty alpha on
    E for conducting/Dirichlet walls, the impedance-weighted pair for
    Robin walls.
    """
    mesh, spec = sol.mesh, sol.spec
    flux = flux if flux is not None else sol.flux
    if flux is None:
        raise MismatchedDomain(
            "the DG norm needs penalty weights; this field carries none, "
            "pass flux=FluxParams(...)"
        )
    bc = sol.bc
    n = quad_order if quad_order is not None else _max_degree(sol) + 6
    total = 0.0

    # time jumps across slab interfaces
    for group in mesh.hor_pieces:
        for fi in group:
            face = mesh.faces[fi]
            xq, wq = map_to_segment(n, face.lo, face.hi)
            e = mesh.elements[face.above]
            tq = np.full_like(xq, face.pos)
            Eb, Hb = _sol_edge(sol, face.below, xq, +1)
            Ea, Ha = _sol_edge(sol, face.above, xq, -1)
            Rb = _ref_trace(reference, xq, tq, "below")
            Ra = _ref_trace(reference, xq, tq, "above")
            jump_e = (Rb[0] - Eb) - (Ra[0] - Ea)
            jump_h = (Rb[1] - Hb) - (Ra[1] - Ha)
            total += 0.5 * float(wq @ (e.eps * jump_e**2 + e.mu * jump_h**2))

    # initial and final traces
    for fis, vertical_side, ref_side in (
        (mesh.bottom_faces, -1, "above"),
        (mesh.top_faces, +1, "below"),
    ):
        for fi in fis:
            face = mesh.faces[fi]
            e = mesh.elements[face.element]
            xq, wq = map_to_segment(n, face.lo, face.hi)
            tq = np.full_like(xq, face.pos)
            E, H = _sol_edge(sol, face.element, xq, vertical_side)
            Er, Hr = _ref_trace(reference, xq, tq, ref_side)
            total += 0.5 * float(wq @ (e.eps * (Er - E) ** 2 + e.mu * (Hr - H) ** 2))

    # space jumps with penalty weights
    for group in mesh.ver_faces:
        for fi in group:
            face = mesh.faces[fi]
            a_f = flux.alpha_on(mesh, face)
            b_f = flux.beta_on(mesh, face)
            tq, wq = map_to_segment(n, face.lo, face.hi)
            xq = np.full_like(tq, face.pos)
            El, Hl = _sol_side(sol, face.left, tq, +1)
            Er_, Hr_ = _sol_side(sol, face.right, tq, -1)
            Rl = _ref_trace(reference, xq, tq, "left")
            Rr = _ref_trace(reference, xq, tq, "right")
            jump_e = (Rl[0] - El) - (Rr[0] - Er_)
            jump_h = (Rl[1] - Hl) - (Rr[1] - Hr_)
            total += float(wq @ (a_f * jump_e**2 + b_f * jump_h**2))

    # lateral boundary traces
    robin = bc is not None and bc.kind == ROBIN
    for fis, horizontal_side, ref_side in (
        (mesh.left_faces, -1, "right"),
        (mesh.right_faces, +1, "left"),
    ):
        for fi in fis:
            face = mesh.faces[fi]
            e = mesh.elements[face.element]
            tq, wq = map_to_segment(n, face.lo, face.hi)
            xq = np.full_like(tq, face.pos)
            E, H = _sol_side(sol, face.element, tq, horizontal_side)
            Er, Hr = _ref_trace(reference, xq, tq, ref_side)
            if robin:
                zi = math.sqrt(e.mu / e.eps)
                d = flux.delta
                total += float(
                    wq @ ((1.0 - d) / zi * (Er - E) ** 2 + d * zi * (Hr - H) ** 2)
                )
            else:
                a_f = flux.alpha_on(mesh, face)
                total += float(wq @ (a_f * (Er - E) ** 2))

    return math.sqrt(total)


def discrete_energy(sol, t, side=None):
    """Field energy 0.5 * int (eps E^2 + mu H^2) dx at time t.

    At an interior slab interface the trace side must be given
    ('below' or 'above'); the end times default to the only available
    side.
    """
    mesh = sol.mesh
    times = mesh.slab_times
    tol = 1e-12 * max(mesh.domain.t_final, 1.0)
    interior = np.any(np.abs(times[1:-1] - t) <= tol)
    if interior and side is None:
        raise AmbiguousTrace(
            f"t = {t} lies on a slab interface; pass side='below' or side='above'"
        )
    if abs(t - times[0]) <= tol:
        slab = 0
    elif abs(t - times[-1]) <= tol:
        slab = mesh.n_slabs - 1
    else:
        slab = mesh.slab_of_time(t, side=side)
    n = _max_degree(sol) + 2
    total = 0.0
    for i in mesh.elem_grid[slab]:
        e = mesh.elements[i]
        basis = sol.basis_for(i)
        xq, wq = map_to_segment(n, e.x0, e.x1)
        dx = xq - 0.5 * (e.x0 + e.x1)
        dt = np.full_like(dx, t - 0.5 * (e.t0 + e.t1))
        f = basis.eval_local(dx, dt)
        c = sol.element_coefficients(i)
        E = c @ f["E"]
        H = c @ f["H"]
        total += 0.5 * float(wq @ (e.eps * E**2 + e.mu * H**2))
    return total


def energy_trajectory(sol):
    """Energies at every slab interface and the final time, traced from below."""
    times = sol.mesh.slab_times[1:]
    return times.copy(), np.array([discrete_energy(sol, t, side="below") for t in times])


@dataclass
class EnergyBudget:
    """Terms of the discrete energy identity; all loss terms are >= 0."""

    initial_energy: float
    initial_mismatch: float
    time_jump_loss: float
    space_jump_loss: float
    lateral_loss: float
    final_energy: float
    residual: float

    def as_dict(self):
        return {
            "initial_energy": self.initial_energy,
            "initial_mismatch": self.initial_mismatch,
            "time_jump_loss": self.time_jump_loss,
            "space_jump_loss": self.space_jump_loss,
            "lateral_loss": self.lateral_loss,
            "final_energy": self.final_energy,
            "residual": self.residual,
        }


def energy_budget(sol, initial_data, quad_order=None):
    """Audit the discrete energy identity for a homogeneous-data run.

    final = data energy - projection mismatch - time-jump loss
    - space-jump loss - lateral loss, with every loss a sum of squares.
    residual is the identity defect relative to the data energy.
    """
    bc = sol.bc
    if bc is None or not bc.homogeneous:
        raise UnsupportedBC(
            "the energy identity is audited for homogeneous boundary data only"
        )
    mesh, flux = sol.mesh, sol.flux
    p_max = _max_degree(sol)
    n = quad_order if quad_order is not None else p_max + 2
    n_data = max(p_max + 6, 16)

    initial_energy = 0.0
    initial_mismatch = 0.0
    for fi in mesh.bottom_faces:
        face = mesh.faces[fi]
        e = mesh.elements[face.element]
        xq, wq = map_to_segment(n_data, face.lo, face.hi)
        e0 = np.asarray(initial_data.e0(xq), dtype=float)
        h0 = np.asarray(initial_data.h0(xq), dtype=float)
        E, H = _sol_edge(sol, face.element, xq, -1)
        initial_energy += 0.5 * float(wq @ (e.eps * e0**2 + e.mu * h0**2))
        initial_mismatch += 0.5 * float(
            wq @ (e.eps * (E - e0) ** 2 + e.mu * (H - h0) ** 2)
        )

    time_jump = 0.0
    for group in mesh.hor_pieces:
        for fi in group:
            face = mesh.faces[fi]
            e = mesh.elements[face.above]
            xq, wq = map_to_segment(n, face.lo, face.hi)
            Eb, Hb = _sol_edge(sol, face.below, xq, +1)
            Ea, Ha = _sol_edge(sol, face.above, xq, -1)
            time_jump += 0.5 * float(
                wq @ (e.eps * (Eb - Ea) ** 2 + e.mu * (Hb - Ha) ** 2)
            )

    space_jump = 0.0
    for group in mesh.ver_faces:
        for fi in group:
            face = mesh.faces[fi]
            a_f = flux.alpha_on(mesh, face)
            b_f = flux.beta_on(mesh, face)
            tq, wq = map_to_segment(n, face.lo, face.hi)
            El, Hl = _sol_side(sol, face.left, tq, +1)
            Er, Hr = _sol_side(sol, face.right, tq, -1)
            space_jump += float(wq @ (a_f * (El - Er) ** 2 + b_f * (Hl - Hr) ** 2))

    lateral = 0.0
    for fis, horizontal_side in ((mesh.left_faces, -1), (mesh.right_faces, +1)):
        for fi in fis:
            face = mesh.faces[fi]
            e = mesh.elements[face.element]
            tq, wq = map_to_segment(n, face.lo, face.hi)
            E, H = _sol_side(sol, face.element, tq, horizontal_side)
            if bc.kind == ROBIN:
                zi = math.sqrt(e.mu / e.eps)
                d = flux.delta
                lateral += float(wq @ (d * zi * H**2 + (1.0 - d) / zi * E**2))
            else:
                a_f = flux.alpha_on(mesh, face)
                lateral += float(wq @ (a_f * E**2))

    final = discrete_energy(sol, mesh.slab_times[-1], side="below")
    predicted = initial_energy - initial_mismatch - time_jump - space_jump - lateral
    scale = initial_energy if initial_energy > 0 else 1.0
    return EnergyBudget(
        initial_energy=initial_energy,
        initial_mismatch=initial_mismatch,
        time_jump_loss=time_jump,
        space_jump_loss=space_jump,
        lateral_loss=lateral,
        final_energy=final,
        residual=abs(final - predicted) / scale,
    )


@dataclass
class RateFit:
    """Least-squares convergence rate with a linearity diagnostic.

    residual is the RMS deviation from the fit line divided by the
    data range, both in log space; excluded lists samples dropped by
    the pre-asymptotic guard (error > 0.5 at the coarsest resolution).
    """

    rate: float
    residual: float
    n_used: int
    excluded: list = field(default_factory=list)


def fit_rates(xs, errors, mode="h"):
    """Fit a convergence rate.

    mode 'h': slope of log(error) against log(h) (positive = converging).
    mode 'p': slope of log(error) against p (negative = converging).
    """
    xs = np.asarray(xs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if xs.shape != errors.shape:
        raise MismatchedDomain(f"{xs.shape} sample points vs {errors.shape} errors")
    if xs.size < 3:
        raise InsufficientSamples(f"rate fit needs at least 3 samples, got {xs.size}")
    if np.any(errors <= 0):
        raise NonpositiveError("rate fit requires strictly positive errors")
    if mode not in ("h", "p"):
        raise MismatchedDomain(f"unknown fit mode {mode!r}")

    excluded = []
    coarse = int(np.argmax(xs)) if mode == "h" else int(np.argmin(xs))
    keep = np.ones(xs.size, dtype=bool)
    if errors[coarse] > 0.5:
        keep[coarse] = False
        excluded.append((float(xs[coarse]), float(errors[coarse])))
    X = np.log(xs[keep]) if mode == "h" else xs[keep]
    Y = np.log(errors[keep])
    slope, intercept = np.polyfit(X, Y, 1)
    fit = slope * X + intercept
    rng = Y.max() - Y.min()
    rms = float(np.sqrt(np.mean((Y - fit) ** 2)))
    residual = rms / rng if rng > 0 else 0.0
    return RateFit(rate=float(slope), residual=float(residual),
                   n_used=int(keep.sum()), excluded=excluded)


def project_to_space(mesh, spec, reference, quad_order=None):
    """Elementwise L2 projection of a reference field onto a discrete space.

    Returns a SolutionField with no attached flux or boundary
    condition; useful as a side-aware discrete stand-in for the exact
    solution.
    """
    p_max = spec.max_degree() if isinstance(spec.degree, int) else max(
        spec.degree_for(i) for i in range(mesh.n_elements))
    n = quad_order if quad_order is not None else p_max + 6
    coefficients = []
    offsets = []
    for j in range(mesh.n_slabs):
        offs = {}
        total = 0
        for i in mesh.elem_grid[j]:
            offs[i] = total
            total += spec.dim_for(i)
        vec = np.zeros(total)
        for i in mesh.elem_grid[j]:
            e = mesh.elements[i]
            basis = element_basis(spec, e)
            dx, dt, W = _local_tensor(e, n)
            f = basis.eval_local(dx, dt)
            xc, tc = e.center
            Er, Hr = reference.evaluate(xc + dx, tc + dt)
            gram = (f["E"] * W) @ f["E"].T + (f["H"] * W) @ f["H"].T
            rhs = f["E"] @ (W * Er) + f["H"] @ (W * Hr)
            vec[offs[i]:offs[i] + basis.n] = linalg.solve(gram, rhs, assume_a="pos")
        coefficients.append(vec)
        offsets.append(offs)
    return SolutionField(mesh, spec, None, None, coefficients, offsets)


def embed_solution(sol, degree):
    """Re-express a uniform-degree solution in the same family at higher degree."""
    spec = sol.spec
    if not isinstance(spec.degree, int):
        raise MismatchedDomain("embedding implemented for uniform degrees")
    big = BasisSpec(spec.family, degree)
    idx = embedding_indices(spec.family, spec.degree, degree)
    mesh = sol.mesh
    coefficients = []
    offsets = []
    for j in range(mesh.n_slabs):
        offs = {}
        total = 0
        for i in mesh.elem_grid[j]:
            offs[i] = total
            total += big.dim_for(i)
        vec = np.zeros(total)
        for i in mesh.elem_grid[j]:
            vec[offs[i] + idx] = sol.element_coefficients(i)
        coefficients.append(vec)
        offsets.append(offs)
    return SolutionField(mesh, big, sol.flux, sol.bc, coefficients, offsets)


def dg_norm(sol, flux=None, quad_order=None):
    """Mesh-dependent norm of a discrete field (its distance from zero)."""
    return dg_error(sol, ZeroField(), flux=flux, quad_order=quad_order)


def field_from_coefficients(mesh, spec, coefficients, flux=None, bc=None):
    """Wrap a flat global coefficient vector (slab-major) as a field."""
    coefficients = np.asarray(coefficients, dtype=float).ravel()
    expected = sum(spec.dim_for(i) for i in range(mesh.n_elements))
    if coefficients.size != expected:
        raise DimensionMismatch(
            f"coefficient vector has {coefficients.size} entries, "
            f"the space has {expected}"
        )
    per_slab = []
    offsets = []
    pos = 0
    for j in range(mesh.n_slabs):
        offs = {}
        total = 0
        for i in mesh.elem_grid[j]:
            offs[i] = total
            total += spec.dim_for(i)
        per_slab.append(coefficients[pos:pos + total])
        offsets.append(offs)
        pos += total
    return SolutionField(mesh, spec, flux, bc, per_slab, offsets)


def global_coefficients(sol):
    """Concatenate per-slab coefficients into the global dof ordering."""
    return np.concatenate(sol.coefficients)


CSV_HEADER = [
    "experiment", "h_x", "h_t", "p", "family",
    "alpha", "beta", "eps_q", "dg_error", "energy_final", "rate",
]


@dataclass
class ErrorReport:
    """One experiment row of the results table."""

    experiment: str
    h_x: float
    h_t: float
    p: int
    family: str
    alpha: float
    beta: float
    eps_q: float = float("nan")
    dg: float = float("nan")
    energy_final: float = float("nan")
    rate: float = None

    def row(self):
        def fmt(v):
            if v is None:
                return ""
            return repr(float(v))

        return [
            self.experiment, repr(float(self.h_x)), repr(float(self.h_t)),
            str(int(self.p)), self.family, repr(float(self.alpha)),
            repr(float(self.beta)), fmt(self.eps_q), fmt(self.dg),
            fmt(self.energy_final), fmt(self.rate),
        ]
