"""Slab/global assembly: frozen oracles, exact reproduction, guard rails."""

import numpy as np
import pytest

from trefftzdg import (
    FULL,
    TREFFTZ,
    BasisSpec,
    BoundaryCondition,
    CharacteristicProfile,
    FluxParams,
    InitialData,
    MaterialLayout,
    SpaceTimeDomain,
    apply_bilinear_global,
    assemble_global,
    assemble_slab,
    build_mesh,
    dg_norm,
    dump_matrix,
    field_from_coefficients,
    global_layout,
    l2_relative_error,
    march,
    uniform_mesh,
)
from trefftzdg.errors import (
    DimensionMismatch,
    MismatchedDomain,
    QuadratureOrderTooLow,
    TrefftzWithSource,
)

UNIT = MaterialLayout.constant()


def _unit_square_mesh(n_x=1, n_t=1):
    return uniform_mesh(SpaceTimeDomain(0.0, 1.0, 1.0), UNIT, n_x, n_t)


def test_single_element_constant_field_oracle():
    # hand-checked 2x2 system for the lowest-order pair on the unit square:
    # both transport constants see mass 2 on the top edge plus 1 from the
    # conducting walls, and the walls couple them with weight 1
    mesh = _unit_square_mesh()
    spec = BasisSpec(TREFFTZ, 0)
    system = assemble_slab(
        mesh, 0, spec, FluxParams(), BoundaryCondition.pec(),
        initial_data=InitialData(lambda x: np.zeros_like(x), lambda x: np.ones_like(x)),
    )
    assert np.allclose(system.A, [[3.0, 1.0], [1.0, 3.0]], atol=1e-13)
    assert np.allclose(system.b, [1.0, -1.0], atol=1e-13)
    c = np.linalg.solve(system.A, system.b)
    assert np.allclose(c, [0.5, -0.5], atol=1e-13)
    assert system.R.shape == (2, 0)
    assert system.n_prev == 0


def test_first_slab_requires_initial_data():
    mesh = _unit_square_mesh()
    with pytest.raises(MismatchedDomain):
        assemble_slab(mesh, 0, BasisSpec(TREFFTZ, 0), FluxParams(),
                      BoundaryCondition.pec())


@pytest.mark.parametrize("family", [TREFFTZ, FULL])
@pytest.mark.parametrize("bc_kind", ["pec", "robin"])
def test_quadratic_form_equals_squared_dg_norm(family, bc_kind):
    # a(v; v) reproduces the squared mesh-dependent norm of v exactly
    mesh = build_mesh(SpaceTimeDomain(0.0, 2.0, 1.5), UNIT, [0.5, 1.0],
                      [np.array([0.0, 0.7, 2.0]), np.array([0.0, 1.0, 1.6, 2.0])])
    spec = BasisSpec(family, 2)
    flux = FluxParams(alpha=0.4, beta=0.7, delta=0.3)
    bc = BoundaryCondition.pec() if bc_kind == "pec" else BoundaryCondition.robin()
    _, n = global_layout(mesh, spec)
    rng = np.random.default_rng(5)
    for _ in range(5):
        v = rng.standard_normal(n)
        quad = apply_bilinear_global(mesh, spec, flux, bc, v, v)
        norm = dg_norm(field_from_coefficients(mesh, spec, v, flux=flux, bc=bc),
                       flux=flux)
        assert quad == pytest.approx(norm**2, rel=1e-12, abs=1e-13)


def _linear_profile():
    # u(x - t) = x - t and w(x + t) = 2(x + t) + 1 give the linear fields
    # E = (3x + t + 1) / 2 and H = (-x - 3t - 1) / 2
    return CharacteristicProfile(
        SpaceTimeDomain(0.0, 2.0, 1.0), 1.0, 1.0,
        u0=lambda z: np.asarray(z, dtype=float),
        w0=lambda z: 2.0 * np.asarray(z, dtype=float) + 1.0,
        du0=lambda z: np.ones_like(np.asarray(z, dtype=float)),
        dw0=lambda z: np.full_like(np.asarray(z, dtype=float), 2.0),
    )


def _linear_data():
    return InitialData(lambda x: (3.0 * x + 1.0) / 2.0,
                       lambda x: (-x - 1.0) / 2.0)


@pytest.mark.parametrize("family", [TREFFTZ, FULL])
def test_linear_solution_reproduced_with_dirichlet_walls(family):
    prof = _linear_profile()
    mesh = uniform_mesh(SpaceTimeDomain(0.0, 2.0, 1.0), UNIT, 2, 2)
    bc = BoundaryCondition.dirichlet(
        e_l=lambda t: (t + 1.0) / 2.0, e_r=lambda t: (t + 7.0) / 2.0
    )
    sol = march(mesh, BasisSpec(family, 1), FluxParams(), bc, _linear_data())
    assert l2_relative_error(sol, prof) <= 1e-11


@pytest.mark.parametrize("family", [TREFFTZ, FULL])
def test_linear_solution_reproduced_with_impedance_walls(family):
    prof = _linear_profile()
    mesh = uniform_mesh(SpaceTimeDomain(0.0, 2.0, 1.0), UNIT, 2, 2)
    bc = BoundaryCondition.robin(
        g_l=lambda t: -np.asarray(t, dtype=float),           # u(0, t)
        g_r=lambda t: 2.0 * np.asarray(t, dtype=float) + 5.0  # w(2, t)
    )
    sol = march(mesh, BasisSpec(family, 1), FluxParams(delta=0.35), bc, _linear_data())
    assert l2_relative_error(sol, prof) <= 1e-11


def test_higher_degree_keeps_linear_solution_exact():
    prof = _linear_profile()
    mesh = uniform_mesh(SpaceTimeDomain(0.0, 2.0, 1.0), UNIT, 3, 2)
    bc = BoundaryCondition.dirichlet(
        e_l=lambda t: (t + 1.0) / 2.0, e_r=lambda t: (t + 7.0) / 2.0
    )
    for family, p in ((TREFFTZ, 3), (FULL, 2)):
        sol = march(mesh, BasisSpec(family, p), FluxParams(), bc, _linear_data())
        assert l2_relative_error(sol, prof) <= 1e-10


def test_source_rejected_for_transport_spaces():
    mesh = _unit_square_mesh()
    with pytest.raises(TrefftzWithSource):
        assemble_slab(mesh, 0, BasisSpec(TREFFTZ, 1), FluxParams(),
                      BoundaryCondition.pec(), initial_data=InitialData.zero(),
                      source=lambda x, t: np.ones_like(x))
    with pytest.raises(TrefftzWithSource):
        assemble_global(mesh, BasisSpec(TREFFTZ, 1), FluxParams(),
                        BoundaryCondition.pec(), initial_data=InitialData.zero(),
                        source=lambda x, t: np.ones_like(x))


class _ManufacturedSource:
    """E = t x (1 - x), H = -t^2 (1 - 2x) / 2 solves the system with
    J = t^2 + x (1 - x), zero data, and conducting walls."""

    def evaluate(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return t * x * (1.0 - x), -0.5 * t**2 * (1.0 - 2.0 * x)

    def trace(self, x, t, side=None):
        return self.evaluate(x, t)


def test_volume_source_reproduces_manufactured_solution():
    # cubic exact fields: the degree-3 full space must capture them exactly,
    # pinning the source term to the electric test slot
    mesh = uniform_mesh(SpaceTimeDomain(0.0, 1.0, 1.0), UNIT, 2, 2)
    sol = march(mesh, BasisSpec(FULL, 3), FluxParams(), BoundaryCondition.pec(),
                InitialData.zero(), source=lambda x, t: t**2 + x * (1.0 - x))
    assert l2_relative_error(sol, _ManufacturedSource()) <= 1e-11
    assert dg_norm(sol) > 0.0


def test_low_face_quadrature_is_rejected():
    mesh = _unit_square_mesh()
    with pytest.raises(QuadratureOrderTooLow):
        assemble_slab(mesh, 0, BasisSpec(TREFFTZ, 3), FluxParams(),
                      BoundaryCondition.pec(), initial_data=InitialData.zero(),
                      face_quad=2)


def test_quadratic_form_checks_vector_lengths():
    mesh = _unit_square_mesh()
    spec = BasisSpec(TREFFTZ, 1)
    with pytest.raises(DimensionMismatch):
        apply_bilinear_global(mesh, spec, FluxParams(), BoundaryCondition.pec(),
                              np.zeros(3), np.zeros(3))


def test_flux_parameter_validation():
    with pytest.raises(MismatchedDomain):
        FluxParams(alpha=-0.1)
    with pytest.raises(MismatchedDomain):
        FluxParams(delta=0.0)
    with pytest.raises(MismatchedDomain):
        FluxParams(delta=1.0)
    with pytest.warns(UserWarning):
        FluxParams(alpha=0.0, beta=0.5)


def test_face_scaled_penalties_track_local_size_and_materials():
    layered = MaterialLayout((1.0,), (4.0, 1.0), (1.0, 2.0))
    mesh = build_mesh(SpaceTimeDomain(0.0, 2.0, 0.5), layered, [0.5],
                      [np.array([0.0, 0.5, 1.0, 2.0])])
    flux = FluxParams(alpha=0.5, beta=0.5, per_face_scaling=True)
    assert mesh.hx_max == 1.0
    faces = [mesh.faces[fi] for fi in mesh.ver_faces[0]]
    by_pos = {f.pos: f for f in faces}
    # interface at x=0.5 inside the eps=4 region: h_f = 0.5, eps_f = 4
    assert flux.alpha_on(mesh, by_pos[0.5]) == pytest.approx(0.5 * (1.0 / 0.5) * 4.0)
    # material interface at x=1: h_f = min(0.5, 1) and worst-case material
    assert flux.alpha_on(mesh, by_pos[1.0]) == pytest.approx(0.5 * (1.0 / 0.5) * 4.0)
    assert flux.beta_on(mesh, by_pos[1.0]) == pytest.approx(0.5 * (1.0 / 0.5) * 2.0)
    # boundary face on the wide right element
    right = mesh.faces[mesh.right_faces[0]]
    assert flux.alpha_on(mesh, right) == pytest.approx(0.5 * (1.0 / 1.0) * 1.0)
    # scaling off: plain constants everywhere
    plain = FluxParams(alpha=0.5, beta=0.5)
    assert plain.alpha_on(mesh, by_pos[1.0]) == 0.5


def test_matrix_dump_round_trip(tmp_path):
    mesh = _unit_square_mesh()
    system = assemble_slab(mesh, 0, BasisSpec(TREFFTZ, 1), FluxParams(),
                           BoundaryCondition.pec(), initial_data=InitialData.zero())
    path = tmp_path / "matrix.txt"
    dump_matrix(system.A, path)
    lines = path.read_text().splitlines()
    shape = tuple(int(v) for v in lines[0].lstrip("# ").split())
    rebuilt = np.zeros(shape)
    for line in lines[1:]:
        r, c, v = line.split()
        rebuilt[int(r), int(c)] = float(v)
    assert shape == system.A.shape
    assert np.array_equal(rebuilt, system.A)


def test_boundary_condition_kinds():
    assert BoundaryCondition.pec().homogeneous
    assert BoundaryCondition.robin().homogeneous
    assert not BoundaryCondition.dirichlet(lambda t: t, lambda t: t).homogeneous
    with pytest.raises(MismatchedDomain):
        BoundaryCondition("absorbing")
