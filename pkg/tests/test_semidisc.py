import numpy as np
import pytest

from hypgrav import euler as eu
from hypgrav import hypdiff as hd
from hypgrav.euler import InadmissibleStateError, prim2cons
from hypgrav.harness import euler_manufactured, hypdiff_manufactured
from hypgrav.hypdiff import RelaxationParams
from hypgrav.mesh import create_uniform, refine_cells
from hypgrav.semidisc import (
    BlendParams,
    DirichletBC,
    EulerEquations,
    HyperbolicDiffusion,
    Semidiscretization,
    apply_boundary,
    blending_indicator,
    indicator_threshold,
    rhs_split_blended,
    rhs_weak,
)

UNIT = ((0.0, 0.0), (1.0, 1.0))


def mortar_tree(periodic=(True, True), level=1):
    tree = create_uniform(UNIT, level, periodic=periodic)
    refine_cells(tree, {tree.leaf_ids()[0]})
    return tree


def euler_semi(tree, degree=3, **kw):
    return Semidiscretization(tree, degree, EulerEquations(1.4), **kw)


def constant_state(semi, rho=1.3, v1=0.2, v2=-0.4, p=0.9):
    u = semi.new_state()
    u[:] = prim2cons(rho, v1, v2, p, semi.equations.gamma)[:, None, None, None].reshape(
        1, 4, 1, 1
    )
    return u


def random_admissible(semi, seed=0):
    rng = np.random.default_rng(seed)
    n = semi.basis.n_nodes
    shape = (semi.n_elements, n, n)
    rho = rng.uniform(0.5, 2.0, shape)
    v1 = rng.uniform(-0.5, 0.5, shape)
    v2 = rng.uniform(-0.5, 0.5, shape)
    p = rng.uniform(0.5, 2.0, shape)
    return np.ascontiguousarray(
        np.moveaxis(prim2cons(rho, v1, v2, p, semi.equations.gamma), 0, 1)
    )


@pytest.mark.parametrize("path", ["weak", "split", "fv"])
def test_free_stream_on_mortar_mesh(path):
    semi = euler_semi(
        mortar_tree(),
        volume_flux="chandrashekar" if path != "weak" else None,
    )
    u = constant_state(semi)
    if path == "weak":
        du = semi.rhs_weak(u, 0.0)
    elif path == "split":
        du = semi.rhs_split_blended(u, 0.0, alpha=np.zeros(semi.n_elements))
    else:
        du = semi.rhs_split_blended(u, 0.0, alpha=np.ones(semi.n_elements))
    assert np.max(np.abs(du)) < 1e-12


def test_free_stream_hypdiff_on_mortar_mesh():
    semi = Semidiscretization(
        mortar_tree(), 3, HyperbolicDiffusion(RelaxationParams())
    )
    u = semi.new_state()
    u[:, 0] = 5.0
    du = semi.rhs_weak(u, 0.0)
    # relative to the flux scale phi/T_r ~ 200
    assert np.max(np.abs(du)) < 1e-10


@pytest.mark.parametrize("alpha_val", [0.0, 0.37, 1.0])
def test_conservation_periodic_with_mortars(alpha_val):
    semi = euler_semi(mortar_tree(), volume_flux="chandrashekar")
    u = random_admissible(semi)
    alpha = np.full(semi.n_elements, alpha_val)
    du = semi.rhs_split_blended(u, 0.0, alpha=alpha)
    totals = semi.integrate(du)
    assert np.max(np.abs(totals)) < 1e-12
    du_w = semi.rhs_weak(u, 0.0)
    assert np.max(np.abs(semi.integrate(du_w))) < 1e-12


def test_weak_equals_split_for_central_volume_flux():
    semi_w = euler_semi(mortar_tree(), surface_flux="hll")
    semi_s = euler_semi(mortar_tree(), surface_flux="hll", volume_flux="central")
    u = random_admissible(semi_w, seed=3)
    du_w = semi_w.rhs_weak(u, 0.0)
    du_s = semi_s.rhs_split_blended(u, 0.0, alpha=np.zeros(semi_s.n_elements))
    np.testing.assert_allclose(du_w, du_s, rtol=1e-11, atol=1e-11)


def test_discrete_entropy_rate_zero_with_ec_fluxes():
    # entropy-conservative surface and volume flux, periodic, no source, on a
    # conforming mesh (the mortar projection conserves the state variables
    # but not discrete entropy)
    semi = euler_semi(
        create_uniform(UNIT, 2, periodic=(True, True)),
        surface_flux="chandrashekar",
        volume_flux="chandrashekar",
    )
    u = random_admissible(semi, seed=4)
    du = semi.rhs_split_blended(u, 0.0, alpha=np.zeros(semi.n_elements))
    w = eu.entropy_variables(np.moveaxis(u, 1, 0), semi.equations.gamma)
    rate = semi.integrate(np.einsum("vEij,Evij->Eij", w, du))
    assert abs(rate) < 1e-11


def test_rhs_weak_euler_manufactured_residual_order():
    # at the exact solution, dU/dt from the operator matches the exact time
    # derivative at order N+1
    case = euler_manufactured()
    errs, hs = [], []
    for level in (1, 2, 3):
        tree = create_uniform(case.domain, level, periodic=(True, True))
        semi = Semidiscretization(
            tree, 3, EulerEquations(case.gamma),
            source=lambda u, x, y, t: np.moveaxis(
                np.asarray(case.euler_source(x, y, t)), 0, 1
            ),
        )
        u = semi.new_state(case.initial_euler)
        du = semi.rhs_weak(u, 0.0)
        eps = 1e-6
        dudt = (
            np.moveaxis(case.exact_euler(semi.node_x, semi.node_y, eps), 0, 1)
            - np.moveaxis(case.exact_euler(semi.node_x, semi.node_y, -eps), 0, 1)
        ) / (2 * eps)
        err = np.sqrt(semi.integrate((du - dudt) ** 2).max())
        errs.append(err)
        hs.append(semi.conn.h[0])
    # the operator residual at the interpolated exact solution converges at
    # order N; the time-integrated solution error converges at N+1
    rates = np.log(np.array(errs[:-1]) / errs[1:]) / np.log(np.array(hs[:-1]) / hs[1:])
    assert rates.min() > 2.7


def test_rhs_weak_hypdiff_steady_residual_order():
    case = hypdiff_manufactured()
    errs, hs = [], []
    for level in (1, 2, 3):
        tree = create_uniform(case.domain, level, periodic=case.periodic)
        semi = Semidiscretization(
            tree, 3, HyperbolicDiffusion(RelaxationParams(1.0, case.length_scale)),
            boundary_conditions=case.gravity_bc,
            source=case.gravity_forcing,
        )
        u = semi.new_state(lambda x, y: case.exact_gravity(x, y, 0.0))
        du = semi.rhs_weak(u, 0.0)
        errs.append(np.sqrt(semi.integrate(du**2).max()))
        hs.append(semi.conn.h[0])
    rates = np.log(np.array(errs[:-1]) / errs[1:]) / np.log(np.array(hs[:-1]) / hs[1:])
    assert rates.min() > 2.7


def test_split_form_solution_converges_at_full_order():
    # with EC volume flux and HLL at interfaces the integrated solution of the
    # manufactured flow still converges at N+1
    from hypgrav.timeint import ck45, stable_dt, step_lowstorage_2n
    from hypgrav.harness import l2_error

    case = euler_manufactured()
    errs, hs = [], []
    for level in (1, 2):
        tree = create_uniform(case.domain, level, periodic=(True, True))
        semi = Semidiscretization(
            tree, 3, EulerEquations(case.gamma),
            surface_flux="hll", volume_flux="chandrashekar",
            source=lambda u, x, y, t: np.moveaxis(
                np.asarray(case.euler_source(x, y, t)), 0, 1
            ),
        )
        u = semi.new_state(case.initial_euler)
        t, T = 0.0, 0.5
        sch = ck45()
        while t < T - 1e-14:
            dt = min(stable_dt(semi, u, 0.5), T - t)
            step_lowstorage_2n(sch, semi.rhs, u, t, dt)
            t += dt
        errs.append(l2_error(semi, u, case.exact_euler, T)[0])
        hs.append(semi.conn.h[0])
    rate = np.log(errs[0] / errs[1]) / np.log(hs[0] / hs[1])
    assert rate > 3.5


def test_blending_indicator_regimes():
    tree = create_uniform(UNIT, 2, periodic=(True, True))
    semi = euler_semi(tree, volume_flux="chandrashekar", shock_capture=BlendParams())
    params = semi.shock_capture
    n = semi.basis.n_nodes
    # constant element: zero high-mode energy
    u = constant_state(semi)
    alpha = blending_indicator(u, semi.basis, params, 1.4)
    assert np.all(alpha == 0.0)
    # step function inside each element: maximal blending
    step = np.where(semi.node_x < semi.conn.centers[:, 0][:, None, None], 4.0, 0.5)
    u_step = semi.new_state()
    u_step[:, 0] = step
    u_step[:, 3] = 10.0 * step
    alpha = blending_indicator(u_step, semi.basis, params, 1.4)
    assert np.all(alpha == params.alpha_max)
    # smooth long-wavelength data stays below the floor
    u_smooth = semi.new_state()
    u_smooth[:, 0] = 2.0 + 0.1 * np.sin(2 * np.pi * semi.node_x)
    u_smooth[:, 3] = 5.0 + 0.1 * np.cos(2 * np.pi * semi.node_y)
    alpha = blending_indicator(u_smooth, semi.basis, params, 1.4)
    assert np.all(alpha == 0.0)


def test_blending_indicator_neighbor_smoothing():
    tree = create_uniform(UNIT, 2, periodic=(True, True))
    semi = euler_semi(tree, volume_flux="chandrashekar",
                      shock_capture=BlendParams())
    u = constant_state(semi)
    # poke one element with a step to trigger its indicator
    u[5, 0, : semi.basis.n_nodes // 2] = 4.0
    u[5, 3] = 20.0
    alpha = semi.blending_alpha(u)
    assert alpha[5] == semi.shock_capture.alpha_max
    pairs = semi.conn.face_pairs()
    neighbors = {b for a, b in pairs if a == 5} | {a for a, b in pairs if b == 5}
    for nb in neighbors:
        assert alpha[nb] >= 0.5 * alpha[5] - 1e-15


def test_indicator_threshold_value():
    # 0.5 * 10^(-1.8 (N+1)^(1/4)) at N=3
    assert abs(indicator_threshold(3) - 0.5 * 10 ** (-1.8 * 4**0.25)) < 1e-16


def test_apply_boundary_consistency():
    case = hypdiff_manufactured()
    tree = create_uniform(case.domain, 1, periodic=case.periodic)
    semi = Semidiscretization(
        tree, 3, HyperbolicDiffusion(RelaxationParams(1.0, case.length_scale)),
        boundary_conditions=case.gravity_bc,
        source=case.gravity_forcing,
    )
    m = 0
    face = semi.conn.bd_face[m]
    interior = np.asarray(
        case.exact_gravity(semi.bd_x[m], semi.bd_y[m], 0.0)
    )
    flux = apply_boundary(semi, interior, semi.conn.bd_tags[m], 0.0, face)
    phys = hd.flux_hypdiff(interior, face // 2, semi.equations.params)
    np.testing.assert_allclose(flux, phys, atol=1e-12)


def test_apply_boundary_unknown_tag_rejected():
    case = hypdiff_manufactured()
    tree = create_uniform(case.domain, 1, periodic=case.periodic)
    semi = Semidiscretization(
        tree, 3, HyperbolicDiffusion(RelaxationParams()),
        boundary_conditions=case.gravity_bc,
        source=case.gravity_forcing,
    )
    with pytest.raises(KeyError):
        apply_boundary(semi, np.zeros((3, 4)), "+y", 0.0, 3)


def test_missing_boundary_condition_rejected():
    tree = create_uniform(UNIT, 1, periodic=(False, False))
    with pytest.raises(KeyError):
        euler_semi(tree)


def test_inadmissible_state_reports_element():
    semi = euler_semi(create_uniform(UNIT, 1, periodic=(True, True)))
    u = constant_state(semi)
    u[2, 0, 1, 1] = -1.0
    with pytest.raises(InadmissibleStateError) as err:
        semi.rhs_weak(u, 0.0)
    assert "element 2" in str(err.value)


def test_kernels_match_reference_fluxes():
    from hypgrav import _kernels as K

    rng = np.random.default_rng(11)
    g = 1.4
    for _ in range(200):
        rho = rng.uniform(0.2, 3.0, 2)
        p = rng.uniform(0.2, 3.0, 2)
        v = rng.uniform(-2.0, 2.0, 4)
        uL = prim2cons(rho[0], v[0], v[1], p[0], g)
        uR = prim2cons(rho[1], v[2], v[3], p[1], g)
        for axis in (0, 1):
            for flag, ref in (
                (K.FLUX_HLL, eu.flux_hll(uL, uR, axis, g)),
                (K.FLUX_CHANDRASHEKAR, eu.flux_chandrashekar(uL, uR, axis, g)),
            ):
                got = K._euler_num_flux(flag, axis, *uL, *uR, g)
                np.testing.assert_allclose(got, ref, rtol=1e-13, atol=1e-13)
        params = RelaxationParams()
        gotL = K._llf_hypdiff(0, *uL[:3], *uR[:3], 1.0 / params.t_relax,
                              params.wave_speed)
        refL = hd.flux_llf_hypdiff(uL[:3], uR[:3], 0, params)
        np.testing.assert_allclose(gotL, refL, rtol=1e-13, atol=1e-12)
