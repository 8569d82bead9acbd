import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import dblquad

from magsob.bubbles import bubble_constant
from magsob.fields import (AxisRegularityError, Field2D, GridSpec, make_grid, measure_constant,
                           node_weights)
from magsob.potentials import (AharonovBohm, ElectricPotential, apply_gauge, biradial_phase,
                               gradient_potential, rotational)
from magsob.quadform import (Biradial, PositivityError, ZkSector, angular_eigenvalues,
                             check_positivity, diamagnetic_check, dirichlet_energy, discretize,
                             hardy_constant_ab, hardy_optimality_sweep, quadratic_form,
                             rayleigh_quotient, sobolev_constant_closed_form,
                             sobolev_constant_estimate)

C4 = measure_constant(4)


def bubble(grid, s=1.0):
    N = grid.spec.dimension_N
    return Field2D.from_function(grid, lambda a, b: bubble_constant(N) * s ** (-(N - 2) / 2)
                                 * (1 + (a**2 + b**2) / s**2) ** (-(N - 2) / 2))


def random_field(grid, rng, m=0):
    R1, R2 = grid.mesh()
    c = rng.normal(size=4) + 1j * rng.normal(size=4)
    s = rng.uniform(0.5, 2.0)
    f = (c[0] + c[1] * R1 + c[2] * R2 + c[3] * R1 * R2) * np.exp(-(R1**2 + R2**2) / (2 * s**2))
    return Field2D(grid, m, f * R1 if m else f)


@pytest.fixture(scope="module")
def bubble_grid():
    return make_grid(GridSpec(4, 150.0, 150.0, 400, 400, 2.0))


# the form


def test_zero_field(small_grid):
    z = Field2D(small_grid, 0, np.zeros(small_grid.shape))
    assert quadratic_form(z, rotational(1.0, 4), -0.5) == 0.0
    with pytest.raises(ValueError):
        rayleigh_quotient(z)


def test_bubble_form_is_S_squared(bubble_grid):
    S = sobolev_constant_estimate(4)
    u = bubble(bubble_grid)
    assert quadratic_form(u) == pytest.approx(S**2, rel=2e-3)
    q = rayleigh_quotient(u)
    assert q.value == pytest.approx(S, rel=2e-3)
    assert q.value == pytest.approx(q.numerator / q.denominator, rel=1e-15)
    assert q.threshold_S == pytest.approx(S, rel=1e-5)


def test_quotient_result_serializes(small_grid, rng):
    import json
    q = rayleigh_quotient(random_field(small_grid, rng), rotational(0.5, 4), -0.3)
    d = json.loads(json.dumps(q.as_dict()))
    assert d["value"] == q.value and d["numerator"] == q.numerator
    assert d["sector"]["kind"] == "Biradial" and d["sector"]["m"] == 0


def test_aharonov_bohm_term_by_term():
    # u = r1^2 exp(-|x|^2), AB flux 0.5, m = 0:
    #   Q = int |grad u|^2 + 0.25 int u^2 / r1^2, and the second term is c_4 / 128
    f = lambda a, b: a**2 * np.exp(-(a * a + b * b))
    grad2 = lambda b, a: C4 * a * b * ((2 * a - 2 * a**3) ** 2 + 4 * a**4 * b**2) * np.exp(
        -2 * (a * a + b * b))
    D = dblquad(grad2, 0, 12, 0, 12)[0]
    hardy_term = dblquad(lambda b, a: C4 * 0.25 * a * b * f(a, b) ** 2 / a**2, 0, 12, 0, 12)[0]
    assert hardy_term == pytest.approx(C4 / 128, rel=1e-8)
    g = make_grid(GridSpec(4, 8.0, 8.0, 257, 257, 1.0))
    u = Field2D.from_function(g, f)
    d0 = dirichlet_energy(u)
    dA = quadratic_form(u, AharonovBohm(0.5, 4)) - d0
    assert d0 == pytest.approx(D, rel=1e-3)
    assert dA == pytest.approx(hardy_term, rel=1e-3)


def test_scaling_invariance(small_grid, rng):
    u = random_field(small_grid, rng)
    q1 = rayleigh_quotient(u, rotational(0.5, 4), -0.3).value
    q2 = rayleigh_quotient(u.with_values(2.7 * u.values), rotational(0.5, 4), -0.3).value
    assert q2 == pytest.approx(q1, rel=1e-12)


def test_dilation_invariance():
    # exact on the scaled grid, and to quadrature tolerance on nested grids
    spec = GridSpec(4, 40.0, 40.0, 129, 129, 2.0)
    s = 2.5
    g, gs = make_grid(spec), make_grid(spec.scaled(s))
    u, us = bubble(g, 1.3), bubble(gs, 1.3 * s)
    A = rotational(0.6, 4)
    q, qs = rayleigh_quotient(u, A, -0.5).value, rayleigh_quotient(us, A, -0.5).value
    assert qs == pytest.approx(q, rel=1e-10)
    fine = make_grid(GridSpec(4, 100.0, 100.0, 257, 257, 2.0))
    q1 = rayleigh_quotient(bubble(fine, 1.0), A, -0.5).value
    q2 = rayleigh_quotient(bubble(fine, 2.0), A, -0.5).value
    assert q2 == pytest.approx(q1, rel=5e-3)


def test_axis_irregular_field_rejected(small_grid):
    u = Field2D(small_grid, 0, np.ones(small_grid.shape))
    with pytest.raises(AxisRegularityError):
        quadratic_form(u, AharonovBohm(0.5, 4))


# Sobolev oracle


def test_sobolev_oracle_stable_and_exact():
    S = sobolev_constant_estimate(4)
    S_tight = sobolev_constant_estimate(4, 1e-9)
    assert S == pytest.approx(S_tight, rel=1e-5)
    assert S_tight == pytest.approx(sobolev_constant_closed_form(4), rel=1e-8)


@pytest.mark.parametrize("N", [3, 5, 6])
def test_sobolev_oracle_other_dimensions(N):
    S = sobolev_constant_estimate(N)
    assert S > 0
    assert S == pytest.approx(sobolev_constant_closed_form(N), rel=1e-4)


def test_perturbed_bubble_is_above_S():
    g = make_grid(GridSpec(4, 150.0, 150.0, 200, 200, 2.0))
    u = bubble(g)
    R1, R2 = g.mesh()
    bump = 0.05 * np.max(u.values.real) * np.exp(-((R1 - 2) ** 2 + R2**2))
    assert rayleigh_quotient(u.with_values(u.values + bump)).value > rayleigh_quotient(u).value


# diamagnetic inequality


def test_diamagnetic_real_field_margin_is_hardy_term():
    g = make_grid(GridSpec(4, 8.0, 8.0, 129, 129, 1.0))
    u = Field2D.from_function(g, lambda a, b: a**2 * np.exp(-(a * a + b * b)))
    m = diamagnetic_check(u, AharonovBohm(0.5, 4))
    w = node_weights(g, lambda a, b: 0.25 / a**2, skip_axis=True)
    assert m == pytest.approx(float(np.sum(w * np.abs(u.values) ** 2)), rel=1e-12)
    assert m == pytest.approx(C4 / 128, rel=5e-3)


def test_diamagnetic_equality_case(small_grid, rng):
    # flux one with winding one: (m - alpha) = 0, and a profile of constant phase
    v = random_field(small_grid, rng, m=1).values
    u = Field2D(small_grid, 1, np.abs(v) * np.exp(1j * rng.uniform(0, 2 * np.pi)))
    m = diamagnetic_check(u, AharonovBohm(1.0, 4))
    assert abs(m) <= 1e-12 * dirichlet_energy(u.abs())


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(["rotational", "gradient", "ab"]))
def test_diamagnetic_property(seed, kind):
    g = make_grid(GridSpec(4, 6.0, 6.0, 24, 24, 1.5))
    r = np.random.default_rng(seed)
    A = {"rotational": rotational(r.normal(), 4), "gradient": gradient_potential(r.normal(), 4),
         "ab": AharonovBohm(r.uniform(-2, 2), 4)}[kind]
    u = random_field(g, r, m=1 if kind == "ab" else 0)
    assert diamagnetic_check(u, A) >= -1e-9


# gauge invariance


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_gauge_invariance(seed):
    g = make_grid(GridSpec(4, 6.0, 6.0, 24, 24, 1.5))
    r = np.random.default_rng(seed)
    u = random_field(g, r)
    op = discretize(g, rotational(r.normal(), 4), -0.4)
    c = r.normal(size=3)
    th = biradial_phase(g, lambda a, b: c[0] * a + c[1] * b**2 + c[2] * np.sin(a * b))
    q0 = rayleigh_quotient(u, op).value
    q1 = rayleigh_quotient(apply_gauge(u, th), op.gauge_shifted(th)).value
    assert q1 == pytest.approx(q0, rel=1e-10)


# Hardy inequality and angular spectrum


def test_angular_eigenvalues_examples():
    assert angular_eigenvalues(0.3, range(-2, 3)) == pytest.approx(
        [5.29, 1.69, 0.09, 0.49, 2.89], abs=1e-10)
    assert angular_eigenvalues(0.0, range(-3, 4)) == pytest.approx(
        [9, 4, 1, 0, 1, 4, 9], abs=1e-10)
    ev = angular_eigenvalues(0.5, range(-2, 4))
    assert ev[2] == pytest.approx(0.25, abs=1e-10) and ev[3] == pytest.approx(0.25, abs=1e-10)
    assert min(ev) == pytest.approx(0.25, abs=1e-10)
    with pytest.raises(ValueError):
        angular_eigenvalues(0.5, [])


@pytest.mark.parametrize("alpha,H", [(0.3, 0.09), (1.0, 0.0), (0.5, 0.25), (-0.2, 0.04),
                                     (2.7, 0.09)])
def test_hardy_constant_examples(alpha, H):
    assert hardy_constant_ab(alpha) == pytest.approx(H, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5, allow_nan=False))
def test_hardy_constant_is_squared_distance_to_integers(alpha):
    d = abs(alpha - round(alpha))
    assert hardy_constant_ab(alpha) == pytest.approx(d**2, abs=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.05, 0.95))
def test_hardy_inequality(seed, alpha):
    g = make_grid(GridSpec(4, 6.0, 6.0, 24, 24, 1.5))
    r = np.random.default_rng(seed)
    m = int(r.integers(-1, 3))
    u = Field2D(g, m, random_field(g, r, m=1).values)
    lhs = float(np.sum(node_weights(g, lambda a, b: 1 / a**2, skip_axis=True)
                       * np.abs(u.values) ** 2))
    H = hardy_constant_ab(alpha)
    assert H * lhs <= quadratic_form(u, AharonovBohm(alpha, 4)) * (1 + 1e-12)


def test_hardy_sweep_decreases_to_constant():
    steps = hardy_optimality_sweep(0.5, [2.0, 4.0, 8.0])
    q = [s.quotient for s in steps]
    assert q[0] > q[1] > q[2]
    assert abs(q[-1] - 0.25) <= 0.1 * 0.25
    # separated variables: the planar factor alone has the same limit
    planar = [s.quotient_planar for s in steps]
    assert np.all(np.diff(planar) < 0) and abs(planar[-1] - 0.25) <= 0.1 * 0.25
    assert all(s.quotient >= s.quotient_planar for s in steps)


def test_hardy_sweep_zero_flux():
    q = [s.quotient for s in hardy_optimality_sweep(0.0, [2.0, 4.0, 8.0, 16.0])]
    assert all(v >= 0 for v in q) and np.all(np.diff(q) < 0) and q[-1] < 0.05


def test_hardy_sweep_rejects_bad_widths():
    with pytest.raises(ValueError):
        hardy_optimality_sweep(0.5, [4.0, 2.0])
    with pytest.raises(ValueError):
        hardy_optimality_sweep(0.5, [2.0, 4.0], r_max=10.0)


# positivity and the sign of a


def test_positivity_bound_origin():
    with pytest.raises(PositivityError):
        check_positivity(None, ElectricPotential(1.0), 4)
    check_positivity(None, ElectricPotential(0.99), 4)
    check_positivity(None, ElectricPotential(-50.0), 4)
    with pytest.raises(PositivityError):
        discretize(make_grid(GridSpec(4, 5.0, 5.0, 16, 16)), None, 1.5)


def test_positivity_bound_axis():
    A = AharonovBohm(0.3, 4)
    with pytest.raises(PositivityError):
        check_positivity(A, ElectricPotential(0.09, "axis"), 4)
    check_positivity(A, ElectricPotential(0.08, "axis"), 4)
    check_positivity(A, ElectricPotential(0.45, "axis"), 4, mode_m=1)
    check_positivity(AharonovBohm(1.0, 4), ElectricPotential(0.0, "axis"), 4, mode_m=1)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.floats(-3.0, 0.95))
def test_numerator_positive_below_bound(seed, a):
    g = make_grid(GridSpec(4, 6.0, 6.0, 24, 24, 1.5))
    u = random_field(g, np.random.default_rng(seed))
    assert quadratic_form(u, None, a) > 0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.floats(-4.0, 0.0))
def test_nonpositive_a_quotient_above_S(seed, a):
    g = make_grid(GridSpec(4, 12.0, 12.0, 48, 48, 1.5))
    u = random_field(g, np.random.default_rng(seed))
    assert rayleigh_quotient(u, None, a).value >= sobolev_constant_estimate(4) * (1 - 1e-3)


def test_zk_threshold_recorded(small_grid, rng):
    q = rayleigh_quotient(random_field(small_grid, rng), sector=ZkSector(2, 0))
    assert q.threshold_kS == pytest.approx(2**0.5 * sobolev_constant_estimate(4), rel=1e-5)
    assert rayleigh_quotient(random_field(small_grid, rng)).sector == Biradial(0)
