import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magsob.fields import Field2D, GridSpec, lp_norm, make_grid
from magsob.potentials import (AharonovBohm, AnnulusRegion, ElectricPotential, GaugePhase,
                               PathDependentError, RadialProfile, SectorRegion, VectorField,
                               apply_gauge, biradial_phase, curl_norm, flux, free_quotient,
                               gradient_potential, hardy_bound, make_potential,
                               reconstruct_gauge, rotational, translated_quotient,
                               zero_potential)


def rigid_rotation(N):
    def f(x):
        out = np.zeros_like(x)
        out[..., 0], out[..., 1] = -x[..., 1], x[..., 0]
        return out
    return VectorField(f, N, "rigid")


def grad_field(N):
    # gradient of Theta(x) = sin(x1) x2 + x3^2 / 2
    def f(x):
        out = np.zeros_like(x)
        out[..., 0] = np.cos(x[..., 0]) * x[..., 1]
        out[..., 1] = np.sin(x[..., 0])
        out[..., 2] = x[..., 2]
        return out
    return VectorField(f, N, "grad")


# flux


def test_flux_examples():
    assert flux(AharonovBohm(0.3, 4)) == pytest.approx(0.3, abs=1e-14)
    assert flux(AharonovBohm(0.0, 4)) == 0.0
    assert flux(gradient_potential(1.3, 4)) == pytest.approx(0.0, abs=1e-13)
    assert flux(zero_potential(4)) == 0.0


def test_flux_of_rigid_rotation():
    # circulation of (-x2, x1) around the unit circle is 2 pi
    assert flux(rigid_rotation(4)) == pytest.approx(1.0, rel=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3, allow_nan=False), st.floats(-3, 3, allow_nan=False))
def test_flux_additive(a1, a2):
    A1, A2 = AharonovBohm(a1, 4), AharonovBohm(a2, 4)
    total = flux(lambda x: A1.field(x) + A2.field(x), 4)
    assert total == pytest.approx(a1 + a2, abs=1e-12)


def test_flux_rejects_nonfinite():
    with pytest.raises(ValueError):
        AharonovBohm(float("nan"), 4)


# curl


def test_curl_of_gradient_vanishes():
    reg = AnnulusRegion(0.5, 1.5)
    assert curl_norm(grad_field(4), reg) < 1e-6
    assert curl_norm(gradient_potential(1.0, 4), reg) < 1e-6


def test_curl_of_aharonov_bohm_vanishes_off_axis():
    assert curl_norm(AharonovBohm(0.7, 4), AnnulusRegion(0.5, 2.0)) < 1e-6


def test_curl_of_rigid_rotation():
    # |curl| = 2 everywhere, so the L^N norm is 2 vol^(1/N); the midpoint
    # rule integrates r dr exactly, so vol = pi (ro^2 - ri^2) (2 h)^(N-2)
    for N in (3, 4):
        reg = AnnulusRegion(0.5, 1.5, half_height=0.75)
        vol = np.pi * (1.5**2 - 0.5**2) * 1.5 ** (N - 2)
        assert curl_norm(rigid_rotation(N), reg) == pytest.approx(2 * vol ** (1 / N), rel=1e-8)


def test_curl_of_gradient_converges_second_order():
    # Theta with mixed third derivatives, so the central differences do not cancel
    def f(x):
        out = np.zeros_like(x)
        out[..., 0] = 3 * x[..., 0] ** 2 * x[..., 1] ** 2 + np.cos(x[..., 0]) * x[..., 1] ** 3
        out[..., 1] = 2 * x[..., 0] ** 3 * x[..., 1] + 3 * np.sin(x[..., 0]) * x[..., 1] ** 2
        return out
    A = VectorField(f, 3, "theta")
    reg = AnnulusRegion(0.5, 1.5)
    c1, c2 = curl_norm(A, reg, step=1e-2), curl_norm(A, reg, step=5e-3)
    assert c1 < 1e-2 and 3.5 < c1 / c2 < 4.5


def test_curl_rejects_singular_region():
    with pytest.raises(ValueError):
        curl_norm(AharonovBohm(0.5, 4), AnnulusRegion(0.0, 1.0))


# gauges


def test_reconstruct_zero_potential():
    th = reconstruct_gauge(zero_potential(4), SectorRegion(0.5, 2.0))
    assert np.all(th.values == 0)


def test_reconstruct_aharonov_bohm_on_sector_is_the_angle():
    reg = SectorRegion(0.5, 2.0, 0.2, 2.5)
    th = reconstruct_gauge(AharonovBohm(1.0, 4), reg)
    expected = th.theta[None, :] - reg.theta0
    assert np.max(np.abs(th.values - expected)) < 1e-10


def test_reconstruct_full_annulus_detects_holonomy():
    with pytest.raises(PathDependentError) as exc:
        reconstruct_gauge(AharonovBohm(0.5, 4), SectorRegion(0.5, 2.0, 0.0, 2 * np.pi))
    # integrating around the loop picks up 2 pi alpha
    assert abs(exc.value.holonomy) == pytest.approx(np.pi, rel=1e-8)


def test_reconstruct_full_annulus_integer_flux_is_exact():
    # flux one has holonomy 2 pi: a full turn of the primitive, still path dependent
    with pytest.raises(PathDependentError):
        reconstruct_gauge(AharonovBohm(1.0, 4), SectorRegion(0.5, 2.0, 0.0, 2 * np.pi))
    th = reconstruct_gauge(gradient_potential(0.8, 4), SectorRegion(0.5, 2.0, 0.0, 2 * np.pi))
    assert np.all(np.isfinite(th.values))


def test_reconstruct_roundtrip_up_to_constant():
    # gradient_potential(c) = grad(c x1 / |x|); in the plane Theta = c cos(theta)
    c = 0.8
    reg = SectorRegion(0.5, 2.0, -1.0, 1.5)
    th = reconstruct_gauge(gradient_potential(c, 4), reg)
    diff = th.values - c * np.cos(th.theta)[None, :]
    assert np.ptp(diff) < 1e-10


def test_apply_gauge_identity_and_modulus(small_grid, rng):
    R1, R2 = small_grid.mesh()
    u = Field2D(small_grid, 0, np.exp(-R1 - R2) * (1 + 1j * R1))
    zero = GaugePhase(np.zeros(small_grid.shape))
    assert np.array_equal(apply_gauge(u, zero).values, u.values)
    th = GaugePhase(rng.normal(size=small_grid.shape) * 10)
    v = apply_gauge(u, th)
    assert np.allclose(np.abs(v.values), np.abs(u.values), rtol=1e-15, atol=0)


def test_apply_gauge_shape_mismatch(small_grid):
    u = Field2D(small_grid, 0, np.ones(small_grid.shape))
    with pytest.raises(ValueError):
        apply_gauge(u, GaugePhase(np.zeros((3, 3))))
    with pytest.raises(ValueError):
        apply_gauge(np.ones(4), GaugePhase(np.zeros(5)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([2.0, 4.0]))
def test_apply_gauge_is_lp_isometry(seed, p):
    g = make_grid(GridSpec(4, 5.0, 5.0, 16, 16, 1.5))
    r = np.random.default_rng(seed)
    R1, R2 = g.mesh()
    u = Field2D(g, 0, (r.normal() + 1j * r.normal()) * np.exp(-R1**2 - R2))
    c = r.normal(size=2)
    th = biradial_phase(g, lambda a, b: c[0] * a**2 + c[1] * np.sin(b))
    assert lp_norm(apply_gauge(u, th), p) == pytest.approx(lp_norm(u, p), rel=1e-13)


def test_gauge_phase_must_be_finite():
    with pytest.raises(ValueError):
        GaugePhase(np.array([0.0, np.nan]))


# translated bumps


def test_translated_quotient_zero_offset_is_free_quotient():
    prof = RadialProfile(1.0, 4)
    q = translated_quotient(prof, [0.0], None, None, dimension_N=4)
    assert q[0] == pytest.approx(free_quotient(prof, 4), rel=1e-12)


def test_translated_quotient_free_is_translation_invariant():
    prof = RadialProfile(1.0, 4)
    q = translated_quotient(prof, [0.0, 5.0, 10.0, 20.0], None, None, dimension_N=4)
    assert np.ptp(q) <= 1e-12 * q[0]


def test_translated_quotient_gap_rate():
    prof = RadialProfile(1.0, 4)
    q = translated_quotient(prof, [5.0, 10.0, 20.0, 40.0], rotational(1.0, 4), None)
    gaps = np.asarray(q) - free_quotient(prof, 4)
    assert np.all(gaps > 0)
    assert np.all(np.abs(gaps[:-1] / gaps[1:] - 4) < 0.1)


def test_translated_quotient_rejects_escape():
    with pytest.raises(ValueError):
        translated_quotient(RadialProfile(1.0, 4), [5.0], None, None, dimension_N=4,
                            domain_radius=5.5)
    with pytest.raises(ValueError):
        translated_quotient(RadialProfile(1.0, 4), [0.5], AharonovBohm(0.5, 4), None)


# electric potentials and presets


def test_electric_potential_forms():
    x = np.array([[3.0, 4.0, 12.0, 0.0]])
    assert ElectricPotential(2.0).coefficient(x)[0] == pytest.approx(2.0 / 169)
    assert ElectricPotential(2.0, "axis").coefficient(x)[0] == pytest.approx(2.0 / 25)
    with pytest.raises(ValueError):
        ElectricPotential(1.0, "plane")
    assert hardy_bound(4) == 1.0 and hardy_bound(5) == 2.25


def test_aharonov_bohm_closed_form():
    A = AharonovBohm(0.4, 4)
    x = np.array([[1.0, 2.0, 0.3, -0.7]])
    assert np.allclose(A(x), [[-0.4 * 2 / 5, 0.4 * 1 / 5, 0.0, 0.0]], rtol=1e-15)
    with pytest.raises(ValueError):
        A(np.array([[0.0, 0.0, 1.0, 0.0]]))


def test_make_potential_presets():
    assert isinstance(make_potential({"type": "aharonov_bohm", "flux_alpha": 0.3}, 4),
                      AharonovBohm)
    assert make_potential({"type": "rotational", "b": 2.0}, 4).params["b"] == 2.0
    assert make_potential(None, 4).name == "zero"
    with pytest.raises(ValueError):
        make_potential({"type": "nonsense"}, 4)


def test_rotational_cylindrical_matches_field():
    A = rotational(0.7, 4)
    r1, t, rho = 1.3, 0.4, 0.9
    ar, at, az = A.cylindrical(r1, t, rho)
    x = np.array([r1 * np.cos(t), r1 * np.sin(t), rho, 0.0])
    a = A(x)
    assert at == pytest.approx(a[0] * -np.sin(t) + a[1] * np.cos(t), rel=1e-13)
    assert abs(ar) < 1e-15 and abs(az) < 1e-15


def test_homogeneous_profile_must_be_bounded():
    from magsob.potentials import HomogeneousAngular
    with pytest.raises(ValueError):
        HomogeneousAngular(lambda t: np.full_like(t, np.inf), 4)
