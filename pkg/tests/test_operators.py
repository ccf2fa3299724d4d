"""Matrix-free Hamiltonian application, weight-operator powers, and norms."""

import numpy as np
import pytest

from polyschro import (
    CutoffSpec,
    HamiltonianHandle,
    NormOrder,
    PotentialFamily,
    WaveFunction,
    apply_hamiltonian,
    apply_lambdaM_power,
    apply_mollified,
    apply_rho_derivative,
    gaussian_packet,
    get_family,
    l2_inner_product,
    make_grid,
    weighted_norm,
)
from polyschro.operators import resolve_mu_prime

from conftest import band_limited_state


@pytest.fixture(scope="module")
def quartic_handle():
    g = make_grid(1, 10.0, 256)
    return HamiltonianHandle(get_family("confined_quartic"), g)


def random_pair(grid, rng):
    f = WaveFunction(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
    g = WaveFunction(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
    return f, g


def test_free_hamiltonian_plane_wave_eigenvalue():
    fam = PotentialFamily(name="free", v="0", a=("0",), growth_order=0, delta=1.0, mass=2.0)
    g = make_grid(1, 8.0, 64)
    handle = HamiltonianHandle(fam, g)
    kappa = g.dual_axis[9]
    f = WaveFunction(g, np.exp(1j * kappa * g.axis))
    out = apply_hamiltonian(handle, 0.0, f)
    np.testing.assert_allclose(out.values, kappa**2 / (2 * fam.mass) * f.values, atol=1e-12)


def test_harmonic_ground_state_eigenvalue(ground_state_512):
    g, f = ground_state_512
    handle = HamiltonianHandle(get_family("harmonic"), g)
    out = apply_hamiltonian(handle, 0.0, f)
    assert np.max(np.abs(out.values - 0.5 * f.values)) <= 1e-8


def test_hamiltonian_hermitian(quartic_handle, rng):
    g = quartic_handle.grid
    for t in (0.0, 0.7):
        f, h = random_pair(g, rng)
        lhs = l2_inner_product(apply_hamiltonian(quartic_handle, t, f), h)
        rhs = l2_inner_product(f, apply_hamiltonian(quartic_handle, t, h))
        assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


def test_hamiltonian_linear(quartic_handle, rng):
    g = quartic_handle.grid
    f, h = random_pair(g, rng)
    combo = f.with_values(2.0 * f.values - 1.5j * h.values)
    lhs = apply_hamiltonian(quartic_handle, 0.3, combo)
    rhs = (2.0 * apply_hamiltonian(quartic_handle, 0.3, f).values
           - 1.5j * apply_hamiltonian(quartic_handle, 0.3, h).values)
    np.testing.assert_allclose(lhs.values, rhs, atol=1e-12 * np.max(np.abs(rhs)))


def test_zero_gauge_reduces_to_kinetic_plus_potential(rng):
    g = make_grid(1, 8.0, 64)
    handle = HamiltonianHandle(get_family("harmonic"), g)
    f = band_limited_state(g, rng)
    out = apply_hamiltonian(handle, 0.0, f)
    kinetic = g.ifft(g.dual_radius_sq / 2.0 * g.fft(f.values))
    want = kinetic + g.axis**2 / 2 * f.values
    np.testing.assert_allclose(out.values, want, atol=1e-13)


def test_gauge_translation_consistency(rng):
    """A constant gauge shift acts as the discrete translation e^{icx}."""
    g = make_grid(1, 10.0, 256)
    c = 4 * g.dxi
    gauged = PotentialFamily(name="shifted_gauge", v="x^2/2", a=(f"{c!r}",), growth_order=0, delta=0.5)
    plain = get_family("harmonic")
    f = band_limited_state(g, rng)
    phase = np.exp(1j * c * g.axis)
    lhs = apply_hamiltonian(HamiltonianHandle(gauged, g), 0.0, f.with_values(phase * f.values))
    rhs = phase * apply_hamiltonian(HamiltonianHandle(plain, g), 0.0, f).values
    assert np.max(np.abs(lhs.values - rhs)) <= 1e-8


def test_mollified_matches_plain_for_tiny_eps(quartic_handle, rng):
    g = quartic_handle.grid
    f = gaussian_packet(g, center=0.5, width=1.0)
    spec = CutoffSpec(eps=1e-5, mu=0.0)
    plain = apply_hamiltonian(quartic_handle, 0.0, f)
    moll = apply_mollified(quartic_handle, spec, 0.0, f)
    assert WaveFunction(g, moll.values - plain.values).norm() <= 1e-2 * plain.norm()


def test_mollified_hermitian(quartic_handle, rng):
    g = quartic_handle.grid
    spec = CutoffSpec(eps=0.5, mu=1.0)
    f, h = random_pair(g, rng)
    lhs = l2_inner_product(apply_mollified(quartic_handle, spec, 0.2, f), h)
    rhs = l2_inner_product(f, apply_mollified(quartic_handle, spec, 0.2, h))
    assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


def test_mollified_unit_profile_recovers_hamiltonian(quartic_handle, rng):
    g = quartic_handle.grid
    spec = CutoffSpec(eps=1.0, mu=0.0, profile="one")
    f = band_limited_state(g, rng)
    plain = apply_hamiltonian(quartic_handle, 0.4, f)
    moll = apply_mollified(quartic_handle, spec, 0.4, f)
    np.testing.assert_allclose(moll.values, plain.values, atol=1e-10 * np.max(np.abs(plain.values)))


def test_lambda_power_zero_is_identity(rng):
    g = make_grid(1, 8.0, 64)
    order = NormOrder(a=0, growth_order=1)
    f, _ = random_pair(g, rng)
    out = apply_lambdaM_power(order, f)
    np.testing.assert_array_equal(out.values, f.values)


def test_lambda_power_round_trip(rng):
    g = make_grid(1, 8.0, 64)
    f = band_limited_state(g, rng)
    up = apply_lambdaM_power(NormOrder(a=1, growth_order=1), f)
    back = apply_lambdaM_power(NormOrder(a=-1, growth_order=1), up)
    assert np.max(np.abs(back.values - f.values)) <= 1e-8


def test_lambda_inverse_on_constructed_rhs(rng):
    g = make_grid(1, 8.0, 64)
    target = band_limited_state(g, rng)
    rhs = apply_lambdaM_power(NormOrder(a=1, growth_order=0), target)
    recovered = apply_lambdaM_power(NormOrder(a=-1, growth_order=0), rhs)
    assert np.max(np.abs(recovered.values - target.values)) <= 1e-8


def test_lambda_positive_definite(rng):
    g = make_grid(1, 8.0, 64)
    order = NormOrder(a=1, growth_order=1)
    mu_p = resolve_mu_prime(order, g)
    assert mu_p > 0.0
    for _ in range(5):
        f, _ = random_pair(g, rng)
        lam = apply_lambdaM_power(order, f)
        quad = l2_inner_product(lam, f).real
        assert quad >= mu_p * f.norm() ** 2 - 1e-10


def test_norm_order_validation():
    with pytest.raises(ValueError):
        NormOrder(a=4, growth_order=0)
    with pytest.raises(ValueError):
        NormOrder(a=1, growth_order=-1)
    with pytest.raises(ValueError):
        NormOrder(a=1, growth_order=0, mass=0.0)


def test_weighted_norm_zero_order_is_l2():
    g = make_grid(1, 10.0, 512)
    f = gaussian_packet(g, width=1.0)
    assert weighted_norm(NormOrder(a=0, growth_order=0), f) == pytest.approx(1.0, abs=1e-10)


def test_weighted_norm_gaussian_quadrature_oracle(ground_state_512):
    """Closed-form moments of the unit Gaussian fix every term of the sum."""
    g, f = ground_state_512
    # ||f|| = 1, ||f'|| = sqrt(1/2), ||f''|| = sqrt(3)/2, ||<x>^2 f|| = sqrt(11)/2
    oracle = 1.0 + np.sqrt(0.5) + np.sqrt(3.0) / 2.0 + np.sqrt(11.0) / 2.0
    val = weighted_norm(NormOrder(a=1, growth_order=0), f)
    assert val == pytest.approx(oracle, abs=1e-6)


def test_weighted_norm_nesting(rng):
    g = make_grid(1, 8.0, 64)
    f = band_limited_state(g, rng)
    norms = [weighted_norm(NormOrder(a=a, growth_order=1), f) for a in (0, 1, 2)]
    assert norms[0] <= norms[1] <= norms[2]


def test_negative_order_norm_uses_inverse(rng):
    g = make_grid(1, 8.0, 64)
    f = band_limited_state(g, rng)
    direct = apply_lambdaM_power(NormOrder(a=-1, growth_order=1), f).norm()
    assert weighted_norm(NormOrder(a=-1, growth_order=1), f) == pytest.approx(direct, rel=1e-8)


def test_norm_equivalence_band(rng):
    """||Lambda^a f|| and ||f||_a agree up to fixed constants on smooth states."""
    g = make_grid(1, 10.0, 256)
    handle = HamiltonianHandle(get_family("confined_quartic"), g)
    for a in (1, 2):
        order = handle.norm_order(a)
        ratios = []
        for _ in range(6):
            f = band_limited_state(g, rng)
            ratios.append(apply_lambdaM_power(order, f).norm() / weighted_norm(order, f))
        assert min(ratios) >= 0.5
        assert max(ratios) <= 2.0


def test_rho_derivative_is_closed_form(rng):
    g = make_grid(1, 8.0, 64)
    fam = get_family("parametric_quartic")
    handle = HamiltonianHandle(fam, g, rho=1.0)
    f = band_limited_state(g, rng)
    out = apply_rho_derivative(handle, 0.0, f)
    np.testing.assert_allclose(out.values, g.axis**4 / 4 * f.values, atol=1e-13)


def test_rho_derivative_hermitian(rng):
    g = make_grid(1, 8.0, 64)
    handle = HamiltonianHandle(get_family("parametric_quartic"), g, rho=1.0)
    f, h = random_pair(g, rng)
    lhs = l2_inner_product(apply_rho_derivative(handle, 0.0, f), h)
    rhs = l2_inner_product(f, apply_rho_derivative(handle, 0.0, h))
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1e-30)


def test_handle_rejects_rho_outside_interval():
    g = make_grid(1, 8.0, 64)
    with pytest.raises(Exception):
        HamiltonianHandle(get_family("parametric_quartic"), g, rho=100.0)
