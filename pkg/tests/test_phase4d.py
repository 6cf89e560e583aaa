import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial.hermite_e import hermegauss

from gaborquant.phase4d import Field4, Probe4, portrait_field, quantize_field, sphere_average

SIGMA = [0.3, 0.5, 0.5, 0.5]
POINTS = np.array([[0.2, 1.0, -0.4, 0.7], [0.0, 0.3, 0.3, 0.1], [1.5, -2.0, 0.8, -1.1]])


def hermite_smooth(u, x, std, order=12):
    """Oracle: ``E[u(x + Z)]`` with ``Z_μ ~ N(0, std_μ²)`` by tensor Gauss-Hermite."""
    nodes, weights = hermegauss(order)
    weights = weights / weights.sum()
    total = np.zeros(len(x))
    for idx in itertools.product(range(order), repeat=4):
        shift = np.array([nodes[i] * s for i, s in zip(idx, std)])
        total += np.prod(weights[list(idx)]) * u(x + shift)
    return total


def gaussian_std(sigma, portrait):
    # |ψ|² has variance σ²/2; its autocorrelation has variance σ²
    s = np.asarray(sigma, dtype=float)
    return s if portrait else s / math.sqrt(2)


FIELDS = {
    "one": Field4.constant(1.0),
    "rho2": Field4.cylindrical_radius_squared(),
    "r2": Field4.radius_squared(),
    "x1sq": Field4.coordinate(1, 2, 4.0),
    "x2": Field4.coordinate(2),
    "mixed": Field4.polynomial({(1, 1, 0, 0): 1.0, (0, 0, 1, 1): -2.0, (2, 0, 0, 0): 0.5}),
}


class TestSphereAverage:
    def test_known_values(self):
        assert sphere_average(0, 0, 0) == 1
        assert sphere_average(2, 0, 0) == pytest.approx(1 / 3)
        assert sphere_average(4, 0, 0) == pytest.approx(1 / 5)
        assert sphere_average(2, 2, 0) == pytest.approx(1 / 15)
        assert sphere_average(1, 0, 0) == 0

    def test_against_monte_carlo_free_quadrature(self):
        # ⟨n₁² n₂² n₃²⟩ on the sphere by θ, φ quadrature
        th = np.linspace(0, math.pi, 801)
        ph = np.linspace(0, 2 * math.pi, 801)
        T, P = np.meshgrid(th, ph, indexing="ij")
        n1, n2, n3 = np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)
        f = n1 ** 2 * n2 ** 2 * n3 ** 2 * np.sin(T)
        val = np.trapezoid(np.trapezoid(f, ph, axis=1), th) / (4 * math.pi)
        assert sphere_average(2, 2, 2) == pytest.approx(val, abs=1e-6)


class TestProbe4:
    def test_gaussian_normalized(self):
        assert Probe4.separable_gaussian(SIGMA).norm_by_quadrature() == pytest.approx(1, abs=1e-8)

    def test_isotropic_normalized(self):
        p = Probe4.isotropic(lambda t, r: np.exp(-t * t - r * r / 0.5), 6, 6)
        assert p.norm_by_quadrature() == pytest.approx(1, abs=1e-8)

    def test_isotropic_moments(self):
        # exp(-t² - r²/0.5) is Gaussian with spatial variance 0.25 and time variance 0.5
        p = Probe4.isotropic(lambda t, r: np.exp(-t * t - r * r / 0.5), 6, 6)
        assert p.moment((0, 2, 0, 0)) == pytest.approx(0.25, abs=1e-8)
        assert p.moment((2, 0, 0, 0)) == pytest.approx(0.5, abs=1e-8)
        assert p.moment((0, 2, 2, 0)) == pytest.approx(0.0625, abs=1e-8)

    def test_sampled_isotropic(self):
        t = np.linspace(-6, 6, 121)
        r = np.linspace(0, 6, 121)
        T, R = np.meshgrid(t, r, indexing="ij")
        p = Probe4.sampled_isotropic(t, r, np.exp(-T * T - R * R / 0.5))
        assert p.norm_by_quadrature() == pytest.approx(1, abs=1e-6)
        assert p.moment((0, 2, 0, 0)) == pytest.approx(0.25, abs=1e-5)

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            Probe4.separable_gaussian([1, 1, 0, 1])


class TestQuantizeAndPortrait:
    @pytest.mark.parametrize("name", list(FIELDS))
    @pytest.mark.parametrize("portrait", [False, True])
    def test_closed_form_against_hermite_oracle(self, name, portrait):
        u = FIELDS[name]
        probe = Probe4.separable_gaussian(SIGMA)
        op = portrait_field if portrait else quantize_field
        ref = hermite_smooth(u, POINTS, gaussian_std(SIGMA, portrait))
        assert np.max(np.abs(op(u, probe)(POINTS) - ref)) < 1e-10

    @pytest.mark.parametrize("name", ["one", "rho2", "r2", "x1sq", "x2"])
    @pytest.mark.parametrize("portrait", [False, True])
    def test_quadrature_path(self, name, portrait):
        u = FIELDS[name]
        probe = Probe4.separable_gaussian(SIGMA)
        op = portrait_field if portrait else quantize_field
        closed = op(u, probe)(POINTS)
        numeric = op(u, probe, method="quadrature")(POINTS)
        assert np.max(np.abs(closed - numeric)) < 1e-4

    def test_named_closed_forms(self):
        s = 0.5
        probe = Probe4.separable_gaussian([s] * 4)
        x = POINTS
        rho2 = x[:, 1] ** 2 + x[:, 2] ** 2
        r2 = rho2 + x[:, 3] ** 2
        assert np.allclose(quantize_field(FIELDS["rho2"], probe)(x), rho2 + s ** 2)
        assert np.allclose(quantize_field(FIELDS["r2"], probe)(x), r2 + 1.5 * s ** 2)
        assert np.allclose(portrait_field(FIELDS["rho2"], probe)(x), rho2 + 2 * s ** 2)
        assert np.allclose(portrait_field(FIELDS["r2"], probe)(x), r2 + 3 * s ** 2)
        alpha = 1.7
        acc = Field4.coordinate(1, 2, alpha ** 2)
        assert np.allclose(portrait_field(acc, probe)(x), alpha ** 2 * (x[:, 1] ** 2 + s ** 2))
        assert np.allclose(portrait_field(FIELDS["x2"], probe)(x), x[:, 2])

    def test_general_field_quadrature(self):
        s1 = 0.6
        probe = Probe4.separable_gaussian([0.4, s1, 0.5, 0.5])
        u = Field4.general(lambda x: np.cos(x[..., 1]))
        x = POINTS
        assert np.allclose(quantize_field(u, probe)(x), np.cos(x[:, 1]) * math.exp(-s1 ** 2 / 4),
                           atol=1e-9)
        assert np.allclose(portrait_field(u, probe)(x), np.cos(x[:, 1]) * math.exp(-s1 ** 2 / 2),
                           atol=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(0.1, 2.0), min_size=4, max_size=4),
           st.dictionaries(st.tuples(*[st.integers(0, 2)] * 4).filter(lambda a: sum(a) <= 3),
                           st.floats(-3, 3), min_size=1, max_size=4))
    def test_portrait_is_double_quantization(self, sigma, coeffs):
        probe = Probe4.separable_gaussian(sigma)
        u = Field4.polynomial(coeffs)
        twice = quantize_field(quantize_field(u, probe), probe)
        once = portrait_field(u, probe)
        assert np.allclose(twice(POINTS), once(POINTS), atol=1e-10)

    def test_isotropic_two_thirds_identity(self):
        p = Probe4.isotropic(lambda t, r: np.exp(-t * t - r * r / 0.5), 6, 6)
        r2 = 3 * p.moment((0, 2, 0, 0))
        q = quantize_field(Field4.cylindrical_radius_squared(), p)
        x = POINTS
        expected = x[:, 1] ** 2 + x[:, 2] ** 2 + 2 / 3 * r2
        assert np.allclose(q(x), expected, atol=1e-8)
        assert np.allclose(quantize_field(Field4.cylindrical_radius_squared(), p,
                                          method="quadrature")(x), expected, atol=1e-6)

    def test_isotropic_general_portrait_unsupported(self):
        p = Probe4.isotropic(lambda t, r: np.exp(-t * t - r * r), 6, 6)
        with pytest.raises(NotImplementedError):
            portrait_field(Field4.general(lambda x: np.cos(x[..., 1])), p)
