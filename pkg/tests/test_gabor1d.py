import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaborquant.gabor1d import (GridResolutionWarning, OperatorKernel, PhaseSpaceFunction,
                                PhaseSpacePoint, Probe, apply, autocorrelation, gabor_reconstruct,
                                gabor_transform, gaussian, gaussian_moment, overlap,
                                plancherel_defect, portrait, quantize)
from gaborquant.numerics import Grid1D, SampledFunction, integrate

SIGMAS = [0.5, 1.0, 2.0]


def skewed_probe():
    g = Grid1D.from_range(-10, 10, 801)
    return Probe.sampled(SampledFunction.from_callable(
        lambda t: np.exp(-t ** 2 / 2) * (1 + 0.3 * t), g))


def brute_overlap(psi, p, q):
    """``∫ conj(ψ_p) ψ_q`` by adaptive quadrature on the raw definition."""
    def f(t):
        a = np.exp(1j * p[1] * t) * psi(t - p[0])
        b = np.exp(1j * q[1] * t) * psi(t - q[0])
        return np.conj(a) * b
    lo, hi = psi.support
    return integrate(f, lo + min(p[0], q[0]), hi + max(p[0], q[0]), tol=1e-13).value


class TestProbe:
    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_gaussian_normalized(self, sigma):
        assert Probe.gaussian(sigma).norm_by_quadrature() == pytest.approx(1, abs=1e-12)

    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_gaussian_variances(self, sigma):
        psi = Probe.gaussian(sigma)
        assert psi.var_time == pytest.approx(sigma ** 2 / 2, rel=1e-12)
        assert psi.var_freq == pytest.approx(1 / (2 * sigma ** 2), rel=1e-12)
        assert psi.mean_time == 0 and psi.mean_freq == 0

    def test_fourier_is_unitary(self):
        psi = Probe.gaussian(0.7)
        r = integrate(lambda w: np.abs(psi.fourier(w)) ** 2, -60, 60, tol=1e-13)
        assert r.value == pytest.approx(1, abs=1e-12)

    @pytest.mark.parametrize("w", [-1.5, 0.0, 0.4, 2.0])
    def test_fourier_against_definition(self, w):
        # sampled probes transform their samples, the reference integrates the interpolant
        for psi, tol in ((Probe.gaussian(0.7), 1e-12), (skewed_probe(), 5e-9)):
            ref = integrate(lambda t: psi(t) * np.exp(-1j * w * t), -12, 12, tol=1e-13).value
            assert psi.fourier(w) == pytest.approx(ref / math.sqrt(2 * math.pi), abs=tol)

    def test_sampled_probe_moments(self):
        psi = skewed_probe()
        assert psi.norm_by_quadrature() == pytest.approx(1, abs=1e-8)
        dens = lambda t: np.abs(psi(t)) ** 2
        mean = integrate(lambda t: t * dens(t), -10, 10, tol=1e-12).value
        var = integrate(lambda t: (t - mean) ** 2 * dens(t), -10, 10, tol=1e-12).value
        assert psi.mean_time == pytest.approx(mean, abs=1e-8)
        assert psi.var_time == pytest.approx(var, abs=1e-8)
        assert not psi.is_even()

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            Probe.gaussian(0.0)

    def test_gaussian_moment(self):
        assert gaussian_moment(4, 2.0) == pytest.approx(3 * 4.0)
        assert gaussian_moment(3, 2.0) == 0


class TestPhaseSpaceFunction:
    def test_declared_kinds(self):
        assert PhaseSpaceFunction.monomial(2, 0).kind == "time"
        assert PhaseSpaceFunction.monomial(0, 2).kind == "frequency"
        assert PhaseSpaceFunction.monomial(1, 1).kind == "separable"
        assert PhaseSpaceFunction.polynomial({(1, 1): 1.0, (2, 0): 1.0}).kind == "general"
        assert PhaseSpaceFunction.time_only(np.cos).check_declared()

    def test_mislabelled_symbol_detected(self):
        f = PhaseSpaceFunction.time_only(lambda b: np.cos(b))
        lying = PhaseSpaceFunction(lambda b, w: np.cos(b) + w, "time", u=np.cos)
        assert f.check_declared()
        assert not lying.check_declared()

    def test_shift(self):
        f = PhaseSpaceFunction.monomial(2, 0).shifted(1.0, 0.0)
        assert f(3.0, 5.0) == pytest.approx(4.0)


class TestQuantize:
    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_b2_multiplier(self, sigma):
        k = quantize(PhaseSpaceFunction.monomial(2, 0), Probe.gaussian(sigma))
        t = np.linspace(-3, 3, 13)
        assert k.kind == "multiplier"
        assert np.allclose(k.multiplier(t), t ** 2 + sigma ** 2 / 2, atol=1e-12)

    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_b2_multiplier_quadrature(self, sigma):
        k = quantize(PhaseSpaceFunction.monomial(2, 0), Probe.gaussian(sigma), method="quadrature")
        t = np.linspace(-3, 3, 13)
        assert np.allclose(k.multiplier(t), t ** 2 + sigma ** 2 / 2, atol=1e-8)

    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_w2_convolver(self, sigma):
        k = quantize(PhaseSpaceFunction.monomial(0, 2), Probe.gaussian(sigma))
        assert k.kind == "convolver"
        w = np.linspace(-3, 3, 7)
        assert np.allclose(k.spectral(w), w ** 2 + 1 / (2 * sigma ** 2), atol=1e-12)

    def test_constant_is_identity(self):
        k = quantize(PhaseSpaceFunction.constant(), Probe.gaussian(1.0))
        assert np.allclose(k.multiplier(np.linspace(-2, 2, 5)), 1.0)

    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_cosine_multiplier(self, sigma):
        # E[cos(t - Y)] with Y ~ N(0, σ²/2)
        k = quantize(PhaseSpaceFunction.time_only(np.cos), Probe.gaussian(sigma))
        t = np.linspace(-3, 3, 13)
        assert np.allclose(k.multiplier(t), np.exp(-sigma ** 2 / 4) * np.cos(t), atol=1e-10)

    def test_gaussian_frequency_symbol(self):
        sigma = 1.3
        k = quantize(PhaseSpaceFunction.frequency_only(lambda w: np.exp(-w ** 2), extent=12),
                     Probe.gaussian(sigma))
        grid = Grid1D.from_range(-8, 8, 128)
        s = 1 + 1 / sigma ** 2
        # kernel c(y) is the inverse transform of (1+1/σ²)^{-1/2} exp(-ω²/(1+1/σ²))
        y = grid.points
        expected = np.exp(-s * y ** 2 / 4) / (2 * math.sqrt(math.pi))
        assert np.allclose(np.real(k.convolver(y)), expected, atol=1e-10)

    def test_multiplier_matches_dense(self):
        psi = Probe.gaussian(1.0)
        g = Grid1D.from_range(-8, 8, 256)
        md = quantize(PhaseSpaceFunction.time_only(np.cos), psi).to_dense(g)
        dd = quantize(PhaseSpaceFunction.general(lambda b, w: np.cos(b) + 0 * w), psi, grid=g)
        assert np.max(np.abs(md - dd.matrix)) * g.step < 1e-9

    def test_convolver_matches_dense(self):
        psi = Probe.gaussian(1.0)
        g = Grid1D.from_range(-8, 8, 256)
        f = PhaseSpaceFunction.frequency_only(lambda w: np.exp(-w ** 2), extent=12)
        cd = quantize(f, psi).to_dense(g)
        dd = quantize(PhaseSpaceFunction.general(lambda b, w: np.exp(-w ** 2) + 0 * b), psi,
                      grid=g)
        assert np.max(np.abs(cd - dd.matrix)) < 1e-9

    def test_canonical_commutator(self):
        psi = Probe.gaussian(1.0)
        g = Grid1D.from_range(-8, 8, 256)
        kb = quantize(PhaseSpaceFunction.general(lambda b, w: b + 0 * w), psi, grid=g)
        kw = quantize(PhaseSpaceFunction.general(lambda b, w: w + 0 * b), psi, grid=g)
        s = SampledFunction.from_callable(lambda t: np.exp(-t ** 2 / 2) * np.cos(t), g)
        c = apply(kb, apply(kw, s)).values - apply(kw, apply(kb, s)).values
        assert np.max(np.abs(c[64:-64] - 1j * s.values[64:-64])) < 1e-9

    def test_frequency_monomial_on_plane_wave(self):
        psi = Probe.gaussian(1.0)
        g = Grid1D.from_range(-20, 20, 4001)
        wave = SampledFunction.from_callable(lambda t: np.exp(2j * t), g)
        out = apply(quantize(PhaseSpaceFunction.monomial(0, 1), psi), wave)
        assert np.max(np.abs(out.values[100:-100] - 2 * wave.values[100:-100])) < 1e-8

    def test_dense_needs_grid(self):
        with pytest.raises(ValueError):
            OperatorKernel("dense")
        with pytest.raises(ValueError):
            OperatorKernel("bogus")


class TestTransform:
    def setup_method(self):
        self.psi = Probe.gaussian(1.0)
        self.tgrid = Grid1D.from_range(-8, 8, 256)
        self.bgrid = Grid1D.from_range(-8, 8, 161)
        self.wgrid = Grid1D.from_range(-8, 8, 161)

    def test_transform_of_coherent_state_is_overlap(self):
        q = (1.0, 0.5)
        s = SampledFunction.from_callable(lambda t: np.exp(1j * q[1] * t) * self.psi(t - q[0]),
                                          self.tgrid)
        S = gabor_transform(s, self.psi, self.bgrid, self.wgrid)
        i, j = 90, 85  # b = 1.0, ω = 0.5
        assert S[i, j] == pytest.approx(1.0, abs=1e-10)
        p = (self.bgrid.points[100], self.wgrid.points[70])
        assert S[100, 70] == pytest.approx(overlap(self.psi, p, q), abs=1e-10)

    def test_plancherel_and_roundtrip(self):
        s = SampledFunction.from_callable(lambda t: np.exp(-(t - 0.5) ** 2) * np.cos(2 * t),
                                          self.tgrid)
        wgrid = Grid1D.from_range(-12, 12, 241)
        S = gabor_transform(s, self.psi, self.bgrid, wgrid)
        assert plancherel_defect(S, self.bgrid, wgrid, s) < 1e-8
        r = gabor_reconstruct(S, self.psi, self.bgrid, wgrid, self.tgrid)
        assert np.linalg.norm(r.values - s.values) / np.linalg.norm(s.values) < 1e-8

    def test_coarse_lattice_warns(self):
        s = SampledFunction.from_callable(lambda t: np.exp(-t ** 2 / 2) * np.cos(5 * t),
                                          self.tgrid)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            gabor_transform(s, self.psi, Grid1D.from_range(-8, 8, 9), Grid1D.from_range(-2, 2, 5))
        assert any(issubclass(c.category, GridResolutionWarning) for c in caught)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            gabor_reconstruct(np.zeros((3, 3)), self.psi, self.bgrid, self.wgrid, self.tgrid)


class TestOverlapAndPortrait:
    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_autocorrelation(self, sigma):
        R = autocorrelation(Probe.gaussian(sigma))
        t = np.linspace(-4, 4, 17)
        assert np.allclose(R(t), np.exp(-t ** 2 / (4 * sigma ** 2)), atol=1e-10)

    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_overlap_against_quadrature(self, sigma):
        psi = Probe.gaussian(sigma)
        for p, q in [((0.1, 0.2), (0.5, -1.0)), ((-1.0, 0.3), (0.7, 0.9)), ((0, 0), (0, 0))]:
            ref = brute_overlap(psi, p, q)
            assert overlap(psi, p, q) == pytest.approx(ref, abs=1e-10)
            assert overlap(psi, p, q, method="quadrature") == pytest.approx(ref, abs=1e-9)

    def test_sampled_overlap_against_quadrature(self):
        psi = skewed_probe()
        p, q = (0.2, -0.4), (1.1, 0.6)
        assert overlap(psi, p, q) == pytest.approx(brute_overlap(psi, p, q), abs=1e-8)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
    def test_overlap_hermitian(self, b1, w1, b2, w2):
        psi = Probe.gaussian(0.8)
        a = overlap(psi, (b1, w1), (b2, w2))
        b = overlap(psi, (b2, w2), (b1, w1))
        assert a == pytest.approx(np.conj(b), abs=1e-12)
        assert abs(a) <= 1 + 1e-12

    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_gaussian_portraits(self, sigma):
        psi = Probe.gaussian(sigma)
        p = PhaseSpacePoint(0.7, -0.3)
        cases = [((1, 0), 0.7), ((2, 0), 0.49 + sigma ** 2), ((0, 2), 0.09 + 1 / sigma ** 2),
                 ((0, 0), 1.0), ((1, 1), 0.7 * -0.3)]
        for (j, k), expected in cases:
            f = PhaseSpaceFunction.monomial(j, k) if (j, k) != (0, 0) else PhaseSpaceFunction.constant()
            assert portrait(f, psi, p) == pytest.approx(expected, abs=1e-12)
            assert portrait(f, psi, p, method="quadrature") == pytest.approx(expected, abs=1e-6)

    def test_sampled_portrait_b2(self):
        psi = skewed_probe()
        p = (0.3, 0.1)
        expected = 0.09 + 2 * psi.var_time
        assert portrait(PhaseSpaceFunction.monomial(2, 0), psi, p) == pytest.approx(expected,
                                                                                 abs=1e-8)
        assert portrait(PhaseSpaceFunction.monomial(2, 0), psi, p,
                        method="quadrature") == pytest.approx(expected, abs=1e-6)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-4, 4), st.floats(-4, 4), st.floats(0.3, 3))
    def test_constant_portrait_is_one(self, b, w, sigma):
        assert portrait(PhaseSpaceFunction.constant(), Probe.gaussian(sigma),
                        (b, w)) == pytest.approx(1, abs=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2))
    def test_portrait_shift_covariance(self, b, w, shift):
        psi = Probe.gaussian(1.0)
        f = PhaseSpaceFunction.monomial(2, 1)
        moved = portrait(f.shifted(shift, 0.0), psi, (b + shift, w))
        assert moved == pytest.approx(portrait(f, psi, (b, w)), abs=1e-9)


def test_gaussian_helper():
    assert gaussian(0.0, 1.0) == pytest.approx(math.pi ** -0.25)
