import numpy as np
import pytest

from latticehydro.dispersion import build_nearest_neighbor
from latticehydro.errors import FractionalPowerError, WindowError
from latticehydro.hydro_limits import euler_limit, ns_correction
from latticehydro.lattice_dynamics import FieldState, dft_theta, hamiltonian
from latticehydro.random_fields import ConstantProfile, gibbs_spectral, product_profile
from latticehydro.wigner_transport import (
    a_field,
    halfspace_relation_residual,
    relations_residual,
    taper,
    transport_residual,
    wigner_empirical,
    wigner_exact,
    wigner_initial,
    wigner_limit,
    wigner_limit_grid,
)

THETA = np.linspace(-3.0, 3.0, 13)


def omega(th):
    return np.sqrt(3 - 2 * np.cos(th))


def multiplier(v, power):
    L = v.shape[0]
    th = dft_theta((L,))[..., 0]
    return np.fft.fft(omega(th)[:, None] ** power * np.fft.ifft(v, axis=0), axis=0)


class TestAField:
    def test_momentum_part(self, chain, rng):
        v1 = rng.standard_normal((64, 1))
        a = a_field(chain, FieldState(np.zeros_like(v1), v1))
        assert np.allclose(a, 1j / np.sqrt(2) * multiplier(v1, -0.5), atol=1e-12)

    def test_action_of_single_mode(self, chain):
        L = 128
        z = np.arange(L)
        th = 2 * np.pi * 9 / L
        X = FieldState(np.cos(th * z)[:, None], 0.7 * np.sin(th * z)[:, None])
        a = a_field(chain, X)
        assert np.sum(np.abs(a) ** 2) == pytest.approx(hamiltonian(chain, X) / omega(th), rel=1e-10)

    def test_conjugate_field(self, chain, rng):
        v0, v1 = rng.standard_normal((2, 64, 1))
        a = a_field(chain, FieldState(v0, v1))
        conj = (multiplier(v0, 0.5) - 1j * multiplier(v1, -0.5)) / np.sqrt(2)
        assert np.allclose(np.conj(a), conj, atol=1e-12)

    def test_singular_symbol(self, massless_chain):
        with pytest.raises(FractionalPowerError):
            a_field(massless_chain, FieldState.zeros((32,), 1))


class TestLimit:
    def test_zero_time_is_initial(self, chain, bump):
        assert np.allclose(wigner_limit(chain, bump, 0.0, 0.3, THETA), wigner_initial(chain, bump, 0.3, THETA))

    def test_initial_is_temperature_over_frequency(self, chain, bump, T_ref):
        W0 = wigner_initial(chain, bump, 0.3, THETA)[:, 0, 0]
        assert np.allclose(W0, T_ref(0.3) / omega(THETA), atol=1e-14)

    def test_transported_value(self, chain, bump):
        W = wigner_limit(chain, bump, 1.0, 0.0, np.pi / 2)
        assert W[0, 0].real == pytest.approx(0.784195, abs=1e-6)

    def test_halfspace_far_from_wall(self, chain, bump):
        a = wigner_limit(chain, bump, 1.0, 2.0, THETA, halfspace=True)
        b = wigner_limit(chain, bump, 1.0, 2.0, THETA)
        assert np.array_equal(a, b)

    def test_hermitian_multiband(self):
        V = build_nearest_neighbor(1, [1.0, 2.0], [1.0, 0.5])
        prof = product_profile(("gaussian-bump", {"a": 0.5, "w": 1.0}), gibbs_spectral(V))
        W = wigner_limit(V, prof, 0.7, 0.2, THETA)
        assert np.abs(W - np.conj(np.swapaxes(W, -1, -2))).max() <= 1e-14


class TestRelations:
    def test_euler(self, chain, bump):
        assert relations_residual(chain, bump, 0.8, 0.3, THETA) <= 1e-10

    def test_multiband(self):
        V = build_nearest_neighbor(1, [1.0, 2.0], [1.0, 0.5])
        prof = product_profile(("gaussian-bump", {"a": 0.5, "w": 1.0}), gibbs_spectral(V))
        assert relations_residual(V, prof, 0.8, 0.3, THETA) <= 1e-10

    def test_halfspace(self, chain, bump):
        assert halfspace_relation_residual(chain, bump, 0.8, 0.3, THETA) <= 1e-10

    def test_ns_symbol_fails_relations(self, chain, bump):
        q = ns_correction(chain, bump, 0.8, 0.3, THETA, 0.1).data
        q_e = euler_limit(chain, bump, 0.8, 0.3, THETA).data
        assert np.abs(q - q_e).max() > 1e-6
        assert relations_residual(chain, bump, 0.8, 0.3, THETA, q=q) > 1e-6


class TestMicroscopic:
    def test_taper(self):
        w = taper(np.array([0, 50, 57.6, 60.8, 64, 70]), 64)
        assert w[0] == w[1] == w[2] == 1.0
        assert w[3] == pytest.approx(0.5)
        assert w[4] == pytest.approx(0.0, abs=1e-15) and w[5] == 0.0

    def test_exact_converges_to_initial(self, chain, bump):
        th = np.array([[0.4], [1.3], [2.5]])
        lim = wigner_limit(chain, bump, 0.0, 0.5, th)
        errs = [np.abs(wigner_exact(chain, bump, eps, 0.0, 0.5, th).values[0] - lim).max() for eps in (0.1, 0.05, 0.025)]
        assert errs[0] > errs[1] > errs[2]

    def test_exact_converges_to_limit(self, chain, bump):
        th = np.array([[0.4], [1.3], [2.5]])
        lim = wigner_limit(chain, bump, 0.5, 0.5, th)
        errs = [np.abs(wigner_exact(chain, bump, eps, 0.5, 0.5, th).values[0] - lim).max() for eps in (0.1, 0.05, 0.025)]
        assert errs[0] > errs[1] > errs[2]

    def test_constant_profile_homogeneous(self, chain, flat):
        th = np.array([[0.4], [1.3]])
        a = wigner_exact(chain, flat, 0.1, 0.5, 0.5, th).values
        b = wigner_exact(chain, flat, 0.1, 0.5, 1.7, th).values
        assert np.abs(a - b).max() <= 1e-10

    def test_window_too_small(self, chain, bump):
        with pytest.raises(WindowError):
            wigner_exact(chain, bump, 0.1, 0.0, 0.5, np.array([[0.4]]), ymax=4, window_tol=1e-12)

    def test_empirical_within_error_bars(self, chain, bump):
        th = np.array([[0.4], [1.3], [2.5]])
        ex = wigner_exact(chain, bump, 0.1, 0.5, 0.5, th, ymax=16, window_tol=1.0)
        mc = wigner_empirical(chain, bump, 0.1, 0.5, 0.5, th, 800, seed=4, ymax=16)
        dev_re = np.abs(mc.values.real - ex.values.real)
        dev_im = np.abs(mc.values.imag - ex.values.imag)
        assert np.all(dev_re <= 4 * mc.stderr.real + 1e-12)
        assert np.all(dev_im <= 4 * mc.stderr.imag + 1e-12)

    def test_empirical_reproducible(self, chain, bump):
        th = np.array([[0.4]])
        a = wigner_empirical(chain, bump, 0.1, 0.0, 0.5, th, 50, seed=8, ymax=8)
        b = wigner_empirical(chain, bump, 0.1, 0.0, 0.5, th, 50, seed=8, ymax=8, jobs=2, batch=20)
        assert a.values.tobytes() == b.values.tobytes()


def _grid(chain, prof, h, halfspace=False):
    taus = np.arange(0.5, 0.7 + h / 2, h)
    r = np.arange(0.0, 0.4 + h / 2, h) if halfspace else np.arange(-0.2, 0.2 + h / 2, h)
    return wigner_limit_grid(chain, prof, taus, [r], THETA, halfspace=halfspace)


class TestTransport:
    def test_full_space_second_order(self, chain, bump):
        res = [transport_residual(_grid(chain, bump, h)).residual for h in (0.02, 0.01)]
        assert 3.5 <= res[0] / res[1] <= 4.5

    def test_constant_profile(self, chain, flat):
        assert transport_residual(_grid(chain, flat, 0.05)).residual <= 1e-12

    def test_halfspace_boundary(self, chain, bump):
        rep = transport_residual(_grid(chain, bump, 0.02, halfspace=True))
        assert rep.boundary_mismatch <= 1e-10
        assert rep.symmetric_mismatch <= 1e-10
