import numpy as np
import pytest

from latticehydro.dispersion import spectral_data
from latticehydro.errors import InvalidBoxError, ModelViolationError
from latticehydro.lattice_dynamics import (
    FieldState,
    dft_theta,
    evolve,
    evolve_halfspace,
    green_function,
    hamiltonian,
    propagator_grid,
    propagator_symbol,
)


def random_state(rng, box, n=1, half=False):
    v0 = rng.standard_normal(tuple(box) + (n,))
    v1 = rng.standard_normal(tuple(box) + (n,))
    if half:
        v0[0] = v1[0] = 0.0
    return FieldState(v0, v1, half)


class TestPropagatorSymbol:
    def test_identity_at_zero_time(self, plane):
        sp = spectral_data(plane, np.array([0.4, -1.1]))
        assert np.allclose(propagator_symbol(sp, 0.0).Ghat, np.eye(2))

    def test_half_period(self, chain):
        sp = spectral_data(chain, np.pi / 2)
        G = propagator_symbol(sp, np.pi / np.sqrt(3)).Ghat
        assert np.allclose(G, np.diag([-1.0, -1.0]), atol=1e-12)

    def test_zero_frequency_limit(self, massless_chain):
        G = propagator_grid(massless_chain, 0.0, 2.0)
        assert G[0, 1] == pytest.approx(2.0, abs=1e-12)


class TestGreenFunction:
    def test_delta_at_zero_time(self, chain):
        G = green_function(chain, 0.0, (64,)).G
        assert np.allclose(G[0], np.eye(2), atol=1e-14)
        assert np.abs(G[1:]).max() < 1e-14

    def test_parseval(self, chain):
        box = (1024,)
        G = green_function(chain, 1.0, box).G
        Gh = propagator_grid(chain, dft_theta(box), 1.0)
        lhs = np.sum(np.abs(G) ** 2)
        rhs = np.mean(np.sum(np.abs(Gh) ** 2, axis=(-1, -2)))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_group_property(self, chain):
        box = (1024,)
        Gt = green_function(chain, 5.0, box).G
        Gs = green_function(chain, 3.0, box).G
        Gts = green_function(chain, 8.0, box).G
        # circular convolution of matrix kernels
        conv = np.einsum("kij,kjl->kil", np.fft.fft(Gt, axis=0), np.fft.fft(Gs, axis=0))
        conv = np.fft.ifft(conv, axis=0).real
        assert np.abs(conv - Gts).max() <= 1e-10

    def test_non_power_of_two_box(self, chain):
        with pytest.raises(InvalidBoxError):
            green_function(chain, 1.0, (100,))


class TestEvolve:
    def test_zero_time(self, chain, rng):
        X0 = random_state(rng, (128,))
        X = evolve(chain, X0, 0.0)
        assert np.abs(X.v0 - X0.v0).max() <= 1e-12
        assert np.abs(X.v1 - X0.v1).max() <= 1e-12

    def test_energy_conservation(self, chain, rng):
        X0 = random_state(rng, (256,))
        H0 = hamiltonian(chain, X0)
        assert hamiltonian(chain, evolve(chain, X0, 7.0)) == pytest.approx(H0, rel=1e-10)

    def test_plane_wave(self, chain):
        L = 64
        z = np.arange(L)
        th = 2 * np.pi * 5 / L
        w = np.sqrt(3 - 2 * np.cos(th))
        v0 = np.cos(th * z)[:, None]
        X = evolve(chain, FieldState(v0, np.zeros_like(v0)), 2.3)
        assert np.allclose(X.v0[:, 0], np.cos(th * z) * np.cos(w * 2.3), atol=1e-12)

    def test_box_too_small(self, chain):
        with pytest.raises(InvalidBoxError):
            evolve(chain, FieldState.zeros((2,), 1), 1.0)


class TestHalfSpace:
    def test_boundary_stays_zero(self, chain, rng):
        Y0 = random_state(rng, (128,), half=True)
        Y = evolve_halfspace(chain, Y0, 3.7)
        assert np.abs(Y.v0[0]).max() <= 1e-12 and np.abs(Y.v1[0]).max() <= 1e-12

    def test_zero_time(self, chain, rng):
        Y0 = random_state(rng, (128,), half=True)
        Y = evolve_halfspace(chain, Y0, 0.0)
        assert np.abs(Y.stacked() - Y0.stacked()).max() <= 1e-12

    def test_far_from_boundary_matches_full_space(self, chain):
        L = 512
        v0 = np.zeros((L, 1))
        v0[200:240, 0] = np.hanning(40)
        Y0 = FieldState(v0, np.zeros_like(v0), True)
        Y = evolve_halfspace(chain, Y0, 5.0)
        X = evolve(chain, FieldState(np.concatenate([v0, np.zeros_like(v0)]), np.zeros((2 * L, 1))), 5.0)
        assert np.abs(Y.v0[100:400] - X.v0[100:400]).max() <= 1e-10

    def test_unflagged_state_rejected(self, chain, rng):
        with pytest.raises(ModelViolationError):
            evolve_halfspace(chain, random_state(rng, (64,)), 1.0)

    def test_nonzero_boundary_rejected(self):
        with pytest.raises(ModelViolationError):
            FieldState(np.ones((8, 1)), np.zeros((8, 1)), True)


class TestHamiltonian:
    def test_zero_state(self, chain):
        assert hamiltonian(chain, FieldState.zeros((16,), 1)) == 0.0

    def test_kinetic_delta(self, chain):
        X = FieldState.zeros((16,), 1)
        X.v1[3] = 1.0
        assert hamiltonian(chain, X) == pytest.approx(0.5)

    def test_potential_delta(self, chain):
        X = FieldState.zeros((16,), 1)
        X.v0[3] = 1.0
        assert hamiltonian(chain, X) == pytest.approx(1.5)
