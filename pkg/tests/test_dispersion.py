import numpy as np
import pytest

from latticehydro.dispersion import (
    InteractionMatrix,
    band_grid,
    build_nearest_neighbor,
    check_conditions,
    fourier_symbol,
    spectral_data,
)
from latticehydro.errors import ConditionE3Error, InvalidParameterError


class TestNearestNeighbor:
    def test_massless_chain_blocks(self, massless_chain):
        V = massless_chain
        assert V.block(0)[0, 0] == 2.0
        assert V.block(1)[0, 0] == -1.0
        assert V.block(-1)[0, 0] == -1.0

    def test_massive_chain_blocks(self, chain):
        assert chain.block(0)[0, 0] == 3.0
        assert chain.block(1)[0, 0] == chain.block(-1)[0, 0] == -1.0

    def test_square_lattice_blocks(self):
        V = build_nearest_neighbor(2, [1.0], [0.0])
        assert V.block((0, 0))[0, 0] == 4.0
        for z in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
            assert V.block(z)[0, 0] == -1.0
        for z in [(2, 0), (1, 1), (0, -2)]:
            assert V.block(z)[0, 0] == 0.0

    def test_nonpositive_coupling_rejected(self):
        with pytest.raises(InvalidParameterError):
            build_nearest_neighbor(1, [0.0], [1.0])
        with pytest.raises(ValueError):
            build_nearest_neighbor(1, [-1.0], [1.0])

    def test_symmetry_flag(self, chain):
        assert chain.symmetry_flag


class TestSymbol:
    def test_massless_at_pi(self, massless_chain):
        assert fourier_symbol(massless_chain, np.pi)[0, 0] == pytest.approx(4.0, abs=1e-14)

    def test_massive_at_zero(self, chain):
        assert fourier_symbol(chain, 0.0)[0, 0] == pytest.approx(1.0, abs=1e-14)

    def test_square_lattice(self):
        V = build_nearest_neighbor(2, [1.0], [0.0])
        val = fourier_symbol(V, np.array([np.pi / 2, np.pi / 2]))[0, 0]
        assert val == pytest.approx(4.0, abs=1e-14)

    def test_hermitian_on_grid(self, plane, rng):
        th = rng.uniform(-np.pi, np.pi, size=(50, 2))
        Vh = fourier_symbol(plane, th)
        assert np.allclose(Vh, np.conj(np.swapaxes(Vh, -1, -2)))


class TestSpectralData:
    def test_reference_point(self, chain):
        sp = spectral_data(chain, np.pi / 2)
        (b,) = sp.bands
        assert b.omega == pytest.approx(np.sqrt(3), abs=1e-12)
        assert b.proj[0, 0] == pytest.approx(1.0)
        assert b.grad[0] == pytest.approx(1 / np.sqrt(3), abs=1e-12)
        # second derivative cos/w - sin^2/w^3 at pi/2
        assert b.hess[0, 0] == pytest.approx(-1 / 3**1.5, abs=1e-10)
        assert b.hess[0, 0] == pytest.approx(-0.192450, abs=1e-6)

    def test_massless_frequency(self, massless_chain):
        sp = spectral_data(massless_chain, np.pi / 2)
        assert sp.bands[0].omega == pytest.approx(1.414214, abs=1e-6)

    def test_projector_completeness(self, rng):
        V = build_nearest_neighbor(2, [1.0, 2.5], [1.0, 0.5])
        for th in rng.uniform(-np.pi, np.pi, size=(5, 2)):
            sp = spectral_data(V, th)
            assert np.allclose(sum(b.proj for b in sp.bands), np.eye(2), atol=1e-12)

    def test_gradient_matches_finite_difference(self, chain):
        h = 1e-6
        th = np.linspace(-3, 3, 13)
        bg = band_grid(chain, th)
        wp = band_grid(chain, th + h, derivatives=False).omega
        wm = band_grid(chain, th - h, derivatives=False).omega
        assert np.allclose(bg.grad[..., 0], (wp - wm) / (2 * h), atol=1e-8)

    def test_negative_symbol_rejected(self):
        V = InteractionMatrix(1, 1, {(0,): [[-1.0]]})
        with pytest.raises(ConditionE3Error):
            spectral_data(V, 0.3)


class TestConditions:
    def test_massive_chain_passes(self, chain):
        rep = check_conditions(chain, 64)
        assert rep.all_passed
        assert rep["E6"].status == "pass"
        assert rep.critical_sample == []

    def test_massless_chain_fails_e6(self, massless_chain):
        rep = check_conditions(massless_chain, 64)
        assert rep["E6"].status == "sampled-fail"
        assert not rep.all_passed

    def test_asymmetric_matrix_fails_e2(self):
        V = InteractionMatrix(1, 1, {(0,): [[3.0]], (1,): [[-1.0]], (-1,): [[-0.5]]})
        rep = check_conditions(V)
        assert rep["E2"].status == "fail"
        assert rep["E2"].witnesses
