import numpy as np
import pytest

from latticehydro.conservation import (
    TestFunction,
    closed_form_energy,
    conserved_field,
    conserved_identities,
    conserved_quantities,
    continuity_residual,
    energy_current_limit,
    energy_density_limit,
    microscopic_current,
    microscopic_energy,
)
from latticehydro.dispersion import build_nearest_neighbor
from latticehydro.random_fields import ConstantProfile, gibbs_spectral, product_profile


class TestEnergyDensity:
    def test_initial_equals_temperature(self, chain, bump, T_ref):
        assert energy_density_limit(chain, bump, 0.0, 0.4) == pytest.approx(T_ref(0.4), abs=1e-12)

    def test_constant_profile(self, chain, gibbs):
        prof = product_profile(ConstantProfile(2.0), gibbs)
        for tau in (0.0, 0.7, 3.0):
            assert energy_density_limit(chain, prof, tau, 0.3) == pytest.approx(2.0, abs=1e-12)

    def test_two_forms_agree(self, chain, bump):
        e1, e2 = energy_density_limit(chain, bump, 0.8, 0.2, both=True)
        assert abs(e1 - e2) <= 1e-10

    def test_closed_form(self, chain, bump):
        e, j = closed_form_energy(chain, bump, 0.8, 0.2)
        assert energy_density_limit(chain, bump, 0.8, 0.2) == pytest.approx(e, abs=1e-10)
        assert energy_current_limit(chain, bump, 0.8, 0.2)[0] == pytest.approx(j[0], abs=1e-10)

    def test_multiband_nonnegative(self):
        V = build_nearest_neighbor(2, [1.0, 2.0], [1.0, 0.5])
        prof = product_profile(("gaussian-bump", {"a": 0.5, "w": 1.0}), gibbs_spectral(V))
        assert energy_density_limit(V, prof, 0.5, [0.1, -0.2], resolution=32) > 0


class TestEnergyCurrent:
    def test_constant_profile(self, chain, flat):
        assert np.abs(energy_current_limit(chain, flat, 0.9, 0.3)).max() <= 1e-12

    def test_odd_in_time(self, chain, bump):
        jp = energy_current_limit(chain, bump, 0.6, 0.3)
        jm = energy_current_limit(chain, bump, -0.6, 0.3)
        assert np.allclose(jp, -jm, atol=1e-14)
        assert abs(jp[0]) > 1e-3


class TestContinuity:
    def test_second_order(self, chain, bump):
        res = []
        for h in (0.04, 0.02):
            taus = np.arange(0.4, 0.6 + h / 2, h)
            r = [np.arange(-0.3, 0.3 + h / 2, h)]
            res.append(continuity_residual(chain, bump, taus, r))
        assert 3.5 <= res[0] / res[1] <= 4.5

    def test_constant_profile(self, chain, flat):
        taus = np.linspace(0, 1, 5)
        f = conserved_field(chain, flat, taus, [np.linspace(-1, 1, 5)])
        assert np.abs(f.e - 1.0).max() <= 1e-12
        assert np.abs(f.j).max() <= 1e-12
        assert continuity_residual(chain, flat, taus, [np.linspace(-1, 1, 5)]) <= 1e-12


class TestMicroscopic:
    def test_energy_converges(self, chain, bump):
        e = energy_density_limit(chain, bump, 1.0, 0.5)
        errs = [abs(microscopic_energy(chain, bump, 1.0, 0.5, eps) - e) for eps in (0.1, 0.05, 0.025)]
        assert errs[0] > errs[1] > errs[2]

    def test_current_converges(self, chain, bump):
        j = energy_current_limit(chain, bump, 1.0, 0.5)[0]
        errs = [abs(microscopic_current(chain, bump, 1.0, 0.5, eps) - j) for eps in (0.1, 0.05, 0.025)]
        assert errs[0] > errs[1] > errs[2]

    def test_equilibrium_energy(self, chain, flat):
        # equal partition: T/2 kinetic plus T/2 potential per site
        assert microscopic_energy(chain, flat, 0.7, 0.0, 0.1) == pytest.approx(1.0, abs=1e-10)
        assert abs(microscopic_current(chain, flat, 0.7, 0.0, 0.1)) <= 1e-12


class TestConservedQuantities:
    def test_energy_symbol(self, chain, bump):
        phi = TestFunction("gaussian-bump", {"w": 1.0}, 1)
        th = np.linspace(-3, 3, 7)
        cq = conserved_quantities(chain, bump, phi, 0.0, th)
        # at tau = 0: int phi T dr = sqrt(pi) + 0.5 sqrt(pi/2)
        expect = np.sqrt(np.pi) + 0.5 * np.sqrt(np.pi / 2)
        assert np.allclose(cq.E_hat[:, 0, 0], expect, rtol=1e-8)
        assert np.abs(cq.E_hat.imag).max() <= 1e-12

    def test_constant_profile_no_coupling(self, chain, flat):
        phi = TestFunction("compact-bump", {"R": 1.0}, 1)
        cq = conserved_quantities(chain, flat, phi, 0.8, np.linspace(-3, 3, 7))
        assert np.abs(cq.A_hat).max() <= 1e-12

    def test_time_derivative_identities(self, chain, bump):
        phi = TestFunction("gaussian-bump", {"w": 0.5}, 1)
        th = np.linspace(-3, 3, 7)
        res = [conserved_identities(chain, bump, phi, 0.6, th, dtau=h) for h in (2e-2, 1e-2)]
        assert res[0][0] > 1e-10
        for k in range(2):
            if res[0][k] > 1e-12:
                assert 3.5 <= res[0][k] / res[1][k] <= 4.5
            else:
                assert res[1][k] <= 1e-12

    def test_microscopic_expectation(self, chain, bump):
        phi = TestFunction("gaussian-bump", {"w": 1.0}, 1)
        diffs = [conserved_quantities(chain, bump, phi, 0.5, [0.3], eps=eps).difference for eps in (0.1, 0.05)]
        assert diffs[1] < diffs[0]
