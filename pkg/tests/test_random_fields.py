import numpy as np
import pytest

from latticehydro.errors import GibbsUndefinedError, InvalidParameterError
from latticehydro.random_fields import (
    ConstantProfile,
    GaussianBump,
    covariance_Q,
    gibbs_spectral,
    make_profile_family,
    product_profile,
    sample_field,
    sample_fields,
    verify_profile,
)


class TestGibbs:
    def test_spectral_values(self, chain):
        g = gibbs_spectral(chain, 1.0)
        q = g.q0_hat(np.pi)
        assert q[0, 0].real == pytest.approx(0.2, abs=1e-14)
        assert q[1, 1].real == pytest.approx(1.0)
        assert g.q0_hat(0.0)[0, 0].real == pytest.approx(1.0)

    def test_linear_in_temperature(self, chain):
        assert gibbs_spectral(chain, 2.0).q0_hat(np.pi)[0, 0].real == pytest.approx(0.4)

    def test_massless_undefined(self, massless_chain):
        with pytest.raises(GibbsUndefinedError):
            gibbs_spectral(massless_chain, 1.0)

    def test_cross_blocks_vanish(self, gibbs):
        q = gibbs.q0_table((64,))
        assert np.abs(q[..., 0, 1]).max() == 0 and np.abs(q[..., 1, 0]).max() == 0


class TestProfiles:
    def test_negative_amplitude_rejected(self):
        with pytest.raises(InvalidParameterError):
            GaussianBump(a=-1.5, w=1.0)
        with pytest.raises(InvalidParameterError):
            ConstantProfile(-1.0)

    def test_factory(self):
        T = make_profile_family("gaussian-bump", a=0.5, w=1.0)
        assert T(np.array([[0.0]]))[0] == pytest.approx(1.5)


class TestCovarianceQ:
    def test_constant_profile_stationary(self, flat, gibbs):
        a = covariance_Q(flat, 0.1, [3], [1]).data
        b = covariance_Q(flat, 0.1, [12], [10]).data
        assert np.allclose(a, b)
        assert np.allclose(a, gibbs.q0([2])[0])

    def test_bump_at_origin(self, bump, gibbs):
        Q = covariance_Q(bump, 0.1, [0], [0]).data
        assert Q[0, 0] == pytest.approx(1.5 * gibbs.q0([0])[0][0, 0], rel=1e-14)

    def test_bump_symmetric_pair(self, bump, gibbs, T_ref):
        Q = covariance_Q(bump, 0.1, [10], [-10]).data
        expect = np.sqrt(T_ref(1.0) * T_ref(-1.0)) * gibbs.q0([20])[0][0, 0]
        assert Q[0, 0] == pytest.approx(expect, rel=1e-12)

    def test_diagonal_psd(self, bump):
        for z in (-5, 0, 7):
            Q = covariance_Q(bump, 0.1, [z], [z]).data
            assert np.linalg.eigvalsh(0.5 * (Q + Q.conj().T)).min() >= -1e-14


class TestSampling:
    def test_equilibrium_velocity_variance(self, flat):
        X = sample_fields(flat, 0.1, (128,), seed=3, indices=range(80))
        v1 = X[..., 1].ravel()
        mean, err = np.mean(v1**2), np.std(v1**2) / np.sqrt(v1.size)
        assert abs(mean - 1.0) <= 3 * err

    def test_bump_velocity_variance(self, bump):
        X = sample_fields(bump, 0.1, (128,), seed=4, indices=range(10000))
        v = X[:, 0, 1]
        mean, err = np.mean(v**2), np.std(v**2) / np.sqrt(v.size)
        assert abs(mean - 1.5) <= 3 * err

    def test_reproducible(self, bump):
        a = sample_field(bump, 0.1, (64,), seed=11, sample_index=2)
        b = sample_field(bump, 0.1, (64,), seed=11, sample_index=2)
        assert a.v0.tobytes() == b.v0.tobytes() and a.v1.tobytes() == b.v1.tobytes()

    def test_batch_matches_single(self, bump):
        X = sample_fields(bump, 0.1, (64,), seed=5, indices=[0, 1, 2])
        one = sample_field(bump, 0.1, (64,), seed=5, sample_index=1)
        assert np.array_equal(X[1, :, :1], one.v0)


class TestVerifyProfile:
    def test_gibbs_product_passes(self, bump):
        rep = verify_profile(bump)
        assert rep["I1"].status == "pass"
        assert rep["I4'"].status == "pass"
        assert all(s == "pass" for s in rep.summary().values())

    def test_slow_decay_flagged(self, chain):
        from latticehydro.random_fields import CovarianceProfile

        # |theta|^-1/2 singularity gives q0 decaying like |z|^-1/2
        def q0_hat(theta):
            th = np.abs(np.atleast_1d(theta)[..., 0]) + 1e-300
            out = np.zeros(th.shape + (2, 2), dtype=complex)
            out[..., 0, 0] = th**-0.5
            out[..., 1, 1] = 1.0
            return out

        prof = CovarianceProfile(1, 1, ConstantProfile(1.0), q0_hat)
        assert verify_profile(prof)["I1"].status == "fail"
