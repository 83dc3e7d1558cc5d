import numpy as np
import pytest

from latticehydro.covariance_flow import (
    ScaledQuery,
    empirical_covariance,
    halfspace_covariance,
    propagate_covariance,
)
from latticehydro.errors import BoxTooSmallError, InvalidQueryError
from latticehydro.random_fields import covariance_Q

PAIRS = [((z,), (zp,)) for z in range(-2, 3) for zp in range(-2, 3)]


class TestScaledQuery:
    def test_base_site(self):
        q = ScaledQuery(1.0, 1, 0.5, PAIRS, 0.1)
        assert q.base == (5,)
        assert q.t == pytest.approx(10.0)

    def test_diffusive_time(self):
        assert ScaledQuery(0.5, 2, 0.5, PAIRS, 0.05).t == pytest.approx(200.0)

    def test_bad_inputs(self):
        with pytest.raises(InvalidQueryError):
            ScaledQuery(1.0, 1, 0.5, PAIRS, 0.0)
        with pytest.raises(InvalidQueryError):
            ScaledQuery(1.0, 0.5, 0.5, PAIRS, 0.1)
        with pytest.raises(InvalidQueryError):
            ScaledQuery(1.0, 1, 0.5, PAIRS, 0.1, anchor="elsewhere")


class TestPropagate:
    def test_zero_time_is_initial(self, chain, bump):
        q = ScaledQuery(0.0, 1, 0.5, PAIRS, 0.1)
        Q = propagate_covariance(chain, bump, q)
        for z, zp in PAIRS:
            expect = covariance_Q(bump, 0.1, q.site(z), q.site(zp)).data
            assert np.abs(Q[(z, zp)].data - expect).max() <= 1e-12

    def test_gibbs_invariance(self, chain, flat):
        q0 = ScaledQuery(0.0, 1, 0.3, PAIRS, 0.1)
        q = ScaledQuery(2.0, 1, 0.3, PAIRS, 0.1)
        A, B = propagate_covariance(chain, flat, q0), propagate_covariance(chain, flat, q)
        for key in PAIRS:
            assert np.abs(A[key].data - B[key].data).max() <= 1e-9
        assert np.allclose(B[((0,), (1,))].data, B[((1,), (2,))].data, atol=1e-12)

    def test_diagonal_blocks_psd(self, chain, bump):
        q = ScaledQuery(1.0, 1, 0.5, [((0,), (0,))], 0.1)
        M = propagate_covariance(chain, bump, q)[((0,), (0,))].data
        assert np.abs(M.imag).max() <= 1e-10
        for blk in (M[:1, :1], M[1:, 1:]):
            assert np.linalg.eigvalsh(blk.real).min() >= -1e-10

    def test_transpose_symmetry(self, chain, bump):
        q = ScaledQuery(1.0, 1, 0.5, PAIRS, 0.1)
        Q = propagate_covariance(chain, bump, q)
        assert np.allclose(Q[((1,), (-2,))].data, Q[((-2,), (1,))].data.T, atol=1e-12)

    def test_box_too_small(self, chain, bump):
        q = ScaledQuery(1.0, 1, 0.5, PAIRS, 0.05)
        with pytest.raises(BoxTooSmallError) as info:
            propagate_covariance(chain, bump, q, box=32)
        assert info.value.required > 32


class TestMonteCarlo:
    def test_agrees_with_exact(self, chain, bump):
        q = ScaledQuery(1.0, 1, 0.5, [((0,), (0,)), ((0,), (1,))], 0.1)
        exact = propagate_covariance(chain, bump, q)
        mc = empirical_covariance(chain, bump, q, 1000, seed=2)
        for key in q.offsets:
            mean, err = mc[key]
            assert np.all(np.abs(mean.data - exact[key].data.real) <= 4 * err.data + 1e-12)

    def test_stderr_scaling(self, chain, bump):
        q = ScaledQuery(0.5, 1, 0.5, [((0,), (0,))], 0.1)
        ns = [250, 500, 1000, 2000]
        errs = [empirical_covariance(chain, bump, q, n, seed=9)[q.offsets[0]][1].data[1, 1] for n in ns]
        slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
        assert abs(slope + 0.5) <= 0.1

    def test_deterministic_and_jobs_invariant(self, chain, bump):
        q = ScaledQuery(0.5, 1, 0.5, [((0,), (1,))], 0.1)
        a = empirical_covariance(chain, bump, q, 300, seed=1, batch=100)[q.offsets[0]][0].data
        b = empirical_covariance(chain, bump, q, 300, seed=1, batch=100, jobs=3)[q.offsets[0]][0].data
        assert a.tobytes() == b.tobytes()


class TestHalfSpace:
    def test_boundary_rows_vanish(self, chain, bump):
        q = ScaledQuery(1.0, 1, 0.0, [((0,), (3,)), ((2,), (0,)), ((0,), (0,))], 0.1)
        Q = halfspace_covariance(chain, bump, q)
        for key in q.offsets:
            assert np.abs(Q[key].data).max() == 0.0

    def test_far_from_boundary(self, chain, bump):
        q = ScaledQuery(0.5, 1, 3.0, PAIRS, 0.1)
        H, F = halfspace_covariance(chain, bump, q), propagate_covariance(chain, bump, q)
        for key in PAIRS:
            assert np.abs(H[key].data - F[key].data).max() <= 1e-8

    def test_zero_time_restricted(self, chain, bump):
        q = ScaledQuery(0.0, 1, 0.2, PAIRS, 0.1)
        H = halfspace_covariance(chain, bump, q)
        for z, zp in PAIRS:
            expect = covariance_Q(bump, 0.1, q.site(z), q.site(zp)).data
            if q.site(z)[0] == 0 or q.site(zp)[0] == 0:
                expect = 0 * expect
            assert np.abs(H[(z, zp)].data - expect).max() <= 1e-12

    def test_negative_position_rejected(self, chain, bump):
        with pytest.raises(InvalidQueryError):
            halfspace_covariance(chain, bump, ScaledQuery(1.0, 1, -0.5, PAIRS, 0.1))
