import numpy as np
import pytest

from framereg.frames import ALL_BLOCKS, FrameSet
from framereg.mixture import BlockCovariance, PosteriorMatrix
from framereg.nonrigid import (NonRigidParams, build_kernels, nonrigid_m_step)
from framereg.rigid import DegenerateResponsibility


def random_set(rng, count, scale=5.0):
    return FrameSet(rng.normal(scale=scale, size=(6, count)))


def identity_posterior(count):
    return PosteriorMatrix(p=np.eye(count), outlier_mass=np.zeros(count))


class TestKernels:
    def test_diagonal_is_one(self):
        fs = random_set(np.random.default_rng(0), 6)
        for g in build_kernels(fs, beta=2.0):
            assert np.allclose(np.diag(g), 1.0)

    def test_symmetric(self):
        fs = random_set(np.random.default_rng(1), 5)
        for g in build_kernels(fs, beta=0.7):
            assert np.allclose(g, g.T, atol=1e-14)

    def test_value_at_known_distance(self):
        # squared distance 2*beta gives exactly exp(-1)
        beta = 1.5
        vecs = np.zeros((6, 2))
        vecs[4, 1] = np.sqrt(2.0 * beta)
        g = build_kernels(FrameSet(vecs), beta=beta)[2]
        assert g[0, 1] == pytest.approx(np.exp(-1.0), rel=1e-12)

    def test_per_block_uses_each_blocks_geometry(self):
        vecs = np.zeros((6, 2))
        vecs[0, 1] = 1.0   # dot blocks differ
        vecs[4, 1] = 3.0   # locations differ more
        g = build_kernels(FrameSet(vecs), beta=1.0)
        assert g[0][0, 1] == pytest.approx(np.exp(-0.5))
        assert g[1][0, 1] == pytest.approx(1.0)
        assert g[2][0, 1] == pytest.approx(np.exp(-4.5))

    def test_spatial_shared_reuses_location_kernel(self):
        fs = random_set(np.random.default_rng(2), 4)
        g = build_kernels(fs, beta=2.0, kernel_mode="spatial_shared")
        assert g[0] is g[2] and g[1] is g[2]
        ref = build_kernels(fs, beta=2.0)[2]
        assert np.array_equal(g[2], ref)

    def test_invalid_arguments(self):
        fs = random_set(np.random.default_rng(3), 3)
        with pytest.raises(ValueError):
            build_kernels(fs, beta=0.0)
        with pytest.raises(ValueError):
            build_kernels(fs, beta=1.0, kernel_mode="nope")


class TestNonRigidParams:
    def test_zero_params_are_noop(self):
        fs = random_set(np.random.default_rng(4), 5)
        params = NonRigidParams.zero(fs)
        assert params.transform_model(fs) == fs
        assert params.bending_energy() == 0.0

    def test_displacement_adds_w_times_g(self):
        rng = np.random.default_rng(5)
        fs = random_set(rng, 4)
        params = NonRigidParams.zero(fs, beta=1.0)
        w = rng.normal(size=(2, 4))
        from dataclasses import replace
        params = replace(params, w_tdot=w)
        out = params.transform_model(fs)
        assert np.allclose(out.block(2), fs.block(2) + w @ params.g_tdot)
        assert np.array_equal(out.block(0), fs.block(0))

    def test_bending_energy_positive_for_nonzero_field(self):
        rng = np.random.default_rng(6)
        fs = random_set(rng, 5)
        from dataclasses import replace
        params = replace(NonRigidParams.zero(fs),
                         w_dot=rng.normal(size=(2, 5)))
        assert params.bending_energy() > 0.0


class TestNonRigidMStep:
    def test_matches_naive_dense_solve(self):
        rng = np.random.default_rng(7)
        for _ in range(8):
            n, m = int(rng.integers(3, 9)), int(rng.integers(3, 9))
            data, model = random_set(rng, n), random_set(rng, m)
            p = rng.uniform(0.01, 0.9 / m, size=(m, n))
            post = PosteriorMatrix(p=p, outlier_mass=1.0 - p.sum(axis=0))
            cov = BlockCovariance(*np.exp(rng.uniform(-1, 1, size=3)))
            params = NonRigidParams.zero(model, beta=1.5, lam=2.0)
            new_params, _ = nonrigid_m_step(data, model, post, cov, params)
            py = p.sum(axis=1)
            for b in ALL_BLOCKS:
                g = params.kernel(b)
                system = g * py[None, :] + 2.0 * cov.variance(b) * np.eye(m)
                rhs = data.block(b) @ p.T - model.block(b) * py[None, :]
                expect = rhs @ np.linalg.inv(system)
                assert np.allclose(new_params.coeffs(b), expect, atol=1e-8)

    def test_huge_lambda_freezes_the_field(self):
        rng = np.random.default_rng(8)
        data, model = random_set(rng, 6), random_set(rng, 6)
        params = NonRigidParams.zero(model, beta=1.0, lam=1e12)
        new_params, _ = nonrigid_m_step(data, model, identity_posterior(6),
                                        BlockCovariance(1.0, 1.0, 1.0), params)
        for b in ALL_BLOCKS:
            assert np.abs(new_params.coeffs(b)).max() < 1e-6

    def test_residual_shrinks_with_small_lambda(self):
        rng = np.random.default_rng(9)
        model = random_set(rng, 8)
        shifted = model.vecs.copy()
        shifted[4:6] += rng.normal(scale=0.5, size=(2, 8))
        data = FrameSet(shifted)
        post = identity_posterior(8)
        cov = BlockCovariance(1.0, 1.0, 1.0)

        def mean_err(lam):
            params = NonRigidParams.zero(model, beta=5.0, lam=lam)
            new_params, _ = nonrigid_m_step(data, model, post, cov, params)
            out = new_params.transform_model(model)
            return np.abs(out.block(2) - data.block(2)).mean()

        errs = [mean_err(lam) for lam in (100.0, 1.0, 1e-4)]
        assert errs[0] > errs[1] > errs[2]

    def test_variance_matches_double_loop(self):
        rng = np.random.default_rng(10)
        data, model = random_set(rng, 5), random_set(rng, 4)
        p = rng.uniform(0.0, 0.2, size=(4, 5))
        post = PosteriorMatrix(p=p, outlier_mass=1.0 - p.sum(axis=0))
        params = NonRigidParams.zero(model, beta=2.0, lam=3.0)
        new_params, new_cov = nonrigid_m_step(data, model, post,
                                              BlockCovariance(1.0, 1.0, 1.0),
                                              params)
        aligned = new_params.transform_model(model)
        for b in ALL_BLOCKS:
            total = sum(p[m, n] * np.sum((data.block(b)[:, n]
                                          - aligned.block(b)[:, m]) ** 2)
                        for m in range(4) for n in range(5))
            assert new_cov.variance(b) == pytest.approx(
                total / (2.0 * p.sum()), rel=1e-10)

    def test_location_only_leaves_shape_fields(self):
        rng = np.random.default_rng(11)
        data, model = random_set(rng, 5), random_set(rng, 5)
        params = NonRigidParams.zero(model)
        new_params, new_cov = nonrigid_m_step(
            data, model, identity_posterior(5),
            BlockCovariance(1.0, 1.0, 1.0), params, blocks=(2,))
        assert np.array_equal(new_params.w_dot, params.w_dot)
        assert np.array_equal(new_params.w_ddot, params.w_ddot)
        assert not np.array_equal(new_params.w_tdot, params.w_tdot)
        assert new_cov.sig_dot2 == 1.0

    def test_degenerate_posterior_raises(self):
        rng = np.random.default_rng(12)
        data, model = random_set(rng, 4), random_set(rng, 4)
        post = PosteriorMatrix(p=np.zeros((4, 4)), outlier_mass=np.ones(4))
        params = NonRigidParams.zero(model)
        with pytest.raises(DegenerateResponsibility):
            nonrigid_m_step(data, model, post,
                            BlockCovariance(1.0, 1.0, 1.0), params)
