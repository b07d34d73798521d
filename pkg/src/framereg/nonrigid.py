"""M-step for the non-rigid model: regularized Gaussian-kernel displacement
fields, one per 2-D block."""

from dataclasses import dataclass, replace

import numpy as np

from .frames import ALL_BLOCKS, FrameSet
from .mixture import VAR_FLOOR, BlockCovariance, PosteriorMatrix
from .rigid import check_inlier_mass

DEFAULT_BETA = 2.0
DEFAULT_LAMBDA = 3.0

KERNEL_MODES = ("per_block", "spatial_shared")


def _gaussian_kernel(points: np.ndarray, beta: float) -> np.ndarray:
    """exp(-||p_i - p_j||^2 / (2 beta)) for the 2xM column set `points`."""
    sq = (points ** 2).sum(axis=0)
    d2 = sq[:, None] + sq[None, :] - 2.0 * points.T @ points
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2 / (2.0 * beta))


def build_kernels(model: FrameSet, beta: float, kernel_mode="per_block"):
    """Per-block MxM kernel matrices on the model set.

    per_block computes each kernel from that block's own components;
    spatial_shared reuses the location kernel for every block.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if kernel_mode not in KERNEL_MODES:
        raise ValueError(f"unknown kernel_mode {kernel_mode!r}")
    if kernel_mode == "spatial_shared":
        g = _gaussian_kernel(model.block(2), beta)
        return (g, g, g)
    return tuple(_gaussian_kernel(model.block(b), beta) for b in ALL_BLOCKS)


@dataclass(frozen=True)
class NonRigidParams:
    """Displacement-field coefficients and kernels for one model set."""

    w_dot: np.ndarray
    w_ddot: np.ndarray
    w_tdot: np.ndarray
    g_dot: np.ndarray
    g_ddot: np.ndarray
    g_tdot: np.ndarray
    beta: float = DEFAULT_BETA
    lam: float = DEFAULT_LAMBDA

    @classmethod
    def zero(cls, model: FrameSet, beta=DEFAULT_BETA, lam=DEFAULT_LAMBDA,
             kernel_mode="per_block"):
        g = build_kernels(model, beta, kernel_mode)
        w = np.zeros((2, model.count))
        return cls(w_dot=w, w_ddot=w.copy(), w_tdot=w.copy(),
                   g_dot=g[0], g_ddot=g[1], g_tdot=g[2], beta=beta, lam=lam)

    def coeffs(self, block):
        return (self.w_dot, self.w_ddot, self.w_tdot)[block]

    def kernel(self, block):
        return (self.g_dot, self.g_ddot, self.g_tdot)[block]

    def transform_model(self, model: FrameSet) -> FrameSet:
        out = model.vecs.copy()
        for b in ALL_BLOCKS:
            out[2 * b:2 * b + 2] += self.coeffs(b) @ self.kernel(b)
        return FrameSet(out)

    def bending_energy(self):
        """tr(W G W^T) summed over blocks; the quantity the regularizer penalizes."""
        return sum(float(np.trace(self.coeffs(b) @ self.kernel(b) @ self.coeffs(b).T))
                   for b in ALL_BLOCKS)


def nonrigid_m_step(data: FrameSet, model: FrameSet, post: PosteriorMatrix,
                    cov: BlockCovariance, params: NonRigidParams,
                    blocks=ALL_BLOCKS, var_floor=VAR_FLOOR):
    """Solve each block's regularized linear system for its coefficient matrix.

    W_b (G_b d(P1) + lambda sigma_b^2 I) = X_b P^T - Y_b d(P1); the ridge term
    keeps the system invertible even for duplicated model points.
    """
    n = data.count
    check_inlier_mass(post, n)
    n_p = post.n_p
    px = post.p.sum(axis=0)
    py = post.p.sum(axis=1)
    m = model.count

    new_w = {b: params.coeffs(b) for b in ALL_BLOCKS}
    for b in blocks:
        xb, yb, g = data.block(b), model.block(b), params.kernel(b)
        system = g * py[None, :] + params.lam * cov.variance(b) * np.eye(m)
        rhs = xb @ post.p.T - yb * py[None, :]
        new_w[b] = np.linalg.solve(system.T, rhs.T).T

    new_params = replace(params, w_dot=new_w[0], w_ddot=new_w[1], w_tdot=new_w[2])

    new_cov = cov
    for b in blocks:
        xb = data.block(b)
        tb = model.block(b) + new_params.coeffs(b) @ new_params.kernel(b)
        resid = (float(np.einsum('in,n,in->', xb, px, xb))
                 - 2.0 * float(np.einsum('in,mn,im->', xb, post.p, tb))
                 + float(np.einsum('im,m,im->', tb, py, tb)))
        new_cov = new_cov.with_variance(b, max(resid / (2.0 * n_p), var_floor))

    return new_params, new_cov
