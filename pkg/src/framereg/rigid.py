"""Closed-form M-step for the rigid model (scaled rotation + translation)."""

from dataclasses import dataclass

import numpy as np

from .frames import ALL_BLOCKS, FrameSet
from .mixture import VAR_FLOOR, BlockCovariance, PosteriorMatrix

MIN_SCALE = 1e-6
NP_FLOOR_FRACTION = 1e-8


class DegenerateResponsibility(Exception):
    """Total inlier mass collapsed; the M-step has nothing to fit."""


@dataclass(frozen=True)
class RigidParams:
    """Scale, proper rotation and translation; the rotation acts on every
    block, the translation on the location block only."""

    s: float
    r: np.ndarray
    t: np.ndarray

    def transform_model(self, model: FrameSet) -> FrameSet:
        out = model.vecs.copy()
        b = self.s * self.r
        for blk in ALL_BLOCKS:
            out[2 * blk:2 * blk + 2] = b @ model.block(blk)
        out[4:6] += self.t[:, None]
        return FrameSet(out)

    @classmethod
    def identity(cls):
        return cls(s=1.0, r=np.eye(2), t=np.zeros(2))


def best_rotation(a: np.ndarray) -> np.ndarray:
    """The proper rotation maximizing tr(a^T r), via SVD with the determinant
    correction; identity when a is exactly zero."""
    if not np.any(a):
        return np.eye(2)
    u, _, vt = np.linalg.svd(a)
    c = np.diag([1.0, np.sign(np.linalg.det(u @ vt))])
    return u @ c @ vt


def check_inlier_mass(post: PosteriorMatrix, n: int):
    if post.n_p < NP_FLOOR_FRACTION * n:
        raise DegenerateResponsibility(
            f"inlier mass {post.n_p:g} below floor for N={n}")


def rigid_m_step(data: FrameSet, model: FrameSet, post: PosteriorMatrix,
                 cov: BlockCovariance, blocks=ALL_BLOCKS, var_floor=VAR_FLOOR):
    """One rigid M-step: weighted Procrustes over the active blocks.

    The location block is mean-centered; every active block is whitened by its
    current standard deviation so low-variance blocks weigh more. Returns the
    updated parameters and the per-block variances of the new residuals.
    """
    n = data.count
    check_inlier_mass(post, n)
    n_p = post.n_p
    px = post.p.sum(axis=0)  # per data point, length N
    py = post.p.sum(axis=1)  # per centroid, length M

    mu_x = data.block(2) @ px / n_p
    mu_y = model.block(2) @ py / n_p

    centered = {}
    for b in blocks:
        xb = data.block(b).copy()
        yb = model.block(b).copy()
        if b == 2:
            xb -= mu_x[:, None]
            yb -= mu_y[:, None]
        sig = np.sqrt(cov.variance(b))
        centered[b] = (xb / sig, yb / sig)

    a = np.zeros((2, 2))
    denom = 0.0
    for b in blocks:
        xb, yb = centered[b]
        a += xb @ post.p.T @ yb.T
        denom += float(np.einsum('im,m,im->', yb, py, yb))
    r = best_rotation(a)
    s = float(np.trace(a @ r.T)) / denom if denom > 0 else 1.0
    s = max(s, MIN_SCALE)
    t = mu_x - s * r @ mu_y if 2 in blocks else np.zeros(2)

    new_cov = cov
    for b in blocks:
        xb = data.block(b)
        yb = s * r @ model.block(b)
        if b == 2:
            yb = yb + t[:, None]
        resid = (float(np.einsum('in,n,in->', xb, px, xb))
                 - 2.0 * float(np.einsum('in,nm,im->', xb, post.p.T, yb))
                 + float(np.einsum('im,m,im->', yb, py, yb)))
        new_cov = new_cov.with_variance(b, max(resid / (2.0 * n_p), var_floor))

    return RigidParams(s=s, r=r, t=t), new_cov
