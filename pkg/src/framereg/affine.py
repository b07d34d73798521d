"""Closed-form M-step for the unconstrained affine model."""

from dataclasses import dataclass

import numpy as np

from .frames import ALL_BLOCKS, FrameSet
from .mixture import VAR_FLOOR, BlockCovariance, PosteriorMatrix
from .rigid import check_inlier_mass

GRAM_CONDITION_LIMIT = 1e12
RIDGE_FRACTION = 1e-9


class SingularGram(Exception):
    """The 2x2 normal-equation matrix is numerically singular."""


@dataclass(frozen=True)
class AffineParams:
    """A single 2x2 map applied to every block, plus a location translation."""

    b: np.ndarray
    t: np.ndarray

    def transform_model(self, model: FrameSet) -> FrameSet:
        out = model.vecs.copy()
        for blk in ALL_BLOCKS:
            out[2 * blk:2 * blk + 2] = self.b @ model.block(blk)
        out[4:6] += self.t[:, None]
        return FrameSet(out)

    @classmethod
    def identity(cls):
        return cls(b=np.eye(2), t=np.zeros(2))


def affine_m_step(data: FrameSet, model: FrameSet, post: PosteriorMatrix,
                  cov: BlockCovariance, blocks=ALL_BLOCKS, var_floor=VAR_FLOOR):
    """One affine M-step: weighted normal-equation solve for the shared 2x2 map.

    Whitening and location centering are identical to the rigid case. A
    near-singular Gram matrix gets a small ridge proportional to its trace.
    """
    n = data.count
    check_inlier_mass(post, n)
    n_p = post.n_p
    px = post.p.sum(axis=0)
    py = post.p.sum(axis=1)

    mu_x = data.block(2) @ px / n_p
    mu_y = model.block(2) @ py / n_p

    cross = np.zeros((2, 2))
    gram = np.zeros((2, 2))
    for blk in blocks:
        xb = data.block(blk).copy()
        yb = model.block(blk).copy()
        if blk == 2:
            xb -= mu_x[:, None]
            yb -= mu_y[:, None]
        var = cov.variance(blk)
        cross += (xb @ post.p.T @ yb.T) / var
        gram += (yb * py) @ yb.T / var

    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > GRAM_CONDITION_LIMIT:
        ridge = RIDGE_FRACTION * np.trace(gram)
        if ridge <= 0:
            raise SingularGram("degenerate model geometry: zero Gram matrix")
        gram = gram + ridge * np.eye(2)

    b = np.linalg.solve(gram.T, cross.T).T  # B = cross @ gram^-1
    t = mu_x - b @ mu_y if 2 in blocks else np.zeros(2)

    new_cov = cov
    for blk in blocks:
        xb = data.block(blk)
        yb = b @ model.block(blk)
        if blk == 2:
            yb = yb + t[:, None]
        resid = (float(np.einsum('in,n,in->', xb, px, xb))
                 - 2.0 * float(np.einsum('in,mn,im->', xb, post.p, yb))
                 + float(np.einsum('im,m,im->', yb, py, yb)))
        new_cov = new_cov.with_variance(blk, max(resid / (2.0 * n_p), var_floor))

    return AffineParams(b=b, t=t), new_cov
