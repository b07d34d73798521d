"""Shared mixture-model machinery: block covariance, responsibilities, objective.

The data set plays the role of observations and the (transformed) model set
the role of mixture centroids; a uniform component with weight omega absorbs
outliers. All computations can be restricted to a subset of the three 2-D
blocks (`blocks`), which is how the location-only baseline is realized.
"""

from dataclasses import dataclass, replace

import numpy as np

from .frames import ALL_BLOCKS, FrameSet

VAR_FLOOR = 1e-10
OMEGA_BOUNDS = (1e-4, 1.0 - 1e-4)


@dataclass(frozen=True)
class BlockCovariance:
    """Isotropic per-block variances (dot, ddot, tdot)."""

    sig_dot2: float
    sig_ddot2: float
    sig_tdot2: float

    def as_tuple(self):
        return (self.sig_dot2, self.sig_ddot2, self.sig_tdot2)

    def variance(self, block):
        return self.as_tuple()[block]

    def with_variance(self, block, value):
        field = ("sig_dot2", "sig_ddot2", "sig_tdot2")[block]
        return replace(self, **{field: value})


@dataclass(frozen=True)
class MixtureConfig:
    """Outlier weight and numerical safeguards for the mixture."""

    omega: float = 0.1
    omega_bounds: tuple = OMEGA_BOUNDS
    var_floor: float = VAR_FLOOR

    def __post_init__(self):
        lo, hi = self.omega_bounds
        if not (0.0 < lo <= self.omega <= hi < 1.0):
            raise ValueError(f"omega={self.omega} outside bounds {self.omega_bounds}")


@dataclass(frozen=True)
class PosteriorMatrix:
    """MxN responsibilities plus the per-data-point outlier mass."""

    p: np.ndarray
    outlier_mass: np.ndarray

    @property
    def n_p(self):
        """Total soft inlier mass (1^T P 1)."""
        return float(self.p.sum())


def init_covariance(data: FrameSet, model: FrameSet, blocks=ALL_BLOCKS,
                    var_floor: float = VAR_FLOOR) -> BlockCovariance:
    """Initial per-block variance: mean squared cross-distance over all pairs.

    sigma_b^2 = 1/(2NM) sum_{n,m} ||x_bn - y_bm||^2, clamped to var_floor.
    Blocks outside `blocks` get the floor (they never enter the distances).
    """
    n, m = data.count, model.count
    variances = [var_floor] * 3
    for b in blocks:
        xb, yb = data.block(b), model.block(b)
        # sum ||x - y||^2 = M*sum|x|^2 + N*sum|y|^2 - 2*<sums>
        total = (m * np.sum(xb ** 2) + n * np.sum(yb ** 2)
                 - 2.0 * np.dot(xb.sum(axis=1), yb.sum(axis=1)))
        variances[b] = max(total / (2.0 * n * m), var_floor)
    return BlockCovariance(*variances)


def _sq_dists(data: FrameSet, model: FrameSet, cov: BlockCovariance, blocks):
    """Mahalanobis-style distances d[m, n] summed over the active blocks."""
    d = np.zeros((model.count, data.count))
    for b in blocks:
        xb, yb = data.block(b), model.block(b)
        diff = (xb[:, None, :] - yb[:, :, None])  # 2 x M x N
        d += (diff ** 2).sum(axis=0) / cov.variance(b)
    return d


def outlier_constant(model_count, data_count, cov: BlockCovariance,
                     cfg: MixtureConfig, blocks=ALL_BLOCKS):
    """The constant K competing with the Gaussian sum in the responsibilities.

    K = (2*pi)^(D/2) * |Sigma|^(1/2) * omega/(1-omega) * M/N with D = 2*len(blocks)
    and |Sigma|^(1/2) the product of the active block variances.
    """
    det_sqrt = 1.0
    for b in blocks:
        det_sqrt *= cov.variance(b)
    d = 2 * len(blocks)
    return ((2.0 * np.pi) ** (d / 2.0) * det_sqrt
            * cfg.omega / (1.0 - cfg.omega) * model_count / data_count)


def e_step(data: FrameSet, transformed_model: FrameSet, cov: BlockCovariance,
           cfg: MixtureConfig, blocks=ALL_BLOCKS) -> PosteriorMatrix:
    """Responsibilities of each centroid for each data point, plus outlier mass.

    Column-wise max subtraction guards against exponent underflow; each column
    of p plus its outlier mass sums to 1 exactly by construction.
    """
    d = _sq_dists(data, transformed_model, cov, blocks)
    k = outlier_constant(transformed_model.count, data.count, cov, cfg, blocks)
    log_num = -0.5 * d  # M x N
    shift = np.maximum(log_num.max(axis=0), np.log(k))  # per data point
    num = np.exp(log_num - shift)
    log_denom = shift + np.log(num.sum(axis=0) + np.exp(np.log(k) - shift))
    p = np.exp(log_num - log_denom)
    outlier = np.exp(np.log(k) - log_denom)
    return PosteriorMatrix(p=p, outlier_mass=outlier)


def q_value(data: FrameSet, transformed_model: FrameSet, post: PosteriorMatrix,
            cov: BlockCovariance, cfg: MixtureConfig, blocks=ALL_BLOCKS) -> float:
    """Complete-data negative log-likelihood used for convergence monitoring.

    Q = 1/2 sum_mn p_mn d_mn + N_p sum_b log sigma_b^2 + (N_p D/2) log(2 pi)
        - N_p log(1-omega) - (N - N_p) log(omega)
    """
    n = data.count
    n_p = post.n_p
    d = _sq_dists(data, transformed_model, cov, blocks)
    residual = 0.5 * float((post.p * d).sum())
    log_det_sqrt = sum(np.log(cov.variance(b)) for b in blocks)
    dim = 2 * len(blocks)
    return (residual + n_p * log_det_sqrt + 0.5 * n_p * dim * np.log(2.0 * np.pi)
            - n_p * np.log(1.0 - cfg.omega) - (n - n_p) * np.log(cfg.omega))


def neg_log_likelihood(data: FrameSet, transformed_model: FrameSet,
                       cov: BlockCovariance, cfg: MixtureConfig,
                       blocks=ALL_BLOCKS) -> float:
    """Observed-data negative log-likelihood of the mixture.

    Unlike the complete-data objective of q_value, this quantity is
    guaranteed non-increasing under the EM updates, so the engine uses it
    for the iteration trace and the stopping rule.
    """
    n, m = data.count, transformed_model.count
    d = _sq_dists(data, transformed_model, cov, blocks)
    det_sqrt = 1.0
    for b in blocks:
        det_sqrt *= cov.variance(b)
    dim = 2 * len(blocks)
    log_norm = 0.5 * dim * np.log(2.0 * np.pi) + np.log(det_sqrt)
    log_gauss = -0.5 * d - log_norm  # M x N log densities
    shift = log_gauss.max(axis=0)
    log_sum = shift + np.log(np.exp(log_gauss - shift).sum(axis=0))
    log_mix = np.logaddexp(np.log(cfg.omega / n),
                           np.log((1.0 - cfg.omega) / m) + log_sum)
    return -float(log_mix.sum())


def update_omega(post: PosteriorMatrix, n: int, cfg: MixtureConfig) -> float:
    """Re-estimated outlier weight (N - N_p)/N, clamped to the configured bounds."""
    lo, hi = cfg.omega_bounds
    return float(np.clip((n - post.n_p) / n, lo, hi))
