"""EM driver: initialization, E/M alternation, stopping, correspondences."""

from dataclasses import dataclass, replace

import numpy as np

from .affine import AffineParams, affine_m_step
from .frames import ALL_BLOCKS, LOCATION_BLOCK, FrameSet
from .mixture import (VAR_FLOOR, MixtureConfig, PosteriorMatrix,
                      e_step, init_covariance, neg_log_likelihood, update_omega)
from .nonrigid import (DEFAULT_BETA, DEFAULT_LAMBDA, KERNEL_MODES, NonRigidParams,
                       nonrigid_m_step)
from .rigid import DegenerateResponsibility, RigidParams, rigid_m_step

MODEL_KINDS = ("rigid", "affine", "nonrigid")


@dataclass(frozen=True)
class EngineConfig:
    model_kind: str = "rigid"
    omega_init: float = 0.1
    lam: float = DEFAULT_LAMBDA
    beta: float = DEFAULT_BETA
    match_threshold: float = 0.8
    tol: float = 1e-5
    max_iters: int = 150
    omega_burn_in: int = 5
    location_only: bool = False
    one_to_one: bool = False
    kernel_mode: str = "per_block"
    var_floor: float = VAR_FLOOR

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        if not 0.0 < self.match_threshold < 1.0:
            raise ValueError("match_threshold must be in (0, 1)")
        if self.tol <= 0 or self.max_iters < 1:
            raise ValueError("tol must be positive and max_iters >= 1")
        if self.omega_burn_in < 0:
            raise ValueError("omega_burn_in must be >= 0")
        if self.kernel_mode not in KERNEL_MODES:
            raise ValueError(f"unknown kernel_mode {self.kernel_mode!r}")

    @property
    def blocks(self):
        return LOCATION_BLOCK if self.location_only else ALL_BLOCKS


@dataclass(frozen=True)
class Normalization:
    """Location normalization applied before EM: each set centered at its own
    mean, both scaled by one shared RMS factor. Shape blocks are untouched,
    which keeps the shared per-block 2x2 map identical in both coordinate
    systems."""

    mu_data: np.ndarray
    mu_model: np.ndarray
    scale: float

    @classmethod
    def fit(cls, data: FrameSet, model: FrameSet):
        mu_d = data.block(2).mean(axis=1)
        mu_m = model.block(2).mean(axis=1)
        total = (np.sum((data.block(2) - mu_d[:, None]) ** 2)
                 + np.sum((model.block(2) - mu_m[:, None]) ** 2))
        scale = np.sqrt(total / (data.count + model.count))
        if scale <= 0.0:
            scale = 1.0
        return cls(mu_data=mu_d, mu_model=mu_m, scale=float(scale))

    def normalize(self, fs: FrameSet, mu) -> FrameSet:
        out = fs.vecs.copy()
        out[4:6] = (out[4:6] - mu[:, None]) / self.scale
        return FrameSet(out)

    def restore_locations(self, fs: FrameSet) -> FrameSet:
        """Map a frame set aligned in normalized data coordinates back to the
        raw data frame."""
        out = fs.vecs.copy()
        out[4:6] = out[4:6] * self.scale + self.mu_data[:, None]
        return FrameSet(out)

    def denormalize_params(self, params):
        """Re-express a fitted rigid/affine transform in raw coordinates; the
        linear part is unchanged, only the translation moves."""
        if isinstance(params, RigidParams):
            t = (self.mu_data - params.s * params.r @ self.mu_model
                 + self.scale * params.t)
            return replace(params, t=t)
        if isinstance(params, AffineParams):
            t = self.mu_data - params.b @ self.mu_model + self.scale * params.t
            return replace(params, t=t)
        return params  # non-rigid fields stay in normalized coordinates


@dataclass(frozen=True)
class MatchResult:
    correspondences: tuple
    transform: object
    posterior: PosteriorMatrix
    iterations: int
    q_trace: tuple
    converged: bool
    aligned_model: FrameSet = None
    normalization: Normalization = None
    degenerate: bool = False


def extract_correspondences(post: PosteriorMatrix, threshold: float,
                            one_to_one: bool = False):
    """All (model_index, data_index, posterior) with posterior strictly above
    the threshold; optionally a greedy uniqueness pass in descending order."""
    ms, ns = np.nonzero(post.p > threshold)
    pairs = [(int(m), int(n), float(post.p[m, n])) for m, n in zip(ms, ns)]
    pairs.sort(key=lambda c: (-c[2], c[0], c[1]))
    if not one_to_one:
        return tuple(pairs)
    used_m, used_n, kept = set(), set(), []
    for m, n, p in pairs:
        if m in used_m or n in used_n:
            continue
        used_m.add(m)
        used_n.add(n)
        kept.append((m, n, p))
    return tuple(kept)


def _initial_params(model: FrameSet, cfg: EngineConfig):
    if cfg.model_kind == "rigid":
        return RigidParams.identity()
    if cfg.model_kind == "affine":
        return AffineParams.identity()
    return NonRigidParams.zero(model, beta=cfg.beta, lam=cfg.lam,
                               kernel_mode=cfg.kernel_mode)


def _m_step(data, model, post, cov, params, cfg):
    if cfg.model_kind == "rigid":
        return rigid_m_step(data, model, post, cov, blocks=cfg.blocks,
                            var_floor=cfg.var_floor)
    if cfg.model_kind == "affine":
        return affine_m_step(data, model, post, cov, blocks=cfg.blocks,
                             var_floor=cfg.var_floor)
    return nonrigid_m_step(data, model, post, cov, params, blocks=cfg.blocks,
                           var_floor=cfg.var_floor)


def register(data: FrameSet, model: FrameSet, cfg: EngineConfig) -> MatchResult:
    """Align the model set to the data set by EM with the configured solver.

    Stops when the objective changes by less than cfg.tol or max_iters is hit.
    A degenerate responsibility collapse terminates early with the last valid
    state and converged=False.

    Locations are normalized internally (per-set centering, one shared scale);
    the returned rigid/affine transform is re-expressed in raw coordinates and
    aligned_model carries the transformed model in the raw data frame.
    """
    norm = Normalization.fit(data, model)
    data = norm.normalize(data, norm.mu_data)
    model = norm.normalize(model, norm.mu_model)

    blocks = cfg.blocks
    mix = MixtureConfig(omega=cfg.omega_init, var_floor=cfg.var_floor)
    cov = init_covariance(data, model, blocks=blocks, var_floor=cfg.var_floor)
    params = _initial_params(model, cfg)

    q_trace = []
    post = None
    converged = False
    degenerate = False
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        transformed = params.transform_model(model)
        post = e_step(data, transformed, cov, mix, blocks=blocks)
        try:
            new_params, new_cov = _m_step(data, model, post, cov, params, cfg)
        except DegenerateResponsibility:
            degenerate = True
            break
        params, cov = new_params, new_cov
        # The first few posteriors reflect the flat initial covariance, and
        # re-estimating the outlier weight from them can lock the mixture
        # into an all-outlier fixed point; hold omega until the variances
        # have adapted, then apply the per-iteration update.
        if iterations > cfg.omega_burn_in:
            mix = replace(mix, omega=update_omega(post, data.count, mix))
        # monotone objective: neg log-likelihood, plus the displacement-field
        # penalty in the non-rigid case (the quantity its M-step minimizes)
        q = neg_log_likelihood(data, params.transform_model(model), cov, mix,
                               blocks=blocks)
        if cfg.model_kind == "nonrigid":
            q += 0.5 * cfg.lam * params.bending_energy()
        q_trace.append(q)
        if len(q_trace) >= 2 and abs(q_trace[-1] - q_trace[-2]) < cfg.tol:
            converged = True
            break

    corr = extract_correspondences(post, cfg.match_threshold, cfg.one_to_one)
    aligned = norm.restore_locations(params.transform_model(model))
    return MatchResult(correspondences=corr,
                       transform=norm.denormalize_params(params),
                       posterior=post, iterations=iterations,
                       q_trace=tuple(q_trace), converged=converged,
                       aligned_model=aligned, normalization=norm,
                       degenerate=degenerate)
