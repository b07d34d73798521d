"""Synthetic scenes with known ground truth, including outlier injection.

Inlier model frames are sampled inside a square extent with well-conditioned
shape matrices; data inliers are the transformed model frames plus per-block
Gaussian noise. Outliers are appended to both sets, drawn from the same
marginal distributions but carrying no correspondence.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .affine import AffineParams
from .frames import FrameSet
from .rigid import RigidParams

TRANSFORM_KINDS = ("rigid", "affine", "nonrigid")


class InvalidSpec(Exception):
    """A scene specification field is out of range."""


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class WarpField:
    """Smooth displacement V(z) = offset + gain*z + amplitude*[sin(k z2), sin(k z1)].

    The frame map follows the warp's local Jacobian so frames stay co-variant:
    location moves by V, the shape matrix is multiplied by I + dV/dz.
    """

    offset: tuple = (0.0, 0.0)
    gain: float = 0.0
    amplitude: float = 0.0
    wavelength: float = 1.0

    def displacement(self, z: np.ndarray) -> np.ndarray:
        """Displacement at the 2xK column set z."""
        k = 2.0 * math.pi / self.wavelength
        wave = self.amplitude * np.vstack([np.sin(k * z[1]), np.sin(k * z[0])])
        return np.asarray(self.offset, dtype=float)[:, None] + self.gain * z + wave

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        """dV/dz at each column of z, shape (K, 2, 2)."""
        k = 2.0 * math.pi / self.wavelength
        jac = np.zeros((z.shape[1], 2, 2))
        jac[:, 0, 0] = jac[:, 1, 1] = self.gain
        jac[:, 0, 1] = self.amplitude * k * np.cos(k * z[1])
        jac[:, 1, 0] = self.amplitude * k * np.cos(k * z[0])
        return jac

    def transform_model(self, model: FrameSet) -> FrameSet:
        return apply_nonrigid_truth(model, self)


def apply_nonrigid_truth(model: FrameSet, warp: WarpField) -> FrameSet:
    """Warp a frame set: displace locations, map shapes by I + Jacobian."""
    loc = model.block(2)
    out = model.vecs.copy()
    out[4:6] = loc + warp.displacement(loc)
    local = np.eye(2)[None] + warp.jacobian(loc)  # K x 2 x 2
    for b in (0, 1):
        cols = model.block(b).T[:, :, None]  # K x 2 x 1
        out[2 * b:2 * b + 2] = (local @ cols)[:, :, 0].T
    return FrameSet(out)


@dataclass(frozen=True)
class SceneSpec:
    n_inliers: int = 100
    outlier_ratio: float = 0.0
    transform_kind: str = "rigid"
    # rigid parameters
    theta: float = 0.0
    scale: float = 1.0
    translation: tuple = (0.0, 0.0)
    # affine parameter (used when transform_kind == "affine")
    affine_b: tuple = ((1.0, 0.0), (0.0, 1.0))
    # nonrigid parameters
    warp: WarpField = field(default_factory=WarpField)
    noise_sigma: tuple = (0.0, 0.0, 0.0)
    seed: int = 0
    spatial_extent: float = 100.0
    scale_range: tuple = (0.5, 2.0)
    shear_max: float = 0.3

    def __post_init__(self):
        if self.n_inliers < 3:
            raise InvalidSpec("n_inliers must be at least 3")
        if not 0.0 <= self.outlier_ratio < 1.0:
            raise InvalidSpec("outlier_ratio must be in [0, 1)")
        if self.transform_kind not in TRANSFORM_KINDS:
            raise InvalidSpec(f"unknown transform_kind {self.transform_kind!r}")
        sig = self.noise_sigma
        if np.isscalar(sig):
            sig = (float(sig),) * 3
        sig = tuple(float(v) for v in sig)
        if len(sig) != 3 or any(v < 0 for v in sig):
            raise InvalidSpec("noise_sigma must be three non-negative values")
        object.__setattr__(self, "noise_sigma", sig)
        if self.spatial_extent <= 0:
            raise InvalidSpec("spatial_extent must be positive")
        if self.transform_kind == "rigid" and self.scale <= 0:
            raise InvalidSpec("scale must be positive")

    def n_outliers(self):
        return math.ceil(self.n_inliers * self.outlier_ratio
                         / (1.0 - self.outlier_ratio))

    def true_transform(self):
        if self.transform_kind == "rigid":
            return RigidParams(s=self.scale, r=rotation(self.theta),
                               t=np.asarray(self.translation, dtype=float))
        if self.transform_kind == "affine":
            return AffineParams(b=np.asarray(self.affine_b, dtype=float),
                                t=np.asarray(self.translation, dtype=float))
        return self.warp


@dataclass(frozen=True)
class Scene:
    data: FrameSet
    model: FrameSet
    ground_truth: frozenset
    true_transform: object


def _sample_frames(rng, count, extent, scale_range, shear_max):
    """Model-side marginal: uniform locations, shapes s*R(theta)*Shear(k)."""
    vecs = np.empty((6, count))
    vecs[4:6] = rng.uniform(0.0, extent, size=(2, count))
    s = rng.uniform(scale_range[0], scale_range[1], size=count)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=count)
    k = rng.uniform(-shear_max, shear_max, size=count)
    c, sn = np.cos(theta), np.sin(theta)
    # columns of s*R(theta)*[[1, k], [0, 1]]
    vecs[0] = s * c
    vecs[1] = s * sn
    vecs[2] = s * (c * k - sn)
    vecs[3] = s * (sn * k + c)
    return FrameSet(vecs)


def _add_noise(fs: FrameSet, rng, noise_sigma):
    out = fs.vecs.copy()
    for b, sig in enumerate(noise_sigma):
        if sig > 0:
            out[2 * b:2 * b + 2] += rng.normal(0.0, sig, size=(2, fs.count))
    return FrameSet(out)


def generate(spec: SceneSpec) -> Scene:
    """Build a scene deterministically from its spec and seed."""
    rng = np.random.default_rng(spec.seed)
    truth = spec.true_transform()

    model_in = _sample_frames(rng, spec.n_inliers, spec.spatial_extent,
                              spec.scale_range, spec.shear_max)
    data_in = _add_noise(truth.transform_model(model_in), rng, spec.noise_sigma)

    n_out = spec.n_outliers()
    if n_out > 0:
        model_out = _sample_frames(rng, n_out, spec.spatial_extent,
                                   spec.scale_range, spec.shear_max)
        # data outliers live in the data cloud but match nothing: fresh frames
        # pushed through the same transform, independent of the model outliers
        data_out = _add_noise(
            truth.transform_model(
                _sample_frames(rng, n_out, spec.spatial_extent,
                               spec.scale_range, spec.shear_max)),
            rng, spec.noise_sigma)
        model = FrameSet(np.hstack([model_in.vecs, model_out.vecs]))
        data = FrameSet(np.hstack([data_in.vecs, data_out.vecs]))
    else:
        model, data = model_in, data_in

    truth_pairs = frozenset((i, i) for i in range(spec.n_inliers))
    return Scene(data=data, model=model, ground_truth=truth_pairs,
                 true_transform=truth)
