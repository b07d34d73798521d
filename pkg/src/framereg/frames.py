"""Affine feature frames and their 6-D vector form.

A frame is a 2x2 linear map (shape/scale/orientation) plus a 2-D location.
Vectorization is column-major: [a11, a21, a12, a22, x, y], split into three
2-D blocks (first column, second column, location).
"""

from dataclasses import dataclass

import numpy as np

DET_FLOOR = 1e-12

# row slices of the three 2-D blocks inside a 6-vector
DOT = slice(0, 2)
DDOT = slice(2, 4)
TDOT = slice(4, 6)
BLOCK_SLICES = (DOT, DDOT, TDOT)
ALL_BLOCKS = (0, 1, 2)
LOCATION_BLOCK = (2,)


class SingularFrame(Exception):
    """Raised when a frame's linear map is numerically singular."""


@dataclass(frozen=True)
class FeatureFrame:
    """One co-variant feature: linear map `a` (2x2) and location `x` (2,)."""

    a: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(2, 2)
        x = np.asarray(self.x, dtype=float).reshape(2)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "x", x)
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(x))):
            raise ValueError("frame entries must be finite")

    def __eq__(self, other):
        if not isinstance(other, FeatureFrame):
            return NotImplemented
        return np.array_equal(self.a, other.a) and np.array_equal(self.x, other.x)


@dataclass(frozen=True)
class FrameVec6:
    """The 6-D vectorized frame split into its three 2-D blocks."""

    dot: np.ndarray
    ddot: np.ndarray
    tdot: np.ndarray

    def as_array(self):
        return np.concatenate([self.dot, self.ddot, self.tdot])


@dataclass(frozen=True)
class RelativeTransform:
    """Affine transform (b, t) mapping one frame onto another."""

    b: np.ndarray
    t: np.ndarray


def to_vec6(f: FeatureFrame) -> FrameVec6:
    """Vectorize a frame column-wise: (col 1 of a, col 2 of a, location)."""
    return FrameVec6(dot=f.a[:, 0].copy(), ddot=f.a[:, 1].copy(), tdot=f.x.copy())


def from_vec6(v: FrameVec6) -> FeatureFrame:
    """Reassemble a frame from its block vector form (inverse of to_vec6)."""
    a = np.column_stack([v.dot, v.ddot])
    return FeatureFrame(a=a, x=np.asarray(v.tdot, dtype=float).copy())


class FrameSet:
    """Ordered collection of vectorized frames, stored as a 6xN array.

    Row layout matches the frame vectorization: rows 0:2 are the dot block,
    2:4 the ddot block, 4:6 the location block.
    """

    def __init__(self, vecs):
        vecs = np.asarray(vecs, dtype=float)
        if vecs.ndim != 2 or vecs.shape[0] != 6 or vecs.shape[1] < 1:
            raise ValueError(f"expected a 6xN array with N >= 1, got {vecs.shape}")
        self.vecs = vecs

    @classmethod
    def from_frames(cls, frames):
        cols = [to_vec6(f).as_array() if isinstance(f, FeatureFrame) else f.as_array()
                for f in frames]
        return cls(np.column_stack(cols))

    @property
    def count(self):
        return self.vecs.shape[1]

    def block(self, i):
        """The i-th 2xN block (0 = dot, 1 = ddot, 2 = tdot)."""
        return self.vecs[BLOCK_SLICES[i]]

    def frame(self, n) -> FeatureFrame:
        v = self.vecs[:, n]
        return from_vec6(FrameVec6(dot=v[0:2], ddot=v[2:4], tdot=v[4:6]))

    def __len__(self):
        return self.count

    def __eq__(self, other):
        if not isinstance(other, FrameSet):
            return NotImplemented
        return np.array_equal(self.vecs, other.vecs)


def relative_transform(x_frame: FeatureFrame, y_frame: FeatureFrame,
                       det_floor: float = DET_FLOOR) -> RelativeTransform:
    """Transform carrying y_frame onto x_frame (homogeneous product X Y^-1)."""
    det = float(np.linalg.det(y_frame.a))
    if abs(det) < det_floor:
        raise SingularFrame(f"model frame linear map is singular (det={det:g})")
    b = x_frame.a @ np.linalg.inv(y_frame.a)
    t = x_frame.x - b @ y_frame.x
    return RelativeTransform(b=b, t=t)


def apply_transform(t: RelativeTransform, v: FrameVec6) -> FrameVec6:
    """Apply (b, t) block-diagonally: b on every block, translation on location."""
    return FrameVec6(dot=t.b @ v.dot, ddot=t.b @ v.ddot, tdot=t.b @ v.tdot + t.t)
