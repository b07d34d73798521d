import numpy as np
import pytest

from framereg.frames import (FeatureFrame, FrameSet, FrameVec6, SingularFrame,
                             apply_transform, from_vec6, relative_transform,
                             to_vec6)


def random_frame(rng):
    while True:
        a = rng.normal(size=(2, 2))
        if abs(np.linalg.det(a)) > 1e-3:
            return FeatureFrame(a=a, x=rng.normal(scale=10, size=2))


def test_to_vec6_identity_map():
    v = to_vec6(FeatureFrame(a=np.eye(2), x=[3, 4]))
    assert np.array_equal(v.dot, [1, 0])
    assert np.array_equal(v.ddot, [0, 1])
    assert np.array_equal(v.tdot, [3, 4])


def test_to_vec6_rotation_read_column_wise():
    v = to_vec6(FeatureFrame(a=[[0, -1], [1, 0]], x=[0, 0]))
    assert np.array_equal(v.dot, [0, 1])
    assert np.array_equal(v.ddot, [-1, 0])


def test_vec6_round_trip_exact():
    rng = np.random.default_rng(0)
    for _ in range(50):
        f = random_frame(rng)
        assert from_vec6(to_vec6(f)) == f


def test_relative_transform_self_is_identity():
    rng = np.random.default_rng(1)
    f = random_frame(rng)
    rel = relative_transform(f, f)
    assert np.allclose(rel.b, np.eye(2), atol=1e-12)
    assert np.allclose(rel.t, 0, atol=1e-10)


def test_relative_transform_against_identity_model():
    rng = np.random.default_rng(2)
    f = random_frame(rng)
    ident = FeatureFrame(a=np.eye(2), x=[0, 0])
    rel = relative_transform(f, ident)
    assert np.array_equal(rel.b, f.a)
    assert np.array_equal(rel.t, f.x)


def test_relative_transform_matches_homogeneous_product():
    # oracle: full 3x3 homogeneous multiply X @ inv(Y)
    x = FeatureFrame(a=[[2, 0], [0, 2]], x=[1, 0])
    y = FeatureFrame(a=np.eye(2), x=[0, 1])
    rel = relative_transform(x, y)
    assert np.allclose(rel.b, [[2, 0], [0, 2]])
    assert np.allclose(rel.t, [1, -2])

    rng = np.random.default_rng(3)
    for _ in range(20):
        xf, yf = random_frame(rng), random_frame(rng)
        hx = np.eye(3)
        hx[:2, :2], hx[:2, 2] = xf.a, xf.x
        hy = np.eye(3)
        hy[:2, :2], hy[:2, 2] = yf.a, yf.x
        hrel = hx @ np.linalg.inv(hy)
        rel = relative_transform(xf, yf)
        assert np.allclose(rel.b, hrel[:2, :2], atol=1e-9)
        assert np.allclose(rel.t, hrel[:2, 2], atol=1e-9)


def test_relative_transform_singular_model_raises():
    x = FeatureFrame(a=np.eye(2), x=[0, 0])
    y = FeatureFrame(a=[[1, 1], [1, 1 + 1e-14]], x=[0, 0])
    with pytest.raises(SingularFrame):
        relative_transform(x, y)


def test_apply_transform_identity_and_translation():
    v = FrameVec6(dot=np.array([1.0, 2]), ddot=np.array([3.0, 4]),
                  tdot=np.array([5.0, 6]))
    rel = relative_transform(FeatureFrame(a=np.eye(2), x=[0, 0]),
                             FeatureFrame(a=np.eye(2), x=[0, 0]))
    out = apply_transform(rel, v)
    assert np.allclose(out.as_array(), v.as_array())

    from framereg.frames import RelativeTransform
    shift = RelativeTransform(b=np.eye(2), t=np.array([5.0, 7.0]))
    out = apply_transform(shift, v)
    assert np.array_equal(out.dot, v.dot)
    assert np.array_equal(out.ddot, v.ddot)
    assert np.allclose(out.tdot, v.tdot + [5, 7])


def test_relative_then_apply_recovers_frame():
    rng = np.random.default_rng(4)
    for _ in range(50):
        xf, yf = random_frame(rng), random_frame(rng)
        rel = relative_transform(xf, yf)
        out = apply_transform(rel, to_vec6(yf))
        expect = to_vec6(xf).as_array()
        assert np.allclose(out.as_array(), expect,
                           rtol=1e-10, atol=1e-10 * max(1, np.abs(expect).max()))


def test_frameset_blocks_and_round_trip():
    rng = np.random.default_rng(5)
    frames = [random_frame(rng) for _ in range(7)]
    fs = FrameSet.from_frames(frames)
    assert fs.count == 7
    assert fs.block(2).shape == (2, 7)
    for i, f in enumerate(frames):
        assert fs.frame(i) == f


def test_frameset_rejects_bad_shapes():
    with pytest.raises(ValueError):
        FrameSet(np.zeros((5, 3)))
    with pytest.raises(ValueError):
        FrameSet(np.zeros((6, 0)))
