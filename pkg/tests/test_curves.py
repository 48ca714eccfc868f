import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pelastica.curves import (
    PinnedBoundary,
    SampledCurve,
    check_sigma,
    concat,
    concat_all,
    embed,
    evaluate,
    loop,
    plane_rotation,
    prepend_point,
    reflect_planar,
    restrict,
    rotate_tail_about_axis,
    scale,
    segment,
    snap,
    transform,
)
from pelastica.errors import DomainError, InputError
from pelastica.special import PContext, sech_p

CTX3 = PContext(3)


def test_segment_examples():
    c = segment(2.0, 2)
    assert np.allclose(c.end, [-2.0, 0.0], atol=1e-15)
    assert np.all(c.curv == 0.0)
    z = segment(0.0, 3)
    assert z.n == 1 and np.all(z.pos == 0.0) and z.length == 0.0


def test_segment_rejects_negative_length():
    with pytest.raises(InputError):
        segment(-1.0, 2)


def test_loop_vertex_and_ends():
    c = loop(CTX3, [0, 1], 2)
    K = CTX3.K
    assert abs(c.length - 2 * K) < 1e-12
    _, t, k, _ = evaluate(c, K)
    assert np.allclose(t, [1, 0], atol=1e-7)
    assert np.allclose(k, [0, -2], atol=1e-7)
    for s in (0.0, c.length):
        _, t, k, _ = evaluate(c, s)
        assert np.allclose(t, [-1, 0], atol=1e-7)
        assert np.allclose(k, 0, atol=1e-7)
    assert np.allclose(c.end - c.start, [-2 * K / (3 - 1), 0], atol=1e-8)


def test_loop_apex_height():
    for p in (3.0, 5.0):
        ctx = PContext(p)
        c = loop(ctx, [0, 1], 2)
        assert abs(np.max(c.pos[:, 1]) - p / (p - 1)) < 1e-9


def test_loop_samples_unit_speed_and_consistent():
    c = loop(PContext(4), [0, 0, 1], 3)
    assert np.allclose(np.linalg.norm(c.tan, axis=1), 1.0, atol=1e-12)
    # curvature is normal to the tangent
    assert np.max(np.abs(np.sum(c.tan * c.curv, axis=1))) < 1e-12
    # positions integrate the tangents (trapezoid check at a fine grid)
    steps = 0.5 * (c.tan[1:] + c.tan[:-1]) * np.diff(c.s)[:, None]
    assert np.max(np.abs(c.pos[0] + np.cumsum(steps, axis=0) - c.pos[1:])) < 1e-4
    assert np.allclose(np.linalg.norm(c.curv, axis=1), 2 * sech_p(PContext(4), c.s - PContext(4).K), atol=1e-12)


def test_check_sigma():
    with pytest.raises(InputError):
        check_sigma([1, 0], 2)
    with pytest.raises(InputError):
        check_sigma([0, 2], 2)
    assert np.allclose(check_sigma([0, 0.6, 0.8], 3), [0, 0.6, 0.8])


def test_concat_collinear_segments():
    c = concat(segment(1.0, 2), segment(1.0, 2))
    ref = segment(2.0, 2)
    assert abs(c.length - 2.0) < 1e-15
    assert np.allclose(c.end, ref.end, atol=1e-15)
    for s in np.linspace(0, 2, 9):
        assert np.allclose(evaluate(c, s)[0], evaluate(ref, s)[0], atol=1e-14)


def test_concat_endpoint_identity():
    a = loop(CTX3, [0, 1], 2)
    b = transform(segment(1.5, 2), plane_rotation(2, 0.3, 0, 1))
    c = concat(a, b)
    assert np.allclose(c.end, a.end + (b.end - b.start), atol=1e-14)
    assert abs(c.length - a.length - b.length) < 1e-14


def test_concat_associative():
    a = loop(CTX3, [0, 1], 2)
    b = segment(0.7, 2)
    c = loop(CTX3, [0, -1], 2)
    left = concat(concat(a, b), c)
    right = concat(a, concat(b, c))
    assert np.max(np.abs(left.s - right.s)) < 1e-12
    assert np.max(np.abs(left.pos - right.pos)) < 1e-12


def test_concat_dimension_mismatch():
    with pytest.raises(InputError):
        concat(segment(1, 2), segment(1, 3))


def test_junction_nodes_are_duplicated():
    c = concat(segment(1.0, 2), loop(CTX3, [0, 1], 2))
    assert c.junctions.size == 1
    i = c.junctions[0]
    assert c.s[i] == c.s[i + 1]
    assert len(c.pieces()) == 2


def test_prepend_point():
    c = loop(CTX3, [0, 1], 2)
    same = prepend_point(c.start, c)
    assert np.array_equal(same.pos, c.pos)
    P = np.array([2.0, -1.0])
    moved = prepend_point(P, c)
    assert np.array_equal(moved.start, P)
    assert np.array_equal(moved.curv, c.curv)
    assert np.array_equal(moved.tan, c.tan)


def test_rotate_tail_identity_and_isometry():
    c = embed(concat(segment(1.0, 2), loop(CTX3, [0, 1], 2)), 3)
    s0 = 1.0 + CTX3.K
    same = rotate_tail_about_axis(c, s0, 0.0)
    assert np.allclose(same.pos, c.pos, atol=1e-15)
    r = rotate_tail_about_axis(c, s0, 0.4)
    p0 = evaluate(c, s0)[0]
    for s in np.linspace(s0, c.length, 13):
        d_rot = np.linalg.norm(evaluate(r, s)[0] - p0)
        d_orig = np.linalg.norm(evaluate(c, s)[0] - p0)
        assert abs(d_rot - d_orig) < 1e-12


def test_rotate_tail_tangent_jump_formula():
    c = embed(concat(segment(1.0, 2), loop(CTX3, [0, 1], 2)), 3)
    s0 = 1.0 + 0.5 * CTX3.K
    phi = 0.3
    r = rotate_tail_about_axis(c, s0, phi)
    t_left = evaluate(r, s0, "left")[1]
    t_right = evaluate(r, s0, "right")[1]
    t0 = evaluate(c, s0)[1]
    expect = 2 * abs(math.sin(phi / 2)) * np.linalg.norm(t0[1:])
    assert abs(np.linalg.norm(t_right - t_left) - expect) < 1e-10
    # at the vertex the tangent is e_1 and nothing jumps
    rv = rotate_tail_about_axis(c, 1.0 + CTX3.K, phi)
    s = 1.0 + CTX3.K
    assert np.linalg.norm(evaluate(rv, s, "left")[1] - evaluate(rv, s, "right")[1]) < 1e-12


def test_rotate_tail_requires_3d():
    with pytest.raises(Exception):
        rotate_tail_about_axis(segment(1, 2), 0.5, 0.1)


def test_reflect_planar():
    c = loop(CTX3, [0, 1], 2)
    r = reflect_planar(c)
    assert np.array_equal(r.start, c.start)
    assert np.allclose(r.tan[0], [1, 0], atol=1e-15)
    back = reflect_planar(r)
    assert np.max(np.abs(back.pos - c.pos)) < 1e-12
    assert np.max(np.abs(back.tan - c.tan)) < 1e-12


def test_restrict_and_evaluate():
    c = concat_all([segment(1.0, 2), loop(CTX3, [0, 1], 2), segment(0.5, 2)])
    part = restrict(c, 0.5, 1.0 + CTX3.K)
    assert abs(part.length - (0.5 + CTX3.K)) < 1e-12
    assert np.allclose(part.start, evaluate(c, 0.5)[0], atol=1e-12)
    assert np.allclose(part.end, evaluate(c, 1.0 + CTX3.K)[0], atol=1e-12)


def test_evaluate_interpolation_accuracy():
    ctx = PContext(3)
    c = loop(ctx, [0, 1], 2)
    fine = loop(ctx, [0, 1], 2, n_half=4096)
    for s in np.linspace(0.013, c.length - 0.013, 17):
        assert np.linalg.norm(evaluate(c, s)[0] - evaluate(fine, s)[0]) < 1e-10


def test_evaluate_out_of_range():
    c = segment(1.0, 2)
    with pytest.raises(InputError):
        evaluate(c, 1.5)
    assert snap(c, 1.0 + 1e-14) == 1.0


def test_scale_and_transform():
    c = loop(CTX3, [0, 1], 2)
    big = scale(c, 2.0)
    assert abs(big.length - 2 * c.length) < 1e-12
    assert np.allclose(np.linalg.norm(big.curv, axis=1), 0.5 * np.linalg.norm(c.curv, axis=1))
    R = plane_rotation(2, 0.7, 0, 1)
    t = transform(c, R)
    assert np.allclose(np.linalg.norm(t.curv, axis=1), np.linalg.norm(c.curv, axis=1))


def test_sampled_curve_validation():
    with pytest.raises(InputError):
        SampledCurve([0, 1, 0.5], np.zeros((3, 2)), np.zeros((3, 2)), np.zeros((3, 2)))
    with pytest.raises(InputError):
        SampledCurve([0, 1, 1, 1], np.zeros((4, 2)), np.zeros((4, 2)), np.zeros((4, 2)))
    with pytest.raises(InputError):
        SampledCurve([0, 1], np.zeros((2, 2)), np.zeros((2, 3)), np.zeros((2, 2)))


def test_pinned_boundary():
    b = PinnedBoundary([0, 0], [1, 0], 2.0, 2)
    assert b.ell == 1.0 and b.ratio == 0.5
    with pytest.raises(DomainError):
        PinnedBoundary([0, 0], [3, 0], 2.0, 2)


@settings(max_examples=30, deadline=None)
@given(
    la=st.one_of(st.just(0.0), st.floats(1e-9, 3.0)),
    lb=st.one_of(st.just(0.0), st.floats(1e-9, 3.0)),
    ang=st.floats(-3.0, 3.0),
)
def test_property_concat_length_and_end(la, lb, ang):
    a = segment(la, 2)
    b = transform(segment(lb, 2), plane_rotation(2, ang, 0, 1))
    c = concat(a, b)
    assert abs(c.length - (la + lb)) < 1e-12
    assert np.allclose(c.end, a.end + b.end - b.start, atol=1e-12)
