import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mess.ellipse import (
    AngleBracket,
    BracketError,
    LikelihoodError,
    PathTuple,
    bracket_history,
    draw_anchor,
    draw_angles,
    forward_transform,
    reverse_transform,
    shrink,
    sort_with_anchor,
    valid_set,
)
from mess.prior import rotate_pair

from support import (
    NarrowGaussian,
    check_flipping,
    check_ordering,
    random_shrink_sequence,
    support_trial,
)

TWO_PI = 2 * math.pi


def test_full_bracket_draws_in_range(rng):
    d = draw_angles(AngleBracket.full(1.0), 3, rng)
    assert d.shape == (3,) and np.all((d > 0) & (d <= TWO_PI))


def test_draws_stay_in_half_open_bracket(rng):
    br = AngleBracket(2.0, 4.0, 3.0)
    d = draw_angles(br, 10_000, rng)
    assert np.all((d > 2.0) & (d <= 4.0))


def test_degenerate_bracket_draws_right_end(rng):
    br = AngleBracket(3.0, 3.0 + 5e-15, 3.0 + 5e-15)
    assert np.all(draw_angles(br, 4, rng) == br.right)


def test_draw_angles_consumes_m_uniforms():
    r1, r2 = np.random.default_rng(3), np.random.default_rng(3)
    d = draw_angles(AngleBracket(1.0, 2.0, 1.5), 5, r1)
    u = 1.0 - r2.random(5)
    assert np.allclose(d, 1.0 + u * 1.0)
    assert r1.random() == r2.random()


def test_draw_anchor_range(rng):
    a = np.array([draw_anchor(rng) for _ in range(1000)])
    assert np.all((a > 0) & (a <= TWO_PI))


@pytest.mark.parametrize(
    "left, right, anchor", [(1.0, 2.0, 1.0), (1.0, 2.0, 2.5), (-0.1, 1.0, 0.5), (0.0, 7.0, 1.0)]
)
def test_bracket_invariants(left, right, anchor):
    with pytest.raises(BracketError):
        AngleBracket(left, right, anchor)


def test_valid_set_examples():
    assert valid_set([-1.0, -3.0], -2.0).tolist() == [0]
    assert valid_set([-3.0, -3.0], -2.0).tolist() == []
    assert valid_set([-2.0], -2.0).tolist() == [0]
    assert valid_set([-np.inf, 0.0], -2.0).tolist() == [1]


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_valid_set_names_broken_index(bad):
    with pytest.raises(LikelihoodError, match="proposal 1"):
        valid_set([0.0, bad, 0.0], -1.0)


def test_shrink_examples():
    br = shrink(AngleBracket.full(3.0), [1.0, 2.0, 4.0, 5.5, 0.5])
    assert (br.left, br.right, br.anchor) == (2.0, 4.0, 3.0)
    br = shrink(AngleBracket.full(1.0), [2.0, 3.0])
    assert (br.left, br.right) == (0.0, 2.0)
    br = shrink(AngleBracket(2.0, 4.0, 3.0), [3.0])
    assert (br.left, br.right, br.anchor) == (2.0, 3.0, 3.0)
    assert br.contains(3.0)


def test_single_angle_shrink_is_ess_rule():
    br = AngleBracket.full(3.0)
    assert shrink(br, [1.0]).left == 1.0 and shrink(br, [1.0]).right == TWO_PI
    assert shrink(br, [5.0]).right == 5.0 and shrink(br, [5.0]).left == 0.0


def test_shrink_rejects_outside_angles():
    with pytest.raises(BracketError):
        shrink(AngleBracket(2.0, 4.0, 3.0), [1.0])
    with pytest.raises(BracketError):
        shrink(AngleBracket(2.0, 4.0, 3.0), [2.0])


def test_sort_with_anchor_examples():
    s = sort_with_anchor(3.0, [1.0, 5.0])
    assert s.angles.tolist() == [1.0, 3.0, 5.0] and s.anchor_position == 1
    s = sort_with_anchor(0.5, [6.0])
    assert s.angles.tolist() == [0.5, 6.0] and s.anchor_position == 0


def test_sort_with_anchor_permutation_invariant(rng):
    angles = rng.random(6) * TWO_PI
    labels = np.arange(6)
    a = sort_with_anchor(2.0, angles, labels)
    perm = rng.permutation(6)
    b = sort_with_anchor(2.0, angles[perm], labels[perm])
    assert np.array_equal(a.angles, b.angles) and np.array_equal(a.labels, b.labels)
    assert a.anchor_position == b.anchor_position


def test_sort_ties_put_anchor_first():
    s = sort_with_anchor(2.0, [2.0, 2.0], [1, 0])
    assert s.labels.tolist() == [-1, 0, 1]
    assert s.position_of(1) == 2 and s.label_at(0) == -1


def test_bracket_history_shrinks(rng):
    anchor, batches, brackets = random_shrink_sequence(rng)
    assert bracket_history(anchor, batches) == brackets


def test_shrink_sequences_ordering_and_flipping():
    rng = np.random.default_rng(2024)
    for _ in range(2000):
        anchor, batches, brackets = random_shrink_sequence(rng)
        assert check_ordering(anchor, brackets)
        assert check_flipping(rng, anchor, batches, brackets)


@given(st.floats(1e-3, TWO_PI), st.lists(st.floats(1e-3, TWO_PI), min_size=1, max_size=8))
def test_shrink_width_decreases_unless_endpoints(anchor, rejected):
    br = shrink(AngleBracket.full(anchor), rejected)
    assert br.left < anchor <= br.right
    if any(0.0 < a < TWO_PI for a in rejected):
        assert br.width < TWO_PI


def _simple_tuple(rng, k=3, m=4):
    return PathTuple(
        rng.normal(size=3), rng.normal(size=3), -1.0, 2.0, rng.random((k, m)) * TWO_PI, 1
    )


def test_transform_roundtrip_and_anchor(rng):
    t = _simple_tuple(rng)
    mean = rng.normal(size=3)
    ft = forward_transform(t, mean)
    assert ft.anchor == t.angles[-1, 1]
    assert ft.angles[-1, 1] == t.anchor
    back = reverse_transform(ft, mean)
    assert np.allclose(back.x, t.x, atol=1e-12, rtol=0)
    assert np.allclose(back.nu, t.nu, atol=1e-12, rtol=0)
    assert np.array_equal(back.angles, t.angles) and back.anchor == t.anchor


def test_transform_single_angle_matches_rotation(rng):
    x, nu, mu = rng.normal(size=(3, 2))
    t = PathTuple(x, nu, -1.0, 1.0, np.array([[2.5]]), 0)
    ft = forward_transform(t, mu)
    assert np.allclose(ft.x, rotate_pair(x, nu, 1.5, mu)[0])


def test_transform_bad_choice(rng):
    t = _simple_tuple(rng)
    with pytest.raises(IndexError):
        forward_transform(PathTuple(t.x, t.nu, t.log_y, t.anchor, t.angles, 9))


def test_support_invariance_sample():
    rng = np.random.default_rng(99)
    mean = np.array([0.3, -0.2, 0.1])
    loglik = NarrowGaussian([1.0, 0.5, -0.5], 0.4)
    for _ in range(300):
        err, forward_ok, mutation_ok = support_trial(rng, loglik, mean, 3)
        assert err <= 1e-12
        assert forward_ok and mutation_ok
