"""Generators of random shrink sequences and realised sampler paths."""

import itertools
import math

import numpy as np

from mess.ellipse import (
    AngleBracket,
    PathTuple,
    draw_angles,
    forward_transform,
    in_support,
    reverse_transform,
    shrink,
)
from mess.prior import rotate_pair

TWO_PI = 2 * math.pi


def random_shrink_sequence(rng, max_iters=8, max_m=6):
    """Anchor, rejected batches and brackets of a random shrink run."""
    anchor = TWO_PI * (1.0 - rng.random())
    m = int(rng.integers(1, max_m + 1))
    br = AngleBracket.full(anchor)
    batches, brackets = [], [br]
    for _ in range(int(rng.integers(0, max_iters + 1))):
        batch = draw_angles(br, m, rng)
        batches.append(batch)
        br = shrink(br, batch)
        brackets.append(br)
    return anchor, batches, brackets


def check_ordering(anchor, brackets):
    for prev, cur in zip(brackets, brackets[1:]):
        if not (cur.left >= prev.left and cur.right <= prev.right):
            return False
    return all(b.left < anchor <= b.right for b in brackets)


def check_flipping(rng, anchor, batches, brackets):
    """Replaying the rejected angles with a new anchor drawn from the final
    bracket must reproduce every bracket endpoint bit for bit."""
    final = draw_angles(brackets[-1], 1, rng)[0]
    br = AngleBracket.full(final)
    for batch, expect in zip(batches, brackets[1:]):
        br = shrink(br, batch)
        if br.left != expect.left or br.right != expect.right:
            return False
    return True


class NarrowGaussian:
    """Gaussian likelihood narrow enough that most steps need to shrink."""

    def __init__(self, centre, width):
        self.centre = np.asarray(centre, dtype=float)
        self.width = float(width)

    def __call__(self, x):
        r = (np.asarray(x) - self.centre) / self.width
        return -0.5 * float(r @ r)


def realised_path(rng, loglik, mean, dim, max_m=5, max_iters=200):
    """Run one MESS-style step forward and record it as a PathTuple."""
    x = mean + rng.normal(size=dim) * 0.5
    nu = mean + rng.normal(size=dim)
    log_y = loglik(x) + math.log(1.0 - rng.random())
    anchor = TWO_PI * (1.0 - rng.random())
    m = int(rng.integers(1, max_m + 1))
    br = AngleBracket.full(anchor)
    batches = []
    for _ in range(max_iters):
        batch = draw_angles(br, m, rng)
        batches.append(batch)
        ll = np.array([loglik(rotate_pair(x, nu, a - anchor, mean)[0]) for a in batch])
        ok = np.flatnonzero(ll >= log_y)
        if ok.size:
            choice = int(ok[rng.integers(ok.size)])
            return PathTuple(x, nu, log_y, anchor, np.array(batches), choice), ll
        br = shrink(br, batch)
    raise RuntimeError("path did not terminate")


def near_boundary(t, loglik, mean, tol=1e-9):
    """True when some likelihood sits within ``tol`` of the slice level, where
    rounding in the rotated states could flip a comparison."""
    for a in t.angles.reshape(-1):
        ll = loglik(rotate_pair(t.x, t.nu, a - t.anchor, mean)[0])
        if abs(ll - t.log_y) < tol:
            return True
    return abs(loglik(t.x) - t.log_y) < tol


def mutate(rng, t):
    """A perturbed tuple that may or may not lie in the support."""
    angles = t.angles.copy()
    kind = int(rng.integers(4))
    choice = t.choice
    if kind == 0:
        i, j = rng.integers(angles.shape[0]), rng.integers(angles.shape[1])
        angles[i, j] = TWO_PI * (1.0 - rng.random())
    elif kind == 1:
        choice = int(rng.integers(angles.shape[1]))
    elif kind == 2 and angles.shape[0] > 1:
        angles = angles[1:]
    else:
        angles = np.vstack([TWO_PI * (1.0 - rng.random((1, angles.shape[1]))), angles])
    return PathTuple(t.x, t.nu, t.log_y, t.anchor, angles, choice)


def transform_roundtrip_error(t, mean):
    back = reverse_transform(forward_transform(t, mean), mean)
    errs = [
        np.max(np.abs(back.x - t.x)),
        np.max(np.abs(back.nu - t.nu)),
        abs(back.anchor - t.anchor),
        np.max(np.abs(back.angles - t.angles)),
        abs(back.log_y - t.log_y),
    ]
    if back.choice != t.choice:
        return math.inf
    return max(errs)


def support_trial(rng, loglik, mean, dim):
    """One randomized support check.

    Returns (roundtrip error, forward ok, mutation ok) where the flags say
    whether membership of a tuple and of its transform agree.
    """
    while True:
        t, _ = realised_path(rng, loglik, mean, dim)
        if not near_boundary(t, loglik, mean):
            break
    err = transform_roundtrip_error(t, mean)
    ft = forward_transform(t, mean)
    forward_ok = in_support(t, loglik, mean) and in_support(ft, loglik, mean)
    forward_ok = forward_ok and in_support(reverse_transform(ft, mean), loglik, mean)
    while True:
        u = mutate(rng, t)
        if not near_boundary(u, loglik, mean):
            break
    a = in_support(u, loglik, mean)
    b = in_support(forward_transform(u, mean), loglik, mean)
    return err, forward_ok, a == b


def derangements(order):
    return [p for p in itertools.permutations(range(order)) if all(p[i] != i for i in range(order))]


def brute_force_optimum(distances):
    """Best objective over derangement permutation matrices."""
    order = distances.shape[0]
    rows = np.arange(order)
    return max(float(distances[rows, list(p)].sum()) for p in derangements(order))


def random_distance_matrix(rng, order, symmetric):
    d = rng.random((order, order)) * rng.choice([1.0, 10.0])
    if symmetric:
        d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d
