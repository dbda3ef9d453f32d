"""Angle-bracket bookkeeping for one (multiproposal) elliptical slice step.

Angles live in (0, 2*pi].  A bracket is the half-open interval (left, right]
that always contains the anchor angle of the current state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .prior import rotate_pair

TWO_PI = 2.0 * math.pi

# brackets narrower than this are treated as collapsed
_MIN_WIDTH = 1e-14


class BracketError(ValueError):
    pass


class LikelihoodError(ValueError):
    """A likelihood returned NaN or +inf."""


@dataclass(frozen=True)
class AngleBracket:
    left: float
    right: float
    anchor: float

    def __post_init__(self):
        if not (0.0 <= self.left < self.anchor <= self.right <= TWO_PI):
            raise BracketError(
                f"invalid bracket: need 0 <= {self.left} < {self.anchor} <= {self.right} <= 2pi"
            )

    @classmethod
    def full(cls, anchor: float) -> "AngleBracket":
        return cls(0.0, TWO_PI, float(anchor))

    @property
    def width(self) -> float:
        return self.right - self.left

    def contains(self, angle) -> np.ndarray | bool:
        angle = np.asarray(angle)
        return (angle > self.left) & (angle <= self.right)


@dataclass(frozen=True)
class SortedCandidates:
    """Anchor plus valid angles in ascending order.

    ``labels[p]`` is the original label of the angle at sorted position ``p``
    (label -1 marks the anchor).
    """

    angles: np.ndarray
    labels: np.ndarray
    anchor_position: int

    @property
    def size(self) -> int:
        return self.angles.shape[0]

    def label_at(self, position: int) -> int:
        return int(self.labels[position])

    def position_of(self, label: int) -> int:
        hits = np.flatnonzero(self.labels == label)
        if hits.size != 1:
            raise KeyError(label)
        return int(hits[0])


def draw_anchor(rng: np.random.Generator) -> float:
    """Uniform on (0, 2*pi]."""
    return TWO_PI * (1.0 - rng.random())


def draw_angles(bracket: AngleBracket, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` angles uniformly on (left, right].

    Exactly ``count`` uniforms are consumed, in index order, whatever the
    bracket width.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    u = 1.0 - rng.random(count)  # (0, 1]
    left, right = bracket.left, bracket.right
    if right - left < _MIN_WIDTH:
        return np.full(count, right)
    phi = np.minimum(left + u * (right - left), right)
    low = phi <= left
    if np.any(low):
        phi[low] = np.nextafter(left, right)
    return phi


def valid_set(log_likelihoods, log_y: float) -> np.ndarray:
    """Indices j with log_likelihoods[j] >= log_y, in increasing order."""
    ll = np.asarray(log_likelihoods, dtype=float)
    bad = np.flatnonzero(np.isnan(ll) | (ll == np.inf))
    if bad.size:
        j = int(bad[0])
        raise LikelihoodError(f"log-likelihood of proposal {j} is {ll[j]}")
    if not np.isfinite(log_y):
        raise ValueError(f"slice level must be finite, got {log_y}")
    return np.flatnonzero(ll >= log_y)


def shrink(bracket: AngleBracket, rejected) -> AngleBracket:
    """Shrink to the closest rejected angles on either side of the anchor.

    Rejected angles below the anchor can only raise the left end; those at
    or above it can only lower the right end.
    """
    phi = np.asarray(rejected, dtype=float).reshape(-1)
    if phi.size == 0:
        return bracket
    outside = ~bracket.contains(phi)
    if np.any(outside):
        raise BracketError(f"rejected angle {phi[outside][0]} lies outside {bracket}")
    a = bracket.anchor
    below = phi[phi < a]
    above = phi[phi >= a]
    left = max(bracket.left, float(below.max())) if below.size else bracket.left
    right = min(bracket.right, float(above.min())) if above.size else bracket.right
    return AngleBracket(left, right, a)


def sort_with_anchor(anchor: float, angles, labels=None) -> SortedCandidates:
    """Sort (anchor, angles) ascending with a stable, label-ordered tie break.

    The anchor gets label -1 so it wins ties against any proposal angle.
    The result does not depend on the order in which ``angles`` are given.
    """
    angles = np.asarray(angles, dtype=float).reshape(-1)
    if labels is None:
        labels = np.arange(angles.size)
    labels = np.asarray(labels, dtype=int).reshape(-1)
    if labels.shape != angles.shape:
        raise ValueError("labels and angles must have equal length")
    if angles.size == 0:
        raise ValueError("need at least one valid angle")
    all_angles = np.concatenate(([float(anchor)], angles))
    all_labels = np.concatenate(([-1], labels))
    order = np.lexsort((all_labels, all_angles))
    sorted_labels = all_labels[order]
    return SortedCandidates(
        angles=all_angles[order],
        labels=sorted_labels,
        anchor_position=int(np.flatnonzero(sorted_labels == -1)[0]),
    )


def bracket_history(anchor: float, rejected_batches) -> list[AngleBracket]:
    """Brackets l_0..l_K produced by shrinking on each batch in turn."""
    br = AngleBracket.full(anchor)
    out = [br]
    for batch in rejected_batches:
        br = shrink(br, batch)
        out.append(br)
    return out


# --- path transform used by the invariance property tests -----------------


@dataclass(frozen=True)
class PathTuple:
    """One realised step: state, prior draw, slice level, anchor, angles, choice.

    ``angles`` has shape (k, M); row k-1 holds the final batch and
    ``choice`` indexes the accepted angle in it.
    """

    x: np.ndarray
    nu: np.ndarray
    log_y: float
    anchor: float
    angles: np.ndarray
    choice: int

    @property
    def k(self) -> int:
        return self.angles.shape[0]


def _check_choice(t: PathTuple):
    if t.angles.ndim != 2 or t.angles.shape[0] < 1:
        raise ValueError("angles must be a (k, M) array with k >= 1")
    if not 0 <= t.choice < t.angles.shape[1]:
        raise IndexError(f"choice {t.choice} out of range for M={t.angles.shape[1]}")


def forward_transform(t: PathTuple, mean=None) -> PathTuple:
    """Map a forward path onto the path of the reverse move.

    The state pair is rotated to the accepted angle, the accepted angle
    becomes the new anchor and the old anchor takes its slot in the last
    batch; all other angles, the slice level and the choice are kept.
    """
    _check_choice(t)
    accepted = float(t.angles[-1, t.choice])
    x_new, nu_new = rotate_pair(t.x, t.nu, accepted - t.anchor, mean)
    angles = t.angles.copy()
    angles[-1, t.choice] = t.anchor
    return PathTuple(x_new, nu_new, t.log_y, accepted, angles, t.choice)


def reverse_transform(t: PathTuple, mean=None) -> PathTuple:
    """Inverse of :func:`forward_transform`."""
    _check_choice(t)
    slot = float(t.angles[-1, t.choice])
    x_old, nu_old = rotate_pair(t.x, t.nu, slot - t.anchor, mean)
    angles = t.angles.copy()
    angles[-1, t.choice] = t.anchor
    return PathTuple(x_old, nu_old, t.log_y, slot, angles, t.choice)


def in_support(t: PathTuple, loglik, mean=None) -> bool:
    """Whether ``t`` is a path the sampler could have produced.

    Checks the anchor range, membership of every angle in the bracket of
    its iteration, the slice level against the current state, that all but
    the last batch are fully rejected, and that the choice is valid.
    """
    if not 0.0 < t.anchor <= TWO_PI:
        return False
    if t.angles.ndim != 2 or t.angles.shape[0] < 1 or not 0 <= t.choice < t.angles.shape[1]:
        return False
    if not (np.isfinite(t.log_y) and t.log_y <= loglik(np.asarray(t.x))):
        return False
    br = AngleBracket.full(t.anchor)
    k = t.k
    for i in range(k):
        batch = t.angles[i]
        if not np.all(br.contains(batch)):
            return False
        states = np.array([rotate_pair(t.x, t.nu, a - t.anchor, mean)[0] for a in batch])
        ok = np.array([loglik(s) for s in states]) >= t.log_y
        if i < k - 1:
            if ok.any():
                return False
            br = shrink(br, batch)
        else:
            if not ok[t.choice]:
                return False
    return True
