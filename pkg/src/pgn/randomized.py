"""Random weights and random valid templates, for tests and demos.

A random template is driven by a full flag that only moves up in the
order: the flag is an entry order of the weights and each step swaps an
earlier, smaller weight with a later, larger one.  Every level follows
the slope of its label, and the active levels are read off the lower hull.
"""
import random
from fractions import Fraction

from .errors import DimensionTooSmall
from .templates import TrackPiece, hull_template
from .weights import eta_sum, new_weights


def random_weights(rng, n, zero=False, den=10, top=20):
    """Random zero-sum rational weights with both signs present."""
    if n < 2 or (zero and n < 3):
        raise DimensionTooSmall(f"no signed weights of this kind for n={n}")
    while True:
        vals = [Fraction(rng.randint(-top, top), den) for _ in range(n - 1)]
        if zero:
            vals[0] = Fraction(0)
        vals.append(-sum(vals))
        if not zero and 0 in vals:
            continue
        if min(vals) < 0 < max(vals):
            return new_weights(vals)


def _up_swap(rng, order):
    """Swap a pair i < j with order[i] < order[j], if there is one."""
    pairs = [(i, j) for i in range(len(order)) for j in range(i + 1, len(order))
             if order[i] < order[j]]
    if not pairs:
        return order
    i, j = rng.choice(pairs)
    order = list(order)
    order[i], order[j] = order[j], order[i]
    return order


def random_template(w, seed=None, blocks=5, depth=(30, 80), length=(2, 6)):
    """A valid template on [0, T] for the weights w."""
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    n = w.n
    order = list(w.values)
    rng.shuffle(order)
    # a convex profile well below zero, jittered so some levels start inactive
    base = Fraction(rng.randint(*depth))
    jitter = max(1, int(base) // 3)
    h = {l: -base * l * (n - l) / (n - 1) + Fraction(rng.randint(-jitter, jitter))
         for l in range(1, n)}
    t, tracks = Fraction(0), {l: [] for l in range(1, n)}
    for _ in range(blocks):
        dt = Fraction(rng.randint(length[0] * 2, length[1] * 2), 2)
        for l in range(1, n):
            lab = tuple(sorted(order[:l]))
            tracks[l].append(TrackPiece(t, t + dt, lab, h[l], l))
            h[l] += eta_sum(lab) * dt
        t += dt
        for _ in range(rng.randint(0, 2)):
            order = _up_swap(rng, order)
    return hull_template(w, (Fraction(0), t), tracks)
