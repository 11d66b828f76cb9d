"""Weights, multisets of weights, direction filtrations and elementary flips.

Multisets are sorted tuples of Fractions. Repeated weights are
indistinguishable, so equality is by value.
"""
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .errors import (DimensionTooSmall, IllegalFlip, LevelMismatch,
                     LevelOutOfRange, NotComparable, NotNested,
                     NotSubmultiset, SizeMismatch, SumNonZero)


def frac(x):
    """Parse a rational from a string, int, Fraction or float."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def fstr(x):
    """Canonical rational string, e.g. '-6/5' or '3'."""
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Weights:
    values: tuple

    @property
    def n(self):
        return len(self.values)

    @property
    def distinct(self):
        return tuple(sorted(set(self.values)))

    @property
    def eall(self):
        return self.values

    def mult(self, x):
        return self.values.count(x)

    def __iter__(self):
        return iter(self.values)


def new_weights(values):
    vals = tuple(sorted(frac(v) for v in values))
    if len(vals) < 2:
        raise DimensionTooSmall(f"need at least 2 weights, got {len(vals)}")
    if sum(vals) != 0:
        raise SumNonZero(f"weights sum to {fstr(sum(vals))}")
    return Weights(vals)


def parse_weights(text):
    """Comma separated rationals, as used on the command line."""
    return new_weights([p for p in text.replace(" ", "").split(",") if p])


def multiset(w, values):
    """Validated multiset of weights of w (a sorted tuple)."""
    E = tuple(sorted(frac(v) for v in values))
    have = Counter(w.values)
    for x, k in Counter(E).items():
        if have[x] < k:
            raise NotSubmultiset(f"{fstr(x)} occurs {k} times, weights allow {have[x]}")
    return E


def mult(x, E):
    return sum(1 for y in E if y == x)


def is_submultiset(A, B):
    cb = Counter(B)
    return all(cb[x] >= k for x, k in Counter(A).items())


def difference(B, A):
    """B - A as multisets; A must be contained in B."""
    c = Counter(B)
    c.subtract(Counter(A))
    if any(v < 0 for v in c.values()):
        raise NotNested("not a submultiset")
    return tuple(sorted(c.elements()))


def eta_sum(E):
    return sum(E, Fraction(0))


def leq(E1, E2):
    """E1 precedes E2: sorted componentwise dominance."""
    if len(E1) != len(E2):
        raise SizeMismatch(f"sizes {len(E1)} and {len(E2)} differ")
    return all(x <= y for x, y in zip(sorted(E1), sorted(E2)))


def leq_threshold(E1, E2):
    """Same order via #{x > r} counts at every candidate threshold."""
    if len(E1) != len(E2):
        raise SizeMismatch(f"sizes {len(E1)} and {len(E2)} differ")
    for r in set(E1) | set(E2):
        if sum(x > r for x in E1) > sum(x > r for x in E2):
            return False
    return True


def enumerate_multisets(w, l):
    """All size-l submultisets of Eall in lexicographic order."""
    if not 0 <= l <= w.n:
        raise LevelOutOfRange(f"l={l} outside 0..{w.n}")
    return sorted(set(combinations(w.values, l)))


def delta_pairs(top, new):
    """Sum of (eta - eta')^+ over eta in top, eta' in new."""
    s = Fraction(0)
    for a in top:
        for b in new:
            if a > b:
                s += a - b
    return s


@dataclass(frozen=True)
class Filtration:
    """Direction filtration: levels 0 = l_0 < ... < l_k = n with nested multisets."""
    levels: tuple
    sets: tuple

    def __getitem__(self, i):
        return self.sets[i]

    @property
    def k(self):
        return len(self.levels) - 1


def new_filtration(w, sets):
    """Build a filtration from the list of multisets (including empty and Eall)."""
    sets = tuple(multiset(w, E) for E in sets)
    if not sets or sets[0] != () or sets[-1] != w.values:
        raise NotNested("filtration must start at the empty set and end at Eall")
    for A, B in zip(sets, sets[1:]):
        if len(A) >= len(B) or not is_submultiset(A, B):
            raise NotNested(f"{list(map(fstr, A))} is not strictly inside {list(map(fstr, B))}")
    return Filtration(tuple(len(E) for E in sets), sets)


def delta(F):
    s = Fraction(0)
    for A, B in zip(F.sets, F.sets[1:]):
        s += delta_pairs(B, difference(B, A))
    return s


def delta_total(w):
    """D = delta of the trivial filtration."""
    return delta_pairs(w.values, w.values)


def xi(w):
    return sum((x for x in w.values if x > 0), Fraction(0))


def is_scalar_pair(E, E2):
    if not is_submultiset(E, E2):
        raise NotNested("first multiset is not contained in the second")
    return len(set(difference(E2, E))) <= 1


def final_multiset(E_low, E_high, l):
    if not is_submultiset(E_low, E_high):
        raise NotNested("E_low is not contained in E_high")
    if not len(E_low) < l < len(E_high):
        raise LevelOutOfRange(f"l={l} not strictly between {len(E_low)} and {len(E_high)}")
    extra = difference(E_high, E_low)
    return tuple(sorted(E_low + extra[len(extra) - (l - len(E_low)):]))


def filtration_leq(F, G):
    if F.levels != G.levels:
        raise LevelMismatch(f"levels {F.levels} and {G.levels} differ")
    return all(leq(A, B) for A, B in zip(F.sets, G.sets))


@dataclass(frozen=True)
class ElementaryFlip:
    eta_from: Fraction
    eta_to: Fraction
    a: int
    b: int

    def __str__(self):
        return f"({fstr(self.eta_from)} -> {fstr(self.eta_to)}, a={self.a}, b={self.b})"


def flip_apply(F, flip):
    eta, eta2, a, b = flip.eta_from, flip.eta_to, flip.a, flip.b
    if not (eta < eta2 and 1 <= a < b <= F.k):
        raise IllegalFlip(f"bad flip parameters {flip}")
    if not mult(eta, F[a - 1]) < mult(eta, F[a]):
        raise IllegalFlip(f"{fstr(eta)} does not enter at position {a}")
    if not mult(eta2, F[b - 1]) < mult(eta2, F[b]):
        raise IllegalFlip(f"{fstr(eta2)} does not enter at position {b}")
    sets = list(F.sets)
    for i in range(a, b):
        E = list(sets[i])
        E.remove(eta)
        sets[i] = tuple(sorted(E + [eta2]))
    return Filtration(F.levels, tuple(sets))


def sigma_table(F, values):
    """sigma[i][s] = #(E_{l_i} cap (-inf, v_s]) with v_0 = -inf."""
    return [[0] + [sum(1 for x in E if x <= v) for v in values] for E in F.sets]


def tau_table(F, G, values):
    s, s2 = sigma_table(F, values), sigma_table(G, values)
    return [[s[i][j] - s2[i][j] - s[i - 1][j] + s2[i - 1][j] for j in range(len(values) + 1)]
            for i in range(1, len(F.sets))]


def next_flip(F, G, values):
    """The flip chosen by the minimal-index rule, or None if F == G."""
    tau = tau_table(F, G, values)          # tau[i-1] is row i
    neg = [i for i in range(len(tau)) if any(x < 0 for x in tau[i])]
    if not neg:
        return None
    r2 = neg[0]
    row = tau[r2]
    s2 = max(j for j, x in enumerate(row) if x < 0) + 1
    r1 = next(i for i in range(r2) if tau[i][s2 - 1] > 0)
    s1 = s2 - 1
    while s1 - 1 >= 1 and tau[r1][s1 - 1] > 0:
        s1 -= 1
    return ElementaryFlip(values[s1 - 1], values[s2 - 1], r1 + 1, r2 + 1)


def flip_decompose(F, G, w=None):
    """Elementary flips carrying F to G, following the minimal-index choices."""
    if not filtration_leq(F, G):
        raise NotComparable("filtrations are not comparable")
    values = w.distinct if w is not None else tuple(sorted(set(F.sets[-1])))
    flips = []
    cur = F
    for _ in range(len(values) * sum(F.levels) + 1):
        fl = next_flip(cur, G, values)
        if fl is None:
            return flips
        cur = flip_apply(cur, fl)
        flips.append(fl)
    raise RuntimeError("flip decomposition did not terminate")


def flip_chain(F, flips):
    out = [F]
    for fl in flips:
        out.append(flip_apply(out[-1], fl))
    return out


def filtration_to_dict(F):
    return {"levels": list(F.levels), "multisets": [[fstr(x) for x in E] for E in F.sets]}


def filtration_from_dict(w, d):
    """Filtration from {"levels": [...], "multisets": [[...], ...]}."""
    F = new_filtration(w, d["multisets"])
    if "levels" in d and tuple(int(x) for x in d["levels"]) != F.levels:
        raise LevelMismatch(f"levels {d['levels']} do not match the multiset sizes {list(F.levels)}")
    return F


def enumerate_filtrations(w, levels=None):
    """All direction filtrations of w with the given levels (default: every level)."""
    levels = tuple(range(w.n + 1)) if levels is None else tuple(levels)
    if levels[0] != 0 or levels[-1] != w.n or list(levels) != sorted(set(levels)):
        raise LevelOutOfRange(f"levels {levels} must increase from 0 to {w.n}")
    out = []

    def grow(chain):
        l = levels[len(chain)]
        if l == w.n:
            out.append(Filtration(levels, tuple(chain) + (w.values,)))
            return
        rest = difference(w.values, chain[-1])
        for extra in sorted(set(combinations(rest, l - len(chain[-1])))):
            grow(chain + [tuple(sorted(chain[-1] + extra))])

    grow([()])
    return out


def check_poset(w, levels=None):
    """Exhaustive check that flip_decompose succeeds exactly on comparable pairs."""
    Fs = enumerate_filtrations(w, levels)
    comparable, failures = 0, []
    for F in Fs:
        for G in Fs:
            le = filtration_leq(F, G)
            comparable += le
            try:
                chain = flip_chain(F, flip_decompose(F, G, w))
            except NotComparable:
                if le:
                    failures.append((F, G, "refused a comparable pair"))
                continue
            if not le:
                failures.append((F, G, "decomposed an incomparable pair"))
            elif chain[-1] != G or not all(filtration_leq(H, G) for H in chain):
                failures.append((F, G, "chain does not reach the target"))
    return {"ok": not failures, "filtrations": len(Fs), "pairs": len(Fs) ** 2,
            "comparable": comparable, "failures": failures}
