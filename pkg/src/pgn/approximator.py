"""Enticement systems on the interval graph of a template and the greedy solver.

A vertex of the interval graph is a nontriviality interval, keyed by
(level, index).  An enticement is an affine form in the shift parameters
nu_J that must avoid the closed interval [0, C].
"""
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from .errors import (ApproximationFailed, DegreeBoundViolated, Infeasible,
                     NotSignificantEnough)
from .templates import (IndependentShift, closeness, gen_d2, is_significant,
                        is_separated, pieces, shift_template, vertices)
from .weights import frac, fstr


# ---------------------------------------------------------------- interval graph

@dataclass(frozen=True)
class IntervalGraph:
    n: int
    nodes: dict            # (l, j) -> (start, end)
    edges: frozenset       # frozenset({u, v})

    def neighbours(self, v, among=None):
        out = set()
        for e in self.edges:
            if v in e:
                u = next(x for x in e if x != v)
                if among is None or u in among:
                    out.add(u)
        return out


def interval_graph(n, nodes):
    """Graph on {key: (start, end)}; open intervals that meet are adjacent."""
    nodes = {k: (frac(a), frac(b)) for k, (a, b) in nodes.items()}
    keys = sorted(nodes)
    edges = set()
    for i, u in enumerate(keys):
        for v in keys[i + 1:]:
            (a, b), (c, d) = nodes[u], nodes[v]
            if max(a, c) < min(b, d):
                edges.add(frozenset((u, v)))
    return IntervalGraph(n, nodes, frozenset(edges))


def overlap_graph(f):
    return interval_graph(f.n, {(l, j): (iv.start, iv.end) for l, j, iv in f.all_intervals()})


def _contains(outer, inner):
    return outer[0] <= inner[0] and inner[1] <= outer[1]


def constructible_peel(G):
    """Layers of inclusion-minimal intervals, each with residual degree <= 2n - 4."""
    d = 2 * G.n - 4
    left = set(G.nodes)
    layers = []
    while left:
        layer = []
        for v in sorted(left):
            iv = G.nodes[v]
            # equal intervals are peeled in key order
            if not any(u != v and _contains(iv, G.nodes[u]) and (G.nodes[u] != iv or u < v)
                       for u in left):
                layer.append(v)
        for v in layer:
            deg = len(G.neighbours(v, left))
            if deg > d:
                raise DegreeBoundViolated(f"vertex {v} has residual degree {deg} > {d}")
        layers.append(sorted(layer, key=lambda v: (v[0], G.nodes[v][0])))
        left -= set(layer)
    return layers


def solve_order(G):
    """Processing order: outer layers first, so each vertex meets at most
    2n - 4 already fixed neighbours."""
    return [v for layer in reversed(constructible_peel(G)) for v in layer]


# ---------------------------------------------------------------- enticements

@dataclass(frozen=True)
class Enticement:
    support: tuple         # sorted keys
    coeffs: tuple          # coefficients aligned with support
    const: Fraction
    origin: str = ""

    def value(self, nu):
        return self.const + sum((a * nu.get(k, Fraction(0)) for k, a in zip(self.support, self.coeffs)),
                                Fraction(0))

    def satisfied(self, nu, C):
        x = self.value(nu)
        return x < 0 or x > C


def enticement(coeffs, const, origin=""):
    """Enticement from {key: coefficient}; zero coefficients are dropped."""
    items = sorted((k, frac(a)) for k, a in coeffs.items() if a != 0)
    return Enticement(tuple(k for k, _ in items), tuple(a for _, a in items), frac(const), origin)


@dataclass
class EnticementSystem:
    graph: IntervalGraph
    enticements: list
    C: Fraction
    C1: Fraction
    meta: dict = field(default_factory=dict)

    @property
    def eps(self):
        cs = [abs(a) for e in self.enticements for a in e.coeffs]
        return min(cs) if cs else Fraction(1)

    @property
    def r(self):
        return max([0] + [len(e.support) for e in self.enticements])

    @property
    def R(self):
        count = {}
        for e in self.enticements:
            count[e.support] = count.get(e.support, 0) + 1
        return max([0] + list(count.values()))

    def bound(self):
        """Sufficient C1 from the counting argument."""
        d = 2 * self.graph.n - 4
        return self.R * sum(comb(d, k) for k in range(self.r)) * self.C / self.eps

    def to_dict(self):
        key = lambda k: f"{k[0]}:{k[1]}"
        return {
            "C": fstr(self.C), "C1": fstr(self.C1), "eps": fstr(self.eps),
            "r": self.r, "R": self.R,
            "vertices": [{"id": key(k), "level": k[0], "start": fstr(a), "end": fstr(b)}
                         for k, (a, b) in sorted(self.graph.nodes.items())],
            "enticements": [{"support": [key(k) for k in e.support],
                             "coeffs": [fstr(a) for a in e.coeffs],
                             "const": fstr(e.const), "origin": e.origin}
                            for e in self.enticements],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)


def new_system(graph, enticements, C, C1):
    seen, out = set(), []
    for e in enticements:
        if not e.support:
            continue
        k = (e.support, e.coeffs, e.const)
        if k not in seen:
            seen.add(k)
            out.append(e)
    return EnticementSystem(graph, out, frac(C), frac(C1))


def _forbidden(e, v, nu, C):
    """Closed interval of nu_v values putting e inside [0, C]."""
    a = e.coeffs[e.support.index(v)]
    rest = e.const + sum((b * nu[k] for k, b in zip(e.support, e.coeffs) if k != v), Fraction(0))
    lo, hi = -rest / a, (C - rest) / a
    return (min(lo, hi), max(lo, hi))


def _least_free(intervals, C1, margin):
    """Least admissible value in [0, C1] avoiding closed intervals, or None."""
    ivs = sorted((max(a, Fraction(0)), b) for a, b in intervals if b >= 0)
    x = Fraction(0)
    for k, (a, b) in enumerate(ivs):
        if a > x:
            break
        if b >= x:
            nxt = next((c for c, _ in ivs[k + 1:] if c > b), None)
            step = margin if nxt is None else min(margin, (nxt - b) / 2)
            if b + step > C1 and b < C1:
                step = (C1 - b) / 2
            x = b + step
    return x if x <= C1 else None


def solve(system, order=None):
    """Greedy choice of every nu_J in [0, C1]; the least feasible value is taken."""
    C, C1 = system.C, system.C1
    margin = C / 1024
    order = order or solve_order(system.graph)
    pos = {v: i for i, v in enumerate(order)}
    last = {}
    for e in system.enticements:
        v = max(e.support, key=lambda k: pos[k])
        last.setdefault(v, []).append(e)
    nu = {}
    for v in order:
        ivs = [_forbidden(e, v, nu, C) for e in last.get(v, [])]
        x = _least_free(ivs, C1, margin)
        if x is None:
            b = system.bound()
            raise Infeasible(f"no admissible value for vertex {v} in [0, {fstr(C1)}]; "
                             f"sufficient C1 is {float(b):.6g}", vertex=v, bound=b)
        nu[v] = x
    return nu


def check_solution(system, nu):
    """Enticements violated by nu (empty list means a full solution)."""
    bad = [e for e in system.enticements if not e.satisfied(nu, system.C)]
    bad += [Enticement((k,), (Fraction(1),), Fraction(0), "range")
            for k, x in nu.items() if not 0 <= x <= system.C1]
    return bad


# ---------------------------------------------------------------- affine bookkeeping

class Affine:
    """const + sum coeffs[k] * nu_k."""

    def __init__(self, const=0, coeffs=None):
        self.const = Fraction(const)
        self.coeffs = {k: Fraction(a) for k, a in (coeffs or {}).items() if a != 0}

    def __add__(self, o):
        if not isinstance(o, Affine):
            return Affine(self.const + o, self.coeffs)
        c = dict(self.coeffs)
        for k, a in o.coeffs.items():
            c[k] = c.get(k, 0) + a
        return Affine(self.const + o.const, c)

    __radd__ = __add__

    def __mul__(self, s):
        return Affine(self.const * s, {k: a * s for k, a in self.coeffs.items()})

    __rmul__ = __mul__

    def __sub__(self, o):
        return self + (o * -1 if isinstance(o, Affine) else -o)

    def range(self, C1):
        lo = self.const + sum((min(a, 0) * C1 for a in self.coeffs.values()), Fraction(0))
        hi = self.const + sum((max(a, 0) * C1 for a in self.coeffs.values()), Fraction(0))
        return lo, hi


def _gd2(vals, i, l, k):
    return (vals[i] * Fraction(1, l - i) + vals[k] * Fraction(1, k - l)
            + vals[l] * -Fraction(k - i, (k - l) * (l - i)))


def _shifted_values(f, active, t, c):
    """{level: Affine} for the shifted heights at t; active maps l -> (j, value, slope)."""
    n = f.n
    out = {0: Affine(), n: Affine()}
    for l, (j, v, s) in active.items():
        out[l] = Affine(v + s * t + l * (n - l) * c, {(l, j): 1})
    return out


def _triples(levels):
    for a in range(len(levels)):
        for b in range(a + 1, len(levels)):
            for d in range(b + 1, len(levels)):
                yield levels[a], levels[b], levels[d]


@dataclass
class _Root:
    t: Affine              # root time as a function of nu
    piece: tuple
    triple: tuple
    vals: dict             # level -> (j, value at time 0, slope) on the piece


def _roots(f, c, C1):
    """Candidate null vertices of the shifted template, one per collinear triple."""
    n = f.n
    out = []
    for p in pieces(f):
        act = {l: (j, v - s * p.lo, s) for l, (j, _, v, s) in p.active.items()}
        full = [0] + sorted(act) + [n]
        for i, l, k in _triples(full):
            if l not in act:
                continue
            at0 = _shifted_values(f, act, Fraction(0), c)
            slope = {m: (act[m][2] if m in act else Fraction(0)) for m in (i, l, k)}
            B = gen_d2(slope[i], slope[l], slope[k], i, l, k)
            if B == 0:
                continue
            t0 = _gd2(at0, i, l, k) * (-1 / B)
            lo, hi = t0.range(C1)
            if hi >= p.lo and lo <= p.hi:
                out.append(_Root(t0, (p.lo, p.hi), (i, l, k), act))
    return out


def _value_at(f, root, m, c):
    n = f.n
    if m in (0, n):
        return Affine()
    j, v, s = root.vals[m]
    return root.t * s + Affine(v + m * (n - m) * c, {(m, j): 1})


def _significance_enticements(f, C, C1):
    n = f.n
    c = C1
    out = []
    # case 1: label changes of f keep their time
    for v in vertices(f):
        if v.kind != "nonnull":
            continue
        act = {}
        for side in (-1, 1):
            for p in pieces(f):
                if (side < 0 and p.hi == v.t) or (side > 0 and p.lo == v.t):
                    for l, (j, _, h0, s) in p.active.items():
                        act[l] = (j, h0 - s * p.lo, s)
        vals = _shifted_values(f, act, v.t, c)
        full = [0] + sorted(act) + [n]
        for i, l, k in _triples(full):
            if v.level in (i, l, k) and l in act:
                out.append((_gd2(vals, i, l, k), "case 1"))
    # cases 2 and 3: a level leaves or joins the hull at a root time
    for r in _roots(f, c, C1):
        i, l, k = r.triple
        full = [0] + sorted(r.vals) + [n]
        val = {m: _value_at(f, r, m, c) for m in full}
        if i != 0:
            for a in full:
                if a < i:
                    out.append((_gd2(val, a, i, k), "case 2"))
        if k != n:
            for b in full:
                if b > k:
                    out.append((_gd2(val, i, k, b), "case 3"))
    return [enticement(a.coeffs, a.const, o) for a, o in out]


def _separation_enticements(f, C, C1):
    c = C1
    roots = _roots(f, c, C1)
    fixed = sorted({v.t for v in vertices(f) if v.kind == "nonnull"})
    out = []
    for r in roots:
        lo, hi = r.t.range(C1)
        for tau in fixed:
            if lo - C <= tau <= hi + C:
                out.append(((r.t - tau + C) * Fraction(1, 2), "vertex"))
    for a in range(len(roots)):
        for b in range(a + 1, len(roots)):
            diff = roots[a].t - roots[b].t
            lo, hi = diff.range(C1)
            if lo <= C and hi >= -C:
                out.append(((diff + C) * Fraction(1, 2), "pair"))
    return [enticement(a.coeffs, a.const, o) for a, o in out]


def significance_system(f, C, C1):
    C, C1 = frac(C), frac(C1)
    return new_system(overlap_graph(f), _significance_enticements(f, C, C1), C, C1)


def separation_system(f, C, C1):
    C, C1 = frac(C), frac(C1)
    if not is_significant(f, 5 * C1):
        raise NotSignificantEnough(f"template is not {fstr(5 * C1)}-significant")
    return new_system(overlap_graph(f), _separation_enticements(f, C, C1), C, C1)


def combined_system(f, C, C1):
    """Significance and separation enticements together, without the precheck."""
    C, C1 = frac(C), frac(C1)
    return new_system(overlap_graph(f),
                      _significance_enticements(f, C, C1) + _separation_enticements(f, C, C1),
                      C, C1)


# ---------------------------------------------------------------- pipeline

@dataclass
class Approximation:
    template: object
    shift: object          # IndependentShift, or None when f was already fine
    C1: Fraction           # shift parameter used
    amplitude: Fraction    # max |rho|, reported as the achieved C1
    closeness: Fraction    # measured C'
    system: object


def measured_closeness(f, g, top):
    """Least value of the dyadic ladder top / 2^k for which f and g are close."""
    if top == 0:
        return Fraction(0)
    best = None
    x = Fraction(top)
    for _ in range(24):
        if not closeness(f, g, x):
            break
        best = x
        x /= 2
    if best is None:
        x = Fraction(top)
        while not closeness(f, g, x):
            x *= 2
        best = x
    return best


def make_significant_separated(f, C, cap=None):
    """C-significant, C-separated template obtained by an independent shift of f."""
    C = frac(C)
    cap = frac(cap) if cap is not None else 1024 * C
    if is_significant(f, C) and is_separated(f, C):
        return Approximation(f, None, Fraction(0), Fraction(0), Fraction(0), None)
    C1 = 8 * C
    last = None
    while C1 <= cap:
        system = combined_system(f, C, C1)
        last = system
        try:
            nu = solve(system)
        except Infeasible:
            C1 *= 2
            continue
        rho = IndependentShift(C1, nu)
        g = shift_template(f, rho)
        if is_significant(g, C) and is_separated(g, C):
            amp = rho.amplitude(f.n)
            return Approximation(g, rho, C1, amp, measured_closeness(f, g, 3 * amp), system)
        C1 *= 2
    bound = last.bound() if last is not None else None
    raise ApproximationFailed(f"no C-significant, C-separated shift up to C1 = {fstr(cap)}"
                              + (f"; sufficient C1 is {float(bound):.6g}" if bound else ""))
