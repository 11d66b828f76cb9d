"""Dimension quantities, inequality checkers and divergent-trajectory templates."""
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .errors import (BadInterval, DimensionTooSmall, GapConditionFailed,
                     InvalidSplit, NoSignedWeights, PreconditionViolated,
                     StandardWeights, WrongZeroBranch)
from .templates import make_interval, new_template, restrict
from .weights import (delta_pairs, delta_total, enumerate_multisets, eta_sum,
                      frac, xi)


# ---------------------------------------------------------------- PL functions

@dataclass(frozen=True)
class PLFunction:
    """Continuous piecewise-linear function through (xs[i], ys[i])."""
    xs: tuple
    ys: tuple

    def __call__(self, x):
        xs, ys = self.xs, self.ys
        if x <= xs[0]:
            return ys[0]
        for i in range(len(xs) - 1):
            if xs[i] <= x <= xs[i + 1]:
                if xs[i + 1] == xs[i]:
                    return ys[i + 1]
                return ys[i] + (ys[i + 1] - ys[i]) * (x - xs[i]) / (xs[i + 1] - xs[i])
        return ys[-1]

    def inverse(self):
        return PLFunction(self.ys, self.xs)


# ---------------------------------------------------------------- dimensions

@dataclass(frozen=True)
class DimensionProfile:
    weights: object
    D: Fraction
    Xi: Fraction
    zeta: tuple
    F_upper: PLFunction
    F_lower: PLFunction

    @property
    def N(self):
        return len(self.zeta)


def dimension_profile(w):
    v = w.values
    zeta = tuple(sorted(v[j] - v[i] for i in range(len(v)) for j in range(i + 1, len(v))
                        if v[j] > v[i]))
    N = len(zeta)
    up = [sum(zeta[:k], Fraction(0)) for k in range(N + 1)]
    low = [sum(zeta[N - k:], Fraction(0)) for k in range(N + 1)]
    return DimensionProfile(w, delta_total(w), xi(w), zeta,
                            PLFunction(tuple(up), tuple(Fraction(k) for k in range(N + 1))),
                            PLFunction(tuple(Fraction(k) for k in range(N + 1)), tuple(low)))


def chi_upper(p, d):
    """sum (zeta_i - d)^+ as displayed."""
    d = frac(d) if not isinstance(d, float) else d
    return sum((z - d for z in p.zeta if z > d), Fraction(0) if not isinstance(d, float) else 0.0)


def chi_lower(p, d):
    """sum (1 - d zeta_i)^+ as displayed."""
    d = frac(d) if not isinstance(d, float) else d
    return sum((1 - d * z for z in p.zeta if 1 - d * z > 0), 0 * d)


def chi_upper_growth(p, d):
    """sum (d - zeta_i)^+, the convex function whose conjugate is the inverse of F_upper."""
    return sum((d - z for z in p.zeta if d > z), 0 * d)


def chi_lower_growth(p, d):
    """sum (d zeta_i - 1)^+, the convex function whose conjugate is the inverse of F_lower."""
    return sum((d * z - 1 for z in p.zeta if d * z > 1), 0 * d)


def conjugate_upper(p, d2, grid=None):
    """max over d' of d' d2 - chi_upper_growth(d'); the breakpoints zeta_i suffice."""
    grid = p.zeta if grid is None else grid
    return max([0 * d2] + [dd * d2 - chi_upper_growth(p, dd) for dd in grid])


def conjugate_lower(p, d2, grid=None):
    grid = [1 / z for z in p.zeta] if grid is None else grid
    return max([0 * d2] + [dd * d2 - chi_lower_growth(p, dd) for dd in grid])


# ---------------------------------------------------------------- inequalities

def beta(l, n_plus, n_minus):
    n = n_plus + n_minus
    if n_plus < 0 or n_minus < 0 or not 1 <= l <= n - 1:
        raise InvalidSplit(f"bad split l={l}, n+={n_plus}, n-={n_minus}")
    if l <= n_plus:
        return Fraction(n_plus, l)
    return Fraction(n_minus, n - l)


def check_preH(w, n_plus):
    """Check delta(E) - beta_l eta_E <= D - Xi for every l and E in I_l.

    Returns {'ok': bool, 'checked': int, 'equalities': [...], 'violations': [...]}.
    """
    n = w.n
    n_minus = n - n_plus
    if not (0 <= n_plus <= n and sum(x > 0 for x in w.values) <= n_plus
            and sum(x < 0 for x in w.values) <= n_minus):
        raise InvalidSplit(f"n+={n_plus} is not admissible for these weights")
    D, X = delta_total(w), xi(w)
    eq, bad, count = [], [], 0
    for l in range(1, n):
        b = beta(l, n_plus, n_minus)
        for E in enumerate_multisets(w, l):
            rest = list(w.values)
            for x in E:
                rest.remove(x)
            dE = delta_pairs(E, E) + delta_pairs(w.values, rest)
            lhs = dE - b * eta_sum(E)
            count += 1
            if lhs > D - X:
                bad.append((l, E, lhs))
            elif lhs == D - X:
                eq.append((l, E))
    return {"ok": not bad, "checked": count, "equalities": eq, "violations": bad}


def admissible_V(a, b, c, a0, b0, c0, n_plus):
    return (a >= a0 >= 0 and b >= b0 >= 0 and c >= c0 >= 0 and a0 + b0 + c0 >= 1
            and c <= n_plus <= c + b and a0 + b0 + c0 <= n_plus)


def appendix_V(a, b, c, a0, b0, c0, n_plus):
    if not admissible_V(a, b, c, a0, b0, c0, n_plus):
        raise PreconditionViolated("arguments outside the admissible range")
    s = a0 + b0 + c0
    return (Fraction((c - c0) * a0 * (a + c) + (b - b0) * a0 * c + (c - c0) * b0 * a)
            + Fraction(n_plus, s) * (-a0 * c + c0 * a) - a * c)


def check_appendix(max_value):
    """V >= 0 on all admissible integer tuples with a, b, c <= max_value."""
    zeros, neg, count = [], [], 0
    m = max_value
    for a, b, c in product(range(m + 1), repeat=3):
        for a0, b0, c0 in product(range(a + 1), range(b + 1), range(c + 1)):
            s = a0 + b0 + c0
            if s == 0:
                continue
            base = (c - c0) * a0 * (a + c) + (b - b0) * a0 * c + (c - c0) * b0 * a - a * c
            lin = -a0 * c + c0 * a
            for n_plus in range(max(c, s), c + b + 1):
                count += 1
                v = base * s + n_plus * lin          # s * V, exact integer
                if v < 0:
                    neg.append((a, b, c, a0, b0, c0, n_plus))
                elif v == 0:
                    zeros.append((a, b, c, a0, b0, c0, n_plus))
    return {"ok": not neg, "checked": count, "zeros": zeros, "negatives": neg}


# ---------------------------------------------------------------- signed weights

def signed_extremes(w):
    """(eta_minus, eta_plus): the largest negative and the smallest positive weight."""
    neg = [x for x in w.values if x < 0]
    pos = [x for x in w.values if x > 0]
    if not neg or not pos:
        raise NoSignedWeights("weights need both signs")
    return max(neg), min(pos)


def kappa(w):
    em, ep = signed_extremes(w)
    return 1 / (1 / ep - 1 / em)


# ---------------------------------------------------------------- connecting template

@dataclass(frozen=True)
class Connecting:
    t_minus: Fraction
    t_plus: Fraction
    radius: Fraction
    template: object


def _connecting(w):
    n = w.n
    if n < 3:
        raise DimensionTooSmall("the connecting template needs n >= 3")
    em, ep = signed_extremes(w)
    e1, en = w.values[0], w.values[-1]
    up, down = (n - 1) * en + em, (n - 1) * e1 + ep
    if up <= 0 or down >= 0:
        raise StandardWeights("weights are (up to sign) proportional to -(n-1), 1, ..., 1")
    tp, tm = Fraction(n) / up, Fraction(n) / down
    R = max(-tm, tp) + 1
    lev = {1: [make_interval(-R, -ep * R - 1, [(0, [ep])]),
               make_interval(0, -1, [(R, [em])])],
           2: [make_interval(tm, (ep + e1) * tm - 2, [(0, [ep, e1]), (tp, [em, en])])]}
    return Connecting(tm, tp, R, new_template(w, (-R, R), lev))


def connecting_template(w):
    if 0 in w.values:
        raise NoSignedWeights("0 is a weight; use the eps-bump construction instead")
    return _connecting(w).template


def connecting_times(w):
    c = _connecting(w)
    return c.t_minus, c.t_plus, c.radius


# ---------------------------------------------------------------- bumps

@dataclass(frozen=True)
class Bump:
    """l = 1 excursion on [t0, t1]; eps is None for the plain bump."""
    weights: object
    t0: Fraction
    t1: Fraction
    eps: Fraction = None

    @property
    def t_half(self):
        em, ep = signed_extremes(self.weights)
        return (ep * self.t1 - em * self.t0) / (ep - em)

    @property
    def fall_end(self):
        """End of the falling branch with label {eta_-}."""
        if self.eps is None:
            return self.t_half
        em, _ = signed_extremes(self.weights)
        return self.t0 + self.eps * (self.t1 - self.t0) / (-em)

    @property
    def rise_start(self):
        if self.eps is None:
            return self.t_half
        _, ep = signed_extremes(self.weights)
        return self.t1 - self.eps * (self.t1 - self.t0) / ep

    def segments(self, until=None):
        """Labelled l = 1 segments from t0, optionally cut at `until`."""
        em, ep = signed_extremes(self.weights)
        if self.eps is None:
            segs = [(self.t_half, [em]), (self.t1, [ep])]
        else:
            segs = [(self.fall_end, [em]), (self.rise_start, [Fraction(0)]), (self.t1, [ep])]
        return _cut(segs, until)

    def template(self, window=None):
        window = window or (self.t0, self.t1)
        f = new_template(self.weights, (self.t0, self.t1),
                         {1: [make_interval(self.t0, 0, self.segments())]})
        return restrict(f, window) if tuple(window) != (self.t0, self.t1) else f


def _cut(segs, until):
    if until is None:
        return segs
    out = []
    for t, lab in segs:
        if t >= until:
            out.append((until, lab))
            break
        out.append((t, lab))
    return out


def _check_bump(w, t0, t1):
    t0, t1 = frac(t0), frac(t1)
    if not t0 < t1:
        raise BadInterval(f"need t0 < t1, got {t0}, {t1}")
    return t0, t1


def make_bump(w, t0, t1, eps=None):
    t0, t1 = _check_bump(w, t0, t1)
    if eps is None:
        if 0 in w.values:
            raise WrongZeroBranch("0 is a weight; use the eps-bump")
        return Bump(w, t0, t1)
    if 0 not in w.values:
        raise WrongZeroBranch("0 is not a weight; use the plain bump")
    eps = frac(eps)
    b = Bump(w, t0, t1, eps)
    if not (eps > 0 and b.fall_end < b.rise_start):
        raise BadInterval("eps too large for a plateau")
    return b


def bump_template(w, t0, t1, window=None):
    return make_bump(w, t0, t1).template(window)


def bump_template_eps(w, t0, t1, eps, window=None):
    return make_bump(w, t0, t1, eps).template(window)


# ---------------------------------------------------------------- merger

@dataclass(frozen=True)
class Splice:
    center: Fraction
    scale: Fraction
    lo: Fraction
    hi: Fraction


def splice_for(b1, b2):
    """Splice joining the rising branch of b1 to the falling branch of b2."""
    w = b1.weights
    em, ep = signed_extremes(w)
    conn = _connecting(w)
    d = b1.t1 - b2.t0
    center = (ep * b1.t1 - em * b2.t0) / (ep - em)
    s = d * kappa(w)
    lo, hi = center - s * conn.radius, center + s * conn.radius
    if not (b1.rise_start < lo and hi < b2.fall_end):
        raise GapConditionFailed(
            f"splice [{float(lo):.6g}, {float(hi):.6g}] does not fit between "
            f"{float(b1.rise_start):.6g} and {float(b2.fall_end):.6g}")
    return Splice(center, s, lo, hi)


def merge_chain(bumps, window=None):
    """Merge a time-ordered list of bumps into one template."""
    bumps = sorted(bumps, key=lambda b: b.t0)
    w = bumps[0].weights
    em, ep = signed_extremes(w)
    e1, en = w.values[0], w.values[-1]
    conn = _connecting(w) if len(bumps) > 1 else None
    l1, l2 = [], []
    start, h0, segs = bumps[0].t0, Fraction(0), []
    for b, nxt in zip(bumps, bumps[1:] + [None]):
        if nxt is None or b.t1 <= nxt.t0:
            segs += [s for s in b.segments() if s[0] > start]
            l1.append(make_interval(start, h0, segs))
            if nxt is not None:
                start, h0, segs = nxt.t0, Fraction(0), []
            continue
        sp = splice_for(b, nxt)
        segs += [s for s in b.segments(sp.center) if s[0] > start]
        l1.append(make_interval(start, h0, segs))
        sc = sp.scale
        l2.append(make_interval(sp.center + sc * conn.t_minus,
                                sc * ((ep + e1) * conn.t_minus - 2),
                                [(sp.center, [ep, e1]), (sp.center + sc * conn.t_plus, [em, en])]))
        start, h0, segs = sp.center, -sc, []
    t0 = bumps[0].t0
    t1 = max(b.t1 for b in bumps)
    f = new_template(w, (t0, t1), {1: l1, 2: l2})
    return restrict(f, window) if window is not None else f


def merge(b1, b2, window=None):
    return merge_chain([b1, b2], window)


# ---------------------------------------------------------------- divergent schedule

def schedule(m):
    return Fraction(m ** 3 - m), Fraction((m + 1) ** 3 + m)


def schedule_bump(w, m, c=1):
    """Schedule bump number m; epsilon-bumps use eps = c/m."""
    t0, t1 = schedule(m)
    if 0 in w.values:
        return make_bump(w, t0, t1, Fraction(c, m))
    return make_bump(w, t0, t1)


def eps_constant(w, limit=64):
    """Least integer c for which eps_m = c/m leaves room for every splice.

    The branches of an epsilon-bump and the splice both grow linearly in m,
    so whether they fit depends only on the weights and on c.
    """
    if 0 not in w.values:
        return 1
    for c in range(1, limit):
        try:
            first_mergeable(w, 400, c)
            return c
        except GapConditionFailed:
            pass
    raise GapConditionFailed("no eps schedule c/m fits the splices")


def first_mergeable(w, limit=10_000, c=None):
    """Least m0 such that consecutive schedule bumps merge for all m >= m0.

    The gap conditions only get easier as m grows (the overlap grows like m
    while the bumps grow like m^2), so a run of successes up to the point
    where that is visible is enough.
    """
    if c is None:
        c = eps_constant(w)
    m0 = None
    for m in range(c + 1, limit):
        try:
            b, b2 = schedule_bump(w, m, c), schedule_bump(w, m + 1, c)
            splice_for(b, b2)
            if m0 is None:
                m0 = m
            if m >= 2 * m0 + 8:
                return m0
        except (GapConditionFailed, BadInterval):
            m0 = None
    raise GapConditionFailed("no mergeable range found in the schedule")


def divergent_bumps(w):
    """Endless, deterministic stream of schedule bumps from the first mergeable one."""
    if w.n < 3:
        raise DimensionTooSmall("divergent construction needs n >= 3")
    _connecting(w)
    c = eps_constant(w)
    m = first_mergeable(w, c=c)
    while True:
        yield m, schedule_bump(w, m, c)
        m += 1


def divergent_template(w, horizon):
    """Merged schedule template on [0, horizon].

    Time is measured from the start of the first mergeable bump; the
    returned dict also lists the bumps used and the splice centres.
    """
    horizon = frac(horizon)
    if horizon <= 0:
        raise BadInterval("horizon must be positive")
    bumps, origin = [], None
    for m, b in divergent_bumps(w):
        if origin is None:
            origin = b.t0
        bumps.append(b)
        if b.t1 - origin >= horizon:
            break
    shifted = [Bump(w, b.t0 - origin, b.t1 - origin, b.eps) for b in bumps]
    f = merge_chain(shifted, (Fraction(0), horizon))
    return f, {"m0": first_mergeable(w), "eps_c": eps_constant(w),
               "origin": origin, "bumps": shifted}


def inter_bump_maxima(f):
    """Values of f_{H,1} at the times where consecutive l = 1 intervals touch."""
    ivs = f.intervals(1)
    out = []
    for a, b in zip(ivs, ivs[1:]):
        if a.end == b.start:
            out.append((a.end, a.height_at(a.end)))
    return out


def admissible_splits(w):
    """Every n_plus allowed for w: enough room for the positive and negative weights."""
    pos = sum(x > 0 for x in w.values)
    neg = sum(x < 0 for x in w.values)
    return list(range(pos, w.n - neg + 1))


def check_preH_all(w):
    """check_preH over every admissible n_plus, merged into one report."""
    out = {"ok": True, "checked": 0, "equalities": [], "violations": []}
    for n_plus in admissible_splits(w):
        r = check_preH(w, n_plus)
        out["ok"] = out["ok"] and r["ok"]
        out["checked"] += r["checked"]
        out["equalities"] += [(n_plus,) + e for e in r["equalities"]]
        out["violations"] += [(n_plus,) + e for e in r["violations"]]
    return out
