"""g-templates: height tracks with multiset-labelled category flows.

A template stores, per level l = 1..n-1, disjoint nontriviality intervals.
Each interval carries its height at the left endpoint and a list of
segments (until, label, height at until).  Heights of inactive levels
are linear interpolations between the active ones (0 and n included).
"""
import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction

from .errors import (DegenerateWindow, LevelOutOfRange, NotConcave,
                     NotLocallyConstant, TemplateFormatError, TimeOutOfWindow,
                     WindowMismatch)
from .weights import (Filtration, delta, eta_sum, frac, fstr, is_submultiset,
                      leq, multiset, new_weights)


# ---------------------------------------------------------------- sequences

def gen_d2(vi, vl, vk, i, l, k):
    """Second difference at l of the sequence linear between i, l and k."""
    return (Fraction(vi) / (l - i) + Fraction(vk) / (k - l)
            - Fraction(k - i, (k - l) * (l - i)) * vl)


def d2(a, l):
    return a[l - 1] - 2 * a[l] + a[l + 1]


def interpolate(n, pts):
    """Full sequence 0..n, linear between the given {index: value} points."""
    pts = dict(pts)
    pts.setdefault(0, Fraction(0))
    pts.setdefault(n, Fraction(0))
    keys = sorted(pts)
    out = [None] * (n + 1)
    for a, b in zip(keys, keys[1:]):
        for j in range(a, b + 1):
            out[j] = pts[a] + (pts[b] - pts[a]) * Fraction(j - a, b - a)
    return out


def hull_vertices(pts):
    """Indices that are strict vertices of the lower convex hull.

    pts is a list of (index, value) sorted by index; the endpoints are
    always kept.
    """
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] unless it lies strictly below the chord
            if (y2 - y1) * (p[0] - x1) >= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    return [x for x, _ in hull]


def convexify(points):
    """Lower convex hull of (index, value) points, evaluated at 0..n."""
    pts = sorted((int(i), frac(v)) for i, v in points)
    n = pts[-1][0]
    if pts[0][0] != 0:
        raise LevelOutOfRange("points must include index 0")
    vals = dict(pts)
    keep = hull_vertices(pts)
    return interpolate(n, {i: vals[i] for i in keep})


def nontrivial_places(a):
    n = len(a) - 1
    return [0] + [l for l in range(1, n) if d2(a, l) > 0] + [n]


def is_concave(rho):
    return all(rho[l - 1] - 2 * rho[l] + rho[l + 1] <= 0 for l in range(1, len(rho) - 1))


def check_height_sequence(a):
    a = [frac(x) for x in a]
    if a[0] != 0 or a[-1] != 0:
        raise NotConcave("height sequence must vanish at 0 and n")
    if any(d2(a, l) < 0 for l in range(1, len(a) - 1)):
        raise NotConcave("height sequence is not convex")
    return a


def shift_height(a, rho):
    """Lower convex hull of a + rho."""
    a = [frac(x) for x in a]
    rho = [frac(x) for x in rho]
    if len(rho) != len(a) or rho[0] != 0 or rho[-1] != 0 or not is_concave(rho):
        raise NotConcave("shift must be concave and vanish at 0 and n")
    return convexify(list(enumerate(x + r for x, r in zip(a, rho))))


def vanishing_number(a, l):
    """Smallest z >= 0 for which l leaves the nontrivial places of a + z*l(n-l)."""
    a = [frac(x) for x in a]
    n = len(a) - 1
    if not 1 <= l <= n - 1:
        raise LevelOutOfRange(f"l={l} outside 1..{n - 1}")
    best = None
    for i in range(0, l):
        for k in range(l + 1, n + 1):
            chord = (a[i] * (k - l) + a[k] * (l - i)) / (k - i)
            # q_l - chord of q equals (l-i)(k-l) for q_j = j(n-j)
            z = max(Fraction(0), (chord - a[l]) / ((l - i) * (k - l)))
            best = z if best is None else min(best, z)
    return best


# ---------------------------------------------------------------- template types

@dataclass(frozen=True)
class Segment:
    until: Fraction
    label: tuple
    height: Fraction


@dataclass(frozen=True)
class Interval:
    start: Fraction
    end: Fraction
    height_start: Fraction
    segments: tuple

    def times(self):
        return [self.start] + [s.until for s in self.segments]

    def heights(self):
        return [self.height_start] + [s.height for s in self.segments]

    def seg_index(self, t, side=1):
        """Index of the segment containing t (right side at breakpoints)."""
        prev = self.start
        for j, s in enumerate(self.segments):
            if (prev <= t < s.until) if side > 0 else (prev < t <= s.until):
                return j
            prev = s.until
        return len(self.segments) - 1 if t >= self.end else 0

    def height_at(self, t):
        ts, hs = self.times(), self.heights()
        for j in range(len(ts) - 1):
            if ts[j] <= t <= ts[j + 1]:
                return hs[j] + (hs[j + 1] - hs[j]) * (t - ts[j]) / (ts[j + 1] - ts[j])
        raise TimeOutOfWindow(f"t={t} outside interval")

    def label_at(self, t, side=1):
        return self.segments[self.seg_index(t, side)].label


@dataclass(frozen=True)
class GTemplate:
    weights: object
    window: tuple
    levels: tuple          # levels[l-1] is a tuple of Intervals

    @property
    def n(self):
        return self.weights.n

    def intervals(self, l):
        return self.levels[l - 1]

    def all_intervals(self):
        """(level, index, Interval) for every nontriviality interval."""
        return [(l, j, iv) for l in range(1, self.n) for j, iv in enumerate(self.intervals(l))]


def make_interval(start, height_start, segs):
    """Interval whose heights follow the slope law; segs = [(until, label), ...]."""
    start, h = frac(start), frac(height_start)
    out, prev = [], start
    for until, label in segs:
        until = frac(until)
        label = tuple(sorted(frac(x) for x in label))
        h = h + eta_sum(label) * (until - prev)
        if out and out[-1].label == label:
            out.pop()                    # equal labels form one segment
        out.append(Segment(until, label, h))
        prev = until
    return Interval(start, prev, frac(height_start), tuple(out))


def new_template(w, window, levels=None):
    """levels: {l: [Interval, ...]}"""
    levels = levels or {}
    t0, t1 = frac(window[0]), frac(window[1])
    return GTemplate(w, (t0, t1),
                     tuple(tuple(sorted(levels.get(l, ()), key=lambda iv: iv.start))
                           for l in range(1, w.n)))


def trivial_template(w, window):
    return new_template(w, window)


def restrict(f, window):
    """The part of f inside a sub-window."""
    a, b = frac(window[0]), frac(window[1])
    levels = {}
    for l, _, iv in f.all_intervals():
        s, e = max(iv.start, a), min(iv.end, b)
        if s >= e:
            continue
        segs = []
        for seg in iv.segments:
            if seg.until > s:
                segs.append((min(seg.until, e), seg.label))
            if seg.until >= e:
                break
        levels.setdefault(l, []).append(make_interval(s, iv.height_at(s), segs))
    return new_template(f.weights, (a, b), levels)


# ---------------------------------------------------------------- evaluation

def breakpoints(f):
    t0, t1 = f.window
    ts = {t0, t1}
    for _, _, iv in f.all_intervals():
        ts.update(x for x in iv.times() if t0 <= x <= t1)
    return sorted(ts)


def active_at(f, t, side=0):
    """{l: (interval index, Interval)} of levels active at t.

    side 0 is the exact time t, +1 / -1 the open piece just after / before t.
    """
    t0, t1 = f.window
    out = {}
    for l in range(1, f.n):
        for j, iv in enumerate(f.intervals(l)):
            if side > 0:
                ok = iv.start <= t < iv.end
            elif side < 0:
                ok = iv.start < t <= iv.end
            else:
                ok = (iv.start < t < iv.end or (t == t0 and iv.start == t0 < iv.end)
                      or (t == t1 and iv.end == t1 > iv.start))
            if ok:
                out[l] = (j, iv)
                break
    return out


def heights_at(f, t, side=0):
    act = active_at(f, t, side)
    return interpolate(f.n, {l: iv.height_at(t) for l, (_, iv) in act.items()})


def labels_at(f, t, side=0):
    """{l: label} for active levels; side decides the label at a breakpoint."""
    act = active_at(f, t, side)
    s = side if side else (1 if t < f.window[1] else -1)
    return {l: iv.label_at(t, s) for l, (_, iv) in act.items()}


def d2_at(f, t, l):
    return d2(heights_at(f, t), l)


@dataclass(frozen=True)
class Piece:
    lo: Fraction
    hi: Fraction
    active: dict           # l -> (interval index, label, value at lo, slope)

    def value(self, l, t):
        _, _, v, s = self.active[l]
        return v + s * (t - self.lo)


def pieces(f):
    """Open pieces between consecutive breakpoints with their active data."""
    ts = breakpoints(f)
    out = []
    for lo, hi in zip(ts, ts[1:]):
        mid = (lo + hi) / 2
        act = {}
        for l, (j, iv) in active_at(f, mid).items():
            lab = iv.label_at(mid)
            act[l] = (j, lab, iv.height_at(lo), eta_sum(lab))
        out.append(Piece(lo, hi, act))
    return out


def filtration_at(f, labels):
    levels = [0] + sorted(labels) + [f.n]
    sets = [()] + [labels[l] for l in sorted(labels)] + [f.weights.values]
    return Filtration(tuple(levels), tuple(sets))


# ---------------------------------------------------------------- validation

def _struct_report(f):
    w = f.weights
    t0, t1 = f.window
    rep = []
    if t0 > t1:
        rep.append(f"structure: window start {fstr(t0)} after end {fstr(t1)}")
    for l in range(1, f.n):
        prev_end = None
        for iv in f.intervals(l):
            if not (t0 <= iv.start < iv.end <= t1):
                rep.append(f"structure: l={l} interval ({fstr(iv.start)},{fstr(iv.end)}) not inside window")
            if prev_end is not None and iv.start < prev_end:
                rep.append(f"structure: l={l} intervals overlap at t={fstr(iv.start)}")
            prev_end = iv.end
            prev, prev_lab = iv.start, None
            for s in iv.segments:
                if s.until <= prev:
                    rep.append(f"structure: l={l} segment breakpoints not increasing at t={fstr(s.until)}")
                if len(s.label) != l or not is_submultiset(s.label, w.values):
                    rep.append(f"structure: l={l} label {_lab(s.label)} is not a size-{l} multiset of weights")
                elif prev_lab is not None and (s.label == prev_lab or not leq(prev_lab, s.label)):
                    rep.append(f"order: l={l} labels {_lab(prev_lab)} -> {_lab(s.label)} do not increase at t={fstr(prev)}")
                prev, prev_lab = s.until, s.label
            if iv.segments and iv.segments[-1].until != iv.end:
                rep.append(f"structure: l={l} last segment does not end at the interval end")
            if not iv.segments:
                rep.append(f"structure: l={l} interval without segments")
    return rep


def _lab(E):
    return "{" + ",".join(fstr(x) for x in E) + "}" if E is not None else "*"


def validate(f):
    """List of violated invariants; empty means f is a valid g-template."""
    rep = _struct_report(f)
    if rep:
        return rep
    n = f.n
    t0, t1 = f.window
    # slope law
    for l in range(1, n):
        for iv in f.intervals(l):
            prev, h = iv.start, iv.height_start
            for s in iv.segments:
                slope = (s.height - h) / (s.until - prev)
                if slope != eta_sum(s.label):
                    rep.append(f"slope: l={l} on ({fstr(prev)},{fstr(s.until)}) slope {fstr(slope)} "
                               f"but label {_lab(s.label)} requires {fstr(eta_sum(s.label))}")
                prev, h = s.until, s.height
    # continuity where intervals open or close inside the window
    for l in range(1, n):
        for iv in f.intervals(l):
            for t, h in ((iv.start, iv.height_start), (iv.end, iv.height_at(iv.end))):
                if t0 < t < t1:
                    expect = heights_at(f, t)[l]
                    if h != expect:
                        rep.append(f"continuity: l={l} at t={fstr(t)} height {fstr(h)} "
                                   f"but neighbours give {fstr(expect)}")
    ts = breakpoints(f)
    # exact cross-sections at interior breakpoints; the window ends are
    # covered by the one-sided checks below
    for t in ts[1:-1]:
        a = heights_at(f, t)
        for l in active_at(f, t):
            if d2(a, l) <= 0:
                rep.append(f"convexity: l={l} active at t={fstr(t)} with d2={fstr(d2(a, l))}")
    # open pieces
    for lo, hi in zip(ts, ts[1:]):
        mid = (lo + hi) / 2
        labs = labels_at(f, mid)
        ls = sorted(labs)
        for x, y in zip(ls, ls[1:]):
            if not is_submultiset(labs[x], labs[y]):
                rep.append(f"compatibility: at t={fstr(mid)} labels {_lab(labs[x])} (l={x}) and "
                           f"{_lab(labs[y])} (l={y}) are not nested")
        a = heights_at(f, mid)
        for l in ls:
            if d2(a, l) <= 0:
                rep.append(f"convexity: l={l} active at t={fstr(mid)} with d2={fstr(d2(a, l))}")
        for t, side in ((lo, 1), (hi, -1)):
            act = active_at(f, t, side)
            a = interpolate(n, {l: iv.height_at(t) for l, (_, iv) in act.items()})
            for l in act:
                if d2(a, l) < 0:
                    rep.append(f"convexity: l={l} near t={fstr(t)} with d2={fstr(d2(a, l))}")
    return rep


def is_valid(f):
    return not validate(f)


# ---------------------------------------------------------------- vertices

@dataclass(frozen=True)
class Vertex:
    t: Fraction
    level: int
    kind: str              # 'open', 'close' or 'nonnull'
    label_from: tuple      # None for the null object
    label_to: tuple
    impacted: tuple


def _impacted(f, t, l0):
    act = set(active_at(f, t)) - {l0}
    lower = max([0] + [l for l in act if l < l0])
    upper = min([f.n] + [l for l in act if l > l0])
    return (lower, l0, upper)


def vertices(f):
    t0, t1 = f.window
    out = []
    for l in range(1, f.n):
        for iv in f.intervals(l):
            if t0 < iv.start < t1:
                out.append(Vertex(iv.start, l, "open", None, iv.segments[0].label,
                                  _impacted(f, iv.start, l)))
            for s, s2 in zip(iv.segments, iv.segments[1:]):
                if t0 < s.until < t1:
                    out.append(Vertex(s.until, l, "nonnull", s.label, s2.label,
                                      _impacted(f, s.until, l)))
            if t0 < iv.end < t1:
                out.append(Vertex(iv.end, l, "close", iv.segments[-1].label, None,
                                  _impacted(f, iv.end, l)))
    out.sort(key=lambda v: (v.t, v.level, v.kind))
    return out


def is_significant(f, C):
    C = frac(C)
    for v in vertices(f):
        a = heights_at(f, v.t)
        for l in v.impacted:
            if 1 <= l <= f.n - 1:
                x = d2(a, l)
                if not (x > C or x == 0):
                    return False
    return True


def is_separated(f, C):
    C = frac(C)
    vs = vertices(f)
    for i, v in enumerate(vs):
        if v.kind == "nonnull":
            continue
        for j, u in enumerate(vs):
            if i != j and abs(u.t - v.t) < C:
                return False
    return True


def _check_same(f, g):
    if f.weights != g.weights or f.window != g.window:
        raise WindowMismatch("templates differ in weights or window")


def high_stretches(f, l, C, extra_times=()):
    """Maximal [a, b] with constant label E at level l and d2 >= C; (a, b, E)."""
    ts = sorted(set(breakpoints(f)) | set(extra_times))
    out = []
    for iv in f.intervals(l):
        prev = iv.start
        for s in iv.segments:
            lo, hi = prev, s.until
            prev = s.until
            cuts = [lo] + [t for t in ts if lo < t < hi] + [hi]
            cur = None
            for u, v in zip(cuts, cuts[1:]):
                xu, xv = d2_at(f, u, l), d2_at(f, v, l)
                if xu >= C and xv >= C:
                    part = (u, v)
                elif xu >= C:
                    part = (u, u + (v - u) * (xu - C) / (xu - xv))
                elif xv >= C:
                    part = (v - (v - u) * (xv - C) / (xv - xu), v)
                else:
                    part = None
                if part is None:
                    if cur:
                        out.append((cur[0], cur[1], s.label))
                    cur = None
                elif cur and cur[1] == part[0]:
                    cur = (cur[0], part[1])
                else:
                    if cur:
                        out.append((cur[0], cur[1], s.label))
                    cur = part
            if cur:
                out.append((cur[0], cur[1], s.label))
    return out


def _label_covers(g, l, E, a, b):
    for iv in g.intervals(l):
        prev = iv.start
        for s in iv.segments:
            if s.label == E and prev <= a and b <= s.until:
                return True
            prev = s.until
    return False


def closeness_report(f, g, C):
    """Violations of C-closeness between f and g (empty list means close)."""
    _check_same(f, g)
    C = frac(C)
    rep = []
    ts = sorted(set(breakpoints(f)) | set(breakpoints(g)))
    for t in ts:
        a, b = heights_at(f, t), heights_at(g, t)
        for l in range(1, f.n):
            if abs(d2(a, l) - d2(b, l)) >= C:
                rep.append(f"d2: l={l} t={fstr(t)} differs by {fstr(abs(d2(a, l) - d2(b, l)))}")
    for x, y, name in ((f, g, "first"), (g, f, "second")):
        for l in range(1, f.n):
            for a, b, E in high_stretches(x, l, C, ts):
                if b - a >= 2 * C and not _label_covers(y, l, E, a + C, b - C):
                    rep.append(f"label: l={l} {name} template has {_lab(E)} on "
                               f"[{fstr(a)},{fstr(b)}] not matched on the inner part")
    return rep


def closeness(f, g, C):
    return not closeness_report(f, g, C)


# ---------------------------------------------------------------- hull construction

@dataclass(frozen=True)
class TrackPiece:
    """Affine candidate height for one level on [lo, hi]."""
    lo: Fraction
    hi: Fraction
    label: tuple
    value: Fraction        # value at lo
    group: object          # pieces of one group are continuous where they touch

    def at(self, t):
        return self.value + eta_sum(self.label) * (t - self.lo)


def _avail(tracks, lo, hi):
    """{l: TrackPiece} of tracks covering [lo, hi]."""
    out = {}
    for l, ps in tracks.items():
        for p in ps:
            if p.lo <= lo and hi <= p.hi:
                out[l] = p
                break
    return out


def _avail_point(tracks, t, t0, t1):
    out = {}
    for l, ps in tracks.items():
        inside = [p for p in ps if p.lo < t < p.hi]
        if inside:
            out[l] = inside[0]
            continue
        left = [p for p in ps if p.hi == t]
        right = [p for p in ps if p.lo == t]
        if left and right and left[0].group == right[0].group:
            out[l] = right[0]
        elif t == t0 and right:
            out[l] = right[0]
        elif t == t1 and left:
            out[l] = left[0]
    return out


def _hull_at(n, vals):
    pts = [(0, Fraction(0))] + sorted(vals.items()) + [(n, Fraction(0))]
    return [l for l in hull_vertices(pts) if 0 < l < n]


def hull_template(w, window, tracks):
    """Template whose active levels are the strict lower hull vertices of the tracks.

    tracks: {l: [TrackPiece, ...]} with disjoint pieces per level.  Labels
    come from the pieces; validity of the result still depends on the
    labels being nested where levels are simultaneously active.
    """
    n = w.n
    t0, t1 = frac(window[0]), frac(window[1])
    cuts = {t0, t1}
    for ps in tracks.values():
        for p in ps:
            cuts.update(x for x in (p.lo, p.hi) if t0 < x < t1)
    cuts = sorted(cuts)
    subs = []
    for lo, hi in zip(cuts, cuts[1:]):
        av = _avail(tracks, lo, hi)
        roots = set()
        lv = sorted(av)
        full = [0] + lv + [n]
        for a in range(len(full)):
            for b in range(a + 1, len(full)):
                if full[b] not in av:
                    continue
                for c in range(b + 1, len(full)):
                    i, l, k = full[a], full[b], full[c]
                    val = lambda m, t: av[m].at(t) if m in av else Fraction(0)
                    g0 = gen_d2(val(i, lo), val(l, lo), val(k, lo), i, l, k)
                    g1 = gen_d2(val(i, hi), val(l, hi), val(k, hi), i, l, k) - g0
                    if g1 != 0:
                        r = lo - g0 * (hi - lo) / g1
                        if lo < r < hi:
                            roots.add(r)
        pts = [lo] + sorted(roots) + [hi]
        for u, v in zip(pts, pts[1:]):
            mid = (u + v) / 2
            act = _hull_at(n, {l: p.at(mid) for l, p in av.items()})
            subs.append((u, v, {l: av[l] for l in act}))
    # activity at the cut points themselves
    point_active = {}
    for u, _, _ in subs[1:]:
        av = _avail_point(tracks, u, t0, t1)
        point_active[u] = set(_hull_at(n, {l: p.at(u) for l, p in av.items()}))
    levels = {}
    for l in range(1, n):
        ivs, cur = [], None
        for u, v, act in subs:
            if l in act:
                p = act[l]
                if cur is not None and cur["end"] == u and l in point_active.get(u, ()):
                    if cur["segs"][-1][1] == p.label:
                        cur["segs"][-1] = (v, p.label)
                    else:
                        cur["segs"].append((v, p.label))
                    cur["end"] = v
                else:
                    if cur is not None:
                        ivs.append(cur)
                    cur = {"start": u, "h": p.at(u), "segs": [(v, p.label)], "end": v}
            elif cur is not None:
                ivs.append(cur)
                cur = None
        if cur is not None:
            ivs.append(cur)
        levels[l] = [make_interval(c["start"], c["h"], c["segs"]) for c in ivs]
    return new_template(w, (t0, t1), levels)


# ---------------------------------------------------------------- shifts

@dataclass(frozen=True)
class IndependentShift:
    """rho_l = l(n-l) c + nu_J on the interval J of level l (nu = 0 elsewhere)."""
    c: Fraction
    nu: dict               # (l, interval index) -> value in [0, c]

    def value(self, n, l, j):
        return l * (n - l) * self.c + self.nu.get((l, j), Fraction(0))

    def amplitude(self, n):
        return max([Fraction(0)] + [l * (n - l) * self.c for l in range(1, n)]) + \
            max([Fraction(0)] + list(self.nu.values()))


def _rho_fn(f, rho):
    n = f.n
    if isinstance(rho, IndependentShift):
        if rho.c < 0 or any(not 0 <= v <= rho.c for v in rho.nu.values()):
            raise NotConcave("independent shift needs 0 <= nu <= c")
        return lambda l, j: rho.value(n, l, j)
    try:
        r = [frac(x) for x in rho]
    except TypeError:
        raise NotLocallyConstant("shift must be a constant sequence or an IndependentShift")
    if len(r) != n + 1 or r[0] != 0 or r[n] != 0 or not is_concave(r):
        raise NotConcave("shift sequence must be concave with rho_0 = rho_n = 0")
    return lambda l, j: r[l]


def shift_template(f, rho):
    """f^rho: convexify f + rho at every time, keeping the labels of f."""
    rf = _rho_fn(f, rho)
    tracks = {}
    for l, j, iv in f.all_intervals():
        r = rf(l, j)
        prev, h = iv.start, iv.height_start
        for s in iv.segments:
            tracks.setdefault(l, []).append(TrackPiece(prev, s.until, s.label, h + r, (l, j)))
            prev, h = s.until, s.height
    return hull_template(f.weights, f.window, tracks)


# ---------------------------------------------------------------- entropy

def delta_profile(f):
    """[(lo, hi, delta)] on the open pieces of f."""
    out = []
    for p in pieces(f):
        labs = {l: lab for l, (_, lab, _, _) in p.active.items()}
        out.append((p.lo, p.hi, delta(filtration_at(f, labs))))
    return out


def delta_integral(f):
    return sum(((hi - lo) * d for lo, hi, d in delta_profile(f)), Fraction(0))


def Delta0(f):
    """Average of delta over the finite window (a horizon-tagged estimate)."""
    t0, t1 = f.window
    if t1 <= t0:
        raise DegenerateWindow("window has length zero")
    return delta_integral(f) / (t1 - t0)


# ---------------------------------------------------------------- sampling and I/O

def sample(f, grid):
    t0, t1 = f.window
    rows = []
    for t in grid:
        t = frac(t)
        if not t0 <= t <= t1:
            raise TimeOutOfWindow(f"t={fstr(t)} outside window")
        a = heights_at(f, t)
        labs = labels_at(f, t)
        rows.append((t, a[1:f.n], [labs.get(l) for l in range(1, f.n)]))
    return rows


def sample_csv(f, grid, exact=False):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    n = f.n
    wr.writerow(["t"] + [f"fH{l}" for l in range(1, n)] + [f"labels{l}" for l in range(1, n)])
    num = fstr if exact else (lambda x: repr(float(x)))
    for t, hs, labs in sample(f, grid):
        wr.writerow([num(t)] + [num(h) for h in hs] +
                    ["*" if E is None else "|".join(fstr(x) for x in E) for E in labs])
    return buf.getvalue()


def template_to_dict(f):
    levels = []
    for l in range(1, f.n):
        ivs = []
        for iv in f.intervals(l):
            segs, prev, h = [], iv.start, iv.height_start
            for s in iv.segments:
                d = {"until": fstr(s.until), "multiset": [fstr(x) for x in s.label]}
                if s.until > prev and h + eta_sum(s.label) * (s.until - prev) != s.height:
                    d["height"] = fstr(s.height)
                segs.append(d)
                prev, h = s.until, s.height
            ivs.append({"start": fstr(iv.start), "end": fstr(iv.end),
                        "height_start": fstr(iv.height_start), "segments": segs})
        levels.append({"l": l, "intervals": ivs})
    return {"weights": [fstr(x) for x in f.weights.values],
            "window": [fstr(x) for x in f.window], "levels": levels}


def template_to_json(f):
    return json.dumps(template_to_dict(f), sort_keys=True, indent=1)


def template_from_dict(d):
    try:
        w = new_weights(d["weights"])
        window = (frac(d["window"][0]), frac(d["window"][1]))
        levels = {}
        for lev in d.get("levels", []):
            l = int(lev["l"])
            if not 1 <= l <= w.n - 1:
                raise TemplateFormatError(f"level {l} outside 1..{w.n - 1}")
            ivs = []
            for ivd in lev.get("intervals", []):
                start, h = frac(ivd["start"]), frac(ivd["height_start"])
                segs, prev = [], start
                for sd in ivd["segments"]:
                    until = frac(sd["until"])
                    lab = multiset(w, sd["multiset"])
                    h = frac(sd["height"]) if "height" in sd else h + eta_sum(lab) * (until - prev)
                    segs.append(Segment(until, lab, h))
                    prev = until
                end = frac(ivd.get("end", prev))
                ivs.append(Interval(start, end, frac(ivd["height_start"]), tuple(segs)))
            levels[l] = ivs
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise TemplateFormatError(f"malformed template: {e}") from e
    return new_template(w, window, levels)


def template_from_json(text):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise TemplateFormatError(f"invalid JSON: {e}") from e
    return template_from_dict(d)
