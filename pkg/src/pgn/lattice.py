"""Explicit lattices under the diagonal flow: covolumes, Harder-Narasimhan
filtrations by bounded enumeration, signature profiles and blades.

Bases are stored as n x k float arrays whose columns are the basis
vectors; JSON files list the vectors as rows.
"""
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.linalg import null_space, subspace_angles

from .errors import ExtractionAmbiguous, NotNested, RankOutOfRange, SingularBasis
from .templates import (TrackPiece, heights_at, high_stretches, hull_template,
                        hull_vertices, trivial_template, validate)
from .weights import enumerate_multisets, eta_sum, frac, leq

TOL = 1e-9


@dataclass(frozen=True)
class Lattice:
    basis: np.ndarray      # n x k, columns are basis vectors
    exact: bool = False

    @property
    def n(self):
        return self.basis.shape[0]

    @property
    def rank(self):
        return self.basis.shape[1]

    def vectors(self):
        return self.basis.T


def lattice(rows, exact=None):
    """Lattice spanned by the given vectors (rows)."""
    rows = [list(r) for r in rows]
    if exact is None:
        exact = all(not isinstance(x, float) for r in rows for x in r)
    vals = [[float(frac(x)) if isinstance(x, str) else float(x) for x in r] for r in rows]
    if not vals:
        raise RankOutOfRange("a lattice needs at least one vector; use zero_lattice")
    B = np.array(vals, dtype=float).T
    if np.linalg.matrix_rank(B) < B.shape[1]:
        raise SingularBasis("basis vectors are linearly dependent")
    return Lattice(B, exact)


def zero_lattice(n):
    return Lattice(np.zeros((n, 0)), True)


def standard_lattice(n):
    return Lattice(np.eye(n), True)


def lattice_from_dict(d):
    L = lattice(d["basis"], d.get("exact"))
    if "n" in d and int(d["n"]) != L.n:
        raise SingularBasis(f"declared n={d['n']} but vectors have length {L.n}")
    return L


def lattice_from_json(text):
    return lattice_from_dict(json.loads(text))


def lattice_to_json(L):
    return json.dumps({"n": L.n, "basis": L.basis.T.tolist(), "exact": False})


# ---------------------------------------------------------------- covolumes

def log_covolume(L):
    if L.rank == 0:
        return 0.0
    # QR rather than the Gram matrix: flowed bases have wildly scaled columns
    r = np.abs(np.diag(np.linalg.qr(L.basis, mode="r")))
    if not np.all(r > 0) or not np.all(np.isfinite(r)):
        raise SingularBasis("basis is degenerate")
    return float(np.log(r).sum())


def covolume(L):
    return float(np.exp(log_covolume(L)))


def contains(L, M, tol=1e-7):
    """Every basis vector of M is an integer combination of L's basis."""
    if M.rank == 0:
        return True
    if L.rank == 0:
        return bool(np.allclose(M.basis, 0))
    c, *_ = np.linalg.lstsq(L.basis, M.basis, rcond=None)
    scale = 1 + np.abs(M.basis).max()
    return (np.allclose(L.basis @ c, M.basis, atol=tol * scale)
            and np.allclose(c, np.round(c), atol=tol * (1 + np.abs(c).max())))


def relative_covolume(G0, G1, G2):
    """Signed height of p(G1) above the segment [p(G0), p(G2)]."""
    l0, l1, l2 = G0.rank, G1.rank, G2.rank
    if not l0 <= l1 <= l2 or l0 == l2:
        raise RankOutOfRange(f"ranks {l0}, {l1}, {l2} must satisfy l0 <= l1 <= l2, l0 < l2")
    if not (contains(G1, G0) and contains(G2, G1)):
        raise NotNested("lattices are not nested")
    c0, c1, c2 = log_covolume(G0), log_covolume(G1), log_covolume(G2)
    return c1 - (l2 - l1) / (l2 - l0) * c0 - (l1 - l0) / (l2 - l0) * c2


def eta_array(w):
    return np.array([float(x) for x in w.values])


def flow_apply(w, t, L):
    """g_t L with g_t = exp(t diag(eta))."""
    return Lattice(np.exp(float(t) * eta_array(w))[:, None] * L.basis, False)


# ---------------------------------------------------------------- HN filtration

@lru_cache(maxsize=32)
def _coefficients(k, B):
    """Primitive integer vectors in [-B, B]^k, one per sign class."""
    r = np.arange(-B, B + 1)
    grid = np.stack(np.meshgrid(*([r] * k), indexing="ij"), -1).reshape(-1, k)
    nz = grid != 0
    first = grid[np.arange(len(grid)), np.argmax(nz, axis=1)]
    g = np.gcd.reduce(np.abs(grid), axis=1)
    return grid[nz.any(1) & (first > 0) & (g == 1)]


def _min_rank1(M, B):
    C = _coefficients(M.shape[1], B)
    X = C @ M.T
    norms = np.einsum("ij,ij->i", X, X)
    i = int(np.argmin(norms))
    return 0.5 * np.log(norms[i]), C[i:i + 1]


def _min_rank2(M, B, chunk=2048):
    C = _coefficients(M.shape[1], B)
    X = C @ M.T
    norms = np.einsum("ij,ij->i", X, X)
    order = np.argsort(norms, kind="stable")
    X, C, norms = X[order], C[order], norms[order]
    best, arg = np.inf, None
    for a in range(0, len(X), chunk):
        G = X[a:a + chunk] @ X.T
        det = norms[a:a + chunk, None] * norms[None, :] - G * G
        floor = 1e-12 * norms[a:a + chunk, None] * norms[None, :]
        det = np.where(det > floor, det, np.inf)
        i, j = np.unravel_index(int(np.argmin(det)), det.shape)
        if det[i, j] < best:
            best, arg = det[i, j], (a + i, j)
    if arg is None:
        return np.inf, None
    return 0.5 * np.log(best), C[list(arg)]


def _min_rank(M, l, B):
    if l == 1:
        return _min_rank1(M, B)
    if l == 2:
        return _min_rank2(M, B)
    raise RankOutOfRange(f"rank {l} sublattices are not enumerated (desk scale is n <= 5)")


@dataclass(frozen=True)
class HNFiltration:
    levels: tuple          # ranks at the extreme points, 0 ... k
    heights: tuple         # log covolume at those ranks
    minima: tuple          # per-rank minimal log covolume found, 0 ... k
    witnesses: dict        # rank -> n x rank array spanning the witness
    B: int
    stable: bool

    @property
    def k(self):
        return self.levels[-1]

    def profile(self):
        """Heights at every rank, linear between the extreme points."""
        out = np.zeros(self.k + 1)
        for (a, ha), (b, hb) in zip(zip(self.levels, self.heights),
                                    zip(self.levels[1:], self.heights[1:])):
            for l in range(a, b + 1):
                out[l] = ha + (hb - ha) * (l - a) / (b - a)
        return out


def _lower_hull(vals):
    """Ranks that are strict vertices of the lower hull of (l, vals[l])."""
    pts = list(enumerate(vals))
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            chord = y1 + (p[1] - y1) * (x2 - x1) / (p[0] - x1)
            if y2 >= chord - TOL * (1 + abs(chord)):
                hull.pop()
            else:
                break
        hull.append(p)
    return [x for x, _ in hull]


def _hn(L, B):
    M = L.basis
    k = L.rank
    logcov = log_covolume(L)
    minima, spans = [0.0], {}
    dual = M @ np.linalg.inv(M.T @ M) if k else M
    for l in range(1, k):
        if l <= k - l:
            m, C = _min_rank(M, l, B)
            span = M @ C.T if C is not None else None
        else:
            m, U = _min_rank(dual, k - l, B)
            m = logcov + m
            span = M @ null_space(U.astype(float)) if U is not None else None
        minima.append(float(m))
        spans[l] = span
    minima.append(logcov)
    levels = _lower_hull(minima)
    return (tuple(levels), tuple(minima[l] for l in levels), tuple(minima),
            {l: spans[l] for l in levels if 0 < l < k})


def hn_filtration(L, B=3, check=True):
    """HN filtration of L from sublattices with coefficients in [-B, B].

    stable is True when the bound B + 1 gives the same ranks and heights.
    """
    if B < 1:
        raise RankOutOfRange("enumeration bound must be at least 1")
    levels, heights, minima, spans = _hn(L, B)
    stable = True
    if check:
        lv2, h2, _, _ = _hn(L, B + 1)
        stable = lv2 == levels and np.allclose(h2, heights, atol=TOL, rtol=TOL)
    return HNFiltration(levels, heights, minima, spans, B, bool(stable))


@dataclass(frozen=True)
class HNTrack:
    times: tuple
    filtrations: tuple

    def heights(self):
        """Array (len(times), k + 1) of piecewise-linear HN heights."""
        return np.array([F.profile() for F in self.filtrations])


def hn_track(L, w, grid, B=3, check=False, threads=1):
    """HN filtrations of g_t L along the grid; threads > 1 spreads the times."""
    grid = [float(t) for t in grid]

    def one(t):
        return hn_filtration(flow_apply(w, t, L), B, check)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            out = list(ex.map(one, grid))
    else:
        out = [one(t) for t in grid]
    return HNTrack(tuple(grid), tuple(out))


def hn_track_csv(track):
    k = track.filtrations[0].k if track.filtrations else 0
    lines = ["t," + ",".join(f"fH{l}" for l in range(1, k))]
    for t, row in zip(track.times, track.heights()):
        lines.append(",".join(repr(float(x)) for x in [t] + list(row[1:k])))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- directions

def _orth(V):
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    V = V / np.linalg.norm(V, axis=0)
    Q, _ = np.linalg.qr(V)
    return Q


def _check_rank(V, n):
    l = np.asarray(V).reshape(n, -1).shape[1]
    if not 1 <= l <= n - 1:
        raise RankOutOfRange(f"subspace rank {l} outside 1..{n - 1}")
    return l


def invariant_near(V, w, E):
    """Nearest-by-blocks invariant subspace with multiset E to span(V)."""
    Q = _orth(V)
    eta = eta_array(w)
    cols = []
    for v in w.distinct:
        m = sum(1 for x in E if x == v)
        if not m:
            continue
        idx = np.where(eta == float(v))[0]
        U, _, _ = np.linalg.svd(Q[idx, :], full_matrices=True)
        W = np.zeros((w.n, m))
        W[idx, :] = U[:, :m]
        cols.append(W)
    return np.hstack(cols)


def grass_distance(V, W):
    """Largest principal angle between the column spans."""
    return float(np.max(subspace_angles(_orth(V), _orth(W))))


def default_label_eps(w, l):
    """A third of the separation between distinct invariant components.

    Two invariant subspaces with different multisets differ in the
    dimension of some eigen-block, so one contains a vector orthogonal to
    the other: components are exactly pi/2 apart.
    """
    return np.pi / 6


def direction_label(V, w, eps=None):
    """Multiset E with span(V) within eps of an E-invariant subspace, or None."""
    V = np.asarray(V, dtype=float).reshape(w.n, -1)
    l = _check_rank(V, w.n)
    eps = default_label_eps(w, l) if eps is None else eps
    best, bestE = np.inf, None
    for E in enumerate_multisets(w, l):
        d = grass_distance(V, invariant_near(V, w, E))
        if d < best:
            best, bestE = d, E
    return bestE if best < eps else None


def label_distance(V, w, E):
    return grass_distance(V, invariant_near(V, w, E))


# ---------------------------------------------------------------- signatures

def thresholds(w):
    v = [float(x) for x in w.distinct]
    return [(a + b) / 2 for a, b in zip(v, v[1:])]


def signatures(V, w, t, tol=1e-10):
    """[(sigma+, sigma-, sigma0)] of Q_s on g_t V, one per threshold."""
    eta = eta_array(w)
    Q = _orth(np.exp(float(t) * eta)[:, None] * np.asarray(V, dtype=float).reshape(w.n, -1))
    out = []
    for th in thresholds(w):
        d = np.sign(eta - th)
        ev = np.linalg.eigvalsh(Q.T @ (d[:, None] * Q))
        out.append((int((ev > tol).sum()), int((ev < -tol).sum()), int((np.abs(ev) <= tol).sum())))
    return out


def signature_label(w, l, sig):
    """Multiset read off from sigma+ counts; None when some form is degenerate."""
    if any(z for _, _, z in sig):
        return None
    plus = [l] + [p for p, _, _ in sig] + [0]
    E = []
    for j, v in enumerate(w.distinct):
        E += [v] * (plus[j] - plus[j + 1])
    return tuple(E)


@dataclass(frozen=True)
class SignatureProfile:
    intervals: tuple       # (a, b, E), ends may be -inf / inf
    gaps: tuple            # (a, b) not covered by any interval
    jumps: tuple           # times where some signature changes

    def gap_length(self):
        return sum(b - a for a, b in self.gaps)


def _far_time(w):
    return 300.0 / max(abs(float(x)) for x in w.values)


def signature_intervals(V, w, window=(-10.0, 10.0), step=0.05, tol=1e-12):
    """Maximal time intervals on which g_t V has a fixed signature label."""
    V = np.asarray(V, dtype=float).reshape(w.n, -1)
    l = _check_rank(V, w.n)
    a, b = float(window[0]), float(window[1])
    ts = np.linspace(a, b, max(2, int(round((b - a) / step)) + 1))
    plus = lambda t, tol=1e-10: [p for p, _, _ in signatures(V, w, t, tol)]
    sig = [plus(t) for t in ts]
    jumps, gaps = [], []
    for i in range(len(ts) - 1):
        for s, (p0, p1) in enumerate(zip(sig[i], sig[i + 1])):
            for target in range(p0 + 1, p1 + 1):
                lo, hi = ts[i], ts[i + 1]
                while hi - lo > tol * (1 + abs(lo)):
                    mid = (lo + hi) / 2
                    if plus(mid, 0.0)[s] >= target:
                        hi = mid
                    else:
                        lo = mid
                jumps.append((lo + hi) / 2)
                gaps.append((lo, hi))
    cuts = [a] + sorted(set(jumps)) + [b]
    ivs = []
    for u, v in zip(cuts, cuts[1:]):
        if v <= u:
            continue
        E = signature_label(w, l, signatures(V, w, (u + v) / 2))
        if E is None:
            gaps.append((u, v))
            continue
        if ivs and ivs[-1][2] == E and ivs[-1][1] == u:
            ivs[-1] = (ivs[-1][0], v, E)
        else:
            ivs.append((u, v, E))
    far = _far_time(w)
    if ivs and ivs[0][0] == a and signature_label(w, l, signatures(V, w, -far)) == ivs[0][2]:
        ivs[0] = (-np.inf, ivs[0][1], ivs[0][2])
    if ivs and ivs[-1][1] == b and signature_label(w, l, signatures(V, w, far)) == ivs[-1][2]:
        ivs[-1] = (ivs[-1][0], np.inf, ivs[-1][2])
    return SignatureProfile(tuple(ivs), tuple(sorted(gaps)), tuple(sorted(jumps)))


def labels_increase(labels):
    return all(leq(x, y) for x, y in zip(labels, labels[1:]))


# ---------------------------------------------------------------- blades

@dataclass(frozen=True)
class BladeSegment:
    lo: float
    hi: float
    slope: float           # least-squares slope over the segment
    label: tuple           # signature label at the midpoint
    eta: float             # eta_E of that label


@dataclass(frozen=True)
class BladeTrack:
    times: tuple
    values: tuple          # log covolume of g_t G
    segments: tuple

    def labels(self):
        return [s.label for s in self.segments]


def blade_track(G, w, grid, tol=1e-3):
    """log cov(g_t G) on the grid, split into pieces of slope eta_E.

    Grid steps whose difference quotient is not within tol of the eta_E of
    the signature label at their midpoint are treated as transient.
    """
    if G.rank < 1:
        raise RankOutOfRange("blade needs rank at least 1")
    ts = [float(t) for t in grid]
    vals = [log_covolume(flow_apply(w, t, G)) for t in ts]
    if G.rank == G.n:
        E = tuple(w.values)
        return BladeTrack(tuple(ts), tuple(vals),
                          (BladeSegment(ts[0], ts[-1], 0.0, E, 0.0),) if len(ts) > 1 else ())
    steps = []
    for i in range(len(ts) - 1):
        mid = (ts[i] + ts[i + 1]) / 2
        E = signature_label(w, G.rank, signatures(G.basis, w, mid))
        q = (vals[i + 1] - vals[i]) / (ts[i + 1] - ts[i])
        ok = E is not None and abs(q - float(eta_sum(E))) < tol
        steps.append((i, E if ok else None))
    segs, run = [], []

    def close(run):
        if not run:
            return
        idx = sorted({run[0]} | {j + 1 for j in run} | set(run))
        x, y = np.array([ts[j] for j in idx]), np.array([vals[j] for j in idx])
        slope = float(np.polyfit(x, y, 1)[0]) if len(idx) > 1 else 0.0
        E = dict(steps)[run[0]]
        segs.append(BladeSegment(x[0], x[-1], slope, E, float(eta_sum(E))))

    for i, E in steps:
        if E is not None and run and dict(steps)[run[-1]] == E and run[-1] == i - 1:
            run.append(i)
        else:
            close(run)
            run = [i] if E is not None else []
    close(run)
    return BladeTrack(tuple(ts), tuple(vals), tuple(segs))


def sublattice(L, coeffs):
    """Sublattice of L generated by integer coefficient vectors (rows)."""
    C = np.asarray(coeffs, dtype=float).reshape(-1, L.rank)
    return Lattice(L.basis @ C.T, L.exact)


def functoriality_violations(F, w, eps=None):
    """Pairs of HN witnesses whose direction labels are not nested."""
    labs = {}
    for l, span in F.witnesses.items():
        E = direction_label(span, w, eps)
        if E is not None:
            labs[l] = E
    bad = []
    for a, b in combinations(sorted(labs), 2):
        if not all(labs[a].count(x) <= labs[b].count(x) for x in set(labs[a])):
            bad.append((a, labs[a], b, labs[b]))
    return bad


# ---------------------------------------------------------------- templates from lattices

@dataclass(frozen=True)
class Extraction:
    template: object
    C: float               # least ladder value for which matches holds
    grid: tuple
    runs: tuple            # (level, first time, last time, label) kept
    dropped: tuple         # runs removed to obtain a valid template


def _grid(window, step):
    a, b = frac(window[0]), frac(window[1])
    step = Fraction(step).limit_denominator(10 ** 6) if not isinstance(step, Fraction) else step
    if b - a < step:
        raise ExtractionAmbiguous("window is shorter than one grid step")
    m = int((b - a) / step)
    return [a + i * step for i in range(m + 1)], step


def _labelled_runs(track, w, grid, eps, C_seg):
    n = w.n
    prof = track.heights()
    runs = []
    for l in range(1, n):
        cur = None
        for i, (t, F) in enumerate(zip(grid, track.filtrations)):
            E = None
            if l in F.levels and prof[i][l - 1] - 2 * prof[i][l] + prof[i][l + 1] > C_seg:
                E = direction_label(F.witnesses[l], w, eps)
            if E is not None and cur is not None and cur["E"] == E and cur["i1"] == i - 1:
                cur["i1"] = i
                continue
            if cur is not None:
                runs.append(cur)
            cur = {"l": l, "E": E, "i0": i, "i1": i} if E is not None else None
        if cur is not None:
            runs.append(cur)
    out = []
    for r in runs:
        if r["i1"] == r["i0"]:
            continue
        idx = range(r["i0"], r["i1"] + 1)
        s = float(eta_sum(r["E"]))
        b = float(np.mean([prof[i][r["l"]] - s * float(grid[i]) for i in idx]))
        r["b"] = frac(b).limit_denominator(10 ** 6)
        out.append(r)
    return out


def _chains(runs, grid, step):
    """Per level, runs joined into convex chains where the label increases."""
    t0, t1 = grid[0], grid[-1]
    chains = []
    for l in sorted({r["l"] for r in runs}):
        cur = None
        for r in sorted((r for r in runs if r["l"] == l), key=lambda r: r["i0"]):
            part = [max(t0, grid[r["i0"]] - step / 2), min(t1, grid[r["i1"]] + step / 2),
                    r["E"], r["b"], r]
            if cur is not None:
                last = cur["parts"][-1]
                sa, sb = eta_sum(last[2]), eta_sum(r["E"])
                if sa < sb and leq(last[2], r["E"]):
                    x = (last[3] - r["b"]) / (sb - sa)
                    if last[0] < x < part[1]:
                        last[1], part[0] = x, x
                        cur["parts"].append(part)
                        continue
            cur = {"l": l, "parts": [part]}
            chains.append(cur)
    return chains


def _chain_value(ch, t, n, penalty):
    for lo, hi, E, b, _ in ch["parts"]:
        if lo <= t <= hi:
            return b + eta_sum(E) * t + ch["l"] * (n - ch["l"]) * penalty
    return None


def _active_end(ch, t, chains, n, penalty):
    """Whether the chain's level is a strict hull vertex at its end time t."""
    vals = {}
    for c in chains:
        if c["l"] != ch["l"]:
            v = _chain_value(c, t, n, penalty)
            if v is not None:
                vals[c["l"]] = v
    vals[ch["l"]] = _chain_value(ch, t, n, penalty)
    pts = [(0, Fraction(0))] + sorted(vals.items()) + [(n, Fraction(0))]
    return ch["l"] in hull_vertices(pts)


def _extend(chains, t0, t1, step, n, penalty):
    """Lengthen chain ends that are still on the hull, one step at a time."""
    for _ in range(10 * len(chains) * int((t1 - t0) / step + 1)):
        changed = False
        for ch in chains:
            same = [c for c in chains if c["l"] == ch["l"] and c is not ch]
            lo, hi = ch["parts"][0][0], ch["parts"][-1][1]
            if lo > t0 and _active_end(ch, lo, chains, n, penalty):
                stop = max([t0] + [c["parts"][-1][1] for c in same if c["parts"][-1][1] <= lo])
                if stop < lo:
                    ch["parts"][0][0] = max(stop, lo - step)
                    changed = True
            if hi < t1 and _active_end(ch, hi, chains, n, penalty):
                stop = min([t1] + [c["parts"][0][0] for c in same if c["parts"][0][0] >= hi])
                if stop > hi:
                    ch["parts"][-1][1] = min(stop, hi + step)
                    changed = True
        if not changed:
            break
    return chains


def _tracks(w, runs, grid, step, penalty):
    n = w.n
    chains = _extend(_chains(runs, grid, step), grid[0], grid[-1], step, n, penalty)
    tracks = {}
    for k, ch in enumerate(chains):
        l = ch["l"]
        for lo, hi, E, b, _ in ch["parts"]:
            v = b + eta_sum(E) * lo + l * (n - l) * penalty
            tracks.setdefault(l, []).append(TrackPiece(lo, hi, E, v, (l, k)))
    return tracks


def extract_template(L, w, window, B=3, eps=None, step=None, C_seg=None, penalty=None,
                     ladder=None, threads=1):
    """Template read off from the HN filtrations of g_t L along a grid.

    Per level, grid runs where the level is an HN vertex with d2 above
    C_seg and a stable direction label become lines of the exact slope
    eta_E; the lower hull of these tracks (raised by l(n-l) * penalty) is
    the template.  Runs are dropped until the result validates.
    """
    a, b = frac(window[0]), frac(window[1])
    step = Fraction(step if step is not None else (b - a) / 40).limit_denominator(10 ** 6)
    grid, step = _grid((a, b), step)
    total = sum(abs(float(x)) for x in w.values)
    C_seg = 2 * float(step) * total if C_seg is None else float(C_seg)
    penalty = frac(penalty) if penalty is not None else frac(float(step) * total / 4).limit_denominator(1000)
    track = hn_track(L, w, grid, B, threads=threads)
    runs = _labelled_runs(track, w, grid, eps, C_seg)
    dropped = []
    win = (grid[0], grid[-1])

    def build(rs):
        return hull_template(w, win, _tracks(w, rs, grid, step, penalty))

    f = build(runs)
    bad = validate(f)
    while bad and runs:
        best = None
        for k in range(len(runs)):
            g = build(runs[:k] + runs[k + 1:])
            m = len(validate(g))
            if best is None or m < best[0]:
                best = (m, k, g)
        dropped.append(runs.pop(best[1]))
        f, bad = best[2], validate(best[2])
    if bad:
        f = trivial_template(w, win)
    ladder = ladder or [2.0 ** k for k in range(-4, 16)]
    Cm = next((c for c in ladder if matches(L, f, eps, c, grid, B, track)[0]), float("inf"))
    pack = lambda r: (r["l"], grid[r["i0"]], grid[r["i1"]], r["E"])
    return Extraction(f, Cm, tuple(grid), tuple(map(pack, runs)), tuple(map(pack, dropped)))


def matches(L, f, eps=None, C=1.0, grid=None, B=3, track=None, threads=1):
    """Whether L (eps, C)-matches f on the grid, with a report of the failures."""
    w = f.weights
    n = w.n
    C = float(C)
    eps = default_label_eps(w, 1) if eps is None else eps
    if grid is None:
        t0, t1 = f.window
        grid = [t0 + (t1 - t0) * k / 40 for k in range(41)]
    grid = [frac(t) for t in grid]
    if track is None:
        track = hn_track(L, w, grid, B, threads=threads)
    prof = track.heights()
    worst, fails = 0.0, []
    for i, t in enumerate(grid):
        a = heights_at(f, t)
        for l in range(1, n):
            dev = abs(prof[i][l] - float(a[l]))
            worst = max(worst, dev)
            if dev >= C:
                fails.append(f"height: l={l} t={float(t):.6g} deviation {dev:.6g}")
    Cf = frac(C).limit_denominator(10 ** 6)
    for l in range(1, n):
        for lo, hi, E in high_stretches(f, l, Cf, grid):
            for i, t in enumerate(grid):
                if not lo + Cf <= t <= hi - Cf:
                    continue
                F = track.filtrations[i]
                if l not in F.levels:
                    fails.append(f"direction: l={l} t={float(t):.6g} is not an HN vertex")
                    continue
                d = label_distance(F.witnesses[l], w, E)
                if d >= eps:
                    fails.append(f"direction: l={l} t={float(t):.6g} angle {d:.3g} to label")
    return not fails, {"max_height_deviation": worst, "failures": fails}
