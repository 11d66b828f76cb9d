import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgn.errors import ExtractionAmbiguous, NotNested, RankOutOfRange, SingularBasis
from pgn.lattice import (blade_track, contains, covolume, default_label_eps, direction_label,
                         extract_template, flow_apply, functoriality_violations, hn_filtration,
                         hn_track, hn_track_csv, labels_increase, lattice, lattice_from_json,
                         lattice_to_json, log_covolume, matches, relative_covolume,
                         signature_intervals, signatures, standard_lattice, sublattice,
                         zero_lattice)
from pgn.templates import make_interval, new_template, validate
from pgn.weights import eta_sum, new_weights

W2 = new_weights([-1, 1])


def unimodular(rng, n, steps=12):
    M = np.eye(n, dtype=int)
    for _ in range(steps):
        i, j = rng.choice(n, 2, replace=False)
        E = np.eye(n, dtype=int)
        E[i, j] = rng.integers(-2, 3)
        M = M @ E
    return M


def perturbed_diagonal(rng, n=3):
    M = np.diag(np.exp(rng.uniform(-1, 1, n))) @ (np.eye(n) + 0.15 * rng.normal(size=(n, n)))
    M /= abs(np.linalg.det(M)) ** (1 / n)
    return lattice(M.T.tolist())


# ---------------------------------------------------------------- covolumes

def test_covolume_examples():
    assert covolume(standard_lattice(2)) == pytest.approx(1)
    assert covolume(zero_lattice(3)) == 1
    assert covolume(lattice([[2, 0], [0, "1/2"]])) == pytest.approx(1)
    with pytest.raises(SingularBasis):
        lattice([[1, 1], [2, 2]])


def test_relative_covolume():
    Z = standard_lattice(2)
    L1 = lattice([[3, 0]])
    assert relative_covolume(zero_lattice(2), L1, Z) == pytest.approx(np.log(3))
    assert relative_covolume(L1, L1, Z) == pytest.approx(0)
    with pytest.raises(RankOutOfRange):
        relative_covolume(Z, Z, Z)
    with pytest.raises(NotNested):
        relative_covolume(zero_lattice(2), lattice([["1/2", 0]]), Z)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_relative_covolume_is_height_above_chord(seed):
    rng = np.random.default_rng(seed)
    G2 = lattice((rng.normal(size=(3, 3)) + 3 * np.eye(3)).tolist())
    coeffs = unimodular(rng, 3)
    G1 = sublattice(G2, coeffs[:1] if rng.random() < 0.5 else coeffs[:2])
    G0 = zero_lattice(3)
    pts = [(G.rank, log_covolume(G)) for G in (G0, G1, G2)]
    chord = np.interp(pts[1][0], [pts[0][0], pts[2][0]], [pts[0][1], pts[2][1]])
    assert relative_covolume(G0, G1, G2) == pytest.approx(pts[1][1] - chord, abs=1e-9)


def test_flow_apply():
    Z = standard_lattice(2)
    assert np.allclose(flow_apply(W2, 0, Z).basis, Z.basis)
    assert np.allclose(flow_apply(W2, 1, Z).basis, np.diag([np.exp(-1), np.exp(1)]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(-3, 3))
def test_flow_preserves_covolume(seed, t):
    rng = np.random.default_rng(seed)
    L = lattice((rng.normal(size=(3, 3)) + 2 * np.eye(3)).tolist())
    w = new_weights(["-3/2", "1/2", "1"])
    assert log_covolume(flow_apply(w, t, L)) == pytest.approx(log_covolume(L), abs=1e-9)


def test_lattice_json_round_trip():
    L = lattice([[1, 0, 0], [0, 2, 1], [0, 0, 1]])
    assert np.allclose(lattice_from_json(lattice_to_json(L)).basis, L.basis)
    d = json.loads(lattice_to_json(L))
    assert d["n"] == 3 and len(d["basis"]) == 3


def test_contains():
    Z = standard_lattice(2)
    assert contains(Z, lattice([[2, 1]]))
    assert not contains(Z, lattice([["1/2", 0]]))


# ---------------------------------------------------------------- HN filtrations

def test_hn_of_standard_lattice_is_trivial():
    F = hn_filtration(standard_lattice(3))
    assert F.levels == (0, 3)
    assert np.allclose(F.heights, 0)


def test_hn_after_flow():
    F = hn_filtration(flow_apply(W2, 1, standard_lattice(2)))
    assert F.levels == (0, 1, 2)
    assert np.allclose(F.heights, (0, -1, 0), atol=1e-12)
    v = F.witnesses[1][:, 0]
    assert abs(v[1]) < 1e-12 and abs(abs(v[0]) - np.exp(-1)) < 1e-12


def test_hn_track_diagonal():
    tr = hn_track(standard_lattice(2), W2, [0, 1, 2])
    assert np.allclose(tr.heights()[:, 1], [0, -1, -2], atol=1e-12)
    csv = hn_track_csv(tr)
    assert csv.splitlines()[0] == "t,fH1"


def test_hn_track_threads_agree():
    rng = np.random.default_rng(2)
    L = perturbed_diagonal(rng)
    w = new_weights([-1, 0, 1])
    grid = np.linspace(-2, 2, 9)
    a = hn_track(L, w, grid).heights()
    b = hn_track(L, w, grid, threads=3).heights()
    assert np.allclose(a, b)


def test_random_unimodular_is_stable():
    rng = np.random.default_rng(7)
    for _ in range(5):
        L = lattice(unimodular(rng, 3).T.tolist())
        F = hn_filtration(L, 3, check=True)
        assert F.stable


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_hn_heights_are_strict_lower_hull(seed):
    rng = np.random.default_rng(seed)
    L = perturbed_diagonal(rng)
    F = hn_filtration(L, 3, check=False)
    G = hn_filtration(L, 4, check=False)
    assert all(b <= a + 1e-9 for a, b in zip(F.minima, G.minima))
    lv, h = F.levels, F.heights
    for i in range(1, len(lv) - 1):
        chord = h[i - 1] + (h[i + 1] - h[i - 1]) * (lv[i] - lv[i - 1]) / (lv[i + 1] - lv[i - 1])
        assert h[i] < chord
    for l, m in enumerate(F.minima):
        assert m >= np.interp(l, lv, h) - 1e-9


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_hn_heights_lipschitz(seed):
    rng = np.random.default_rng(seed)
    L = perturbed_diagonal(rng)
    w = new_weights(["-3/2", "1/2", "1"])
    grid = np.linspace(-2, 2, 17)
    H = hn_track(L, w, grid).heights()
    lip = max(abs(float(eta_sum(E))) for l in range(1, 3) for E in _msets(w, l))
    slopes = np.abs(np.diff(H, axis=0)) / np.diff(grid)[:, None]
    assert slopes.max() <= lip + 1e-9


def _msets(w, l):
    from pgn.weights import enumerate_multisets
    return enumerate_multisets(w, l)


# ---------------------------------------------------------------- directions and signatures

def test_direction_label_examples():
    w = new_weights([-1, 0, 0, 1])
    V = np.eye(4)[:, [0, 3]]
    assert direction_label(V, w, 1e-6) == (-1, 1)
    d = 1e-3
    assert direction_label(np.array([1, d]), W2, 0.01) == (-1,)
    assert direction_label(np.array([1, 1]), W2, 0.1) is None
    assert default_label_eps(W2, 1) == pytest.approx(np.pi / 6)


def test_signature_examples():
    w = new_weights([-1, 0, 0, 1])
    p = signature_intervals(np.eye(4)[:, [0, 3]], w)
    assert len(p.intervals) == 1
    a, b, E = p.intervals[0]
    assert (a, b, E) == (-np.inf, np.inf, (-1, 1))
    p = signature_intervals(np.array([1.0, 1.0]), W2)
    assert [E for _, _, E in p.intervals] == [(-1,), (1,)]
    assert p.intervals[0][0] == -np.inf and p.intervals[1][1] == np.inf
    assert abs(p.jumps[0]) < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 3))
def test_signature_monotone(seed, l):
    rng = np.random.default_rng(seed)
    w = new_weights([-2, -1, 1, 2])
    V = rng.normal(size=(4, l))
    ts = np.linspace(-4, 4, 33)
    sig = [signatures(V, w, t) for t in ts]
    for s in range(3):
        plus = [x[s][0] for x in sig]
        minus = [x[s][1] for x in sig]
        assert plus == sorted(plus)
        assert minus == sorted(minus, reverse=True)
    p = signature_intervals(V, w, (-4, 4), 0.1)
    assert labels_increase([E for _, _, E in p.intervals])
    assert len(p.jumps) <= l * 3


# ---------------------------------------------------------------- blades

def test_blade_examples():
    grid = np.linspace(-3, 3, 61)
    bt = blade_track(lattice([[1, 1]]), W2, grid)
    assert [s.label for s in bt.segments] == [(-1,), (1,)]
    assert bt.segments[0].slope == pytest.approx(-1, abs=1e-3)
    assert bt.segments[1].slope == pytest.approx(1, abs=1e-3)
    w = new_weights(["-3/2", "1/2", "1"])
    bt = blade_track(lattice([[0, 2, 0]]), w, grid)
    assert len(bt.segments) == 1 and bt.segments[0].slope == pytest.approx(0.5, abs=1e-12)
    bt = blade_track(standard_lattice(3), w, grid)
    assert all(abs(s.slope) < 1e-12 for s in bt.segments)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 2))
def test_blade_slopes_match_labels(seed, l):
    rng = np.random.default_rng(seed)
    w = new_weights([-1, 0, 1])
    G = lattice(rng.normal(size=(l, 3)).tolist())
    bt = blade_track(G, w, np.linspace(-8, 8, 161))
    assert labels_increase(bt.labels())
    for s in bt.segments:
        assert abs(s.slope - s.eta) < 1e-3


# ---------------------------------------------------------------- templates from lattices

def test_extract_invariant_lattice():
    w = new_weights([-1, 0, 1])
    ex = extract_template(standard_lattice(3), w, (0, 3), step=0.25)
    assert validate(ex.template) == []
    assert ex.C <= 1


def test_extract_window_too_short():
    with pytest.raises(ExtractionAmbiguous):
        extract_template(standard_lattice(3), new_weights([-1, 0, 1]), (0, 0.1), step=0.25)


def test_matches_self_and_shifted():
    w = new_weights([-1, 1])
    f = new_template(w, (0, 4), {1: [make_interval(0, 0, [(4, [-1])])]})
    L = standard_lattice(2)
    ok, rep = matches(L, f, C=0.5)
    assert ok and rep["max_height_deviation"] < 1e-9
    g = new_template(w, (0, 4), {1: [make_interval(0, -2, [(4, [-1])])]})
    ok, rep = matches(L, g, C=1)
    assert not ok and any(m.startswith("height") for m in rep["failures"])


def test_extract_matches_source():
    rng = np.random.default_rng(11)
    w = new_weights([-1, 0, 1])
    L = perturbed_diagonal(rng)
    ex = extract_template(L, w, (-3, 3), step=0.125)
    assert validate(ex.template) == []
    assert matches(L, ex.template, C=ex.C, grid=ex.grid)[0]


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_functoriality(seed):
    rng = np.random.default_rng(seed)
    w = new_weights(["-3/2", "1/2", "1"])
    L = perturbed_diagonal(rng)
    for t in np.linspace(-3, 3, 7):
        F = hn_filtration(flow_apply(w, t, L), 3, check=False)
        assert functoriality_violations(F, w) == []

