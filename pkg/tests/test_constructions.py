import random
from itertools import product
from fractions import Fraction as Fr

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgn.constructions import (admissible_splits, appendix_V, beta, bump_template, check_appendix,
                               check_preH, check_preH_all, chi_lower, chi_upper, conjugate_lower,
                               conjugate_upper, connecting_template, connecting_times,
                               dimension_profile, divergent_template, eps_constant,
                               inter_bump_maxima, make_bump, merge, splice_for)
from pgn.errors import (BadInterval, DimensionTooSmall, GapConditionFailed, InvalidSplit,
                        NoSignedWeights, StandardWeights, WrongZeroBranch)
from pgn.randomized import random_weights
from pgn.templates import Delta0, delta_integral, labels_at, sample, validate
from pgn.weights import delta_total, new_weights, parse_weights, xi

W = parse_weights("-6/5,1/2,7/10")
W_FIG = parse_weights("-6/5,3/10,9/10")


# ---------------------------------------------------------------- dimension profile

def test_dimension_profile_examples():
    p = dimension_profile(new_weights([-1, 1]))
    assert (p.zeta, p.D, p.Xi) == ((2,), 2, 1)
    assert (p.F_upper(0), p.F_upper(2)) == (0, 1)
    assert (p.F_lower(0), p.F_lower(1)) == (0, 2)
    p = dimension_profile(W)
    assert p.zeta == (Fr(1, 5), Fr(17, 10), Fr(19, 10))
    assert (p.D, p.Xi) == (Fr(19, 5), Fr(6, 5))
    p = dimension_profile(new_weights([-1, 0, 1]))
    assert (p.zeta, p.D, p.Xi) == ((1, 1, 2), 4, 1)


def test_chi_values():
    p = dimension_profile(W)
    assert chi_upper(p, 0) == p.D
    assert chi_upper(p, 1) == Fr(8, 5)
    assert chi_upper(dimension_profile(new_weights([-1, 1])), 2) == 0
    assert chi_lower(p, 0) == p.N


def test_conjugate_identity_at_breakpoints():
    p = dimension_profile(W)
    for k in range(p.N + 1):
        d2 = Fr(k)
        assert conjugate_upper(p, d2) == p.F_upper.xs[k]
        assert conjugate_lower(p, p.F_lower.ys[k]) == k


def test_beta():
    assert (beta(1, 2, 1), beta(2, 2, 1)) == (2, 1)
    assert beta(2, 2, 2) == 1
    assert beta(3, 2, 2) == 2
    with pytest.raises(InvalidSplit):
        beta(0, 2, 1)


# ---------------------------------------------------------------- inequalities

def test_preH_examples():
    r = check_preH(new_weights([-1, 1]), 1)
    assert r["ok"] and r["equalities"] == [(1, (-1,)), (1, (1,))]
    assert check_preH(W, 2)["ok"]
    r = check_preH(new_weights([0, 0]), 1)
    assert r["ok"]
    with pytest.raises(InvalidSplit):
        check_preH(W, 1)


def test_admissible_splits():
    assert admissible_splits(W) == [2]
    assert admissible_splits(new_weights([-1, 0, 1])) == [1, 2]


def test_appendix_values():
    assert appendix_V(1, 0, 1, 1, 0, 0, 1) == 0
    assert appendix_V(1, 0, 1, 0, 0, 1, 1) == 0
    assert appendix_V(2, 0, 2, 2, 0, 0, 2) == 8


def test_appendix_small_exhaustive():
    r = check_appendix(3)
    assert r["ok"] and r["negatives"] == []
    assert (1, 0, 1, 1, 0, 0, 1) in r["zeros"]
    assert r["checked"] == 1647


def test_appendix_check_agrees_with_V():
    # direct evaluation of V over the admissible tuples
    m, count, zeros = 3, 0, set()
    for a, b, c, a0, b0, c0 in product(range(m + 1), repeat=6):
        if a0 > a or b0 > b or c0 > c or a0 + b0 + c0 == 0:
            continue
        for n_plus in range(c, c + b + 1):
            if a0 + b0 + c0 > n_plus:
                continue
            count += 1
            v = appendix_V(a, b, c, a0, b0, c0, n_plus)
            assert v >= 0
            if v == 0:
                zeros.add((a, b, c, a0, b0, c0, n_plus))
    r = check_appendix(m)
    assert r["checked"] == count
    assert set(r["zeros"]) == zeros


# ---------------------------------------------------------------- connecting template

def test_connecting_times():
    tm, tp, R = connecting_times(W)
    assert (tm, tp) == (Fr(-30, 19), 15)
    assert R > max(-tm, tp)
    assert validate(connecting_template(W)) == []


def test_connecting_errors():
    with pytest.raises(StandardWeights):
        connecting_template(new_weights([-2, 1, 1]))
    with pytest.raises(NoSignedWeights):
        connecting_template(new_weights([-1, 0, 1]))
    with pytest.raises(DimensionTooSmall):
        connecting_template(new_weights([-1, 1]))


# ---------------------------------------------------------------- bumps

def test_bump_example():
    b = make_bump(W, 0, Fr(17, 10))
    assert b.t_half == Fr(1, 2)
    f = bump_template(W, 0, Fr(17, 10))
    assert validate(f) == []
    assert delta_integral(f) == Fr(221, 50)


def test_bump_errors():
    with pytest.raises(BadInterval):
        make_bump(W, 1, 1)
    with pytest.raises(WrongZeroBranch):
        make_bump(new_weights([-1, 0, 1]), 0, 4)


def test_eps_bump_plateau():
    w = parse_weights("-6/5,0,1/2,7/10")
    eps = Fr(1, 10)
    f = make_bump(w, 0, 4, eps).template()
    assert validate(f) == []
    (_, hs, labs), = sample(f, [2])
    assert hs[0] == -eps * 4
    assert labs[0] == (0,)


# ---------------------------------------------------------------- merger

def test_figure_merge():
    b1, b2 = make_bump(W_FIG, -5, Fr(1, 2)), make_bump(W_FIG, Fr(-1, 2), 12)
    sp = splice_for(b1, b2)
    assert sp.center == Fr(-3, 10)
    assert sp.scale == Fr(6, 25)
    f = merge(b1, b2)
    assert validate(f) == []
    assert labels_at(f, sp.center)[2] is not None


def test_disjoint_merge_is_concatenation():
    b1, b2 = make_bump(W, 0, 2), make_bump(W, 3, 5)
    f = merge(b1, b2)
    assert validate(f) == []
    assert len(f.intervals(1)) == 2 and f.intervals(2) == ()
    assert delta_integral(f) == 4 * (delta_total(W) - xi(W)) + 1 * delta_total(W)


def test_gap_condition():
    with pytest.raises(GapConditionFailed):
        splice_for(make_bump(W, -5, Fr(1, 2)), make_bump(W, Fr(-1, 2), 12))


# ---------------------------------------------------------------- divergent construction

def test_divergent_small_horizon():
    f, info = divergent_template(W, 3000)
    assert info["m0"] == 11
    assert validate(f) == []
    assert Delta0(f) < delta_total(W)
    maxima = [h for _, h in inter_bump_maxima(f)]
    assert all(a > b for a, b in zip(maxima, maxima[1:]))


def test_divergent_needs_n3():
    with pytest.raises(DimensionTooSmall):
        divergent_template(new_weights([-1, 1]), 100)


def test_eps_constants_frozen():
    assert eps_constant(W) == 1
    assert eps_constant(parse_weights("-6/5,0,1/2,7/10")) == 2
    assert eps_constant(new_weights([-1, 0, 1])) == 2


def test_divergent_with_zero_weight():
    f, info = divergent_template(new_weights([-1, 0, 1]), 2000)
    assert validate(f) == []
    maxima = [h for _, h in inter_bump_maxima(f)]
    assert len(maxima) >= 2
    assert all(a > b for a, b in zip(maxima, maxima[1:]))


# ---------------------------------------------------------------- properties

@st.composite
def signed_weights(draw, zero=False):
    rng = random.Random(draw(st.integers(0, 10 ** 6)))
    return random_weights(rng, draw(st.integers(3, 5)), zero=zero)


@settings(max_examples=60, deadline=None)
@given(signed_weights(), st.fractions(-5, 5, max_denominator=10),
       st.fractions(Fr(1, 10), 10, max_denominator=10))
def test_bump_integral_identity(w, t0, length):
    f = bump_template(w, t0, t0 + length)
    assert validate(f) == []
    assert delta_integral(f) == length * (delta_total(w) - xi(w))


@settings(max_examples=60, deadline=None)
@given(signed_weights())
def test_D_minus_Xi_and_zeta_sum(w):
    p = dimension_profile(w)
    assert p.D - p.Xi >= 0
    assert p.D == sum(p.zeta)


@settings(max_examples=40, deadline=None)
@given(signed_weights())
def test_preH_on_random_weights(w):
    assert check_preH_all(w)["ok"]


@settings(max_examples=40, deadline=None)
@given(signed_weights())
def test_conjugate_identity(w):
    p = dimension_profile(w)
    for k in range(4 * p.N + 1):
        d2 = Fr(k, 4)
        assert abs(float(conjugate_upper(p, d2)) - _inverse(p.F_upper, d2)) < 1e-9
        y = p.D * Fr(k, 4 * p.N)
        assert abs(float(conjugate_lower(p, y)) - _inverse(p.F_lower, y)) < 1e-9


def _inverse(F, y):
    """x with F(x) = y for an increasing piecewise-linear F."""
    xs, ys = F.xs, F.ys
    if F.ys[-1] < F.ys[0]:
        raise ValueError("decreasing")
    for i in range(len(xs) - 1):
        if ys[i] <= y <= ys[i + 1]:
            if ys[i + 1] == ys[i]:
                return float(xs[i])
            return float(xs[i] + (xs[i + 1] - xs[i]) * (y - ys[i]) / (ys[i + 1] - ys[i]))
    return float(xs[-1])
