import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from subcake import END, NO_SUCH_POINT, Instance, Interval, Oracle, PieceSet, QueryLedger, fragmented_query
from subcake.oracle import CUT, EVAL, QueryViolation

from helpers import LEFT_HEAVY, Q, RIGHT_HEAVY, UNIFORM, brute_cdf, brute_cut, random_valuation


def oracle_for(*valuations):
    return Oracle(Instance(list(valuations)))


def test_cut_examples():
    o = oracle_for(UNIFORM, LEFT_HEAVY)
    assert o.cut(Interval(0, 1), 0, "1/4") == Q("1/4")
    assert o.cut(Interval(0, 1), 1, 1) == Q("1/2")
    assert o.cut(Interval("1/2", 1), 1, "1/10") is NO_SUCH_POINT
    assert o.ledger.count(kind=CUT) == 3


def test_eval_examples():
    o = oracle_for(UNIFORM, RIGHT_HEAVY)
    assert o.eval(Interval(0, 1), 0) == 1
    assert o.eval(Interval("1/2", 1), 0, Q("3/4")) == Q("1/4")
    assert o.eval(Interval(0, 1), 1, Q("3/4")) == Q("1/2")
    assert o.ledger.count(kind=EVAL) == 3


def test_eval_outside_piece_is_rejected():
    o = oracle_for(UNIFORM)
    with pytest.raises(QueryViolation):
        o.eval(Interval("1/2", 1), 0, Q("1/4"))
    with pytest.raises(QueryViolation):
        o.eval(PieceSet.of((0, "1/4"), ("1/2", "3/4")), 0, Q("1/3"))


def test_cut_at_zero_returns_left_end():
    o = oracle_for(RIGHT_HEAVY)
    assert o.cut(Interval("1/8", 1), 0, 0) == Q("1/8")
    # zero-density plateau: smallest point reaching the target
    assert o.cut(Interval(0, 1), 0, "0") == 0


def test_fragmented_examples():
    o = oracle_for(UNIFORM)
    piece = PieceSet.of((0, "1/4"), ("1/2", "3/4"))
    assert fragmented_query(o, piece, 0, EVAL) == Q("1/2")
    assert o.ledger.total == 2
    assert fragmented_query(o, piece, 0, CUT, Q("3/10")) == Q("55/100")
    assert o.ledger.total == 4
    assert fragmented_query(o, piece, 0, CUT, Q("3/4")) is NO_SUCH_POINT
    assert o.ledger.total == 6
    single = PieceSet.of(("1/4", "3/4"))
    assert fragmented_query(o, single, 0, CUT, Q("1/4")) == o.cut(Interval("1/4", "3/4"), 0, "1/4")
    assert o.ledger.total == 8
    with pytest.raises(ValueError):
        fragmented_query(o, piece, 0, "guess")


@pytest.mark.parametrize("k", range(1, 9))
def test_ledger_charges_one_per_fragment(k):
    piece = PieceSet.of(*[(mpq(2 * i, 2 * k), mpq(2 * i + 1, 2 * k)) for i in range(k)])
    assert len(piece) == k
    o = oracle_for(UNIFORM, LEFT_HEAVY)
    for kind, arg in [(EVAL, END), (CUT, Q("1/4")), (CUT, Q(1))]:
        before = o.ledger.count(kind=kind)
        fragmented_query(o, piece, 1, kind, arg)
        assert o.ledger.count(kind=kind) - before == k


def test_group_queries_charge_every_member():
    inst = Instance([UNIFORM, UNIFORM, LEFT_HEAVY])
    o = Oracle(inst)
    piece = PieceSet.of((0, "1/4"), ("1/2", 1))
    assert o.eval_group(piece, [0, 1]) == Q("3/4")
    assert o.ledger.total == 4
    assert o.cut_group(piece, [0, 1], "1/2") == Q("3/4")
    assert o.ledger.total == 8
    with pytest.raises(ValueError):
        o.eval_group(piece, [0, 2])


def test_phases_are_tracked_separately():
    o = oracle_for(UNIFORM)
    with o.phase("a"):
        o.eval(Interval(0, 1), 0)
        with o.phase("b"):
            o.cut(Interval(0, 1), 0, "1/2")
        o.cut(Interval(0, 1), 0, "1/2")
    assert o.ledger.to_dict() == {"a": {"cut": 1, "eval": 1}, "b": {"cut": 1, "eval": 0}}
    assert o.ledger.total == sum(o.ledger.count(p) for p in ("a", "b"))


def test_ledger_never_decreases():
    with pytest.raises(ValueError):
        QueryLedger().charge("x", CUT, -1)


bounds = st.tuples(st.integers(0, 32), st.integers(0, 32)).map(lambda ab: tuple(sorted(ab)))


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), bounds, st.integers(0, 64))
def test_round_trip_and_smallest_point(seed, ab, a_num):
    v = random_valuation(np.random.default_rng(seed), 4)
    lo, hi = mpq(ab[0], 32), mpq(ab[1], 32)
    o = oracle_for(v)
    worth = o.eval(Interval(lo, hi), 0)
    assert worth == brute_cdf(v, hi) - brute_cdf(v, lo)
    alpha = worth * mpq(a_num, 64)
    x = o.cut(Interval(lo, hi), 0, alpha)
    assert x == brute_cut(v, lo, hi, alpha)
    assert o.eval(Interval(lo, hi), 0, x) == alpha
    over = o.cut(Interval(lo, hi), 0, worth + mpq(1, 1000))
    assert over is NO_SUCH_POINT


@given(st.integers(0, 2**32 - 1), st.lists(st.integers(0, 64), min_size=2, max_size=6))
def test_eval_is_monotone(seed, xs):
    v = random_valuation(np.random.default_rng(seed), 5)
    o = oracle_for(v)
    values = [o.eval(Interval(0, 1), 0, mpq(x, 64)) for x in sorted(xs)]
    assert values == sorted(values)
