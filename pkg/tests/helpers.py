"""Independent reference computations shared by the tests."""

from gmpy2 import mpq

from subcake import Instance, Valuation
from subcake import rational as Q


UNIFORM = Valuation.uniform()
LEFT_HEAVY = Valuation([0, Q("1/2"), 1], [2, 0])
RIGHT_HEAVY = Valuation([0, Q("1/2"), 1], [0, 2])


def brute_cdf(valuation, x):
    """Linear scan over every block; no bisection, no cached prefix sums."""
    total = mpq(0)
    bps, dens = valuation.breakpoints, valuation.densities
    for i, d in enumerate(dens):
        lo, hi = bps[i], bps[i + 1]
        if x <= lo:
            break
        total += d * (min(x, hi) - lo)
    return total


def brute_cut(valuation, lo, hi, alpha):
    """Smallest x in [lo, hi] with mass([lo, x]) == alpha, by walking blocks left to right."""
    if brute_cdf(valuation, hi) - brute_cdf(valuation, lo) < alpha:
        return None
    if alpha == 0:
        return lo
    need = alpha
    points = sorted({lo, hi, *[b for b in valuation.breakpoints if lo < b < hi]})
    for a, b in zip(points, points[1:]):
        m = brute_cdf(valuation, b) - brute_cdf(valuation, a)
        if m >= need:
            d = m / (b - a)
            return a + need / d
        need -= m
    raise AssertionError("unreachable")


def random_valuation(rng, blocks=None):
    blocks = blocks or int(rng.integers(1, 7))
    cuts = sorted({mpq(int(c), 64) for c in rng.integers(1, 64, size=blocks - 1)})
    bps = [mpq(0), *cuts, mpq(1)]
    weights = [int(w) for w in rng.integers(0, 6, size=len(bps) - 1)]
    if not any(weights):
        weights[0] = 1
    return Valuation.from_weights(bps, weights)


def random_instance(rng, n):
    return Instance([random_valuation(rng) for _ in range(n)])


def naive_dc(valuations, players, lo, hi):
    """Per-player Even-Paz on a contiguous piece, without any grouping."""
    players = sorted(players)
    k = len(players)
    if k == 1:
        return {players[0]: (lo, hi)}
    left = k // 2
    marks = []
    for p in players:
        v = valuations[p]
        worth = brute_cdf(v, hi) - brute_cdf(v, lo)
        marks.append((brute_cut(v, lo, hi, worth * mpq(left, k)), p))
    marks.sort()
    split = marks[left - 1][0]
    out = naive_dc(valuations, [p for _, p in marks[:left]], lo, split)
    out.update(naive_dc(valuations, [p for _, p in marks[left:]], split, hi))
    return out
