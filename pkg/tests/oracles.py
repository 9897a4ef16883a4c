"""Independent brute-force reference implementations used only by the tests.

Everything here is plain-Python loops over the defining formulas, kept free
of numpy and of the package's own computation paths.
"""

import math
from itertools import combinations

VARIANCE_FLOOR = 1e-12


def column_stats_naive(values):
    values = [float(v) for v in values]
    n = len(values)
    mn = values[0]
    mx = values[0]
    total = 0.0
    for v in values:
        mn = min(mn, v)
        mx = max(mx, v)
        total += v
    mean = total / n
    m2 = 0.0
    m3 = 0.0
    for v in values:
        d = v - mean
        m2 += d * d
        m3 += d * d * d
    m2 /= n
    m3 /= n
    skew = 0.0 if m2 < VARIANCE_FLOOR else m3 / m2**1.5
    return [mn, mx, mean, math.sqrt(m2), skew]


def _aggregate_naive(values):
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    mad = sum(abs(v - mean) for v in values) / n
    return [min(values), max(values), mean, math.sqrt(var), mad]


def pearson_naive(xs, ys):
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx < VARIANCE_FLOOR or syy < VARIANCE_FLOOR:
        return 0.0
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / (math.sqrt(sxx) * math.sqrt(syy))


def true_features_naive(columns):
    """26 features of a table given as a list of value lists."""
    stats = [column_stats_naive(col) for col in columns]
    out = [0.0] * 25
    for s in range(5):
        aggs = _aggregate_naive([cs[s] for cs in stats])
        for a in range(5):
            out[5 * a + s] = aggs[a]
    out.append(pearson_naive(columns[0], columns[1]))
    return out


def topk_naive(errors, k):
    """Minimum over all k-subsets of the index-ascending sequential sum."""
    best = None
    for combo in combinations(range(len(errors)), k):
        total = 0.0
        for i in combo:
            total += float(errors[i])
        if best is None or total < best:
            best = total
    return best


def smooth_l1_naive(pred, true, weights, beta):
    total = 0.0
    for p, t, w in zip(pred, true, weights):
        d = p - t
        if abs(d) < beta:
            total += w * (0.5 * d * d / beta)
        else:
            total += w * (abs(d) - 0.5 * beta)
    return total
