"""Independent reference computations used by the tests."""
import itertools
import math

import numpy as np


def shapley_by_permutations(table):
    """Average marginal contribution over every ordering (no subset weights involved)."""
    n = int(round(math.log2(len(table))))
    phi = np.zeros(n)
    count = 0
    for perm in itertools.permutations(range(n)):
        mask = 0
        for p in perm:
            phi[p] += table[mask | (1 << p)] - table[mask]
            mask |= 1 << p
        count += 1
    return phi / count


def table_of(game):
    from svkit.game import Coalition
    n = game.n
    t = np.zeros(1 << n)
    for m in range(1, 1 << n):
        t[m] = game.utility.evaluate(Coalition(m, n), 0)
    return t
