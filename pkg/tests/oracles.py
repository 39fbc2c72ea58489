"""Independent reference implementations used only by the tests."""

from fractions import Fraction

from bellfacets.scenario import enumerate_deterministic


def local_weight_oracle(q):
    """Textbook dense simplex over Fractions: max sum(l) s.t. sum_v l_v v <= q, l >= 0.

    Shares no code with the library solver: vertices come from the explicit
    deterministic-point distributions and pivoting is Bland's rule on a
    Fraction tableau.
    """
    s = q.scenario
    verts = [v.to_distribution().entries for v in enumerate_deterministic(s)]
    m, n = s.n_entries, len(verts)
    # rows: constraints; columns: n vertex weights, m slacks, rhs
    T = [[Fraction(verts[j][i]) for j in range(n)] + [Fraction(int(i == k)) for k in range(m)]
         + [Fraction(q.entries[i])] for i in range(m)]
    cost = [Fraction(-1)] * n + [Fraction(0)] * m + [Fraction(0)]
    basis = [n + i for i in range(m)]
    while True:
        enter = next((j for j in range(n + m) if cost[j] < 0), None)
        if enter is None:
            break
        best = None
        for i in range(m):
            if T[i][enter] > 0:
                ratio = T[i][-1] / T[i][enter]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        r = best[1]
        piv = T[r][enter]
        T[r] = [v / piv for v in T[r]]
        for i in range(m):
            if i != r and T[i][enter] != 0:
                f = T[i][enter]
                T[i] = [a - f * b for a, b in zip(T[i], T[r])]
        f = cost[enter]
        cost = [a - f * b for a, b in zip(cost, T[r])]
        basis[r] = enter
    return cost[-1]


def tsirelson_box():
    """``p(ab|xy) = (1 + (-1)^(a+b+xy) / sqrt 2) / 4``, floats."""
    import math

    from bellfacets.scenario import Distribution, Scenario

    s = Scenario(2, 2, 2, 2)
    out = [0.0] * s.n_entries
    for i in range(s.n_entries):
        a, b, x, y = s.unindex(i)
        out[i] = (1 + (-1) ** ((a + b + x * y) % 2) / math.sqrt(2)) / 4
    return Distribution(s, out)
