"""Truncated power series on plain lists, generic in the coefficient type.

Coefficients may be floats, ``fractions.Fraction`` or sympy expressions; the
same code then yields numeric, exact-rational or symbolic results.
"""


def mul(a, b, order):
    out = [0] * (order + 1)
    for i, ai in enumerate(a[: order + 1]):
        if ai == 0:
            continue
        for k, bk in enumerate(b[: order + 1 - i]):
            out[i + k] = out[i + k] + ai * bk
    return out


def power(a, k, order):
    out = [1] + [0] * order
    for _ in range(k):
        out = mul(out, a, order)
    return out


def inverse(w, order):
    """1/w for a series with nonzero constant term."""
    w = list(w) + [0] * (order + 1 - len(w))
    # int 1 / int would turn exact coefficients into floats
    unit = w[0] == 1
    out = [w[0] if unit else 1 / w[0]] + [0] * order
    for n in range(1, order + 1):
        acc = 0
        for k in range(1, n + 1):
            acc = acc + w[k] * out[n - k]
        out[n] = -acc if unit else -acc / w[0]
    return out


def log1p(u, order):
    """log(1 + u) for a series u with zero constant term."""
    if u and u[0] != 0:
        raise ValueError("log1p series needs u(0) = 0")
    out = [0] * (order + 1)
    term = [1] + [0] * order
    for n in range(1, order + 1):
        term = mul(term, u, order)
        sign = 1 if n % 2 else -1
        for i in range(order + 1):
            if term[i] != 0:
                out[i] = out[i] + sign * term[i] / n
    return out
