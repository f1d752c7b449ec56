"""Reference values of E_{g,1}(-x) in high precision arithmetic.

Small arguments use the power series, large ones the algebraic asymptotic
expansion truncated at its smallest term. Neither path is the one used by
the library (which switches to a quadrature in between).
"""
import mpmath as mp


def series(g, x):
    mp.mp.dps = 30
    peak, k = 0, 0
    while True:
        lt = k * mp.log10(x) - mp.loggamma(g * k + 1) / mp.log(10)
        peak = max(peak, lt)
        if k > 10 and lt < peak - 60:
            break
        k += 1
    mp.mp.dps = int(peak) + 80
    s, k = mp.mpf(0), 0
    while True:
        t = (-x) ** k / mp.gamma(g * k + 1)
        s += t
        if k > 10 and abs(t) < mp.mpf(10) ** (-45):
            return s
        k += 1


def asymptotic(g, x):
    mp.mp.dps = 60
    s, best, k = mp.mpf(0), None, 1
    while True:
        if abs(g * k - mp.nint(g * k)) < mp.mpf(10) ** (-50):
            k += 1
            continue
        t = -((-x) ** (-k)) * mp.gamma(g * k) * mp.sin(mp.pi * g * k) / mp.pi
        if best is not None and abs(t) > best and abs(t) > 0:
            break
        if abs(t) > 0:
            best = abs(t)
        s += t
        k += 1
        if best is not None and best < mp.mpf(10) ** (-40):
            break
    return s, best


def integral(g, x):
    """Laplace-type integral, an independent cross-check."""
    mp.mp.dps = 40
    c = mp.cos(g * mp.pi)
    f = lambda w: mp.exp(-((x * w) ** (1 / g))) / (w * w + 2 * w * c + 1)
    pts = [0] + [mp.mpf(2) ** i / x for i in range(-4, 5)] + [mp.inf]
    return mp.sin(g * mp.pi) / (g * mp.pi) * mp.quad(f, pts)


def emit(g, x, v):
    q = integral(g, mp.mpf(x))
    assert abs(q - v) < abs(v) * mp.mpf(10) ** (-25), (g, x, v, q)
    print(f"({float(g)}, {-x:e}, {mp.nstr(v, 20)}),")


for g, xs_series, xs_asym in [
    (0.3, [0.1, 0.5, 1, 2, 5, 9], [10, 30, 100, 1e3, 1e4, 1e5, 1e6]),
    (0.5, [0.1, 0.5, 1, 2, 5, 10, 20, 30], [100, 1e3, 1e6]),
    (0.7, [0.1, 0.5, 1, 2, 5, 10, 20, 50, 100], [1e3, 1e4, 1e6]),
    (0.9, [0.1, 1, 5, 20, 100, 500], [2e3, 1e4, 1e6]),
]:
    mp.mp.dps = 120
    g = mp.mpf(round(g * 10)) / 10
    for x in xs_series:
        emit(g, x, series(g, mp.mpf(x)))
    for x in xs_asym:
        v, err = asymptotic(g, mp.mpf(x))
        assert err < abs(v) * mp.mpf(10) ** (-20), (g, x, err)
        emit(g, x, v)
