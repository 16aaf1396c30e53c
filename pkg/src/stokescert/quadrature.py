"""Verified quadrature for the exponent constant

    A = int_0^{x*} 2/(1-x) sqrt(x / (3 (x+1) (1-4x-4x^2))) dx,  x* = (sqrt 2 - 1)/2.

The integrand behaves like sqrt(x) at 0 and like (x* - x)^(-1/2) at x*.
Splitting at x*/2 and substituting x = u^2 on the left piece and
x = x* - v^2 on the right one gives two smooth integrands on [0, L],
L = sqrt(x*/2):

    f1(u) = 4u^2 / ((1-u^2) sqrt(3 (1+u^2) (1-4u^2-4u^4)))
    f2(v) = 2/(1-x) sqrt(x / (3 (x+1) (x+c))),  x = x* - v^2,  c = (1+sqrt 2)/2

using 1-4x-4x^2 = 4 (x*-x)(x+c).  f1 is increasing in u (numerator up,
both denominator factors down).  f2 is decreasing in v because
2/(1-x) and x/((x+1)(x+c)) increase with x on [0, x*] (the latter has
derivative sign c - x^2 > 0).  For a monotone integrand the left and
right Riemann sums bracket the integral, so interval evaluations of those
sums give a rigorous enclosure whose width halves with each doubling.
"""

import numpy as np

from .complex_interval import RealInterval, iv_sqrt
from .ivarray import IArray


class QuadratureFailed(ArithmeticError):
    pass


def _constants():
    s2 = iv_sqrt(RealInterval(2.0))
    xs = (s2 - 1) / 2
    c = (1 + s2) / 2
    L = iv_sqrt(xs / 2)
    return xs, c, L


def integrand(x):
    """Point value of the original integrand (float), 0 at x = 0."""
    x = float(x)
    return 2 / (1 - x) * np.sqrt(x / (3 * (x + 1) * (1 - 4 * x - 4 * x * x)))


def _f1(u):
    u2 = u.sqr()
    den = (1 - u2) * (3 * (1 + u2) * (1 - 4 * u2 - 4 * u2.sqr())).sqrt()
    return 4 * u2 / den


def _f2(v, xs, c):
    x = IArray(xs.lo, xs.hi) - v.sqr()
    return 2 / (1 - x) * (x / (3 * (x + 1) * (x + IArray(c.lo, c.hi)))).sqrt()


def _nodes(Llo, n):
    h = Llo / n
    a = np.arange(n + 1) * h
    while a[-1] > Llo:
        h = np.nextafter(h, 0.0)
        a = np.arange(n + 1) * h
    return a


def _piece(f, increasing, L, n):
    """Enclosure of int_0^L f for monotone positive f with n panels."""
    a = _nodes(L.lo, n)
    fa = f(IArray(a))
    left, right = fa[:-1], fa[1:]
    dx = IArray(a[1:]) - IArray(a[:-1])
    lo_vals = left if increasing else right
    hi_vals = right if increasing else left
    lo = (dx * IArray(lo_vals.lo)).sum().lo
    hi = (dx * IArray(hi_vals.hi)).sum().hi
    # tail [a_n, L] with a_n <= L <= L.hi
    t = IArray(np.array([L.hi])) - IArray(np.array([a[-1]]))
    fmax = f(IArray(np.array([L.hi]))) if increasing else IArray(fa.lo[-1:], fa.hi[-1:])
    hi = (IArray(np.array([hi])) + t * IArray(fmax.hi)).hi
    return RealInterval(float(lo), float(hi[0]))


def constant_A(target_width=1e-5, n0=1024, n_max=2 ** 22):
    """Rigorous enclosure of A; doubles the panel count until the width target is met.

    Returns (enclosure, panels per piece, widths along the doubling).
    """
    xs, c, L = _constants()
    n = n0
    widths = []
    while n <= n_max:
        p1 = _piece(_f1, True, L, n)
        p2 = _piece(lambda v: _f2(v, xs, c), False, L, n)
        A = p1 + p2
        widths.append(A.width())
        if A.width() <= target_width:
            return A, n, widths
        n *= 2
    raise QuadratureFailed("width %.3g above target with %d panels" % (widths[-1], n_max))
