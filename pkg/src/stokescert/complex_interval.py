"""Directed-rounded real intervals and rectangular complex boxes.

Every native float operation is followed by a one-ulp outward step with
``math.nextafter``.  IEEE round-to-nearest is off by at most half an ulp,
so the stepped endpoints always enclose the exact result.  For the four
basic operations an error-free transformation (TwoSum, Dekker product)
first tells whether the native result was exact or rounded inward, and
the step is skipped when it is not needed, so [1,2]*[3,4] is [3,8].
"""

import cmath
import math
import operator
from fractions import Fraction
from numbers import Rational

INF = math.inf
_nextafter = math.nextafter


class IntervalError(ArithmeticError):
    pass


class DivisionByZeroInterval(IntervalError):
    pass


class NegativeArgument(IntervalError):
    pass


class ZeroInBox(IntervalError):
    pass


class BranchCutIntersect(IntervalError):
    pass


def _dn(x):
    return _nextafter(x, -INF)


def _up(x):
    return _nextafter(x, INF)


_SPLIT = 134217729.0  # 2^27 + 1
_SAFE_HI = 2.0 ** 995
_SAFE_LO = 2.0 ** -960


def _split(a):
    t = a * _SPLIT
    hi = t - (t - a)
    return hi, a - hi


def _prod_err(a, b, p):
    """Exact a*b - p for p = fl(a*b), or None where the split may be inexact."""
    if not (_SAFE_LO < abs(p) < _SAFE_HI and abs(a) < _SAFE_HI and abs(b) < _SAFE_HI):
        return None
    ah, al = _split(a)
    bh, bl = _split(b)
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _sum_err(a, b, s):
    """Exact a+b - s for s = fl(a+b) (Knuth TwoSum), None on overflow."""
    if not math.isfinite(s):
        return None
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _rnd(x, e, down):
    # x approximates a true value x + e; step only when e points outward
    if e is None:
        return _dn(x) if down else _up(x)
    if down:
        return _dn(x) if e < 0 else x
    return _up(x) if e > 0 else x


def _add(a, b, down):
    s = a + b
    return _rnd(s, _sum_err(a, b, s), down)


def _mul(a, b, down):
    if a == 0 or b == 0:
        return 0.0
    p = a * b
    return _rnd(p, _prod_err(a, b, p), down)


def _div(a, b, down):
    if a == 0:
        return 0.0
    q = a / b
    p = q * b
    e = _prod_err(q, b, p)
    if e is None or not (0.5 * abs(a) <= abs(p) <= 2 * abs(a)):
        return _dn(q) if down else _up(q)
    # a - q b is exact here (Sterbenz), and a/b - q has its sign times sign(b)
    r = (a - p) - e
    return _rnd(q, r if b > 0 else -r, down)


def _extreme_pairs(pairs, op, rnd):
    """[min, max] of op over the pairs, rounded outward.

    A pair whose float result is above the float minimum has its exact
    value above that minimum too, so only the pairs attaining the float
    extremes need the exactness test.
    """
    vals = [op(x, y) for x, y in pairs]
    m, M = min(vals), max(vals)
    lo = min(rnd(x, y, True) for (x, y), v in zip(pairs, vals) if v == m)
    hi = max(rnd(x, y, False) for (x, y), v in zip(pairs, vals) if v == M)
    return RealInterval(lo, hi)


def _frac_bounds(q):
    """Float bounds lo <= q <= hi for a rational q."""
    f = float(q)
    fq = Fraction(f)
    if fq == q:
        return f, f
    if fq < q:
        return f, _up(f)
    return _dn(f), f


class RealInterval:
    """Closed interval [lo, hi] with outward rounding."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        if hi is None:
            hi = lo
        lo = float(lo)
        hi = float(hi)
        if not lo <= hi:
            raise ValueError("invalid interval [%r, %r]" % (lo, hi))
        self.lo = lo
        self.hi = hi

    @classmethod
    def exact(cls, x):
        """Tightest float enclosure of an int, float, Fraction or decimal string."""
        if isinstance(x, RealInterval):
            return x
        if isinstance(x, float):
            return cls(x, x)
        if isinstance(x, str):
            x = Fraction(x)
        if isinstance(x, (int, Rational)):
            lo, hi = _frac_bounds(Fraction(x))
            return cls(lo, hi)
        raise TypeError("cannot enclose %r" % (x,))

    @staticmethod
    def hull_of(*xs):
        return RealInterval(min(x.lo for x in xs), max(x.hi for x in xs))

    # queries

    def width(self):
        return _add(self.hi, -self.lo, False)

    def mid(self):
        return 0.5 * (self.lo + self.hi)

    def rad(self):
        return _up(0.5 * self.width())

    def mag(self):
        return max(-self.lo, self.hi)

    def mig(self):
        if self.lo > 0:
            return self.lo
        if self.hi < 0:
            return -self.hi
        return 0.0

    def contains(self, x):
        if isinstance(x, RealInterval):
            return self.lo <= x.lo and x.hi <= self.hi
        if isinstance(x, Fraction):
            return Fraction(self.lo) <= x <= Fraction(self.hi)
        return self.lo <= x <= self.hi

    __contains__ = contains

    def interior_contains(self, x):
        return self.lo < x.lo and x.hi < self.hi

    def hull(self, other):
        other = _coerce(other)
        return RealInterval(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, other):
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return None
        return RealInterval(lo, hi)

    def inflate(self, r):
        return RealInterval(_dn(self.lo - r), _up(self.hi + r))

    # arithmetic

    def __neg__(self):
        return RealInterval(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return RealInterval(_add(self.lo, other.lo, True), _add(self.hi, other.hi, False))

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return RealInterval(_add(self.lo, -other.hi, True), _add(self.hi, -other.lo, False))

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        if a >= 0 and c >= 0:
            return RealInterval(_mul(a, c, True), _mul(b, d, False))
        if a == b and c == d:
            return RealInterval(_mul(a, c, True), _mul(a, c, False))
        return _extreme_pairs(((a, c), (a, d), (b, c), (b, d)), operator.mul, _mul)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if other.lo <= 0 <= other.hi:
            raise DivisionByZeroInterval("divisor %r contains zero" % (other,))
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        return _extreme_pairs(((a, c), (a, d), (b, c), (b, d)), operator.truediv, _div)

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def sqr(self):
        m, M = self.mig(), self.mag()
        lo = _mul(m, m, True) if m > 0 else 0.0
        return RealInterval(max(lo, 0.0), _mul(M, M, False))

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n == 0:
            return RealInterval(1.0)
        if n < 0:
            return 1 / (self ** (-n))
        if n == 1:
            return self
        if n % 2 == 0:
            return (self ** (n // 2)).sqr()
        return self * (self ** (n - 1))

    def sqrt(self):
        return iv_sqrt(self)

    def __repr__(self):
        return "RealInterval(%r, %r)" % (self.lo, self.hi)

    def __eq__(self, other):
        return isinstance(other, RealInterval) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __lt__(self, other):
        other = _coerce(other)
        return self.hi < other.lo

    def __gt__(self, other):
        other = _coerce(other)
        return self.lo > other.hi


def _coerce(x):
    if isinstance(x, RealInterval):
        return x
    if isinstance(x, (int, float, Fraction)):
        return RealInterval.exact(x)
    return NotImplemented


def iv(x, y=None):
    """Shorthand constructor; a single argument is enclosed exactly."""
    if y is None:
        return RealInterval.exact(x)
    return RealInterval(x, y)


def iv_arith(op, a, b):
    a = _coerce(a)
    b = _coerce(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError("unknown op %r" % (op,))


def iv_sqrt(a):
    a = _coerce(a)
    if a.lo < 0:
        raise NegativeArgument("sqrt of %r" % (a,))
    lo = math.sqrt(a.lo)
    if Fraction(lo) ** 2 > Fraction(a.lo):
        lo = _dn(lo)
    hi = math.sqrt(a.hi)
    if Fraction(hi) ** 2 < Fraction(a.hi):
        hi = _up(hi)
    return RealInterval(lo, hi)


def _cbrt_lower(x):
    # largest float c found with c**3 <= x, checked by rounding the cube upward
    if x == 0:
        return 0.0
    c = x ** (1.0 / 3.0)
    while (RealInterval(c) ** 3).hi > x:
        c = _dn(c)
    return c


def _cbrt_upper(x):
    c = x ** (1.0 / 3.0)
    while (RealInterval(c) ** 3).lo < x:
        c = _up(c)
    return c


def iv_cbrt(a):
    """Real cube root of a nonnegative interval."""
    a = _coerce(a)
    if a.lo < 0:
        raise NegativeArgument("cbrt of %r" % (a,))
    return RealInterval(_cbrt_lower(a.lo), _cbrt_upper(a.hi))


# libm exp/sin/cos are faithful to within one ulp on glibc; two steps cover it.
def _widen2(lo, hi):
    return RealInterval(_dn(_dn(lo)), _up(_up(hi)))


def iv_exp(a):
    a = _coerce(a)
    lo = math.exp(a.lo)
    return _widen2(lo, math.exp(a.hi)) if lo > 0 else RealInterval(0.0, _up(_up(math.exp(a.hi))))


def iv_sin_small(a):
    """sin on a subinterval of [0, pi/2]."""
    a = _coerce(a)
    if a.lo < 0 or a.hi > 1.5707963267948966:
        raise ValueError("argument outside [0, pi/2]")
    return _widen2(math.sin(a.lo), math.sin(a.hi))


def iv_cos_small(a):
    """cos on a subinterval of [0, pi/2]."""
    a = _coerce(a)
    if a.lo < 0 or a.hi > 1.5707963267948966:
        raise ValueError("argument outside [0, pi/2]")
    return _widen2(max(math.cos(a.hi), 0.0), math.cos(a.lo))


PI = RealInterval(math.pi, _up(math.pi))
SQRT_PI = iv_sqrt(PI)


class ComplexBox:
    """Axis-aligned rectangle re + i*im in the complex plane."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=None):
        self.re = _coerce(re) if not isinstance(re, RealInterval) else re
        if im is None:
            im = RealInterval(0.0)
        self.im = _coerce(im) if not isinstance(im, RealInterval) else im

    @classmethod
    def point(cls, z):
        z = complex(z)
        return cls(RealInterval(z.real), RealInterval(z.imag))

    @classmethod
    def around(cls, z, r_re, r_im=None):
        if r_im is None:
            r_im = r_re
        z = complex(z)
        return cls(RealInterval(_dn(z.real - r_re), _up(z.real + r_re)),
                   RealInterval(_dn(z.imag - r_im), _up(z.imag + r_im)))

    def mid(self):
        return complex(self.re.mid(), self.im.mid())

    def width(self):
        return max(self.re.width(), self.im.width())

    def mag_upper(self):
        a, b = self.re.mag(), self.im.mag()
        return _up(math.sqrt(_up(_up(a * a) + _up(b * b))))

    def mag_lower(self):
        a, b = self.re.mig(), self.im.mig()
        return max(_dn(math.sqrt(_dn(_dn(a * a) + _dn(b * b)))), 0.0)

    def contains(self, z):
        if isinstance(z, ComplexBox):
            return self.re.contains(z.re) and self.im.contains(z.im)
        z = complex(z)
        return self.re.contains(z.real) and self.im.contains(z.imag)

    __contains__ = contains

    def contains_zero(self):
        return self.re.lo <= 0 <= self.re.hi and self.im.lo <= 0 <= self.im.hi

    def hull(self, other):
        other = _ccoerce(other)
        return ComplexBox(self.re.hull(other.re), self.im.hull(other.im))

    def conj(self):
        return ComplexBox(self.re, -self.im)

    def __neg__(self):
        return ComplexBox(-self.re, -self.im)

    def __pos__(self):
        return self

    def __add__(self, other):
        other = _ccoerce(other)
        if other is NotImplemented:
            return other
        return ComplexBox(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _ccoerce(other)
        if other is NotImplemented:
            return other
        return ComplexBox(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _ccoerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, (RealInterval, int, float, Fraction)):
            other = _coerce(other)
            return ComplexBox(self.re * other, self.im * other)
        other = _ccoerce(other)
        if other is NotImplemented:
            return other
        return cbox_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (RealInterval, int, float, Fraction)):
            other = _coerce(other)
            return ComplexBox(self.re / other, self.im / other)
        other = _ccoerce(other)
        if other is NotImplemented:
            return other
        return self * cbox_inv(other)

    def __rtruediv__(self, other):
        other = _ccoerce(other)
        if other is NotImplemented:
            return other
        return other * cbox_inv(self)

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n == 0:
            return ComplexBox(RealInterval(1.0))
        if n in (-2, -3):
            return cbox_inv_pow(self, -n)
        if n < 0:
            return cbox_inv(self ** (-n))
        if n == 1:
            return self
        if n == 2:
            return cbox_sqr(self)
        half = self ** (n // 2)
        sq = cbox_sqr(half)
        return sq if n % 2 == 0 else sq * self

    def __repr__(self):
        return "ComplexBox(%r, %r)" % (self.re, self.im)

    def __eq__(self, other):
        return isinstance(other, ComplexBox) and self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))


def _ccoerce(x):
    if isinstance(x, ComplexBox):
        return x
    if isinstance(x, RealInterval):
        return ComplexBox(x)
    if isinstance(x, (int, float, Fraction)):
        return ComplexBox(RealInterval.exact(x))
    if isinstance(x, complex):
        return ComplexBox.point(x)
    return NotImplemented


def cbox(x):
    """Enclose a number, interval or box as a ComplexBox."""
    out = _ccoerce(x)
    if out is NotImplemented:
        raise TypeError("cannot enclose %r" % (x,))
    return out


def cbox_mul(a, b):
    a = cbox(a)
    b = cbox(b)
    return ComplexBox(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)


def cbox_sqr(a):
    return ComplexBox(a.re.sqr() - a.im.sqr(), 2 * (a.re * a.im))


def _abs2(z):
    return z.re.sqr() + z.im.sqr()


def _ratio(p, x, y):
    """p / (x^2 + y^2) at the point (x, y); p is x or y."""
    X, Y = RealInterval(x), RealInterval(y)
    return RealInterval(p) / (X.sqr() + Y.sqr())


def _edge_extremes(a, b):
    """Range of a / (a^2 + b^2) over the rectangle a x b (0 not in it).

    The function is harmonic, so its extremes lie on the boundary.  Along
    a fixed a it depends on b^2 only (extreme at b = 0 if reachable); along
    a fixed b its critical points are a = +-|b|.
    """
    pts = [(x, y) for x in (a.lo, a.hi) for y in (b.lo, b.hi)]
    if b.lo < 0 < b.hi:
        pts += [(a.lo, 0.0), (a.hi, 0.0)]
    for y in (b.lo, b.hi):
        for x in (abs(y), -abs(y)):
            if a.lo < x < a.hi:
                pts.append((x, y))
    vals = [_ratio(x, x, y) for x, y in pts]
    return RealInterval.hull_of(*vals)


def cbox_inv(z):
    """Reciprocal from the exact range of x/|z|^2 and y/|z|^2 over the box."""
    z = cbox(z)
    if z.contains_zero():
        raise ZeroInBox("reciprocal of %r" % (z,))
    if z.re.lo == z.re.hi and z.im.lo == z.im.hi:
        d = _abs2(z)
        return ComplexBox(z.re / d, -z.im / d)
    return ComplexBox(_edge_extremes(z.re, z.im), -_edge_extremes(z.im, z.re))


def cbox_inv_pow(z, k):
    """z**(-k) for k in {2, 3} from the explicit real/imaginary split."""
    z = cbox(z)
    if z.contains_zero():
        raise ZeroInBox("inverse power of %r" % (z,))
    a, b = z.re, z.im
    d = _abs2(z)
    if k == 2:
        d2 = d.sqr()
        return ComplexBox((a.sqr() - b.sqr()) / d2, -2 * (a * b) / d2)
    if k == 3:
        d3 = d.sqr() * d
        a2, b2 = a.sqr(), b.sqr()
        return ComplexBox((a2 * a - 3 * (a * b2)) / d3, (b2 * b - 3 * (a2 * b)) / d3)
    raise ValueError("k must be 2 or 3")


def _meet(x, y):
    r = x.intersect(y)
    if r is None:
        raise ArithmeticError("disjoint enclosures %r and %r" % (x, y))
    return r


def cbox_sqrt_principal(z):
    """Principal square root of every point of a box off (-inf, 0].

    Two closed forms apply depending on the signs in the box: one through
    Re sqrt = sqrt((|z| + a)/2) when a > 0, one through
    |Im sqrt| = sqrt((|z| - a)/2) when b keeps a strict sign.  The result
    meets every form that applies, which keeps the operation inclusion
    monotone (a sub-box never loses a form).
    """
    z = cbox(z)
    a, b = z.re, z.im
    if a.lo <= 0 and b.lo <= 0 <= b.hi:
        raise BranchCutIntersect("sqrt of %r" % (z,))
    m = iv_sqrt(_abs2(z))
    out = None
    if a.lo > 0:
        re = iv_sqrt((m + a) / 2)
        out = ComplexBox(re, b / (2 * re))
    if b.lo > 0 or b.hi < 0:
        t = m - a
        # pointwise |z| - a >= |b| where a <= 0 and = b^2 / (|z| + a) where a >= 0
        mb = RealInterval(b.mig())
        low = _dn(b.mig())
        if a.hi > 0:
            den = (m + RealInterval(a.hi)).hi
            low = min(low, (mb.sqr() / RealInterval(den)).lo)
        t = RealInterval(max(t.lo, low), max(t.hi, low))
        im_abs = iv_sqrt(t / 2)
        if b.lo > 0:
            other = ComplexBox(b / (2 * im_abs), im_abs)
        else:
            other = ComplexBox(-b / (2 * im_abs), -im_abs)
        out = other if out is None else ComplexBox(_meet(out.re, other.re), _meet(out.im, other.im))
    return out


def _meets_positive_axis(z):
    return z.re.hi >= 0 and z.im.lo <= 0 <= z.im.hi


def cbrt_branch_point(z):
    """Float cube root with arg z taken in (0, 2*pi)."""
    z = complex(z)
    ang = math.atan2(z.imag, z.real)
    if ang <= 0:
        ang += 2 * math.pi
    return abs(z) ** (1.0 / 3.0) * cmath.exp(1j * ang / 3)


def cbox_cuberoot(z):
    """Enclosure of z**(1/3) on the branch cut along [0, inf).

    Polar form |z|^(1/3) e^(i arg(z)/3) over modulus and argument
    intervals; off the cut arg is continuous on the box and its extremes
    sit at corners.  Every step is an isotone interval extension.
    """
    z = cbox(z)
    if _meets_positive_axis(z):
        raise BranchCutIntersect("cube root of %r" % (z,))
    args = []
    for x in (z.re.lo, z.re.hi):
        for y in (z.im.lo, z.im.hi):
            a = math.atan2(y, x)
            ai = _widen2(a, a)
            args.append(ai + 2 * PI if a <= 0 else ai)
    th = RealInterval(min(a.lo for a in args), max(a.hi for a in args)) / 3
    mod = RealInterval(_cbrt_lower(z.mag_lower()), _cbrt_upper(z.mag_upper()))
    # th lies in (0, 2 pi / 3): cos decreasing, sin peaks at pi/2
    c = _widen2(math.cos(th.hi), math.cos(th.lo))
    s_lo, s_hi = sorted((math.sin(th.lo), math.sin(th.hi)))
    if th.lo <= math.pi / 2 <= th.hi:
        s_hi = 1.0
    s = _widen2(s_lo, s_hi)
    return ComplexBox(mod * c, mod * RealInterval(s.lo, min(s.hi, 1.0)))


def cbox_cuberoot_upper(z):
    """Enclosure of z**(-1/3), arg z in (0, 2*pi)."""
    return cbox_inv(cbox_cuberoot(z))
