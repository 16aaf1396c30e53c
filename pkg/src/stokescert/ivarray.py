"""Vectorized interval arrays (real and rectangular complex) on numpy.

Elementwise operations step one ulp outward after the float operation.
Sums use the a-priori bound |fl(sum) - sum| <= gamma_{n-1} * sum|x_i|
plus an underflow allowance, so no per-term rounding loop is needed.
"""

import numpy as np

from .complex_interval import ComplexBox, RealInterval

_NINF = -np.inf
_PINF = np.inf
_U = 2.0 ** -53
_ETA = 2.0 ** -1074


def _dn(x):
    return np.nextafter(x, _NINF)


def _up(x):
    return np.nextafter(x, _PINF)


def _sum_bounds(lo, hi, axis):
    n = lo.shape[axis]
    if n == 0:
        shp = list(lo.shape)
        del shp[axis]
        z = np.zeros(shp)
        return z, z.copy()
    g = 1.01 * (n + 1) * _U / (1 - (n + 1) * _U)
    slo = lo.sum(axis)
    shi = hi.sum(axis)
    elo = g * np.abs(lo).sum(axis) + n * _ETA
    ehi = g * np.abs(hi).sum(axis) + n * _ETA
    return _dn(_dn(slo - elo)), _up(_up(shi + ehi))


class IArray:
    """Array of real intervals stored as two float arrays."""

    __slots__ = ("lo", "hi")
    __array_ufunc__ = None

    def __init__(self, lo, hi=None):
        lo = np.asarray(lo, dtype=float)
        self.lo = lo
        self.hi = lo if hi is None else np.asarray(hi, dtype=float)

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape), np.zeros(shape))

    @classmethod
    def from_intervals(cls, xs):
        return cls([x.lo for x in xs], [x.hi for x in xs])

    @property
    def shape(self):
        return self.lo.shape

    def __getitem__(self, idx):
        return IArray(self.lo[idx], self.hi[idx])

    def __setitem__(self, idx, val):
        val = _icoerce(val)
        self.lo[idx] = val.lo
        self.hi[idx] = val.hi

    def copy(self):
        return IArray(self.lo.copy(), self.hi.copy())

    def to_interval(self, idx=()):
        return RealInterval(float(self.lo[idx]), float(self.hi[idx]))

    def mid(self):
        return 0.5 * (self.lo + self.hi)

    def rad(self):
        m = self.mid()
        return _up(np.maximum(self.hi - m, m - self.lo))

    def width(self):
        return _up(self.hi - self.lo)

    def mag(self):
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def mig(self):
        return np.where(self.lo > 0, self.lo, np.where(self.hi < 0, -self.hi, 0.0))

    def subset_of(self, other):
        return bool(np.all(other.lo <= self.lo) and np.all(self.hi <= other.hi))

    def contains_points(self, x):
        return (self.lo <= x) & (x <= self.hi)

    def hull(self, other):
        other = _icoerce(other)
        return IArray(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))

    def inflate(self, r):
        return IArray(_dn(self.lo - r), _up(self.hi + r))

    def __neg__(self):
        return IArray(-self.hi, -self.lo)

    def __add__(self, other):
        other = _icoerce(other)
        return IArray(_dn(self.lo + other.lo), _up(self.hi + other.hi))

    __radd__ = __add__

    def __sub__(self, other):
        other = _icoerce(other)
        return IArray(_dn(self.lo - other.hi), _up(self.hi - other.lo))

    def __rsub__(self, other):
        return _icoerce(other) - self

    def __mul__(self, other):
        other = _icoerce(other)
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        p1, p2, p3, p4 = a * c, a * d, b * c, b * d
        lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
        hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
        # 0 * inf never arises for finite enclosures
        return IArray(_dn(lo), _up(hi))

    __rmul__ = __mul__

    def sqr(self):
        m, M = self.mig(), self.mag()
        return IArray(np.maximum(_dn(m * m), 0.0), _up(M * M))

    def recip(self):
        if np.any((self.lo <= 0) & (self.hi >= 0)):
            raise ZeroDivisionError("interval array divisor contains zero")
        return IArray(_dn(1.0 / self.hi), _up(1.0 / self.lo))

    def __truediv__(self, other):
        other = _icoerce(other)
        return self * other.recip()

    def __rtruediv__(self, other):
        return _icoerce(other) * self.recip()

    def sqrt(self):
        if np.any(self.lo < 0):
            raise ValueError("sqrt of negative interval")
        return IArray(np.maximum(_dn(np.sqrt(self.lo)), 0.0), _up(np.sqrt(self.hi)))

    def sum(self, axis=0):
        lo, hi = _sum_bounds(self.lo, self.hi, axis)
        return IArray(lo, hi)

    def __repr__(self):
        return "IArray(lo=%r, hi=%r)" % (self.lo, self.hi)


def _icoerce(x):
    if isinstance(x, IArray):
        return x
    if isinstance(x, RealInterval):
        return IArray(x.lo, x.hi)
    a = np.asarray(x, dtype=float)
    return IArray(a, a)


def imatmul(A, B):
    """Interval matrix product; either factor may be a float array."""
    A = _icoerce(A)
    B = _icoerce(B)
    vec = B.lo.ndim == 1
    if vec:
        B = IArray(B.lo[:, None], B.hi[:, None])
    P = A[:, :, None] * B[None, :, :]
    out = P.sum(axis=1)
    if vec:
        out = IArray(out.lo[:, 0], out.hi[:, 0])
    return out


class CIArray:
    """Array of complex rectangles: re and im are IArrays of equal shape."""

    __slots__ = ("re", "im")
    __array_ufunc__ = None

    def __init__(self, re, im=None):
        self.re = _icoerce(re)
        self.im = IArray.zeros(self.re.shape) if im is None else _icoerce(im)

    @classmethod
    def zeros(cls, shape):
        return cls(IArray.zeros(shape), IArray.zeros(shape))

    @classmethod
    def from_complex(cls, z):
        z = np.asarray(z, dtype=complex)
        return cls(IArray(z.real.copy()), IArray(z.imag.copy()))

    @classmethod
    def from_boxes(cls, boxes):
        return cls(IArray.from_intervals([b.re for b in boxes]),
                   IArray.from_intervals([b.im for b in boxes]))

    @property
    def shape(self):
        return self.re.shape

    def __getitem__(self, idx):
        return CIArray(self.re[idx], self.im[idx])

    def __setitem__(self, idx, val):
        val = _ccoerce(val)
        self.re[idx] = val.re
        self.im[idx] = val.im

    def copy(self):
        return CIArray(self.re.copy(), self.im.copy())

    def box(self, idx=()):
        return ComplexBox(self.re.to_interval(idx), self.im.to_interval(idx))

    def boxes(self):
        return [self.box(i) for i in np.ndindex(self.shape)]

    def mid(self):
        return self.re.mid() + 1j * self.im.mid()

    def width(self):
        return np.maximum(self.re.width(), self.im.width())

    def mag_upper(self):
        return _up(np.sqrt(_up(self.re.mag() ** 2 + self.im.mag() ** 2) * (1 + 4 * _U)))

    def hull(self, other):
        other = _ccoerce(other)
        return CIArray(self.re.hull(other.re), self.im.hull(other.im))

    def subset_of(self, other):
        return self.re.subset_of(other.re) and self.im.subset_of(other.im)

    def contains_points(self, z):
        z = np.asarray(z, dtype=complex)
        return self.re.contains_points(z.real) & self.im.contains_points(z.imag)

    def __neg__(self):
        return CIArray(-self.re, -self.im)

    def __add__(self, other):
        other = _ccoerce(other)
        return CIArray(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _ccoerce(other)
        return CIArray(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return _ccoerce(other) - self

    def __mul__(self, other):
        other = _ccoerce(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        return CIArray(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def scale(self, x):
        """Multiply by a real interval array or scalar."""
        x = _icoerce(x)
        return CIArray(self.re * x, self.im * x)

    def abs2(self):
        return self.re.sqr() + self.im.sqr()

    def recip(self):
        d = self.abs2()
        return CIArray(self.re / d, -self.im / d)

    def sum(self, axis=0):
        return CIArray(self.re.sum(axis), self.im.sum(axis))

    def __repr__(self):
        return "CIArray(re=%r, im=%r)" % (self.re, self.im)


def _ccoerce(x):
    if isinstance(x, CIArray):
        return x
    if isinstance(x, ComplexBox):
        return CIArray(IArray(x.re.lo, x.re.hi), IArray(x.im.lo, x.im.hi))
    if isinstance(x, (IArray, RealInterval)):
        return CIArray(_icoerce(x))
    a = np.asarray(x)
    if np.iscomplexobj(a):
        return CIArray.from_complex(a)
    return CIArray(_icoerce(a))
