"""Inner-equation functions J, K, the vector field, the graph remainder R
and their first and second derivatives.

Every function accepts either a Python complex ``U`` with complex ``Z``
components, or ComplexBox inputs, in which case the results are rigorous
enclosures.  Fractional powers of U are integer powers of a single cube
root taken with the cut along [0, inf), arg U in (0, 2*pi).
"""

import cmath
import math
from collections import namedtuple
from dataclasses import dataclass
from fractions import Fraction as Fr

from .complex_interval import (
    BranchCutIntersect,
    ComplexBox,
    ZeroInBox,
    cbox_cuberoot,
    cbox_inv,
    cbox_sqrt_principal,
    cbrt_branch_point,
)


class DenominatorVanishes(ArithmeticError):
    pass


class OutsideTail(ValueError):
    pass


@dataclass(frozen=True)
class InnerState:
    W: object
    X: object
    Y: object

    def __iter__(self):
        return iter((self.W, self.X, self.Y))


@dataclass(frozen=True)
class InnerFieldValue:
    dU: object
    dZ: InnerState


JDerivs = namedtuple("JDerivs", "U W X Y UW UX UY WW WX WY XX XY YY")
KDerivs = namedtuple("KDerivs", "U W X Y UW UX UY WW WX WY XX XY YY")


def _is_box(*xs):
    return any(isinstance(x, ComplexBox) for x in xs)


def _mul_i(z):
    if isinstance(z, ComplexBox):
        return ComplexBox(-z.im, z.re)
    return 1j * z


class Powers:
    """U**(n/3) for integer n, all from one branch value of U**(1/3)."""

    def __init__(self, U):
        self.box = isinstance(U, ComplexBox)
        if self.box:
            if U.contains_zero():
                raise ZeroInBox("U box contains 0")
            c = cbox_cuberoot(U)
            ci = cbox_inv(c)
        else:
            U = complex(U)
            if U == 0:
                raise ZeroInBox("U = 0")
            if U.imag == 0 and U.real > 0:
                raise BranchCutIntersect("U on the positive real axis")
            c = cbrt_branch_point(U)
            ci = 1 / c
        self.U = U
        self._cache = {0: 1, 1: c, -1: ci}

    def __call__(self, n):
        """U**(n/3)."""
        out = self._cache.get(n)
        if out is None:
            base = self._cache[1] if n > 0 else self._cache[-1]
            out = base ** abs(n)
            self._cache[n] = out
        return out


def _powers(U):
    return U if isinstance(U, Powers) else Powers(U)


def _unpack(Z):
    W, X, Y = Z
    return W, X, Y


def _sqrt(z):
    if isinstance(z, ComplexBox):
        return cbox_sqrt_principal(z)
    z = complex(z)
    if z.imag == 0 and z.real <= 0:
        raise BranchCutIntersect("sqrt argument on the negative real axis")
    return cmath.sqrt(z)


def eval_J(U, Z):
    P = _powers(U)
    W, X, Y = _unpack(Z)
    return (Fr(4, 9) * W * W * P(-2)
            - Fr(16, 27) * W * P(-4)
            + Fr(16, 81) * P(-6)
            + Fr(4, 9) * (X + Y) * P(-3) * (W - Fr(2, 3) * P(-2))
            - _mul_i(Fr(4, 3) * (X - Y) * P(-2))
            - Fr(1, 3) * (X * X + Y * Y) * P(-4)
            + Fr(10, 9) * X * Y * P(-4))


def eval_J_derivs(U, Z):
    P = _powers(U)
    W, X, Y = _unpack(Z)
    s = X + Y
    d = X - Y
    JU = (-Fr(8, 27) * W * W * P(-5) + Fr(64, 81) * W * P(-7) - Fr(32, 81) * P(-9)
          - Fr(4, 9) * s * W * P(-6) + Fr(40, 81) * s * P(-8)
          + _mul_i(Fr(8, 9) * d * P(-5))
          + Fr(4, 9) * (X * X + Y * Y) * P(-7) - Fr(40, 27) * X * Y * P(-7))
    JW = Fr(8, 9) * W * P(-2) - Fr(16, 27) * P(-4) + Fr(4, 9) * s * P(-3)
    common = Fr(4, 9) * W * P(-3) - Fr(8, 27) * P(-5)
    i43 = _mul_i(Fr(4, 3) * P(-2))
    JX = common - i43 - Fr(2, 3) * X * P(-4) + Fr(10, 9) * Y * P(-4)
    JY = common + i43 - Fr(2, 3) * Y * P(-4) + Fr(10, 9) * X * P(-4)
    JUW = -Fr(16, 27) * W * P(-5) + Fr(64, 81) * P(-7) - Fr(4, 9) * s * P(-6)
    cu = -Fr(4, 9) * W * P(-6) + Fr(40, 81) * P(-8)
    i89 = _mul_i(Fr(8, 9) * P(-5))
    JUX = cu + i89 + Fr(8, 9) * X * P(-7) - Fr(40, 27) * Y * P(-7)
    JUY = cu - i89 + Fr(8, 9) * Y * P(-7) - Fr(40, 27) * X * P(-7)
    JWW = Fr(8, 9) * P(-2)
    JWX = Fr(4, 9) * P(-3)
    JXX = -Fr(2, 3) * P(-4)
    JXY = Fr(10, 9) * P(-4)
    return JDerivs(JU, JW, JX, JY, JUW, JUX, JUY, JWW, JWX, JWX, JXX, JXY, JXX)


def eval_K(U, Z):
    P = _powers(U)
    W = _unpack(Z)[0]
    J = eval_J(P, Z)
    return -Fr(3, 4) * P(2) * W * W - Fr(1, 3) * P(-2) * (1 / _sqrt(1 + J) - 1)


def eval_H(U, Z):
    """Inner Hamiltonian W + XY + K."""
    W, X, Y = _unpack(Z)
    return W + X * Y + eval_K(U, Z)


def dK_dU_raw(U, Z):
    """The direct form of dK/dU, which cancels badly for large |U|."""
    P = _powers(U)
    W = _unpack(Z)[0]
    J = eval_J(P, Z)
    jd = eval_J_derivs(P, Z)
    s = _sqrt(1 + J)
    return (-Fr(1, 2) * W * W * P(-1) + Fr(2, 9) * P(-5) * (1 / s - 1)
            + Fr(1, 6) * P(-2) * jd.U / (s * s * s))


def eval_K_derivs(U, Z):
    P = _powers(U)
    W = _unpack(Z)[0]
    J = eval_J(P, Z)
    jd = eval_J_derivs(P, Z)
    s = _sqrt(1 + J)
    if isinstance(s, ComplexBox):
        q3 = cbox_inv(s * s * s)
    else:
        q3 = 1 / (s * s * s)
    q5 = q3 / (1 + J)
    a = Fr(1, 6) * P(-2)
    b = Fr(1, 4) * P(-2)
    KU = (-Fr(1, 2) * W * W * P(-1)
          - Fr(2, 9) * P(-5) * J / (s * (1 + s))
          + a * jd.U * q3)
    KW = -Fr(3, 2) * P(2) * W + a * jd.W * q3
    KX = a * jd.X * q3
    KY = a * jd.Y * q3
    c = Fr(1, 9) * P(-5) * q3
    KUW = -W * P(-1) - c * jd.W + a * jd.UW * q3 - b * jd.U * jd.W * q5
    KUX = -c * jd.X + a * jd.UX * q3 - b * jd.U * jd.X * q5
    KUY = -c * jd.Y + a * jd.UY * q3 - b * jd.U * jd.Y * q5
    KWW = -Fr(3, 2) * P(2) + a * jd.WW * q3 - b * jd.W * jd.W * q5
    KWX = a * jd.WX * q3 - b * jd.W * jd.X * q5
    KWY = a * jd.WY * q3 - b * jd.W * jd.Y * q5
    KXX = a * jd.XX * q3 - b * jd.X * jd.X * q5
    KXY = a * jd.XY * q3 - b * jd.X * jd.Y * q5
    KYY = a * jd.YY * q3 - b * jd.Y * jd.Y * q5
    return KDerivs(KU, KW, KX, KY, KUW, KUX, KUY, KWW, KWX, KWY, KXX, KXY, KYY)


def eval_field(U, Z):
    W, X, Y = _unpack(Z)
    kd = eval_K_derivs(U, Z)
    dU = 1 + kd.W
    dW = -kd.U
    dX = _mul_i(X + kd.Y)
    dY = -_mul_i(Y + kd.X)
    return InnerFieldValue(dU, InnerState(dW, dX, dY))


def _den(kd):
    d = 1 + kd.W
    if isinstance(d, ComplexBox):
        if d.contains_zero():
            raise DenominatorVanishes("1 + g contains 0")
    elif d == 0:
        raise DenominatorVanishes("1 + g = 0")
    return d


def eval_R(U, Z):
    W, X, Y = _unpack(Z)
    kd = eval_K_derivs(U, Z)
    d = _den(kd)
    r1 = -kd.U / d
    r2 = _mul_i(kd.Y - X * kd.W) / d
    r3 = -_mul_i(kd.X - Y * kd.W) / d
    return InnerState(r1, r2, r3)


def eval_R_jacobian(U, Z):
    """Rows R1, R2, R3; columns d/dW, d/dX, d/dY."""
    W, X, Y = _unpack(Z)
    k = eval_K_derivs(U, Z)
    d = _den(k)
    d2 = d * d
    row1 = [-(k.UW * d - k.U * k.WW) / d2,
            -(k.UX * d - k.U * k.WX) / d2,
            -(k.UY * d - k.U * k.WY) / d2]
    f2 = k.Y - X * k.W
    row2 = [_mul_i(((k.WY - X * k.WW) * d - f2 * k.WW) / d2),
            _mul_i(((k.XY - k.W - X * k.WX) * d - f2 * k.WX) / d2),
            _mul_i(((k.YY - X * k.WY) * d - f2 * k.WY) / d2)]
    f3 = k.X - Y * k.W
    row3 = [-_mul_i(((k.WX - Y * k.WW) * d - f3 * k.WW) / d2),
            -_mul_i(((k.XX - Y * k.WX) * d - f3 * k.WX) / d2),
            -_mul_i(((k.XY - k.W - Y * k.WY) * d - f3 * k.WY) / d2)]
    return [row1, row2, row3]


def asymptotic_seed(U, order=1, eta_star=1000.0):
    """Leading terms of the unstable graph far out in the tail.

    order=1 is the first Picard iterate of the zero function:
    W = -(8/243) U^(-8/3), X = -(2i/9) U^(-4/3), Y = (2i/9) U^(-4/3).
    order=2 is the formal solution of the invariance equation through
    U^(-7/3) in X, Y; it also corrects W to (4/243) U^(-8/3), which the
    X, Y terms feed back into at leading order.
    """
    if _is_box(U):
        raise TypeError("asymptotic_seed is a point-mode helper")
    U = complex(U)
    if U.real > -eta_star:
        raise OutsideTail("Re U = %g is not below -%g" % (U.real, eta_star))
    P = Powers(U)
    if order == 1:
        return InnerState(-8 / 243 * P(-8), -2j / 9 * P(-4), 2j / 9 * P(-4))
    if order == 2:
        t = 28 / 81 * P(-7)
        return InnerState(4 / 243 * P(-8), -2j / 9 * P(-4) + t, 2j / 9 * P(-4) + t)
    raise ValueError("order must be 1 or 2")


def in_domain(U, kappa, gamma):
    """Membership in the unstable sector domain of offset kappa, angle gamma."""
    U = complex(U)
    return U.real <= 0 and abs(U.imag) >= math.tan(gamma) * U.real + kappa / math.cos(gamma)
