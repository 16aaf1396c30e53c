"""Six-variable polynomial/rational form of the inner equation.

The extra variables are A = (1 + J)**(-1/2) and B = U**(-1/3).  In these
variables the field only needs +, -, * and one reciprocal (B**-2 in the
U row), which makes it suitable for Taylor recurrences.  The field never
reads U.

Functions here are written once and run on complex numbers, ComplexBoxes
or the tracer nodes of the Taylor engine.
"""

import cmath
from collections import namedtuple
from dataclasses import dataclass
from fractions import Fraction as Fr

from .complex_interval import (
    ComplexBox,
    RealInterval,
    ZeroInBox,
    cbox_cuberoot_upper,
    cbox_inv,
    cbox_inv_pow,
    cbox_sqrt_principal,
    cbrt_branch_point,
)
from .inner_system import eval_J

JtildeParts = namedtuple("JtildeParts", "J W X Y B")
KtildeParts = namedtuple("KtildeParts", "K W A B")

NAMES = ("U", "W", "X", "Y", "A", "B")


@dataclass(frozen=True)
class ExtendedState:
    U: object
    W: object
    X: object
    Y: object
    A: object
    B: object

    def __iter__(self):
        return iter((self.U, self.W, self.X, self.Y, self.A, self.B))

    def inner(self):
        return (self.W, self.X, self.Y)


@dataclass(frozen=True)
class ExtendedDerivative:
    dU: object
    dW: object
    dX: object
    dY: object
    dA: object
    dB: object

    def __iter__(self):
        return iter((self.dU, self.dW, self.dX, self.dY, self.dA, self.dB))


def _mul_i(z):
    if isinstance(z, ComplexBox):
        return ComplexBox(-z.im, z.re)
    if hasattr(z, "mul_i"):
        return z.mul_i()
    return 1j * z


def _inv_sq(B):
    if isinstance(B, ComplexBox):
        return cbox_inv_pow(B, 2)
    if hasattr(B, "recip"):
        r = B.recip()
        return r * r
    if B == 0:
        raise ZeroInBox("B = 0")
    return 1 / (B * B)


def _check_B(B):
    if isinstance(B, ComplexBox) and B.contains_zero():
        raise ZeroInBox("B box contains 0")


def eval_Jtilde(W, X, Y, B):
    """J written in B = U**(-1/3), with its W, X, Y, B partials."""
    B2 = B * B
    B3 = B2 * B
    B4 = B2 * B2
    B5 = B4 * B
    B6 = B3 * B3
    s = X + Y
    d = X - Y
    core = W * B3 - Fr(2, 3) * B5
    J = (Fr(4, 9) * W * W * B2 - Fr(16, 27) * W * B4 + Fr(16, 81) * B6
         + Fr(4, 9) * s * core - _mul_i(Fr(4, 3) * d * B2)
         - Fr(1, 3) * (X * X + Y * Y) * B4 + Fr(10, 9) * X * Y * B4)
    JW = Fr(8, 9) * W * B2 - Fr(16, 27) * B4 + Fr(4, 9) * s * B3
    i2 = _mul_i(Fr(4, 3) * B2)
    JX = Fr(4, 9) * core - i2 - Fr(2, 3) * X * B4 + Fr(10, 9) * Y * B4
    JY = Fr(4, 9) * core + i2 - Fr(2, 3) * Y * B4 + Fr(10, 9) * X * B4
    JB = (Fr(8, 9) * W * W * B - Fr(64, 27) * W * B3 + Fr(96, 81) * B5
          + Fr(4, 9) * s * (3 * W * B2 - Fr(10, 3) * B4)
          - _mul_i(Fr(8, 3) * d * B)
          - Fr(4, 3) * (X * X + Y * Y) * B3 + Fr(40, 9) * X * Y * B3)
    return JtildeParts(J, JW, JX, JY, JB)


def eval_Ktilde(W, A, B):
    """K = -(3/4) W^2 B^-2 - (1/3) B^2 (A - 1) and its W, A, B partials."""
    _check_B(B)
    Bm2 = _inv_sq(B)
    B2 = B * B
    K = -Fr(3, 4) * W * W * Bm2 - Fr(1, 3) * B2 * (A - 1)
    KW = -Fr(3, 2) * W * Bm2
    KA = -Fr(1, 3) * B2
    KB = Fr(3, 2) * W * W * Bm2 / B - Fr(2, 3) * B * (A - 1)
    return KtildeParts(K, KW, KA, KB)


def eval_F(s):
    """Right-hand side of the six-variable system."""
    _, W, X, Y, A, B = s
    _check_B(B)
    B2 = B * B
    B4 = B2 * B2
    B5 = B4 * B
    B6 = B4 * B2
    A3 = A * A * A
    jt = eval_Jtilde(W, X, Y, B)
    c = Fr(1, 6) * B2 * A3
    dU = 1 - Fr(3, 2) * W * _inv_sq(B) + c * jt.W
    # -(dK/dB + dK/dA dA/dB) dB/dU, with the B^-3 term cancelled by dB/dU
    dW = Fr(1, 2) * W * W * B - Fr(2, 9) * B5 * (A - 1) + Fr(1, 18) * B6 * A3 * jt.B
    dX = _mul_i(X + c * jt.Y)
    dY = -_mul_i(Y + c * jt.X)
    dB = -Fr(1, 3) * B4 * dU
    dA = -Fr(1, 2) * A3 * (jt.W * dW + jt.X * dX + jt.Y * dY + jt.B * dB)
    return ExtendedDerivative(dU, dW, dX, dY, dA, dB)


def _conj(z):
    if isinstance(z, ComplexBox):
        return z.conj()
    return complex(z).conjugate()


def apply_S(s):
    """(U, W, X, Y, A, B) -> (-conj U, conj W, -conj X, -conj Y, conj A, -conj B)."""
    U, W, X, Y, A, B = s
    cls = type(s) if isinstance(s, (ExtendedState, ExtendedDerivative)) else ExtendedState
    return cls(-_conj(U), _conj(W), -_conj(X), -_conj(Y), _conj(A), -_conj(B))


def lift(U, Z):
    """Extended state over (U, Z) with A = (1+J)**(-1/2), B = U**(-1/3)."""
    W, X, Y = Z
    J = eval_J(U, Z)
    if isinstance(J, ComplexBox):
        A = cbox_inv(cbox_sqrt_principal(1 + J))
        B = cbox_cuberoot_upper(U if isinstance(U, ComplexBox) else ComplexBox.point(U))
    else:
        A = 1 / cmath.sqrt(1 + J)
        B = 1 / cbrt_branch_point(U)
    return ExtendedState(U, W, X, Y, A, B)


def constraint_defects(s):
    """|A^2 (1 + J~) - 1| and |B^3 U - 1| for a point state."""
    U, W, X, Y, A, B = (complex(v) for v in s)
    J = eval_Jtilde(W, X, Y, B).J
    return abs(A * A * (1 + J) - 1), abs(B ** 3 * U - 1)


def stable_from_unstable(Yu):
    """Y component of Z^u - Z^s on the imaginary axis and its size bound.

    On U = -i rho the stable solution is the S-image of the unstable one,
    so Y^s = -conj(Y^u) and the difference is 2 Re Y^u.
    """
    if isinstance(Yu, ComplexBox):
        d = 2 * Yu.re
        return d, RealInterval(d.mig())
    d = 2 * complex(Yu).real
    return complex(d), abs(d)
