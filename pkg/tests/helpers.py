"""Samplers and property checks shared by the unit and acceptance suites."""

import random
from fractions import Fraction

import mpmath

from stokescert.complex_interval import (
    ComplexBox,
    RealInterval,
    cbox_cuberoot_upper,
    cbox_inv_pow,
    cbox_mul,
    cbox_sqrt_principal,
    iv_sqrt,
)
from stokescert.extended_field import ExtendedState, apply_S, eval_F, lift
from stokescert.inner_system import (
    eval_field,
    eval_J_derivs,
    eval_K_derivs,
    eval_R_jacobian,
    in_domain,
)

KAPPA = 6.24
GAMMA = 0.5


def domain_points(rng, n, kappa=KAPPA, gamma=GAMMA, rmax=200.0):
    """Points of the unstable sector domain, both half planes."""
    out = []
    while len(out) < n:
        x = -rng.uniform(0.0, rmax)
        y = rng.choice((-1, 1)) * rng.uniform(0.0, rmax)
        if in_domain(complex(x, y), kappa, gamma):
            out.append(complex(x, y))
    return out


def _cplx(rng, r):
    return complex(rng.uniform(-r, r), rng.uniform(-r, r))


def small_Z(rng, U, b1=0.7, b2=0.71):
    """Z inside the ball |U^(8/3) W| <= b1, |U^(4/3) X|, |U^(4/3) Y| <= b2."""
    m = abs(U)
    return (_cplx(rng, b1 * m ** (-8 / 3) / 1.5),
            _cplx(rng, b2 * m ** (-4 / 3) / 1.5),
            _cplx(rng, b2 * m ** (-4 / 3) / 1.5))


def states(seed, n):
    rng = random.Random(seed)
    return [(U, small_Z(rng, U)) for U in domain_points(rng, n)]


# ---------------------------------------------------------------------------
# extended field properties


def symmetry_residual(pairs):
    """max ||S(F(s)) + F(S(s))||_inf over lifted states."""
    worst = 0.0
    for U, Z in pairs:
        s = lift(U, Z)
        a = apply_S(eval_F(s))
        b = eval_F(apply_S(s))
        worst = max(worst, max(abs(x + y) for x, y in zip(a, b)))
    return worst


def _worst_rel(F, f, worst):
    for a, b in zip((F.dU, F.dW, F.dX, F.dY), (f.dU,) + tuple(f.dZ)):
        worst = max(worst, float(abs(a - b) / max(abs(b), 1e-300)))
    return worst


def field_consistency(pairs):
    """Componentwise relative mismatch of eval_F against eval_field on U, W, X, Y.

    Returns (exact_lift, double_lift).  exact_lift evaluates eval_F at the
    lifted state carried in 250-bit arithmetic, so both fields see the same
    point.  double_lift uses lift() in doubles: A is then rounded to a float
    near 1 and the W component, which contains (A - 1) ~ J/2 against a
    cancelling J_B term, inherits an input error of about ulp(1) / |J|.
    """
    exact = rounded = 0.0
    with mpmath.workprec(MP_BITS):
        for U, Z in pairs:
            f = eval_field(U, Z)
            rounded = _worst_rel(eval_F(lift(U, Z)), f, rounded)
            u, W, X, Y = (mpmath.mpc(v) for v in (U,) + tuple(Z))
            A = 1 / mpmath.sqrt(1 + mp_J(u, W, X, Y))
            s = ExtendedState(u, W, X, Y, A, 1 / mp_cbrt(u))
            exact = _worst_rel(eval_F(s), f, exact)
    return exact, rounded


# ---------------------------------------------------------------------------
# derivative formulas against central differences


MP_BITS = 250
H_INNER = mpmath.mpf("1e-30")
H_OUTER = mpmath.mpf("1e-15")


def mp_cbrt(U):
    """U**(1/3) with arg U in (0, 2 pi)."""
    ang = mpmath.arg(U)
    if ang <= 0:
        ang += 2 * mpmath.pi
    return mpmath.cbrt(abs(U)) * mpmath.expj(ang / 3)


def mp_J(U, W, X, Y):
    """J written out term by term from the closed form, in mpmath."""
    c = mp_cbrt(U)
    p = lambda n: c ** n
    f = mpmath.mpf
    return (f(4) / 9 * W ** 2 / p(2)
            - f(16) / 27 * W / p(4)
            + f(16) / 81 / p(6)
            + f(4) / 9 * (X + Y) * W / p(3)
            - f(8) / 27 * (X + Y) / p(5)
            - 4j / f(3) * (X - Y) / p(2)
            - (X ** 2 + Y ** 2) / (3 * p(4))
            + f(10) / 9 * X * Y / p(4))


def mp_K(U, W, X, Y):
    c = mp_cbrt(U)
    J = mp_J(U, W, X, Y)
    return -mpmath.mpf(3) / 4 * c ** 2 * W ** 2 - (1 / mpmath.sqrt(1 + J) - 1) / (3 * c ** 2)


def _shift(args, var, d):
    a = list(args)
    a["UWXY".index(var)] += d
    return a


def mp_diff(fn, args, var, h):
    return (fn(*_shift(args, var, h)) - fn(*_shift(args, var, -h))) / (2 * h)


def mp_dK(var):
    return lambda *a: mp_diff(mp_K, a, var, H_INNER)


def mp_dJ(var):
    return lambda *a: mp_diff(mp_J, a, var, H_INNER)


def mp_R(U, W, X, Y):
    a = (U, W, X, Y)
    KU, KW, KX, KY = (mp_diff(mp_K, a, v, H_INNER) for v in "UWXY")
    d = 1 + KW
    return (-KU / d, 1j * (KY - X * KW) / d, -1j * (KX - Y * KW) / d)


def _rel(a, b, floor):
    return float(abs(a - b) / max(abs(b), floor))


SECOND = ("UW", "UX", "UY", "WW", "WX", "WY", "XX", "XY", "YY")


def derivative_errors(pairs):
    """Worst relative error of every J, K and R derivative formula.

    The oracle is central differences of an independently written J, K
    and R in 250-bit arithmetic, so neither truncation nor rounding of the
    difference quotient can hide a formula error.  Entries are compared
    relative to max(|oracle|, 1e-6 * largest entry of the same family), so
    terms that vanish analytically do not divide by zero.
    """
    worst = {}

    def put(name, a, b, floor):
        worst[name] = max(worst.get(name, 0.0), _rel(a, b, floor))

    with mpmath.workprec(MP_BITS):
        for U, Z in pairs:
            args = [mpmath.mpc(v) for v in (U,) + tuple(Z)]
            for name, fd, mp_f, mp_d in (("J", eval_J_derivs(U, Z), mp_J, mp_dJ),
                                         ("K", eval_K_derivs(U, Z), mp_K, mp_dK)):
                first = {v: mp_diff(mp_f, args, v, H_INNER) for v in "UWXY"}
                floor = 1e-6 * max(abs(x) for x in first.values())
                for v in "UWXY":
                    put("%s_%s" % (name, v), getattr(fd, v), first[v], floor)
                second = {ab: mp_diff(mp_d(ab[0]), args, ab[1], H_OUTER) for ab in SECOND}
                floor = 1e-6 * max(abs(x) for x in second.values())
                for ab in SECOND:
                    put("%s_%s" % (name, ab), getattr(fd, ab), second[ab], floor)
            jac = eval_R_jacobian(U, Z)
            cols = [[mp_diff(lambda *a, i=i: mp_R(*a)[i], args, v, H_OUTER) for i in range(3)]
                    for v in "WXY"]
            for i in range(3):
                floor = 1e-6 * max(abs(cols[j][i]) for j in range(3))
                for j, v in enumerate("WXY"):
                    put("R%d_%s" % (i + 1, v), jac[i][j], cols[j][i], floor)
    return worst


# ---------------------------------------------------------------------------
# interval suites


def _rand_iv(rng, scale=10.0):
    a = rng.uniform(-scale, scale)
    b = rng.uniform(-scale, scale)
    if rng.random() < 0.1:
        b = a
    return RealInterval(min(a, b), max(a, b))


def _sub_iv(rng, x):
    a = rng.uniform(x.lo, x.hi)
    b = rng.uniform(x.lo, x.hi)
    return RealInterval(min(a, b), max(a, b))


def _rand_box(rng, scale=10.0, w=1.0):
    z = _cplx(rng, scale)
    return ComplexBox.around(z, rng.uniform(0, w), rng.uniform(0, w))


def _sub_box(rng, z):
    return ComplexBox(_sub_iv(rng, z.re), _sub_iv(rng, z.im))


def _off_zero(x):
    return not (x.lo <= 0 <= x.hi)


def _subset(a, b):
    return b.contains(a)


def inclusion_monotonicity(n, seed=1):
    """Counts of (checked, violated) over real and complex operations."""
    rng = random.Random(seed)
    checked = bad = 0
    ops = (lambda a, b: a + b, lambda a, b: a - b, lambda a, b: a * b, lambda a, b: a / b)
    for _ in range(n):
        A, B = _rand_iv(rng), _rand_iv(rng)
        a, b = _sub_iv(rng, A), _sub_iv(rng, B)
        for k, op in enumerate(ops):
            if k == 3 and not _off_zero(B):
                continue
            checked += 1
            bad += not _subset(op(a, b), op(A, B))
        Ap = RealInterval(abs(A.lo), abs(A.lo) + A.width())
        ap = _sub_iv(rng, Ap)
        checked += 1
        bad += not _subset(iv_sqrt(ap), iv_sqrt(Ap))
        Z1, Z2 = _rand_box(rng), _rand_box(rng)
        z1, z2 = _sub_box(rng, Z1), _sub_box(rng, Z2)
        checked += 1
        bad += not _subset(cbox_mul(z1, z2), cbox_mul(Z1, Z2))
        if not Z1.contains_zero():
            for k in (2, 3):
                checked += 1
                bad += not _subset(cbox_inv_pow(z1, k), cbox_inv_pow(Z1, k))
        if Z1.re.lo > 0 or not (Z1.im.lo <= 0 <= Z1.im.hi):
            checked += 1
            bad += not _subset(cbox_sqrt_principal(z1), cbox_sqrt_principal(Z1))
        if Z1.re.hi < 0 or not (Z1.im.lo <= 0 <= Z1.im.hi):
            checked += 1
            bad += not _subset(cbox_cuberoot_upper(z1), cbox_cuberoot_upper(Z1))
    return checked, bad


def point_containment_real(n, seed=2):
    """Exact rational results of random float operands lie in the interval results."""
    rng = random.Random(seed)
    checked = bad = 0
    for _ in range(n):
        x = rng.uniform(-1e3, 1e3) * 10.0 ** rng.randint(-8, 8)
        y = rng.uniform(-1e3, 1e3) * 10.0 ** rng.randint(-8, 8)
        a, b = RealInterval(x), RealInterval(y)
        fx, fy = Fraction(x), Fraction(y)
        for r, exact in ((a + b, fx + fy), (a - b, fx - fy), (a * b, fx * fy)):
            checked += 1
            bad += not r.contains(exact)
        if y != 0:
            checked += 1
            bad += not (a / b).contains(fx / fy)
        s = iv_sqrt(RealInterval(abs(x)))
        checked += 1
        bad += not (Fraction(s.lo) ** 2 <= abs(fx) <= Fraction(s.hi) ** 2 and s.lo >= 0)
    return checked, bad


def _in(box, w):
    return (mpmath.mpf(box.re.lo) <= w.real <= mpmath.mpf(box.re.hi)
            and mpmath.mpf(box.im.lo) <= w.imag <= mpmath.mpf(box.im.hi))


def point_containment_complex(n, seed=3):
    """Complex operations on point boxes against 120-bit mpmath."""
    rng = random.Random(seed)
    checked = bad = 0
    with mpmath.workprec(120):
        third = mpmath.mpf(1) / 3
        for _ in range(n):
            z = _cplx(rng, 100.0) * 10.0 ** rng.randint(-3, 3)
            w = _cplx(rng, 100.0)
            zb, wb = ComplexBox.point(z), ComplexBox.point(w)
            zm, wm = mpmath.mpc(z.real, z.imag), mpmath.mpc(w.real, w.imag)
            checked += 3
            bad += not _in(cbox_mul(zb, wb), zm * wm)
            bad += not _in(cbox_inv_pow(zb, 2), zm ** -2)
            bad += not _in(cbox_inv_pow(zb, 3), zm ** -3)
            if not (z.imag == 0 and z.real <= 0):
                checked += 1
                bad += not _in(cbox_sqrt_principal(zb), mpmath.sqrt(zm))
            if not (z.imag == 0 and z.real >= 0):
                ang = mpmath.arg(zm)
                if ang <= 0:
                    ang += 2 * mpmath.pi
                ref = mpmath.power(abs(zm), -third) * mpmath.expj(-ang / 3)
                checked += 1
                bad += not _in(cbox_cuberoot_upper(zb), ref)
    return checked, bad


def report(n, title, ok, detail=""):
    """Print and return one PASS/FAIL line."""
    line = "%s criterion %d: %s%s" % ("PASS" if ok else "FAIL", n, title, (" | " + detail) if detail else "")
    print(line)
    return line
