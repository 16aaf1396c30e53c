"""Taylor-series integration of the six-variable system.

The field is traced once into a small expression graph (sums, products,
constant scalings and reciprocals).  Time-Taylor coefficients are then
produced one order at a time by the usual recurrences

    product      (ab)_k = sum_j a_j b_{k-j}
    reciprocal   q_k    = -q_0 sum_{j>=1} b_j q_{k-j}
    variables    x_{k+1} = f_k / (k+1)

on one of two backends: plain complex numbers (scalars or numpy arrays)
for the fast mode, and complex-interval arrays carrying first-order jets
for the rigorous mode.
"""

import csv
import operator
from dataclasses import asdict, dataclass, field
from fractions import Fraction as Fr

import numpy as np

from .complex_interval import ComplexBox, RealInterval, ZeroInBox
from .extended_field import NAMES, ExtendedState, eval_F
from .inner_system import InnerState
from .ivarray import CIArray, IArray, imatmul

VAR, CONST, ADD, SUB, NEG, MUL, CMUL, CADD, RECIP = range(9)


def _const_pair(c):
    if isinstance(c, complex):
        return (Fr(c.real), Fr(c.imag))
    if isinstance(c, (int, Fr)):
        return (Fr(c), Fr(0))
    if isinstance(c, float):
        return (Fr(c), Fr(0))
    raise TypeError("unsupported constant %r" % (c,))


class Node:
    __slots__ = ("tape", "idx")

    def __init__(self, tape, idx):
        self.tape = tape
        self.idx = idx

    def _bin(self, kind, other):
        return self.tape.add(kind, self.idx, other.idx)

    def __add__(self, other):
        if isinstance(other, Node):
            return self._bin(ADD, other)
        c = _const_pair(other)
        if c == (0, 0):
            return self
        return self.tape.add(CADD, self.idx, None, c)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Node):
            return self._bin(SUB, other)
        c = _const_pair(other)
        if c == (0, 0):
            return self
        return self.tape.add(CADD, self.idx, None, (-c[0], -c[1]))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return self.tape.add(NEG, self.idx)

    def __mul__(self, other):
        if isinstance(other, Node):
            return self._bin(MUL, other)
        c = _const_pair(other)
        if c == (1, 0):
            return self
        return self.tape.add(CMUL, self.idx, None, c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Node):
            return self * other.recip()
        c = _const_pair(other)
        if c[1] != 0:
            raise TypeError("complex divisor constants are not supported")
        return self * (1 / c[0])

    def __rtruediv__(self, other):
        return other * self.recip()

    def __pow__(self, n):
        if not isinstance(n, int) or n < 1:
            return NotImplemented
        out = None
        base = self
        while n:
            if n & 1:
                out = base if out is None else out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def recip(self):
        return self.tape.add(RECIP, self.idx)

    def mul_i(self):
        return self.tape.add(CMUL, self.idx, None, (Fr(0), Fr(1)))


class Tape:
    """Expression graph with common-subexpression sharing."""

    def __init__(self, nvars):
        self.ops = []
        self._memo = {}
        self.nvars = nvars
        self.inputs = [self.add(VAR, j) for j in range(nvars)]
        self.outputs = None

    def add(self, kind, a=None, b=None, c=None):
        if kind in (ADD, MUL) and b is not None and a > b:
            a, b = b, a
        key = (kind, a, b, c)
        idx = self._memo.get(key)
        if idx is None:
            idx = len(self.ops)
            self.ops.append(key)
            self._memo[key] = idx
        return Node(self, idx)

    def count(self, kind):
        return sum(1 for op in self.ops if op[0] == kind)


def trace(fn, nvars):
    """Record fn(list_of_nodes) -> iterable of nodes."""
    tape = Tape(nvars)
    out = list(fn(tape.inputs))
    for j, o in enumerate(out):
        if not isinstance(o, Node):
            # constant output, e.g. a trivially linear field
            o = tape.add(CONST, None, None, _const_pair(o))
            out[j] = o
    tape.outputs = [o.idx for o in out]
    return tape


class PointBackend:
    """Complex scalars or numpy complex arrays; histories are lists."""

    def new(self, n):
        return [None] * n

    def const(self, c, like):
        v = complex(float(c[0]), float(c[1]))
        return v + 0 * like

    def zero(self, like):
        return 0 * like

    def conv(self, ha, hb, k):
        return sum(map(operator.mul, ha[:k + 1], hb[k::-1]))

    def recip0(self, b):
        return 1 / b

    def recip_k(self, hq, hb, k):
        return -hq[0] * sum(map(operator.mul, hb[1:k + 1], hq[k - 1::-1]))

    def cmul(self, c, a):
        return complex(float(c[0]), float(c[1])) * a

    def cadd(self, c, a):
        return a + complex(float(c[0]), float(c[1]))

    def div_int(self, a, m):
        return a / m


def jmul(a, b):
    """Product of first-order jets stored along the last axis."""
    if a.shape[-1] == 1:
        return a * b
    v = a[..., 0:1] * b
    w = a[..., 1:] * b[..., 0:1]
    v[..., 1:] = v[..., 1:] + w
    return v


def jrecip(b):
    q0 = b[..., 0:1].recip()
    if b.shape[-1] == 1:
        return q0
    out = CIArray.zeros(b.shape)
    out[..., 0:1] = q0
    out[..., 1:] = -(q0 * q0) * b[..., 1:]
    return out


class IntervalJetBackend:
    """CIArray values of shape (batch, D); histories of shape (n, batch, D)."""

    def __init__(self, shape):
        self.shape = tuple(shape)
        self._consts = {}

    def _cbox(self, c):
        box = self._consts.get(c)
        if box is None:
            box = ComplexBox(RealInterval.exact(c[0]), RealInterval.exact(c[1]))
            self._consts[c] = box
        return box

    def new(self, n):
        return CIArray.zeros((n,) + self.shape)

    def const(self, c, like=None):
        out = CIArray.zeros(self.shape)
        out[..., 0] = self._cbox(c)
        return out

    def zero(self, like=None):
        return CIArray.zeros(self.shape)

    def conv(self, ha, hb, k):
        return jmul(ha[0:k + 1], hb[k::-1]).sum(axis=0)

    def recip0(self, b):
        return jrecip(b)

    def recip_k(self, hq, hb, k):
        s = jmul(hb[1:k + 1], hq[k - 1::-1]).sum(axis=0)
        return -jmul(hq[0], s)

    def cmul(self, c, a):
        return a * self._cbox(c)

    def cadd(self, c, a):
        out = a.copy()
        out[..., 0] = a[..., 0] + self._cbox(c)
        return out

    def div_int(self, a, m):
        r = RealInterval(1.0) / RealInterval(float(m))
        return a.scale(r)


def coefficients(tape, x0, order, be):
    """Taylor coefficients c_0..c_order of each state variable.

    x0 is a sequence of backend values, one per variable.  Returns a list
    of per-variable histories (lists for the point backend, CIArrays of
    leading length order+1 for the interval backend).
    """
    ops = tape.ops
    nops = len(ops)
    H = [be.new(order + 1) for _ in range(nops)]
    var_nodes = tape.inputs
    for j, node in enumerate(var_nodes):
        H[node.idx][0] = x0[j]
    like = x0[0]
    outs = tape.outputs
    for k in range(order):
        for i in range(nops):
            kind, a, b, c = ops[i]
            if kind == VAR:
                continue
            h = H[i]
            if kind == MUL:
                h[k] = be.conv(H[a], H[b], k)
            elif kind == ADD:
                h[k] = H[a][k] + H[b][k]
            elif kind == CMUL:
                h[k] = be.cmul(c, H[a][k])
            elif kind == SUB:
                h[k] = H[a][k] - H[b][k]
            elif kind == NEG:
                h[k] = -H[a][k]
            elif kind == CADD:
                h[k] = be.cadd(c, H[a][k]) if k == 0 else H[a][k]
            elif kind == RECIP:
                h[k] = be.recip0(H[a][0]) if k == 0 else be.recip_k(h, H[a], k)
            elif kind == CONST:
                h[k] = be.const(c, like) if k == 0 else be.zero(like)
        for j, node in enumerate(var_nodes):
            H[node.idx][k + 1] = be.div_int(H[outs[j]][k], k + 1)
    return [H[node.idx] for node in var_nodes]


def horner(coeffs, h):
    """sum_k coeffs[k] h^k for a point-backend history."""
    s = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        s = s * h + c
    return s


# ---------------------------------------------------------------------------
# systems, configuration and errors


class EnclosureFailed(ArithmeticError):
    pass


class StepUnderflow(EnclosureFailed):
    pass


class MaxStepsExceeded(RuntimeError):
    pass


class NoCrossing(MaxStepsExceeded):
    pass


class DomainGuardViolated(RuntimeError):
    pass


FAST = "fast"
RIGOROUS = "rigorous"


@dataclass(frozen=True)
class IntegratorConfig:
    order: int = 20
    h_init: float = 1.0
    h_min: float = 1e-6
    h_max: float = 1.0
    tol: float = 1e-15
    mode: str = FAST
    max_steps: int = 100000
    bisections: int = 8
    safety: float = 0.9
    fixed_step: bool = False

    def validate(self):
        if self.order < 2:
            raise ValueError("order must be >= 2")
        if not (0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.mode not in (FAST, RIGOROUS):
            raise ValueError("mode must be %r or %r" % (FAST, RIGOROUS))
        if self.max_steps < 1 or self.bisections < 0:
            raise ValueError("max_steps >= 1 and bisections >= 0 required")
        return self

    def to_dict(self):
        return asdict(self)


class System:
    """An autonomous complex ODE x' = f(x) traced into a tape."""

    def __init__(self, fn, nvars, names=None):
        self.tape = trace(fn, nvars)
        self.nvars = nvars
        self.names = tuple(names) if names else tuple("x%d" % j for j in range(nvars))

    def coeffs_point(self, x0, order):
        return coefficients(self.tape, list(x0), order, PointBackend())

    def coeffs_interval(self, x0, order):
        """x0: list of CIArrays of a common shape (batch, D)."""
        return coefficients(self.tape, x0, order, IntervalJetBackend(x0[0].shape))

    def field_interval(self, X):
        """f over a CIArray of shape (n,)."""
        x0 = [CIArray(X.re[j:j + 1, None], X.im[j:j + 1, None]) for j in range(self.nvars)]
        C = self.coeffs_interval(x0, 1)
        return _stack([c[1, 0, 0] for c in C])


_STOKES = None


def stokes_system():
    """The six-variable system, traced once per process."""
    global _STOKES
    if _STOKES is None:
        _STOKES = System(lambda v: list(eval_F(ExtendedState(*v))), 6, NAMES)
    return _STOKES


def taylor_coeffs(s, order, system=None):
    """Time-Taylor coefficients c_0..c_order of the flow through s.

    Point input gives complex coefficients; ComplexBox input gives
    rigorous enclosures valid for every point of the box.
    """
    system = system or stokes_system()
    vals = list(s)
    boxed = any(isinstance(v, ComplexBox) for v in vals)
    if boxed:
        x0 = []
        for v in vals:
            a = CIArray.zeros((1, 1))
            a[0, 0] = v if isinstance(v, ComplexBox) else ComplexBox.point(complex(v))
            x0.append(a)
        if isinstance(s, ExtendedState) and x0[5][0, 0].box().contains_zero():
            raise ZeroInBox("B box contains 0")
        C = system.coeffs_interval(x0, order)
        rows = [[C[j][k, 0, 0].box() for j in range(system.nvars)] for k in range(order + 1)]
    else:
        if isinstance(s, ExtendedState) and complex(s.B) == 0:
            raise ZeroInBox("B = 0")
        C = system.coeffs_point([complex(v) for v in vals], order)
        rows = [[C[j][k] for j in range(system.nvars)] for k in range(order + 1)]
    if isinstance(s, ExtendedState):
        return [ExtendedState(*r) for r in rows]
    return rows


def _stack(items, axis=0):
    return CIArray(IArray(np.stack([c.re.lo for c in items], axis), np.stack([c.re.hi for c in items], axis)),
                   IArray(np.stack([c.im.lo for c in items], axis), np.stack([c.im.hi for c in items], axis)))


def _norm(v):
    return float(np.max(np.abs(v)))


# ---------------------------------------------------------------------------
# fast mode


def fast_step_size(C, order, cfg):
    """Step from the last two coefficients: |c_k| h^k <= tol."""
    if cfg.fixed_step:
        return cfg.h_init
    h = cfg.h_max
    for k in (order - 1, order):
        n = max(_norm(c[k]) for c in C)
        if n > 0:
            h = min(h, cfg.safety * (cfg.tol / n) ** (1.0 / k))
    if h < cfg.h_min:
        raise StepUnderflow("fast step %.3g below h_min" % h)
    return h


def fast_step(system, x, cfg, direction=1, h_cap=None):
    """One point Taylor step; returns (h, new state, coefficients)."""
    C = system.coeffs_point(x, cfg.order)
    h = fast_step_size(C, cfg.order, cfg)
    if h_cap is not None:
        h = min(h, h_cap)
    h *= direction
    return h, [horner(c, h) for c in C], C


@dataclass
class Trajectory:
    ts: list
    xs: list
    widths: list = None
    names: tuple = None

    def write_csv(self, path):
        names = self.names or tuple("x%d" % j for j in range(len(self.xs[0])))
        head = ["t"]
        for nm in names:
            head += ["re_" + nm, "im_" + nm]
        if self.widths is not None:
            head += ["w_" + nm for nm in names]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(head)
            for i, (t, x) in enumerate(zip(self.ts, self.xs)):
                row = [repr(float(t))]
                for v in x:
                    v = complex(v)
                    row += [repr(v.real), repr(v.imag)]
                if self.widths is not None:
                    row += [repr(float(v)) for v in self.widths[i]]
                w.writerow(row)


def integrate_fast(system, x0, t_end, cfg, grid=(), record=True):
    """Point integration from t = 0 to t_end, landing exactly on grid times."""
    direction = 1 if t_end >= 0 else -1
    stops = sorted({float(g) for g in grid if 0 < direction * g < direction * t_end}, key=abs)
    stops.append(float(t_end))
    x = [complex(v) if np.ndim(v) == 0 else np.asarray(v, dtype=complex) for v in x0]
    t = 0.0
    ts, xs = [t], [x]
    steps = 0
    for stop in stops:
        while direction * (stop - t) > 0:
            if steps >= cfg.max_steps:
                raise MaxStepsExceeded("fast integration exceeded %d steps" % cfg.max_steps)
            rest = abs(stop - t)
            h, xn, _ = fast_step(system, x, cfg, direction, h_cap=rest)
            t = stop if abs(h) == rest else t + h
            x = xn
            steps += 1
            if record:
                ts.append(t)
                xs.append(x)
        if not record:
            ts.append(t)
            xs.append(x)
    return Trajectory(ts, xs, names=system.names)


# ---------------------------------------------------------------------------
# section crossing data


@dataclass
class SectionCrossing:
    t_cross: RealInterval
    U_at_section: ComplexBox
    Z_at_section: InnerState
    reY_interval: RealInterval
    witness_before: ComplexBox
    witness_after: ComplexBox
    state: list
    steps: int
    mode: str
    trajectory: Trajectory = None
    widths: list = field(default_factory=list)   # last enclosure before the crossing step
    section: float = 0.0
    guard_ok: bool = True
    max_im_U: float = None

    def bolzano_ok(self):
        return self.witness_before.re.hi < self.section < self.witness_after.re.lo


def _poly_re(C0, tau):
    return horner(C0, tau).real


def _fast_crossing(C, h, section, bisections):
    """Bracket and polish the root of Re x_0(tau) = section on [0, h]."""
    C0 = C[0]
    lo, hi = 0.0, h
    for _ in range(max(bisections, 1) + 40):
        m = 0.5 * (lo + hi)
        if m in (lo, hi):
            break
        if _poly_re(C0, m) < section:
            lo = m
        else:
            hi = m
    dC0 = [k * C0[k] for k in range(1, len(C0))]
    tau = 0.5 * (lo + hi)
    for _ in range(50):
        f = _poly_re(C0, tau) - section
        d = horner(dC0, tau).real
        if d == 0:
            break
        nt = min(max(tau - f / d, lo), hi)
        if nt == tau:
            break
        tau = nt
    after = hi
    if not _poly_re(C0, after) > section:
        after = hi + (hi - lo)
    return tau, lo, after


def _fast_to_section(system, x0, cfg, section, guard_rho, guard_action, record):
    x = [complex(v) for v in x0]
    if not x[0].real < section:
        raise ValueError("initial Re x_0 must lie below the section")
    t = 0.0
    ts, xs = [t], [x]
    guard_ok = True
    max_im = x[0].imag
    for steps in range(1, cfg.max_steps + 1):
        h, xn, C = fast_step(system, x, cfg)
        max_im = max(max_im, xn[0].imag)
        if guard_rho is not None and not xn[0].imag < -guard_rho:
            if guard_action == "raise":
                raise DomainGuardViolated("Im U = %.6g reached -%.6g" % (xn[0].imag, guard_rho))
            guard_ok = False
        if xn[0].real >= section:
            tau, lo, after = _fast_crossing(C, h, section, cfg.bisections)
            xc = [horner(c, tau) for c in C]
            xb = horner(C[0], lo)
            xa = horner(C[0], after)
            if record:
                ts.append(t + tau)
                xs.append(xc)
            traj = Trajectory(ts, xs, names=system.names) if record else None
            out = _make_crossing(RealInterval(t + tau), [ComplexBox.point(v) for v in xc], section,
                                 ComplexBox.point(xb), ComplexBox.point(xa), steps, FAST, traj)
            out.guard_ok = guard_ok
            out.max_im_U = max(max_im, xc[0].imag)
            return out
        t += h
        x = xn
        if record:
            ts.append(t)
            xs.append(x)
    raise NoCrossing("no crossing within %d steps" % cfg.max_steps)


def _make_crossing(T, boxes, section, before, after, steps, mode, traj, widths=None):
    U = boxes[0]
    U = ComplexBox(U.re.hull(RealInterval(section)), U.im)
    Z = InnerState(*boxes[1:4]) if len(boxes) >= 4 else InnerState(*(boxes[1:] + [None] * 3)[:3])
    reY = boxes[3].re if len(boxes) >= 4 else RealInterval(0.0)
    return SectionCrossing(T, U, Z, reY, before, after, boxes, steps, mode, traj, widths or [], section)


# ---------------------------------------------------------------------------
# rigorous mode: doubleton sets x in c + C r0 + Q r + tail (real coordinates)


def to_real(Z):
    """CIArray (n,) -> IArray (2n,) ordered Re x_0, Im x_0, Re x_1, ..."""
    n = Z.shape[0]
    lo = np.empty(2 * n)
    hi = np.empty(2 * n)
    lo[0::2], hi[0::2] = Z.re.lo, Z.re.hi
    lo[1::2], hi[1::2] = Z.im.lo, Z.im.hi
    return IArray(lo, hi)


def to_complex(v):
    return CIArray(IArray(v.lo[0::2], v.hi[0::2]), IArray(v.lo[1::2], v.hi[1::2]))


def real_jacobian(J):
    """Complex-analytic n x n Jacobian -> real 2n x 2n block matrix."""
    n = J.shape[0]
    lo = np.empty((2 * n, 2 * n))
    hi = np.empty((2 * n, 2 * n))
    lo[0::2, 0::2], hi[0::2, 0::2] = J.re.lo, J.re.hi
    lo[1::2, 1::2], hi[1::2, 1::2] = J.re.lo, J.re.hi
    lo[1::2, 0::2], hi[1::2, 0::2] = J.im.lo, J.im.hi
    lo[0::2, 1::2], hi[0::2, 1::2] = -J.im.hi, -J.im.lo
    return IArray(lo, hi)


@dataclass
class FlowEnclosure:
    t: RealInterval
    c: np.ndarray
    C: np.ndarray
    r0: IArray
    Q: np.ndarray
    r: IArray
    tail: IArray

    @classmethod
    def from_boxes(cls, boxes, t=0.0):
        Z = CIArray.from_boxes(boxes)
        v = to_real(Z)
        c = v.mid()
        n2 = len(c)
        return cls(RealInterval(t), c, np.eye(n2), v - c, np.eye(n2), IArray.zeros(n2), IArray.zeros(n2))

    @property
    def nvars(self):
        return len(self.c) // 2

    def hull_real(self):
        from .ivarray import imatmul
        return self.c + imatmul(self.C, self.r0) + imatmul(self.Q, self.r) + self.tail

    def hull(self):
        return to_complex(self.hull_real())

    def boxes(self):
        return self.hull().boxes()

    def center(self):
        return self.c[0::2] + 1j * self.c[1::2]

    def widths(self):
        """Per complex component: max of the real and imaginary widths."""
        return self.hull().width()


def _strictly_inside(N, E):
    return bool(np.all(E.re.lo < N.re.lo) and np.all(N.re.hi < E.re.hi)
                and np.all(E.im.lo < N.im.lo) and np.all(N.im.hi < E.im.hi))


def _inflate(E, rel=0.1):
    w = np.maximum(E.re.width(), E.im.width())
    pad = rel * w + 1e-15 * np.maximum(E.re.mag(), E.im.mag()) + 1e-300
    return CIArray(E.re.inflate(pad), E.im.inflate(pad))


def apriori_enclosure(system, X, h, max_iter=12):
    """First-order a-priori box: E with X + [0, h] F(E) inside E.

    The flow from any point of X then stays in E for t in [0, h].
    """
    T = RealInterval(min(0.0, h), max(0.0, h))
    E = X + system.field_interval(X).scale(T)
    for _ in range(max_iter):
        Et = _inflate(E)
        try:
            N = X + system.field_interval(Et).scale(T)
        except (ZeroDivisionError, ArithmeticError) as exc:
            raise EnclosureFailed("field not enclosed on trial box: %s" % exc)
        if N.subset_of(Et):
            return N
        E = Et.hull(N)
    raise EnclosureFailed("a-priori enclosure not validated for h = %g" % h)


def _coeffs_box(system, X, order):
    """Value-only interval coefficients over a CIArray box of shape (n,)."""
    x0 = [CIArray(X.re[j:j + 1, None], X.im[j:j + 1, None]) for j in range(system.nvars)]
    return _stack([c[:, 0, 0] for c in system.coeffs_interval(x0, order)], axis=1)


def taylor_enclosure(system, coeffs_X, h, order, max_iter=12):
    """High-order a-priori enclosure over [0, h].

    With P(T) = sum_{k<=p} c_k(X) T^k, a box E with P([0,h]) + c_{p+1}(E) [0,h]^{p+1}
    strictly inside E contains the flow from X for all t in [0, h].  Returns
    (the validated image box, c_{p+1}(E)).
    """
    T = RealInterval(min(0.0, h), max(0.0, h))
    P = _horner_ci(coeffs_X, T)
    Tp = _pow_iv(T, order + 1)
    Et = _inflate(P, 0.5)
    for _ in range(max_iter):
        try:
            cp1 = _coeffs_box(system, Et, order + 1)[order + 1]
        except (ZeroDivisionError, ArithmeticError) as exc:
            raise EnclosureFailed("field not enclosed on trial box: %s" % exc)
        N = P + cp1.scale(Tp)
        if _strictly_inside(N, Et):
            return N, cp1
        Et = _inflate(Et.hull(N), 0.5)
    raise EnclosureFailed("a-priori enclosure not validated for h = %g" % h)


def _horner_ci(coeffs, T):
    """sum_k coeffs[k] T^k; coeffs has leading axis k, T a RealInterval."""
    s = coeffs[len(coeffs.re.lo) - 1]
    for k in range(len(coeffs.re.lo) - 2, -1, -1):
        s = s.scale(T) + coeffs[k]
    return s


def _pow_iv(T, m):
    out = RealInterval(1.0)
    for _ in range(m):
        out = out * T
    return out


@dataclass
class StepData:
    t0: RealInterval
    h: float
    coeffs_hull: CIArray     # (order+1, n) over the hull before the step
    coeff_rem: CIArray       # (n,) order+1 coefficient over the a-priori box
    apriori: CIArray         # (n,) the whole step
    order: int

    def enclose(self, T):
        """Enclosure of x(t0 + tau), tau in T (inside [0, h]), for the whole set."""
        return _horner_ci(self.coeffs_hull, T) + self.coeff_rem.scale(_pow_iv(T, self.order + 1))


def _q_inverse(Q):
    """Rigorous enclosure of Q^-1 for a numerically orthogonal Q."""
    n = Q.shape[0]
    E = IArray(np.eye(n)) - imatmul(Q.T, Q)
    delta = float(np.max(E.mag().sum(axis=1))) * (1 + 4 * n * 2.0 ** -53)
    if not delta < 0.5:
        raise EnclosureFailed("orthogonal factor too far from orthogonal")
    normq = float(np.max(np.abs(Q).sum(axis=0))) * (1 + 4 * n * 2.0 ** -53)
    eps = np.nextafter(delta / (1 - delta) * normq * (1 + 1e-15), np.inf)
    return IArray(np.nextafter(Q.T - eps, -np.inf), np.nextafter(Q.T + eps, np.inf))


def rigorous_step(system, e, h, cfg):
    """Advance a FlowEnclosure by time h; returns (new enclosure, StepData)."""
    n = system.nvars
    p = cfg.order
    X = e.hull()
    D = n + 1
    cpt = e.center()
    x0 = []
    for j in range(n):
        a = CIArray.zeros((2, D))
        a[0, 0] = complex(cpt[j])
        a[1, 0] = X[j]
        a[1, j + 1] = 1.0
        x0.append(a)
    Cf = _stack(system.coeffs_interval(x0, p), axis=1)   # (p+1, n, 2, D)
    coeffs_X = Cf[:, :, 1, 0]
    E, cp1 = taylor_enclosure(system, coeffs_X, h, p)
    H = RealInterval(h)
    phi_c = _horner_ci(Cf[:, :, 0, 0], H)
    rem = cp1.scale(_pow_iv(H, p + 1))
    M = real_jacobian(_horner_ci(Cf[:, :, 1, 1:], H))

    # x(h) in y + M (C r0 + Q r) with y = phi(c) + remainder
    y = to_real(phi_c + rem)
    c1 = y.mid()
    C1 = M.mid() @ e.C
    D1 = imatmul(M, e.C) - C1
    MQ = imatmul(M, e.Q)
    s = (y - c1) + imatmul(D1, e.r0) + imatmul(M, e.tail)
    B = MQ.mid()
    rr = e.r.rad()
    if np.any(rr > 0):
        B = B * rr[None, :]
    cols = np.argsort(-np.linalg.norm(B, axis=0), kind="stable")
    Q1, _ = np.linalg.qr(B[:, cols])
    Qi = _q_inverse(Q1)
    r1 = imatmul(imatmul(Qi, MQ), e.r) + imatmul(Qi, s)
    out = FlowEnclosure(e.t + H, c1, C1, e.r0, Q1, r1, IArray.zeros(len(c1)))
    return out, StepData(e.t, h, coeffs_X, cp1, E, p)


def _rigorous_step_adaptive(system, e, h, cfg):
    while True:
        try:
            return rigorous_step(system, e, h, cfg) + (h,)
        except EnclosureFailed:
            h *= 0.5
            if abs(h) < cfg.h_min:
                raise StepUnderflow("step fell below h_min = %g" % cfg.h_min)


def integrate_rigorous(system, e, t_end, cfg, record=True):
    """Fixed-horizon rigorous integration.

    Returns the final enclosure and the tube: (t, hull) after each step.
    """
    t = 0.0
    tube = [(0.0, e.hull())]
    steps = 0
    while t < t_end:
        if steps >= cfg.max_steps:
            raise MaxStepsExceeded("rigorous integration exceeded %d steps" % cfg.max_steps)
        rest = t_end - t
        hs = rest if rest <= cfg.h_init * (1 + 1e-9) else cfg.h_init
        e, _, used = _rigorous_step_adaptive(system, e, hs, cfg)
        t = t_end if used == rest else t + used
        steps += 1
        if record:
            tube.append((t, e.hull()))
    return e, tube


def _guard_hit(Z, guard_rho):
    return guard_rho is not None and not float(Z.im.hi[0]) < -guard_rho


def _rigorous_crossing(system, e, data, section, cfg):
    """Bolzano bracket of Re x_0 = section inside one step.

    The bracket comes from bisection on the step polynomial over the hull;
    witness and crossing boxes are then recomputed from the doubleton for
    tightness.
    """
    F = system.field_interval(data.apriori)
    if not F.re.lo[0] > 0:
        raise EnclosureFailed("flow not transverse to the section on the step")
    lo, hi = 0.0, data.h
    if not data.enclose(RealInterval(hi)).re.lo[0] > section:
        raise EnclosureFailed("step does not bracket the section")
    for _ in range(cfg.bisections):
        m = 0.5 * (lo + hi)
        Em = data.enclose(RealInterval(m))
        if Em.re.hi[0] < section:
            lo = m
        elif Em.re.lo[0] > section:
            hi = m
        else:
            break
    e_lo = e if lo == 0 else rigorous_step(system, e, lo, cfg)[0]
    e_hi = rigorous_step(system, e, hi, cfg)[0]
    X_lo = e_lo.hull()
    X_hi = e_hi.hull()
    if not (X_lo.re.hi[0] < section < X_hi.re.lo[0]):
        raise EnclosureFailed("Bolzano witnesses do not straddle the section")
    Z, _ = taylor_enclosure(system, _coeffs_box(system, X_lo, cfg.order), hi - lo, cfg.order)
    return RealInterval(lo, hi), Z, X_lo, X_hi


def _rigorous_to_section(system, e, cfg, section, guard_rho, guard_action, record):
    t = 0.0
    ts, xs, ws = [t], [e.center()], [e.widths()]
    X = e.hull()
    if not X.re.hi[0] < section:
        raise ValueError("initial Re x_0 must lie below the section")
    guard = {"ok": True, "max_im": float(X.im.hi[0])}

    def watch(Z, what):
        guard["max_im"] = max(guard["max_im"], float(Z.im.hi[0]))
        if _guard_hit(Z, guard_rho):
            if guard_action == "raise":
                raise DomainGuardViolated("%s: Im U upper bound %.6g reached -%.6g"
                                          % (what, float(Z.im.hi[0]), guard_rho))
            guard["ok"] = False

    watch(X, "initial set")
    last_w = e.widths()
    for steps in range(1, cfg.max_steps + 1):
        # land the crossing strictly inside a step, never at its end
        dist = section - float(e.center()[0].real)
        hs = cfg.h_init
        if dist + 0.05 <= hs:
            hs = dist + 0.05
        elif dist < hs + 0.05:
            hs = 0.5 * dist
        e_new, data, used = _rigorous_step_adaptive(system, e, hs, cfg)
        watch(data.apriori, "step %d" % steps)
        Xn = e_new.hull()
        if Xn.re.lo[0] > section:
            T, Z, Xb, Xa = _rigorous_crossing(system, e, data, section, cfg)
            watch(Z, "crossing")
            if record:
                ts.append(float(data.t0.mid() + T.mid()))
                xs.append(Z.mid())
                ws.append(Z.width())
            traj = Trajectory(ts, xs, ws, system.names) if record else None
            out = _make_crossing(data.t0 + T, Z.boxes(), section, Xb.box(0), Xa.box(0),
                                 steps, RIGOROUS, traj, last_w.tolist())
            out.guard_ok = guard["ok"]
            out.max_im_U = guard["max_im"]
            return out
        if not Xn.re.hi[0] < section:
            raise EnclosureFailed("enclosure straddles the section after a step: Re U in [%r, %r]" % (float(Xn.re.lo[0]), float(Xn.re.hi[0])))
        e = e_new
        t += used
        last_w = e.widths()
        if record:
            ts.append(t)
            xs.append(e.center())
            ws.append(last_w)
    raise NoCrossing("no crossing within %d steps" % cfg.max_steps)


def integrate_to_section(init, cfg, system=None, section=0.0, guard_rho=None,
                         guard_action="raise", record=True):
    """Integrate until Re x_0 crosses `section`.

    init is a point state (fast mode) or a FlowEnclosure (rigorous mode).
    With guard_rho set, every enclosure (or point) must keep Im x_0 < -guard_rho;
    guard_action "raise" stops with DomainGuardViolated, "record" only flags
    the result (guard_ok, max_im_U).
    """
    if guard_action not in ("raise", "record"):
        raise ValueError("guard_action must be 'raise' or 'record'")
    cfg.validate()
    system = system or stokes_system()
    if cfg.mode == FAST:
        if isinstance(init, FlowEnclosure):
            init = init.center()
        return _fast_to_section(system, list(init), cfg, section, guard_rho, guard_action, record)
    if not isinstance(init, FlowEnclosure):
        init = FlowEnclosure.from_boxes([v if isinstance(v, ComplexBox) else ComplexBox.point(complex(v))
                                         for v in init])
    return _rigorous_to_section(system, init, cfg, section, guard_rho, guard_action, record)
