"""Interval evaluation of the contraction certificate for the unstable
inner solution, and of its tail variant.

All inputs are read as exact decimals and every constant is carried as a
RealInterval.  Verdicts only look at directed endpoints.
"""

from dataclasses import dataclass, field
from fractions import Fraction as Fr

from .complex_interval import (
    SQRT_PI,
    RealInterval,
    iv,
    iv_cbrt,
    iv_cos_small,
    iv_exp,
    iv_sin_small,
    iv_sqrt,
)


class CertificateError(Exception):
    pass


class GateFailed(CertificateError):
    def __init__(self, name, value=None):
        self.name = name
        self.value = value
        super().__init__("gate %s failed (%r)" % (name, value))


class OutOfRange(CertificateError, ValueError):
    pass


class ExponentTooSmall(CertificateError, ValueError):
    pass


class DenominatorNonpositive(GateFailed):
    pass


# Gamma on [1, 2) at multiples of 1/12, 36 significant digits (rounded).
# Checked against mpmath at 40 digits in the test suite.
_GAMMA_TABLE = {
    Fr(13, 12): "0.958285682172832555323800821036600082",
    Fr(7, 6): "0.927719333630039200708349482534621019",
    Fr(5, 4): "0.906402477055477077982671288966918001",
    Fr(4, 3): "0.892979511569249211218564313658225881",
    Fr(17, 12): "0.886482107750925821488449349726788896",
    Fr(19, 12): "0.891747031634148086277593220566394988",
    Fr(5, 3): "0.902745292950933611296858685436342524",
    Fr(7, 4): "0.919062526848883233846823727522167895",
    Fr(11, 6): "0.940655858256771634384084241882368344",
    Fr(23, 12): "0.967584351079010777120893027673073692",
}
_TABLE_SLACK = Fr(1, 10 ** 35)


def _as_fraction(x):
    if isinstance(x, Fr):
        return x
    if isinstance(x, int):
        return Fr(x)
    if isinstance(x, float):
        return Fr(repr(x))
    return Fr(x)


def gamma_enclosure(x):
    """Gamma(x) for x > 0 a multiple of 1/12."""
    x = _as_fraction(x)
    if x <= 0 or (x * 12).denominator != 1:
        raise ValueError("Gamma tabulated only at positive multiples of 1/12, got %s" % x)
    shift = []
    while x >= 2:
        x -= 1
        shift.append(x)
    below = []
    while x < 1:
        below.append(x)
        x += 1
    if x == 1:
        g = RealInterval(1.0)
    elif x == Fr(3, 2):
        g = SQRT_PI / 2
    else:
        c = Fr(_GAMMA_TABLE[x])
        lo = RealInterval.exact(c - _TABLE_SLACK).lo
        hi = RealInterval.exact(c + _TABLE_SLACK).hi
        g = RealInterval(lo, hi)
    for s in reversed(shift):
        g = g * iv(s)
    for b in below:
        g = g / iv(b)
    return g


def g_norm_constant(etaexp):
    """sqrt(pi) Gamma((eta-1)/2) / (2 Gamma(eta/2)) for eta a multiple of 1/6."""
    e = _as_fraction(etaexp)
    if e <= 1:
        raise ExponentTooSmall("exponent must exceed 1, got %s" % e)
    return SQRT_PI * gamma_enclosure((e - 1) / 2) / (2 * gamma_enclosure(e / 2))


def _num(x):
    return x if isinstance(x, RealInterval) else iv(_as_fraction(x))


@dataclass(frozen=True)
class CertificateParams:
    kappa: float = 6.24
    gamma: float = 0.5
    rho1: float = 38.0
    rho2: float = 1.9
    eta: float = None

    def validate(self):
        if not self.kappa >= 3:
            raise OutOfRange("kappa must be >= 3")
        g = _num(self.gamma)
        # gamma < arctan(sqrt(3)/2)  <=>  4 sin^2 < 3 cos^2 on (0, pi/2)
        if not (g.lo > 0 and g.hi < 1.0):
            raise OutOfRange("gamma must lie in (0, arctan(sqrt(3)/2))")
        s, c = iv_sin_small(g), iv_cos_small(g)
        if not (4 * s.sqr()).hi < (3 * c.sqr()).lo:
            raise OutOfRange("gamma must lie in (0, arctan(sqrt(3)/2))")
        if not 1 < self.rho1 < 60:
            raise OutOfRange("rho1 must lie in (1, 60)")
        if not 1 < self.rho2 < 3:
            raise OutOfRange("rho2 must lie in (1, 3)")
        if self.eta is not None and not self.eta >= self.kappa:
            raise OutOfRange("eta must be >= kappa")

    @property
    def scale(self):
        """The offset the estimates are evaluated at (eta in the tail variant)."""
        return self.kappa if self.eta is None else self.eta


@dataclass(frozen=True)
class DomainSpec:
    kappa: float
    gamma: float

    @property
    def rho_reach(self):
        return _num(self.kappa) / iv_cos_small(_num(self.gamma))


def _gate(name, ok, value=None, cls=GateFailed):
    if not ok:
        raise cls(name, value)


def zeta_cascade(kappa):
    """(zeta_0..zeta_4, C1_0, C23_0)."""
    k = _num(kappa)
    k2 = k.sqr()
    q = Fr(16, 81) / k2
    sp = iv_sqrt(1 + q)
    _gate("16/(81 kappa^2) < 1", q.hi < 1, q, DenominatorNonpositive)
    sm = iv_sqrt(1 - q)
    z0 = q * (1 + 3 * sp)
    z1 = Fr(16, 81) * (1 + 3 * sp)
    z2 = q * (6 * sp + 8 + Fr(128, 81) / k2)
    z3 = Fr(16, 81) * (Fr(3, 2) / sm + 6 * sp + 6 + Fr(128, 81) / k2)
    k4 = k2.sqr()
    z4 = (Fr(32, 81) / k2) * (10 + Fr(256, 81) / k2 + iv(Fr(2 ** 9, 3 ** 7)) / k4
                             + sp * (12 + Fr(368, 81) / k2 + iv(Fr(2 ** 9 * 7, 3 ** 8)) / k4))
    _gate("zeta0 < 2", z0.hi < 2, z0, DenominatorNonpositive)
    _gate("zeta2 < 8", z2.hi < 8, z2, DenominatorNonpositive)
    _gate("zeta4 < 16", z4.hi < 16, z4, DenominatorNonpositive)
    c23 = z1 / (2 - z0)
    c1 = z3 / (8 - z2) + Fr(16, 81) / (2 - z0) + q * z3 / (16 - z4)
    return (z0, z1, z2, z3, z4), c1, c23


def alpha_beta0(kappa):
    k = _num(kappa)
    k2 = k.sqr()
    _, c1, c23 = zeta_cascade(k)
    ga = 32 * SQRT_PI * gamma_enclosure(Fr(7, 3)) / (729 * gamma_enclosure(Fr(17, 6)))
    a0 = Fr(8, 243) + ga * c1 / k2
    b_inf = Fr(2, 9) + 14 * SQRT_PI * gamma_enclosure(Fr(2, 3)) / (81 * gamma_enclosure(Fr(7, 6)))
    b1 = SQRT_PI * gamma_enclosure(Fr(7, 6)) / (9 * gamma_enclosure(Fr(5, 3)))
    b2 = 2 * SQRT_PI * gamma_enclosure(Fr(5, 3)) / (81 * gamma_enclosure(Fr(13, 6)))
    b0 = b_inf + (b1 / k + b2 / k2) * c23
    return a0, b0


def beta_over_alpha_limit():
    """(243/8) (2/9 + 14 sqrt(pi) Gamma(2/3) / (81 Gamma(7/6)))."""
    b_inf = Fr(2, 9) + 14 * SQRT_PI * gamma_enclosure(Fr(2, 3)) / (81 * gamma_enclosure(Fr(7, 6)))
    return Fr(243, 8) * b_inf


def xi_eta_nu_cascade(params, alpha0=None, beta0=None):
    """Bounds on J, K and the remainder derivatives over the ball."""
    k = _num(params.scale)
    if alpha0 is None:
        alpha0, beta0 = alpha_beta0(k)
    a = _num(params.rho1) * alpha0
    b = _num(params.rho2) * beta0
    k2 = k.sqr()
    k3 = k2 * k
    k4 = k2.sqr()
    xi0 = (16 + 216 * b) / 81 + 16 * b / (27 * k) + (16 * a + 48 * b.sqr()) / (27 * k2) \
        + 8 * a * b / (9 * k3) + 4 * a.sqr() / (9 * k4)
    xi1 = (32 + 144 * b) / 81 + 80 * b / (81 * k) + (64 * a + 192 * b.sqr()) / (81 * k2) \
        + 8 * a * b / (9 * k3) + 8 * a.sqr() / (27 * k4)
    xi2 = Fr(16, 27) + 8 * b / (9 * k) + 8 * a / (9 * k2)
    xi3 = Fr(4, 3) + Fr(8, 27) / k + 16 * b / (9 * k2) + 4 * a / (9 * k3)
    xi4 = Fr(64, 81) + 8 * b / (9 * k) + 16 * a / (27 * k2)
    xi5 = Fr(8, 9) + Fr(40, 81) / k + 64 * b / (27 * k2) + 4 * a / (9 * k3)
    xi = (xi0, xi1, xi2, xi3, xi4, xi5)

    r = xi0 / k2
    _gate("xi0/kappa^2 < 1", r.hi < 1, r)
    e0 = iv_sqrt(1 - r)
    half = xi0 / (2 * e0 * k2)
    _gate("xi0/(2 eta0 kappa^2) < 2", half.hi < 2, half)
    e03 = e0 * e0 * e0
    e05 = e03 * e0 * e0
    d1 = 4 - xi0 / (e0 * k2)
    _gate("4 - xi0/(eta0 kappa^2) > 0", d1.lo > 0, d1)
    e1 = 4 * xi0 / (9 * e0 * d1) + xi1 / (6 * e03) + a.sqr() / (2 * k2)
    e2 = Fr(3, 2) * a + xi2 / (6 * e03)
    e3 = xi3 / (6 * e03)
    e4 = a + xi2 / (9 * e03) + xi4 / (6 * e03) + xi1 * xi2 / (4 * e05 * k2)
    e5 = xi3 / (9 * e03) + xi5 / (6 * e03) + xi1 * xi3 / (4 * e05 * k2)
    e6 = Fr(3, 2) + 4 / (27 * e03 * k2) + xi2.sqr() / (4 * e05 * k4)
    e7 = 2 / (27 * e03) + xi2 * xi3 / (4 * e05 * k)
    e8 = 5 / (27 * e03) + xi3.sqr() / (4 * e05)
    e9 = 1 / (9 * e03) + xi3.sqr() / (4 * e05)
    et = (e0, e1, e2, e3, e4, e5, e6, e7, e8, e9)

    r2 = e2 / k2
    _gate("eta2/kappa^2 < 1", r2.hi < 1, r2)
    n0 = (1 - r2).sqr()
    n1 = e4 / n0 + e2 * e4 / (n0 * k2) + e1 * e6 / n0
    n2 = e5 / n0 + e2 * e5 / (n0 * k2) + e1 * e7 / (n0 * k3)
    n3 = e7 / (n0 * k) + e2 * e7 / (n0 * k3) + b * e6 / n0 + 2 * b * e2 * e6 / (n0 * k2) + e3 * e6 / n0
    n4 = (e8 / n0 + e2 * e8 / (n0 * k2) + e2 / n0 + e2.sqr() / (n0 * k2)
          + b * e7 / (n0 * k) + 2 * b * e2 * e7 / (n0 * k3) + e3 * e7 / (n0 * k))
    n5 = (e9 / n0 + e2 * e9 / (n0 * k2)
          + b * e7 / (n0 * k) + 2 * b * e2 * e7 / (n0 * k3) + e3 * e7 / (n0 * k))
    nu = (n0, n1, n2, n3, n4, n5)
    return xi, et, nu


def sector_factor(gamma):
    """1 / (sin g (cos g)^(4/3))."""
    g = _num(gamma)
    c = iv_cos_small(g)
    return 1 / (iv_sin_small(g) * iv_cbrt(c.sqr().sqr()))


def lipschitz_L(params, nu=None):
    """(nutilde_1..nutilde_5, L)."""
    if nu is None:
        nu = xi_eta_nu_cascade(params)[2]
    k2 = _num(params.scale).sqr()
    gfac = g_norm_constant(Fr(11, 3))
    f = sector_factor(params.gamma)
    nt = (gfac * nu[1], gfac * nu[2], f * nu[3], f * nu[4], f * nu[5])
    c1 = nt[0] / k2 + 2 * nt[1]
    c2 = (nt[2] + nt[3] + nt[4]) / k2
    L = RealInterval(max(c1.lo, c2.lo), max(c1.hi, c2.hi))
    return nt, L


def wellposedness(params, alpha0=None, beta0=None, nutilde=None):
    k = _num(params.scale)
    if alpha0 is None:
        alpha0, beta0 = alpha_beta0(k)
    if nutilde is None:
        nu = xi_eta_nu_cascade(params, alpha0, beta0)[2]
        nutilde = lipschitz_L(params, nu)[0]
    k2 = k.sqr()
    r1, r2 = _num(params.rho1), _num(params.rho2)
    nt = nutilde
    g1 = (r1 - 1 - nt[0] * r1 / k2) * alpha0 - 2 * nt[1] * r2 * beta0
    g2 = (r2 - 1 - (nt[3] + nt[4]) * r2 / k2) * beta0 - nt[2] * r1 * alpha0 / k2
    return g1, g2


@dataclass
class CertificateReport:
    params: CertificateParams
    alpha0: RealInterval = None
    beta0: RealInterval = None
    zeta: tuple = None
    C1_0: RealInterval = None
    C23_0: RealInterval = None
    xi: tuple = None
    etac: tuple = None
    nu: tuple = None
    nutilde: tuple = None
    L: RealInterval = None
    g1: RealInterval = None
    g2: RealInterval = None
    b1_tilde: RealInterval = None
    b2_tilde: RealInterval = None
    verdict: str = "Failed"
    reasons: list = field(default_factory=list)
    failed_gate: str = None

    @property
    def certified(self):
        return self.verdict == "Certified"

    def named_values(self):
        """Flat (name, RealInterval) pairs in a fixed order."""
        out = []
        for name in ("alpha0", "beta0", "C1_0", "C23_0", "L", "g1", "g2", "b1_tilde", "b2_tilde"):
            v = getattr(self, name)
            if v is not None:
                out.append((name, v))
        for name, start in (("zeta", 0), ("xi", 0), ("etac", 0), ("nu", 0), ("nutilde", 1)):
            seq = getattr(self, name)
            if seq is not None:
                for j, v in enumerate(seq):
                    out.append(("%s%d" % (name, j + start), v))
        return out


def certify(params):
    """Evaluate the whole cascade; gate failures give a Failed report."""
    params.validate()
    rep = CertificateReport(params=params)
    k = _num(params.scale)
    try:
        rep.zeta, rep.C1_0, rep.C23_0 = zeta_cascade(k)
        rep.alpha0, rep.beta0 = alpha_beta0(k)
        rep.b1_tilde = _num(params.rho1) * rep.alpha0
        rep.b2_tilde = _num(params.rho2) * rep.beta0
        rep.xi, rep.etac, rep.nu = xi_eta_nu_cascade(params, rep.alpha0, rep.beta0)
        rep.nutilde, rep.L = lipschitz_L(params, rep.nu)
        rep.g1, rep.g2 = wellposedness(params, rep.alpha0, rep.beta0, rep.nutilde)
    except GateFailed as exc:
        rep.failed_gate = exc.name
        rep.reasons.append("gate " + exc.name)
        rep.verdict = "Failed(gate %s)" % exc.name
        return rep
    if not rep.L.hi < 1:
        rep.reasons.append("L >= 1")
    if not rep.g1.lo >= 0:
        rep.reasons.append("g1 < 0")
    if not rep.g2.lo >= 0:
        rep.reasons.append("g2 < 0")
    rep.verdict = "Certified" if not rep.reasons else "Failed(%s)" % ", ".join(rep.reasons)
    return rep


def scan_rho2(eta=1000, gamma=0.5, ratio=20, step=Fr(1, 100), kappa=6.24):
    """Certify rho2 = 1 + step, 1 + 2 step, ... < 3 with rho1 = ratio * rho2.

    Returns (best, all_reports); best minimises b2_tilde among certified
    reports (b1_tilde moves the same way), or is None.
    """
    step = _as_fraction(step)
    reports = []
    r2 = 1 + step
    while r2 < 3:
        r1 = ratio * r2
        if r1 < 60:
            p = CertificateParams(kappa=kappa, gamma=gamma, rho1=float(r1), rho2=float(r2), eta=eta)
            reports.append(certify(p))
        r2 += step
    good = [r for r in reports if r.certified]
    best = min(good, key=lambda r: r.b2_tilde.hi) if good else None
    return best, reports


def e_rho(rho):
    """Enclosure of exp(rho)."""
    return iv_exp(_num(rho))


__all__ = [
    "CertificateParams", "CertificateReport", "DomainSpec", "GateFailed", "OutOfRange",
    "ExponentTooSmall", "DenominatorNonpositive", "gamma_enclosure", "g_norm_constant",
    "zeta_cascade", "alpha_beta0", "xi_eta_nu_cascade", "lipschitz_L", "wellposedness",
    "certify", "scan_rho2", "sector_factor", "beta_over_alpha_limit", "e_rho",
]
