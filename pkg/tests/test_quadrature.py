import mpmath
import pytest

from stokescert.quadrature import QuadratureFailed, constant_A, integrand


def test_encloses_reference():
    A, n, widths = constant_A()
    assert A.contains(0.177744) and A.width() <= 1e-5


def test_against_mpmath():
    A, _, _ = constant_A()
    with mpmath.workdps(30):
        xs = (mpmath.sqrt(2) - 1) / 2
        c = (1 + mpmath.sqrt(2)) / 2
        f = lambda x: 2 / (1 - x) * mpmath.sqrt(x / (3 * (x + 1) * (1 - 4 * x - 4 * x * x)))
        # x = u^2 near 0, x = x* - v^2 near x*, where 1 - 4x - 4x^2 = 4 v^2 (x + c)
        left = mpmath.quad(lambda u: 2 * u * f(u * u), [0, mpmath.sqrt(xs / 2)])
        g = lambda x: 2 / (1 - x) * mpmath.sqrt(x / (3 * (x + 1) * (x + c)))
        right = mpmath.quad(lambda v: g(xs - v * v), [0, mpmath.sqrt(xs / 2)])
        ref = left + right
    assert A.lo <= ref <= A.hi


def test_widths_halve():
    _, _, widths = constant_A(target_width=1e-6)
    for a, b in zip(widths, widths[1:]):
        assert b < 0.6 * a


def test_budget():
    with pytest.raises(QuadratureFailed):
        constant_A(target_width=1e-12, n_max=2 ** 12)


def test_integrand_endpoints():
    assert integrand(0) == 0
    assert integrand(0.2) > integrand(0.1) > 0
