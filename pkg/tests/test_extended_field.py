import random

import pytest

from helpers import field_consistency, states, symmetry_residual
from stokescert.complex_interval import ComplexBox, RealInterval, ZeroInBox, cbox_inv_pow
from stokescert.extended_field import (
    ExtendedState,
    apply_S,
    constraint_defects,
    eval_F,
    eval_Jtilde,
    eval_Ktilde,
    lift,
    stable_from_unstable,
)
from stokescert.stokes_cli import cmd_initial_set
from stokescert.inner_system import asymptotic_seed, eval_field, eval_J, eval_K, eval_K_derivs
from stokescert.taylor_integrator import IntegratorConfig, integrate_fast, stokes_system

U0 = -2000 - 7.12j
Z0 = (0j, 0j, 0j)


def P(z):
    return ComplexBox.point(z)


class TestLift:
    def test_tail_point(self):
        s = lift(U0, Z0)
        assert abs(s.A - 1) < 1e-7
        assert abs(abs(s.B) - abs(U0) ** (-1 / 3)) < 1e-16

    def test_box_round_trip(self):
        s = lift(P(U0), tuple(P(z) for z in Z0))
        assert cbox_inv_pow(s.B, 3).contains(U0)
        assert (s.B * s.B * s.B).contains(1 / U0)

    def test_ball_box(self):
        # the certified tail ball at U0
        boxes, info = cmd_initial_set()
        s = lift(boxes[0], tuple(boxes[1:4]))
        assert s.A.width() <= 1e-6
        r1, r2 = info["W_radius"], info["XY_radius"]
        assert s.A.contains(lift(U0, (r1 / 2, r2 / 3 - 1j * r2 / 2, -1j * r2)).A)


class TestKtilde:
    def test_zero(self):
        for B in (0.3 - 0.1j, 1j, 2.0):
            assert eval_Ktilde(0, 1, B).K == 0

    def test_dA(self):
        B = 0.4 + 0.2j
        assert eval_Ktilde(0.1, 1.01, B).A == -B * B / 3

    def test_matches_K(self):
        for U, Z in states(61, 100):
            s = lift(U, Z)
            Kt = eval_Ktilde(s.W, s.A, s.B).K
            assert abs(Kt - eval_K(U, Z)) <= 1e-12

    def test_zero_B_box(self):
        with pytest.raises(ZeroInBox):
            eval_Ktilde(P(0), P(1), ComplexBox.around(0, 0.1))


class TestJtilde:
    def test_constant_term(self):
        B = 0.3 - 0.2j
        assert abs(eval_Jtilde(0, 0, 0, B).J - 16 / 81 * B ** 6) < 1e-17

    def test_matches_J(self):
        for U, Z in states(62, 100):
            s = lift(U, Z)
            a, b = eval_Jtilde(*Z, s.B).J, eval_J(U, Z)
            assert abs(a - b) <= 1e-12 * max(abs(b), 1.0)

    def test_dX_central_difference(self):
        W, X, Y, B = 1e-3, 2e-3j, -1e-3, 0.3 - 0.2j
        h = 1e-6
        fd = (eval_Jtilde(W, X + h, Y, B).J - eval_Jtilde(W, X - h, Y, B).J) / (2 * h)
        assert abs(eval_Jtilde(W, X, Y, B).X - fd) <= 1e-7

    def test_partials_central_difference(self):
        W, X, Y, B = 1e-3 + 1e-4j, 2e-3j, -1e-3, 0.3 - 0.2j
        h = 1e-6
        parts = eval_Jtilde(W, X, Y, B)
        for k, name in enumerate("WXYB"):
            a = [W, X, Y, B]
            b = list(a)
            a[k] += h
            b[k] -= h
            fd = (eval_Jtilde(*a).J - eval_Jtilde(*b).J) / (2 * h)
            assert abs(getattr(parts, name) - fd) <= 1e-7


class TestF:
    def test_fixed_point_symmetry(self):
        # p = S(p): U = i t, W real, X and Y imaginary, A real, B imaginary
        for rho in (7.12, 30.0, 500.0):
            U = -1j * rho
            B = -1j * rho ** (-1 / 3)
            p = ExtendedState(U, 1e-5, 2e-3j, -1e-3j, 0.999, B)
            assert all(abs(a - b) == 0 for a, b in zip(apply_S(p), p))
            F = eval_F(p)
            assert max(abs(a + b) for a, b in zip(F, apply_S(F))) <= 1e-13

    def test_consistency_absolute(self):
        for U, Z in states(63, 100):
            F = eval_F(lift(U, Z))
            f = eval_field(U, Z)
            for a, b in zip((F.dU, F.dW, F.dX, F.dY), (f.dU,) + tuple(f.dZ)):
                assert abs(a - b) <= 1e-12

    def test_consistency_relative(self):
        exact, rounded = field_consistency(states(64, 300))
        assert exact <= 1e-11
        # the rounded lift stays within its input-error scale
        assert rounded <= 1e-9

    def test_dU_at_zero(self):
        for U in (-7.12j, -30 - 8j, -400 + 50j):
            s = lift(U, Z0)
            J0 = 16 / (81 * U * U)
            assert abs(eval_F(s).dU - (1 - J0 / (2 * (1 + J0) ** 1.5))) <= 1e-15
            assert abs(eval_F(s).dU - (1 + eval_K_derivs(U, Z0).W)) <= 1e-15

    def test_dB_chain(self):
        for U, Z in states(65, 20):
            s = lift(U, Z)
            F = eval_F(s)
            assert abs(F.dB + s.B ** 4 * F.dU / 3) <= 1e-15 * abs(F.dB)

    def test_U_independence(self):
        rng = random.Random(66)
        for U, Z in states(67, 50):
            s = lift(U, Z)
            other = ExtendedState(complex(rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3)), *list(s)[1:])
            assert tuple(eval_F(s)) == tuple(eval_F(other))

    def test_zero_B(self):
        with pytest.raises(ZeroInBox):
            eval_F(ExtendedState(*(P(v) for v in (1j, 0, 0, 0, 1)), ComplexBox.around(0, 0.1)))

    def test_box_encloses_point(self):
        for U, Z in states(68, 200):
            s = lift(U, Z)
            Fb = eval_F(ExtendedState(*(P(complex(v)) for v in s)))
            assert all(b.contains(p) for b, p in zip(Fb, eval_F(s)))


class TestS:
    def test_involution(self):
        for U, Z in states(69, 20):
            s = lift(U, Z)
            assert tuple(apply_S(apply_S(s))) == tuple(s)

    def test_imaginary_axis(self):
        s = lift(-7.12j, Z0)
        assert apply_S(s).U == s.U

    def test_residual(self):
        assert symmetry_residual(states(70, 1000)) <= 1e-12

    def test_box(self):
        s = ExtendedState(*(ComplexBox.around(v, 1e-3) for v in (-1 - 7j, 1e-4, 2e-3j, 1e-3, 1, 0.2 + 0.3j)))
        S = apply_S(s)
        assert S.U.contains(1 - 7j) and S.B.contains(-0.2 + 0.3j)


class TestStableFromUnstable:
    def test_imaginary(self):
        d, b = stable_from_unstable(0.3j)
        assert d == 0 and b == 0

    def test_window_midpoint(self):
        d, b = stable_from_unstable(-0.000625 + 0.01j)
        assert abs(b - 0.00125) < 1e-18

    def test_imaginary_perturbation(self):
        base = stable_from_unstable(-0.0006 + 0.2j)[1]
        for t in (-1.0, 0.5, 1e3):
            assert stable_from_unstable(-0.0006 + 0.2j + 1j * t)[1] == base

    def test_box(self):
        d, b = stable_from_unstable(ComplexBox(RealInterval(-0.00075, -0.0005), RealInterval(0.1)))
        assert d.contains(-0.0015) and b.lo <= 0.001


class TestDrift:
    @pytest.mark.parametrize("U", [U0, -60 - 20j])
    def test_constraint_drift(self, U):
        tol = 1e-15
        Z = asymptotic_seed(U, 2) if U.real <= -1000 else (1e-6, 2e-4j, -1e-4j)
        tr = integrate_fast(stokes_system(), list(lift(U, Z)), 100.0, IntegratorConfig(tol=tol))
        d = [constraint_defects(ExtendedState(*x)) for x in tr.xs]
        grow_A = max(a for a, _ in d) - d[0][0]
        grow_B = max(b for _, b in d) - d[0][1]
        assert grow_A <= 10 * tol and grow_B <= 10 * tol
