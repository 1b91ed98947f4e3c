import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blowuplab import Params, compute_constants, lifespan_bound, make_grid
from blowuplab.constants import (
    branch_point,
    constant_C1,
    constant_C2,
    constant_Cgn,
    constant_K,
    constant_K1,
    constant_K2,
    constant_sigma,
    decay_exponent,
    interpolation_exponents,
    lifespan_ode_oracle,
    q_slope_coefficient,
    sandwich_coefficient,
    sobolev_ratio,
    sobolev_sharpness_probe,
    upper_bound_exponent
)
from blowuplab.exceptions import ProgrammingError


def test_exponents():
    """alpha, beta, k and c_gamma on both sides of the branch point
    分岐点の両側での指数 alpha, beta, k, c_gamma のテスト
    """
    assert branch_point(3) == pytest.approx(4.0 / 3.0)
    assert decay_exponent(2.0, 3) == pytest.approx(1.0 / 3.0)
    assert upper_bound_exponent(1.25, 3) == pytest.approx(0.375)
    assert q_slope_coefficient(1.25, 3) == pytest.approx(0.625)
    assert upper_bound_exponent(2.0, 3) == 0.5
    assert q_slope_coefficient(2.0, 3) == 0.5
    assert sandwich_coefficient(1.25, 3) == 1.0
    assert sandwich_coefficient(2.0, 3) == pytest.approx(1.5)


def test_sobolev_constant():
    """K2 = (Γ(n)/Γ(n/2))^{2/n} / (pi n (n-2)), about 0.18255 for n = 3
    ソボレフ最良定数のテスト
    """
    assert constant_K2(3) == pytest.approx(0.18255, abs=1e-5)
    expected = (math.gamma(4) / math.gamma(2)) ** 0.5 / (math.pi * 8)
    assert constant_K2(4) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(ProgrammingError):
        constant_K2(2)


def test_sobolev_probe_is_sharp():
    """The extremal profile attains K2 on R^3 and approaches it from above on balls
    極値関数が R^3 で K2 に到達し、有限球では上から近づくことのテスト
    """
    assert sobolev_sharpness_probe(3) == pytest.approx(1.0, abs=1e-6)
    small, large = sobolev_sharpness_probe(3, 1e2), sobolev_sharpness_probe(3, 1e3)
    assert small > large > 1.0


def test_sobolev_ratio_on_grid():
    """Zero velocity has ratio 0; a decaying profile stays below 1
    ゼロ速度の比は 0、減衰する速度分布では 1 未満であることのテスト
    """
    grid = make_grid(3, 3.0, 24)
    assert sobolev_ratio(np.zeros((3,) + grid.shape), grid) == 0.0
    u = np.zeros((3,) + grid.shape)
    u[0] = np.exp(-grid.radius_sq / (2.0 * 0.8 ** 2))
    assert 0.0 < sobolev_ratio(u, grid) < 1.0


def test_interpolation_constant():
    """C_gn(2, 3) and the interpolation exponents
    補間定数と指数のテスト
    """
    assert constant_Cgn(2.0, 3) == pytest.approx(1.9796, abs=1e-4)
    a, b = interpolation_exponents(2.0, 3)
    assert a == pytest.approx(4.0 / 7.0)
    assert b == pytest.approx(3.0 / 7.0)
    with pytest.raises(ProgrammingError):
        constant_Cgn(1.0, 3)


def test_K1_unit_normalization():
    """gamma = 2, A = 1 gives K1 = m^{2/3}
    gamma = 2, A = 1 で K1 = m^{2/3} になることのテスト
    """
    assert constant_K1(1.0, 1.0, 2.0, 3) == pytest.approx(1.0)
    assert constant_K1(8.0, 1.0, 2.0, 3) == pytest.approx(4.0)
    with pytest.raises(ProgrammingError):
        constant_K1(1.0, 1.0, 1.1, 3)
    with pytest.raises(ProgrammingError):
        constant_K1(0.0, 1.0, 2.0, 3)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(min_value=0.1, max_value=10.0),
    st.floats(min_value=0.1, max_value=10.0),
    st.floats(min_value=1.2, max_value=3.0),
)
def test_K1_scaling(m, A, gamma):
    """K1 follows its closed form under mass scaling
    質量のスケーリングで K1 が閉形式どおりに変化することのテスト
    """
    c = 2.0
    ratio = constant_K1(c * m, A, gamma, 3) / constant_K1(m, A, gamma, 3)
    expected = c ** (5.0 / 6.0) * c ** (-1.0 / (6.0 * (gamma - 1.0)))
    assert ratio == pytest.approx(expected, rel=1e-12)


def test_C1_and_C2():
    """C1 formula and the continuity of C2 at the branch point
    C1 の式と分岐点における C2 の連続性のテスト
    """
    assert constant_C1(1.0, 2.0, 3, 1.0) == pytest.approx(constant_Cgn(2.0, 3) ** -3.5, rel=1e-14)
    below = constant_C2(4.0 / 3.0 - 1e-9, 2.0, 3.0, 3)
    above = constant_C2(4.0 / 3.0 + 1e-9, 2.0, 3.0, 3)
    assert below == pytest.approx(above, rel=1e-7)
    assert constant_C2(2.0, 4.0, 4.0, 3) == pytest.approx(0.5)
    with pytest.raises(ProgrammingError):
        constant_C2(2.0, 0.0, 1.0, 3)


def test_K_and_sigma():
    """K needs a nonzero momentum; sigma equals mu in the admissible range
    K には非ゼロの運動量が必要で、sigma は許容範囲で mu に等しいことのテスト
    """
    assert constant_K([3.0, 4.0, 0.0], 1.0, 0.5) == pytest.approx(50.0)
    with pytest.raises(ProgrammingError):
        constant_K([0.0, 0.0, 0.0], 1.0, 1.0)
    assert constant_sigma(1.0, 0.0, 3) == 1.0
    assert constant_sigma(0.5, -0.3, 3) == 0.5
    with pytest.raises(ProgrammingError):
        constant_sigma(1.0, -1.0, 3)


def test_lifespan_bound():
    """T_star = E0^{1+alpha} / (sigma K) with monotone dependence on its inputs
    寿命上界の値と単調性のテスト
    """
    assert lifespan_bound(1.0, 1.0, 1.0, 2.0, 3) == pytest.approx(1.0)
    assert lifespan_bound(8.0, 1.0, 1.0, 2.0, 3) == pytest.approx(16.0)
    sweep = [lifespan_bound(1.0, sigma, 1.0, 2.0, 3) for sigma in (0.5, 1.0, 2.0)]
    assert sweep[0] > sweep[1] > sweep[2]
    sweep = [lifespan_bound(E0, 1.0, 1.0, 2.0, 3) for E0 in (0.5, 1.0, 2.0)]
    assert sweep[0] < sweep[1] < sweep[2]
    with pytest.raises(ProgrammingError):
        lifespan_bound(1.0, 1.0, 0.0, 2.0, 3)


@settings(max_examples=20, deadline=None)
@given(
    st.floats(min_value=0.1, max_value=10.0),
    st.floats(min_value=0.1, max_value=10.0),
    st.floats(min_value=1.2, max_value=3.0),
)
def test_lifespan_ode_oracle(E0, rate, gamma):
    """The integrated ODE bound never exceeds T_star and matches its exact value
    ODE の消滅時刻が T_star を超えず厳密値と一致することのテスト
    """
    T_star = lifespan_bound(E0, rate, 1.0, gamma, 3)
    T_ode = lifespan_ode_oracle(E0, rate, 1.0, gamma, 3)
    alpha = decay_exponent(gamma, 3)
    assert T_ode <= T_star
    assert T_ode == pytest.approx(T_star / (1.0 + alpha), rel=1e-6)


@pytest.mark.parametrize("E0, rate, gamma", [(1.0, 1.0, 2.0), (0.1, 10.0, 1.2), (10.0, 0.1, 3.0), (3.0, 0.5, 1.25)])
def test_lifespan_ode_oracle_reaches_extinction(E0, rate, gamma):
    """The integration reaches E = 0 even where E^{-alpha} is singular
    E^{-alpha} が特異な点まで積分が到達することのテスト
    """
    alpha = decay_exponent(gamma, 3)
    exact = E0 ** (1.0 + alpha) / ((1.0 + alpha) * rate)
    assert lifespan_ode_oracle(E0, rate, 1.0, gamma, 3) == pytest.approx(exact, rel=1e-6)


def test_compute_constants_isolates_failures():
    """A zero momentum leaves K and T_star undefined without hiding other constants
    運動量ゼロで K と T_star のみが未定義になることのテスト
    """
    params = Params(A=1.0, gamma=2.0, mu=1.0)
    c = compute_constants(params, 1.0, [0.0, 0.0, 0.0], 1.0, 1.0, 0.0, 4.0)
    assert c.K is None and c.T_star is None
    assert "K" in c.errors and "T_star" in c.errors
    assert c.K1 == pytest.approx(1.0)
    assert c.sigma == 1.0
    assert c.C2 == pytest.approx(1.0)

    c = compute_constants(params, 1.0, [1.0, 0.0, 0.0], 1.0, 1.0, 0.0, 4.0)
    assert c.K == pytest.approx(1.0 / constant_K2(3))
    assert c.T_star == pytest.approx(constant_K2(3))
    assert c.envelope_power == pytest.approx(1.0 / 3.0)
    assert c.L_env is not None and c.L_env > 0
    assert not c.errors
