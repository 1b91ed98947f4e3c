'''constants.py
Closed-form constants of the blow-up estimates and the lifespan bound.
爆発評価に現れる定数と寿命上界を計算します。

Every function checks its own preconditions and raises ProgrammingError when
they fail, so a report can list each constant's failure separately.
'''

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from .exceptions import OperationalError, ProgrammingError
from .grid import FieldOps, Grid, Params

logger = logging.getLogger(__name__)


def _norm(P) -> float:
    return float(np.linalg.norm(np.atleast_1d(np.asarray(P, dtype=np.float64))))


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not (np.isfinite(value) and value > 0):
            raise ProgrammingError(f"{name} must be positive, got {value}")


def _require_dimension(n: int) -> None:
    if int(n) != n or n < 3:
        raise ProgrammingError(f"n must be an integer >= 3, got {n}")


def decay_exponent(gamma: float, n: int = 3) -> float:
    """alpha = (n-2)/(n(gamma-1)), the power of E_i in the gradient lower bound"""
    return (n - 2.0) / (n * (gamma - 1.0))


def branch_point(n: int = 3) -> float:
    """gamma = 1 + 1/n separates the two regimes of the Q chain (4/3 for n = 3)"""
    return 1.0 + 1.0 / n


def upper_bound_exponent(gamma: float, n: int = 3) -> float:
    """beta in E_i + E_m <= C2 / G^beta: n(gamma-1)/2 up to the branch point, 1/2 beyond it"""
    return n * (gamma - 1.0) / 2.0 if gamma <= branch_point(n) else 0.5


def q_slope_coefficient(gamma: float, n: int = 3) -> float:
    """k in d log Q <= k d log G: (2 - n(gamma-1))/2 up to the branch point, 1/2 beyond it"""
    return 1.0 - upper_bound_exponent(gamma, n)


def sandwich_coefficient(gamma: float, n: int = 3) -> float:
    """c_gamma of the upper G bound: max(1, n(gamma-1)/2)"""
    return max(1.0, n * (gamma - 1.0) / 2.0)


def constant_K1(m: float, A: float, gamma: float, n: int = 3) -> float:
    """Hölder-Jensen constant bounding |P| by E_i and the critical norm of u
    |P| を E_i と u の臨界ノルムで抑えるヘルダー・イェンセン定数

    K1 = m^{(n+2)/(2n)} ((gamma-1)/(m A))^{(n-2)/(2n(gamma-1))}

    Args:
        m (float): Mass
                   質量
        A (float): Pressure coefficient
                   圧力係数
        gamma (float): Adiabatic exponent, at least 2n/(n+2)
                       断熱指数（2n/(n+2) 以上）
        n (int): Space dimension
                 空間次元

    Returns:
        float: K1

    Raises:
        ProgrammingError: When gamma < 2n/(n+2) or m, A are not positive
                          gamma < 2n/(n+2) または m, A が正でない場合
    """
    _require_dimension(n)
    _require_positive(m=m, A=A)
    critical = 2.0 * n / (n + 2.0)
    if not gamma >= critical - 1e-15:
        raise ProgrammingError(f"gamma must be at least {critical} for the Jensen step, got {gamma}")
    return m ** ((n + 2.0) / (2.0 * n)) * ((gamma - 1.0) / (m * A)) ** ((n - 2.0) / (2.0 * n * (gamma - 1.0)))


def constant_K2(n: int = 3) -> float:
    """Sharp constant of (∫|u|^{2n/(n-2)})^{(n-2)/n} <= K2 ∫|Du|^2 on R^n
    R^n 上の勾配型ソボレフ不等式の最良定数

    Raises:
        ProgrammingError: When n < 3
                          n < 3 の場合
    """
    _require_dimension(n)
    return float((special.gamma(n) / special.gamma(n / 2.0)) ** (2.0 / n) / (math.pi * n * (n - 2.0)))


def constant_Cgn(gamma: float, n: int = 3) -> float:
    """Interpolation constant of ||f||_1 <= C ||f||_gamma^a || |x|^2 f ||_1^b
    補間不等式の定数

    Raises:
        ProgrammingError: When gamma <= 1
                          gamma <= 1 の場合
    """
    _require_dimension(n)
    if not gamma > 1:
        raise ProgrammingError(f"gamma must exceed 1, got {gamma}")
    d = (n + 2.0) * gamma - n
    base = 2.0 * gamma / (n * (gamma - 1.0))
    return base ** (n * (gamma - 1.0) / d) + base ** (-2.0 * gamma / d)


def interpolation_exponents(gamma: float, n: int = 3) -> Tuple[float, float]:
    """Exponents (a, b) on ||f||_gamma and || |x|^2 f ||_1 in the interpolation inequality"""
    d = (n + 2.0) * gamma - n
    return 2.0 * gamma / d, n * (gamma - 1.0) / d


def constant_C1(A: float, gamma: float, n: int, m: float) -> float:
    """Lower-bound constant: E_i >= C1 / (∫|x|^2 rho)^{n(gamma-1)/2}

    C1 = A/(gamma-1) (m / C_gn)^{((n+2)gamma - n)/2}

    Raises:
        ProgrammingError: When A, m are not positive or gamma <= 1
                          A, m が正でない、または gamma <= 1 の場合
    """
    _require_positive(A=A, m=m)
    c_gn = constant_Cgn(gamma, n)
    return A / (gamma - 1.0) * (m / c_gn) ** (((n + 2.0) * gamma - n) / 2.0)


def constant_C2(gamma: float, Q0: float, G0: float, n: int = 3) -> float:
    """Upper-bound constant: E_i + E_m <= C2 / G^beta on the tail

    Up to the branch point gamma = 1 + 1/n this is Q0 G0^{(n(gamma-1)-2)/2} / 4
    ((3 gamma - 5)/2 for n = 3); beyond it Q0 / (4 sqrt(G0)). Both agree at the
    branch point.
    上界定数（分岐点 gamma = 1 + 1/n で2式が一致）

    Raises:
        ProgrammingError: When Q0 or G0 is not positive
                          Q0 または G0 が正でない場合
    """
    _require_dimension(n)
    _require_positive(Q0=Q0, G0=G0)
    if not gamma > 1:
        raise ProgrammingError(f"gamma must exceed 1, got {gamma}")
    beta = upper_bound_exponent(gamma, n)
    return 0.25 * Q0 * G0 ** (beta - 1.0)


def constant_K(P, K1: float, K2: float) -> float:
    """K = |P|^2 / (K1^2 K2)

    Raises:
        ProgrammingError: When P = 0 (no blow-up conclusion) or K1, K2 are not positive
                          P = 0 または K1, K2 が正でない場合
    """
    p = _norm(P)
    if p == 0:
        raise ProgrammingError("K needs a nonzero momentum P")
    _require_positive(K1=K1, K2=K2)
    return p * p / (K1 * K1 * K2)


def constant_sigma(mu: float, lam: float, n: int = 3) -> float:
    """Dissipation constant with mu ∫|Du|^2 + (mu + lambda) ∫(div u)^2 >= sigma ∫|Du|^2

    sigma = min(mu, (n+1) mu + n lambda) using (div u)^2 <= n |Du|^2.

    Raises:
        ProgrammingError: When mu <= 0 or lambda + 2 mu / n <= 0
                          mu <= 0 または lambda + 2 mu / n <= 0 の場合
    """
    if not mu > 0:
        raise ProgrammingError(f"mu must be positive, got {mu}")
    if not lam + 2.0 * mu / n > 0:
        raise ProgrammingError(f"lambda + 2 mu / n must be positive, got lambda={lam}, mu={mu}")
    return min(mu, (n + 1.0) * mu + n * lam)


def lifespan_bound(E0: float, sigma: float, K: float, gamma: float, n: int = 3) -> float:
    """Time at which the linear energy-decay bound reaches zero
    線形なエネルギー減衰上界がゼロに達する時刻

    T_star = E0^{1 + alpha} / (sigma K), alpha = (n-2)/(n(gamma-1))

    Raises:
        ProgrammingError: When E0, sigma or K is not positive (K = 0 means P = 0)
                          E0, sigma, K が正でない場合
    """
    _require_positive(E0=E0, sigma=sigma, K=K)
    if not gamma > 1:
        raise ProgrammingError(f"gamma must exceed 1, got {gamma}")
    return E0 ** (1.0 + decay_exponent(gamma, n)) / (sigma * K)


def lifespan_ode_oracle(E0: float, sigma: float, K: float, gamma: float, n: int = 3,
                        rtol: float = 1e-10) -> float:
    """Extinction time of E' = -sigma K E^{-alpha}, E(0) = E0, by numerical integration
    E' = -sigma K E^{-alpha} の消滅時刻を数値積分で求める

    The inverse map t(E) solves dt/dE = -E^alpha / (sigma K), which stays
    smooth down to E = 0, so the time is read off at E = 0. The exact value is
    E0^{1+alpha} / ((1+alpha) sigma K), never above :func:`lifespan_bound`.

    Raises:
        OperationalError: When the integrator fails
                          積分器が失敗した場合
    """
    T_star = lifespan_bound(E0, sigma, K, gamma, n)
    alpha = decay_exponent(gamma, n)
    rate = sigma * K

    def rhs(E, t):
        return [-max(E, 0.0) ** alpha / rate]

    result = integrate.solve_ivp(rhs, (E0, 0.0), [0.0], method="RK45", rtol=rtol,
                                 atol=rtol * T_star)
    if not result.success:
        raise OperationalError(f"Lifespan ODE did not reach extinction: {result.message}")
    t_hit = float(result.y[0][-1])
    logger.debug("ODE extinction at %s, closed form bound %s", t_hit, T_star)
    return t_hit


def _radial(f, R: float, n: int) -> float:
    surface = 2.0 * math.pi ** (n / 2.0) / special.gamma(n / 2.0)
    edges = [0.0] + [e for e in (1.0, 10.0, 100.0, 1000.0) if e < R] + [R]
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        value, _ = integrate.quad(lambda r: f(r) * r ** (n - 1), a, b, limit=200)
        total += value
    return surface * total


def sobolev_sharpness_probe(n: int = 3, radius_ratio: float = math.inf) -> float:
    """Ratio lhs / (K2 rhs) for the extremal profile (1 + |x|^2)^{-(n-2)/2}
    最良定数の鋭さを極値関数で確認する比

    Both norms are radial one-dimensional quadratures over the ball of radius
    ``radius_ratio`` (in units of the profile width). Over all of R^n the ratio
    is 1; a finite ball cuts the gradient tail, which decays like 1/R, so the
    ratio approaches 1 from above.
    """
    _require_dimension(n)
    q = 2.0 * n / (n - 2.0)
    lhs = _radial(lambda r: (1.0 + r * r) ** (-(n - 2.0) / 2.0 * q), radius_ratio, n) ** (2.0 / q)
    rhs = _radial(lambda r: ((n - 2.0) * r) ** 2 * (1.0 + r * r) ** (-float(n)), radius_ratio, n)
    return lhs / (constant_K2(n) * rhs)


def sobolev_ratio(u: np.ndarray, grid: Grid, stencil_order: int = 4) -> float:
    """On-grid ratio (∫|u|^q)^{2/q} / (K2 ∫|Du|^2); zero for u = 0
    格子上のソボレフ比
    """
    n = grid.n_dim
    ops = FieldOps(grid, stencil_order)
    q = 2.0 * n / (n - 2.0)
    lhs = ops.integrate(np.sum(u ** 2, axis=0) ** (q / 2.0)) ** (2.0 / q)
    rhs = ops.integrate(np.sum(ops.jacobian(u) ** 2, axis=(0, 1)))
    if lhs == 0:
        return 0.0
    if rhs == 0:
        return math.inf
    return lhs / (constant_K2(n) * rhs)


@dataclass
class Constants:
    """Named constants for one set of parameters and initial functionals
    パラメータと初期汎関数に対する定数の組

    A constant whose preconditions fail is None and its reason is kept in ``errors``.
    前提条件を満たさない定数は None とし、理由を ``errors`` に保持します。
    """
    n_dim: int
    gamma: float
    K1: Optional[float] = None
    K2: Optional[float] = None
    K: Optional[float] = None
    C_gn: Optional[float] = None
    C1: Optional[float] = None
    C2: Optional[float] = None
    sigma: Optional[float] = None
    L_env: Optional[float] = None
    T_star: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    envelope_power: Optional[float] = None
    errors: Dict[str, str] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, object]:
        return asdict(self)


def compute_constants(params: Params, m: float, P: Sequence[float], E0: float, G0: float,
                      F0: float, Q0: float, n: int = 3) -> Constants:
    """Evaluate every constant, isolating per-constant precondition failures
    全定数を評価（前提条件の失敗は定数ごとに分離）

    ``F0`` is accepted for completeness of the initial data; none of the
    constants depends on it.
    """
    c = Constants(n_dim=n, gamma=params.gamma)

    def attempt(name: str, fn):
        try:
            setattr(c, name, float(fn()))
        except ProgrammingError as e:
            c.errors[name] = str(e)
            logger.debug("constant %s unavailable: %s", name, e)

    attempt("alpha", lambda: decay_exponent(params.gamma, n))
    attempt("beta", lambda: upper_bound_exponent(params.gamma, n))
    attempt("K1", lambda: constant_K1(m, params.A, params.gamma, n))
    attempt("K2", lambda: constant_K2(n))
    attempt("C_gn", lambda: constant_Cgn(params.gamma, n))
    attempt("C1", lambda: constant_C1(params.A, params.gamma, n, m))
    attempt("C2", lambda: constant_C2(params.gamma, Q0, G0, n))
    attempt("sigma", lambda: constant_sigma(params.mu, params.lam, n))
    if c.K1 is not None and c.K2 is not None:
        attempt("K", lambda: constant_K(P, c.K1, c.K2))
    else:
        c.errors["K"] = "K1 or K2 unavailable"
    if c.K is not None and c.sigma is not None:
        attempt("T_star", lambda: lifespan_bound(E0, c.sigma, c.K, params.gamma, n))
        if c.C2 is not None:
            c.envelope_power = 2.0 * c.alpha * c.beta
            p = _norm(P)
            c.L_env = c.sigma * c.K * c.C2 ** (-c.alpha) * (p * p / (2.0 * m)) ** (c.alpha * c.beta)
    for name in ("T_star", "L_env"):
        if getattr(c, name) is None and name not in c.errors:
            c.errors[name] = "depends on unavailable constants"
    return c
