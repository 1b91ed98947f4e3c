'''scenarios.py
Analytic initial data with closed-form functionals, plus refinement studies
against those closed forms.
閉形式の汎関数値を持つ解析的初期値と、それを用いた収束解析を提供します。
'''

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pytools.convergence import EOCRecorder

from .exceptions import DataError, NotSupportedError, ProgrammingError
from .functionals import EnergyBreakdown, critical_exponents, energy_breakdown
from .grid import FieldOps, Grid, Params, State, make_grid, make_state

logger = logging.getLogger(__name__)

VELOCITY_PROFILES = ("uniform", "enveloped")
MAGNETIC_PROFILES = ("zero", "potential")


@dataclass(frozen=True)
class GaussianScenario:
    """Gaussian density blob moving with bulk velocity U
    一様速度 U で移動するガウス型密度分布

    Args:
        rho_bar (float): Peak density
                         最大密度
        s (float): Width, at most L/5
                   幅（L/5 以下）
        U (Sequence[float]): Bulk velocity, one entry per axis
                             一様速度
        velocity_profile (str): ``uniform`` (u = U) or ``enveloped``
                                (u = U exp(-|x|^2 / (2 velocity_width^2)))
                                速度分布
        velocity_width (float, optional): Envelope width; 2 s when omitted
                                          包絡線の幅（省略時は 2 s）
        magnetic_profile (str): ``zero`` or ``potential`` (curl of (0, 0, a exp(-|x|^2/(2 s^2))))
                                磁場分布
        magnetic_amplitude (float): Amplitude a of the vector potential
                                    ベクトルポテンシャルの振幅
        n_dim, half_extent, points_per_axis: Box
                                             計算箱
        params (Params): Physical coefficients
                         物理係数
    """
    rho_bar: float = 1.0
    s: float = 1.0
    U: Tuple[float, ...] = (1.0, 0.0, 0.0)
    velocity_profile: str = "uniform"
    velocity_width: Optional[float] = None
    magnetic_profile: str = "zero"
    magnetic_amplitude: float = 0.0
    n_dim: int = 3
    half_extent: float = 6.0
    points_per_axis: int = 32
    params: Params = field(default_factory=Params)

    def __post_init__(self):
        object.__setattr__(self, "U", tuple(float(v) for v in self.U))
        if len(self.U) != self.n_dim:
            raise ProgrammingError(f"U has {len(self.U)} components, expected {self.n_dim}")
        if not (self.rho_bar > 0 and self.s > 0):
            raise ProgrammingError("rho_bar and s must be positive")
        if self.s > self.half_extent / 5.0 + 1e-12:
            raise ProgrammingError(f"s={self.s} exceeds L/5 = {self.half_extent / 5.0}")
        if self.velocity_profile not in VELOCITY_PROFILES:
            raise ProgrammingError(f"velocity_profile must be one of {VELOCITY_PROFILES}")
        if self.magnetic_profile not in MAGNETIC_PROFILES:
            raise ProgrammingError(f"magnetic_profile must be one of {MAGNETIC_PROFILES}")
        if self.magnetic_profile != "zero" and self.n_dim != 3:
            raise NotSupportedError("A magnetic profile needs n = 3")
        if self.velocity_width is not None and not self.velocity_width > 0:
            raise ProgrammingError("velocity_width must be positive")

    @property
    def envelope_width(self) -> float:
        return self.velocity_width if self.velocity_width is not None else 2.0 * self.s

    @property
    def grid(self) -> Grid:
        return make_grid(self.n_dim, self.half_extent, self.points_per_axis)

    def with_grid(self, points_per_axis: int) -> "GaussianScenario":
        return replace(self, points_per_axis=points_per_axis)


@dataclass(frozen=True)
class ShearScenario:
    """Uniform density with u = (a sin(pi x_2 / L), 0, ...): an exact viscous decay
    一様密度のせん断流（厳密な粘性減衰解）

    A nonzero ``magnetic_amplitude`` b adds H = (0, 0, b cos(pi x_1 / L)) in three
    dimensions; the flow then compresses and exchanges energy with the field.
    """
    amplitude: float = 0.1
    magnetic_amplitude: float = 0.0
    rho_bar: float = 1.0
    n_dim: int = 3
    half_extent: float = 1.0
    points_per_axis: int = 16
    params: Params = field(default_factory=lambda: Params(mu=0.05))

    def __post_init__(self):
        if self.magnetic_amplitude != 0 and self.n_dim != 3:
            raise NotSupportedError("A magnetic shear needs n = 3")

    @property
    def grid(self) -> Grid:
        return make_grid(self.n_dim, self.half_extent, self.points_per_axis)

    def with_grid(self, points_per_axis: int) -> "ShearScenario":
        return replace(self, points_per_axis=points_per_axis)


@dataclass(frozen=True)
class EquilibriumScenario:
    """Uniform density at rest: every functional is constant in time
    静止した一様密度（全汎関数が時間不変）
    """
    rho_bar: float = 1.0
    n_dim: int = 3
    half_extent: float = 1.0
    points_per_axis: int = 8
    params: Params = field(default_factory=Params)

    @property
    def grid(self) -> Grid:
        return make_grid(self.n_dim, self.half_extent, self.points_per_axis)

    def with_grid(self, points_per_axis: int) -> "EquilibriumScenario":
        return replace(self, points_per_axis=points_per_axis)


Scenario = Union[GaussianScenario, ShearScenario, EquilibriumScenario]

_KINDS = {"gaussian": GaussianScenario, "shear": ShearScenario, "equilibrium": EquilibriumScenario}


def scenario_kind(scenario: Scenario) -> str:
    for kind, cls in _KINDS.items():
        if isinstance(scenario, cls):
            return kind
    raise ProgrammingError(f"Unknown scenario type {type(scenario).__name__}")


def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    """JSON-ready form of a scenario (``kind`` plus its fields)"""
    values = asdict(scenario)
    values["params"] = scenario.params.as_dict()
    if "U" in values:
        values["U"] = list(values["U"])
    values["kind"] = scenario_kind(scenario)
    return values


def scenario_from_dict(values: Dict[str, Any]) -> Scenario:
    """Build a scenario from its JSON form
    JSON 形式からシナリオを作成

    Raises:
        DataError: On an unknown kind or unknown fields
                   未知の種類またはフィールドの場合
    """
    values = dict(values)
    kind = values.pop("kind", "gaussian")
    if kind not in _KINDS:
        raise DataError(f"Unknown scenario kind: {kind}")
    cls = _KINDS[kind]
    if "params" in values:
        values["params"] = Params.from_dict(values["params"])
    try:
        return cls(**values)
    except TypeError as e:
        raise DataError(f"Bad {kind} scenario: {str(e)}")


def _gaussian(radius_sq: np.ndarray, width: float) -> np.ndarray:
    return np.exp(-radius_sq / (2.0 * width * width))


def build_state(scenario: Scenario) -> State:
    """Sample a scenario on its grid
    シナリオをグリッド上でサンプリング

    Raises:
        ProgrammingError: When the grid is invalid
                          グリッドが不正な場合
    """
    grid = scenario.grid
    n = grid.n_dim
    if isinstance(scenario, GaussianScenario):
        rho = scenario.rho_bar * _gaussian(grid.radius_sq, scenario.s)
        U = np.array(scenario.U).reshape((n,) + (1,) * n)
        if scenario.velocity_profile == "uniform":
            u = np.broadcast_to(U, (n,) + grid.shape).copy()
        else:
            u = U * _gaussian(grid.radius_sq, scenario.envelope_width)
        H = None
        if scenario.magnetic_profile == "potential":
            potential = np.zeros((3,) + grid.shape)
            potential[2] = scenario.magnetic_amplitude * _gaussian(grid.radius_sq, scenario.s)
            # the discrete curl keeps the discrete divergence at roundoff
            H = FieldOps(grid).curl(potential)
        return make_state(grid, rho, u, H, scenario.params)
    if isinstance(scenario, ShearScenario):
        rho = np.full(grid.shape, scenario.rho_bar)
        u = np.zeros((n,) + grid.shape)
        u[0] = scenario.amplitude * np.sin(math.pi * grid.mesh[1] / grid.half_extent)
        H = None
        if scenario.magnetic_amplitude != 0:
            H = np.zeros((3,) + grid.shape)
            H[2] = scenario.magnetic_amplitude * np.cos(math.pi * grid.mesh[0] / grid.half_extent)
        return make_state(grid, rho, u, H, scenario.params)
    if isinstance(scenario, EquilibriumScenario):
        return make_state(grid, np.full(grid.shape, scenario.rho_bar), np.zeros((n,) + grid.shape), None,
                          scenario.params)
    raise ProgrammingError(f"Unknown scenario type {type(scenario).__name__}")


def _gaussian_integral(height: float, width: float, n: int) -> float:
    """∫ height exp(-|x|^2 / (2 width^2)) dx over R^n"""
    return height * (2.0 * math.pi * width * width) ** (n / 2.0)


def gaussian_reference(scenario: GaussianScenario) -> EnergyBreakdown:
    """Closed-form functionals of a Gaussian scenario at t = 0 on R^n
    ガウス型シナリオの t = 0 における汎関数の閉形式

    ``u_L6`` for a uniform velocity is the box value |U|^q (2L)^n; ``boundary_mass`` is 0.

    Raises:
        NotSupportedError: When a magnetic profile is requested
                           磁場分布が指定された場合
    """
    if scenario.magnetic_profile != "zero":
        raise NotSupportedError("Closed forms exist only for H = 0; use quadrature refinement instead")
    n = scenario.n_dim
    p = scenario.params
    rb, s = scenario.rho_bar, scenario.s
    U = np.array(scenario.U)
    U_sq = float(U @ U)
    q_rho, q_u = critical_exponents(n)

    m = _gaussian_integral(rb, s, n)
    if scenario.velocity_profile == "uniform":
        P = m * U
        E_k = 0.5 * m * U_sq
        grad_u_sq = 0.0
        div_u_sq = 0.0
        u_L6 = U_sq ** (q_u / 2.0) * (2.0 * scenario.half_extent) ** n
    else:
        a = scenario.envelope_width
        # products of Gaussians are Gaussians with combined widths
        P = _gaussian_integral(rb, (s ** -2 + a ** -2) ** -0.5, n) * U
        E_k = 0.5 * U_sq * _gaussian_integral(rb, (s ** -2 + 2.0 * a ** -2) ** -0.5, n)
        base = (math.pi * a * a) ** (n / 2.0)
        grad_u_sq = U_sq * n / (2.0 * a * a) * base
        div_u_sq = U_sq / (2.0 * a * a) * base
        u_L6 = U_sq ** (q_u / 2.0) * _gaussian_integral(1.0, a / math.sqrt(q_u), n)
    rho_Lgamma = _gaussian_integral(rb ** p.gamma, s / math.sqrt(p.gamma), n)
    E_i = p.A / (p.gamma - 1.0) * rho_Lgamma
    G = 0.5 * n * m * s * s
    E_total = E_k + E_i
    return EnergyBreakdown(
        t=0.0, m=m, P=tuple(float(v) for v in P), E_k=E_k, E_m=0.0, E_i=E_i, E_total=E_total,
        G=G, F=0.0, Q=4.0 * G * E_total, grad_u_sq=grad_u_sq, curl_H_sq=0.0, u_L6=u_L6,
        rho_L65=_gaussian_integral(rb ** q_rho, s / math.sqrt(q_rho), n), rho_Lgamma=rho_Lgamma,
        div_H_sq=0.0, dissipation=p.mu * grad_u_sq + (p.mu + p.lam) * div_u_sq, boundary_mass=0.0,
    )


@dataclass
class ConvergenceResult:
    """Errors against a closed form over refinement levels
    各細分レベルにおける閉形式との誤差
    """
    functional: str
    levels: List[int]
    errors: List[float]
    order: float
    saturated: bool
    monotone: bool
    reference: float

    @property
    def passed(self) -> bool:
        return self.saturated or self.order >= 2.0

    def as_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        values["order"] = self.order if math.isfinite(self.order) else None
        values["passed"] = self.passed
        return values


FunctionalSpec = Union[str, Callable[[EnergyBreakdown], float]]


def _extract(breakdown: EnergyBreakdown, functional: FunctionalSpec) -> float:
    if callable(functional):
        return float(functional(breakdown))
    if functional.startswith("P") and functional[1:].isdigit():
        return breakdown.P[int(functional[1:]) - 1]
    try:
        return float(getattr(breakdown, functional))
    except AttributeError:
        raise ProgrammingError(f"Unknown functional: {functional}")


def convergence_study(scenario: Scenario, functional: FunctionalSpec, levels: Sequence[int],
                      floor: float = 1e-8, reference: Optional[float] = None) -> ConvergenceResult:
    """Measured quadrature convergence order of one functional against its closed form
    1つの汎関数の閉形式に対する収束次数を測定

    Errors are relative to |reference| when it is nonzero and absolute
    otherwise. A study whose errors all lie below ``floor`` is saturated and
    counts as converged. A non-monotone error sequence is logged and reported.

    Args:
        scenario: Scenario to refine
                  細分するシナリオ
        functional: Column name (``m``, ``E_i``, ``P1``...) or a callable on EnergyBreakdown
                    列名または EnergyBreakdown を受け取る関数
        levels (Sequence[int]): Points per axis, at least 3 levels
                                各軸の点数（3レベル以上）
        floor (float): Saturation floor
                       飽和とみなす誤差
        reference (float, optional): Exact value; taken from :func:`gaussian_reference` when omitted
                                     厳密値

    Returns:
        ConvergenceResult: Errors, order and flags
                           誤差、次数、フラグ

    Raises:
        ProgrammingError: With fewer than 3 levels
                          レベルが3未満の場合
    """
    levels = sorted(int(v) for v in levels)
    if len(levels) < 3:
        raise ProgrammingError(f"convergence_study needs at least 3 levels, got {len(levels)}")
    name = functional if isinstance(functional, str) else getattr(functional, "__name__", "functional")
    if reference is None:
        if not isinstance(scenario, GaussianScenario):
            raise ProgrammingError("A reference value is required for non-Gaussian scenarios")
        reference = _extract(gaussian_reference(scenario), functional)
    scale = abs(reference) if reference != 0 else 1.0

    eoc = EOCRecorder()
    errors = []
    for N in levels:
        value = _extract(energy_breakdown(build_state(scenario.with_grid(N))), functional)
        error = abs(value - reference) / scale
        errors.append(error)
        eoc.add_data_point(2.0 * scenario.half_extent / N, max(error, np.finfo(float).tiny))
        logger.debug("%s N=%d value=%s error=%s", name, N, value, error)

    saturated = max(errors) < floor
    monotone = all(b <= a for a, b in zip(errors, errors[1:]))
    if not monotone:
        logger.warning("%s: error sequence %s is not monotone", name, errors)
    order = math.inf if saturated else float(eoc.order_estimate())
    return ConvergenceResult(name, levels, errors, order, saturated, monotone, float(reference))


# Named scenarios for the CLI. The Gaussians keep boundary mass under 1e-8 m at t = 0 and
# resolve the width with 2.5 points; their coefficients keep the diffusive step
# above the acoustic one on nodes just above the default density floor.
_BLOB = dict(s=0.5, half_extent=4.0, points_per_axis=40, U=(0.5, 0.0, 0.0), velocity_profile="enveloped")
SCENARIOS: Dict[str, Scenario] = {
    "gaussian-oracle": GaussianScenario(s=1.0, half_extent=6.0, points_per_axis=32, U=(1.0, 0.0, 0.0)),
    "gaussian-mhd": GaussianScenario(magnetic_profile="potential", magnetic_amplitude=0.2,
                                     params=Params(A=1.0, gamma=2.0, mu=5e-11, nu=5e-11), **_BLOB),
    "gaussian-ns": GaussianScenario(params=Params(A=1.0, gamma=2.0, mu=5e-11), **_BLOB),
    "gaussian-soft": GaussianScenario(params=Params(A=1.0, gamma=1.25, mu=5e-11), **_BLOB),
    "gaussian-rest": GaussianScenario(params=Params(A=1.0, gamma=2.0, mu=5e-11),
                                      **dict(_BLOB, U=(0.0, 0.0, 0.0))),
    "shear": ShearScenario(),
    "shear-mhd": ShearScenario(magnetic_amplitude=0.2, params=Params(mu=0.05, nu=0.02)),
    "equilibrium": EquilibriumScenario(),
}


def get_scenario(name: str) -> Scenario:
    """Look up a named scenario

    Raises:
        DataError: When the name is unknown
                   名前が未登録の場合
    """
    try:
        return SCENARIOS[name]
    except KeyError:
        raise DataError(f"Unknown scenario: {name} (known: {', '.join(sorted(SCENARIOS))})")
