'''solver.py
Method-of-lines integration of the barotropic MHD system (n = 3) and the
barotropic Navier-Stokes system (H = 0, any n >= 2) on the periodic box.
周期箱上でバロトロピックMHD系およびナビエ・ストークス系を時間積分します。

The evolved unknowns are the conservative variables (rho, rho u, H). Mass and
momentum move through two-point fluxes between node pairs, so their discrete
totals are conserved up to roundoff. The density mean inside those fluxes
makes the transport and pressure work cancel exactly in the discrete energy;
the viscous, resistive and Lorentz terms use the same skew-symmetric
differences, so the semi-discrete energy changes only by dissipation. A
relaxation factor on each Runge-Kutta step carries that balance over to the
time steps.
'''

import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize

from .exceptions import DataError, OperationalError, ProgrammingError
from .functionals import (EnergyBreakdown, energy_breakdown, lorentz_cross, lorentz_discrepancy,
                          lorentz_divergence)
from .grid import STENCIL_WEIGHTS, FieldOps, Grid, Params, State, resolution_fraction

logger = logging.getLogger(__name__)


class Mode(str, Enum):
    MHD = "mhd"
    NS = "ns"


class Termination(str, Enum):
    REACHED_T_END = "reached-t_end"
    NAN_DETECTED = "nan-detected"
    VACUUM_DETECTED = "vacuum-detected"
    CFL_COLLAPSE = "cfl-collapse"


@dataclass(frozen=True)
class SolverConfig:
    """Time integration settings
    時間積分の設定

    Args:
        mode (Mode): ``mhd`` (n = 3) or ``ns`` (H dropped)
                     ``mhd``（n = 3）または ``ns``（磁場なし）
        dt_policy (str): ``cfl`` for a CFL-scaled step or ``fixed``
                         ``cfl``（CFL比例）または ``fixed``（固定）
        dt (float, optional): Step size for the ``fixed`` policy
                              ``fixed`` ポリシーの時間刻み
        cfl_number (float): Safety factor in (0, 1)
                            安全係数
        t_end (float): Final time
                       終了時刻
        sample_every (int): Steps between diagnostics
                            診断を記録するステップ間隔
        density_floor (float): Velocity is recovered only where rho exceeds it
                               速度を復元する密度の下限
        stencil_order (int): 2 or 4
                             ステンシル次数
        lorentz_form (str): ``cross`` (energy conserving) or ``divergence``
                            ローレンツ力の形式
        relaxation (bool): Rescale each step so the discrete energy follows the dissipation
                           各ステップを離散エネルギーが散逸に従うよう補正
        max_steps (int): Hard cap on the number of steps
                         ステップ数の上限
    """
    mode: Mode = Mode.MHD
    dt_policy: str = "cfl"
    dt: Optional[float] = None
    cfl_number: float = 0.4
    t_end: float = 1.0
    sample_every: int = 1
    density_floor: float = 1e-9
    stencil_order: int = 4
    lorentz_form: str = "cross"
    relaxation: bool = True
    max_steps: int = 1_000_000

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not self.t_end > 0:
            raise ProgrammingError(f"t_end must be positive, got {self.t_end}")
        if not 0 < self.cfl_number < 1:
            raise ProgrammingError(f"cfl_number must lie in (0, 1), got {self.cfl_number}")
        if self.dt_policy not in ("cfl", "fixed"):
            raise ProgrammingError(f"dt_policy must be 'cfl' or 'fixed', got {self.dt_policy}")
        if self.dt_policy == "fixed" and not (self.dt is not None and self.dt > 0):
            raise ProgrammingError("The fixed dt policy needs a positive dt")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise ProgrammingError(f"sample_every must be a positive integer, got {self.sample_every}")
        if not self.density_floor >= 0:
            raise ProgrammingError(f"density_floor must be non-negative, got {self.density_floor}")
        if self.lorentz_form not in ("divergence", "cross"):
            raise ProgrammingError(f"lorentz_form must be 'divergence' or 'cross', got {self.lorentz_form}")

    def as_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        values["mode"] = self.mode.value
        return values


@dataclass
class Trajectory:
    """Time-ordered energy breakdowns plus run metadata
    時系列のエネルギー内訳と実行メタデータ
    """
    samples: List[EnergyBreakdown]
    config: Optional[SolverConfig] = None
    params: Optional[Params] = None
    termination: Termination = Termination.REACHED_T_END
    metadata: Dict[str, Any] = field(default_factory=dict)
    final_state: Optional[State] = None

    def __post_init__(self):
        times = [s.t for s in self.samples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DataError("Trajectory sample times must be strictly increasing")

    @property
    def n_dim(self) -> int:
        return self.samples[0].n_dim

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples], dtype=np.float64)

    @property
    def times(self) -> np.ndarray:
        return self.column("t")


@dataclass
class _Conserved:
    rho: np.ndarray
    mom: np.ndarray
    H: np.ndarray

    def axpy(self, a: float, other: "_Conserved") -> "_Conserved":
        return _Conserved(self.rho + a * other.rho, self.mom + a * other.mom, self.H + a * other.H)


def _recover_velocity(rho: np.ndarray, mom: np.ndarray, floor: float) -> np.ndarray:
    support = rho > floor
    safe = np.where(support, rho, 1.0)
    return np.where(support, mom / safe, 0.0)


def _enthalpy(params: Params, rho_pos: np.ndarray) -> np.ndarray:
    return params.A * params.gamma / (params.gamma - 1.0) * rho_pos ** (params.gamma - 1.0)


def density_mean(a: np.ndarray, b: np.ndarray, params: Params) -> np.ndarray:
    """Pair density [p] / [h] with p = A rho^gamma and h its enthalpy
    圧力とエンタルピーの差の比による2点密度平均

    Equals (a + b) / 2 for gamma = 2; close pairs use the expansion
    (a + b) / 2 (1 + (gamma - 2) xi^2 / 3), xi = (b - a) / (a + b).
    """
    total = a + b
    xi = np.divide(b - a, total, out=np.zeros_like(total), where=total > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = ((params.A * (b ** params.gamma - a ** params.gamma))
                 / (_enthalpy(params, b) - _enthalpy(params, a)))
    series = 0.5 * total * (1.0 + (params.gamma - 2.0) / 3.0 * xi * xi)
    return np.where(np.abs(xi) < 1e-4, series, ratio)


def _pair_flux(params: Params, rho_pos: np.ndarray, u: np.ndarray, p: np.ndarray, support: np.ndarray,
               axis: int, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Mass and momentum flux from each node to its neighbour k steps up ``axis``

    Pairs touching a node at or below the floor carry nothing.
    """
    def up(a: np.ndarray, offset: int = 0) -> np.ndarray:
        return np.roll(a, -k, axis=axis + offset)

    pair = support & up(support)
    u_bar = 0.5 * (u + up(u, 1))
    f_rho = np.where(pair, density_mean(rho_pos, up(rho_pos), params) * u_bar[axis], 0.0)
    f_mom = f_rho[None] * u_bar
    f_mom[axis] = f_mom[axis] + np.where(pair, 0.5 * (p + up(p)), 0.0)
    return f_rho, f_mom


def _rhs_conserved(grid: Grid, params: Params, ops: FieldOps, q: _Conserved, mode: Mode,
                   floor: float, lorentz_form: str) -> _Conserved:
    n = grid.n_dim
    support = q.rho > floor
    u = _recover_velocity(q.rho, q.mom, floor)
    rho_pos = np.maximum(q.rho, 0.0)
    p = params.A * rho_pos ** params.gamma

    drho = np.zeros_like(q.rho)
    dmom = np.zeros_like(q.mom)
    for axis in range(n):
        for k, w in STENCIL_WEIGHTS[ops.stencil_order]:
            f_rho, f_mom = _pair_flux(params, rho_pos, u, p, support, axis, k)
            scale = 2.0 * w / grid.spacing
            drho -= scale * (f_rho - np.roll(f_rho, k, axis=axis))
            dmom -= scale * (f_mom - np.roll(f_mom, k, axis=axis + 1))

    # T_ij = mu (d_i u_j + d_j u_i) + lambda div u delta_ij
    J = ops.jacobian(u)
    divu = np.trace(J)
    stress = params.mu * (J + np.swapaxes(J, 0, 1))
    for i in range(n):
        stress[i, i] = stress[i, i] + params.lam * divu
    dmom = dmom + ops.tensor_divergence(stress)

    if mode is Mode.NS:
        return _Conserved(drho, dmom, np.zeros_like(q.H))

    if lorentz_form == "cross":
        dmom = dmom + lorentz_cross(q.H, ops)
    else:
        dmom = dmom + lorentz_divergence(q.H, ops)
    dH = ops.curl(np.cross(u, q.H, axis=0) - params.nu * ops.curl(q.H))
    return _Conserved(drho, dmom, dH)


def _energy(params: Params, ops: FieldOps, q: _Conserved, floor: float) -> float:
    u = _recover_velocity(q.rho, q.mom, floor)
    rho_pos = np.maximum(q.rho, 0.0)
    density = (0.5 * np.sum(q.mom * u, axis=0) + params.A / (params.gamma - 1.0) * rho_pos ** params.gamma
               + 0.5 * np.sum(q.H ** 2, axis=0))
    return ops.integrate(density)


def _energy_rate(params: Params, ops: FieldOps, q: _Conserved, d: _Conserved, floor: float) -> float:
    """Directional derivative of the discrete energy at q along d"""
    u = _recover_velocity(q.rho, q.mom, floor)
    rho_pos = np.maximum(q.rho, 0.0)
    density = ((_enthalpy(params, rho_pos) - 0.5 * np.sum(u ** 2, axis=0)) * d.rho
               + np.sum(u * d.mom, axis=0) + np.sum(q.H * d.H, axis=0))
    return ops.integrate(density)


def energy_rate(state: State, config: Optional[SolverConfig] = None) -> float:
    """Rate of change of the discrete energy under the semi-discrete system
    半離散系における離散エネルギーの変化率

    Minus the viscous and resistive dissipation of the state, up to the work
    of the pressure at the edge of the floor region.
    """
    config = config or SolverConfig()
    _check_mode(state.grid, config.mode)
    ops = FieldOps(state.grid, config.stencil_order)
    q = _to_conserved(state)
    d = _rhs_conserved(state.grid, state.params, ops, q, config.mode, config.density_floor, config.lorentz_form)
    return _energy_rate(state.params, ops, q, d, config.density_floor)


def _check_derivative(d: _Conserved) -> None:
    for name in ("rho", "mom", "H"):
        if not np.all(np.isfinite(getattr(d, name))):
            raise DataError(f"Time derivative of {name} contains NaN or Inf")


def _to_conserved(state: State) -> _Conserved:
    return _Conserved(state.rho.copy(), state.rho * state.u, state.H.copy())


def _to_state(state: State, q: _Conserved, time: float, floor: float) -> State:
    return state.with_fields(rho=q.rho, u=_recover_velocity(q.rho, q.mom, floor), H=q.H, time=time)


def rhs(state: State, config: Optional[SolverConfig] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Time derivatives of (rho, rho u, H)
    (rho, rho u, H) の時間微分

    Args:
        state (State): Current state
                       現在の状態
        config (SolverConfig, optional): Mode, stencil and Lorentz form
                                         モード、ステンシル、ローレンツ力の形式

    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]: d rho/dt, d(rho u)/dt, dH/dt
                                                   各変数の時間微分

    Raises:
        DataError: When a derivative contains NaN or Inf
                   時間微分に NaN または Inf が含まれる場合
        ProgrammingError: When MHD mode is requested with n != 3
                          n != 3 で MHD モードが要求された場合
    """
    config = config or SolverConfig()
    _check_mode(state.grid, config.mode)
    ops = FieldOps(state.grid, config.stencil_order)
    d = _rhs_conserved(state.grid, state.params, ops, _to_conserved(state), config.mode,
                       config.density_floor, config.lorentz_form)
    _check_derivative(d)
    return d.rho, d.mom, d.H


def _check_mode(grid: Grid, mode: Mode) -> None:
    if mode is Mode.MHD and grid.n_dim != 3:
        raise ProgrammingError(f"MHD mode requires n = 3, got n = {grid.n_dim}")


def _cfl_conserved(grid: Grid, params: Params, q: _Conserved, cfl_number: float, floor: float) -> float:
    support = q.rho > floor
    if not np.any(support):
        raise OperationalError("Vacuum everywhere: no node has density above the floor")
    rho_s = q.rho[support]
    u = _recover_velocity(q.rho, q.mom, floor)
    speed = np.sqrt(np.sum(u ** 2, axis=0))[support]
    sound = np.sqrt(params.A * params.gamma * rho_s ** (params.gamma - 1.0))
    alfven = np.sqrt(np.sum(q.H ** 2, axis=0))[support] / np.sqrt(rho_s)
    h = grid.spacing
    limits = []
    wave = float(np.max(speed + sound + alfven))
    if wave > 0:
        limits.append(h / wave)
    viscosity = max(params.mu, 2.0 * params.mu + params.lam)
    diffusivity = max(viscosity / float(rho_s.min()), params.nu)
    if diffusivity > 0:
        limits.append(h * h / (2.0 * grid.n_dim * diffusivity))
    if not limits:
        return math.inf
    return cfl_number * min(limits)


def cfl_dt(state: State, cfl_number: float = 0.4, density_floor: float = 1e-9) -> float:
    """CFL-limited step from advective, sound, Alfvén and diffusive constraints
    移流・音速・アルフベン・拡散の制約から定まるCFL時間刻み

    Raises:
        OperationalError: When no node has density above the floor
                          床値を超える密度を持つ節点がない場合
    """
    return _cfl_conserved(state.grid, state.params, _to_conserved(state), cfl_number, density_floor)


def _rk4(grid: Grid, params: Params, ops: FieldOps, q: _Conserved, dt: float, mode: Mode,
         floor: float, lorentz_form: str) -> Tuple[_Conserved, float]:
    """Classical Runge-Kutta increment and the energy change its stages predict"""
    def f(x: _Conserved) -> _Conserved:
        d = _rhs_conserved(grid, params, ops, x, mode, floor, lorentz_form)
        _check_derivative(d)
        return d

    stages = [q]
    k1 = f(q)
    stages.append(q.axpy(0.5 * dt, k1))
    k2 = f(stages[-1])
    stages.append(q.axpy(0.5 * dt, k2))
    k3 = f(stages[-1])
    stages.append(q.axpy(dt, k3))
    k4 = f(stages[-1])
    weights = (1.0, 2.0, 2.0, 1.0)
    slopes = (k1, k2, k3, k4)
    increment = _Conserved(
        dt / 6.0 * (k1.rho + 2.0 * k2.rho + 2.0 * k3.rho + k4.rho),
        dt / 6.0 * (k1.mom + 2.0 * k2.mom + 2.0 * k3.mom + k4.mom),
        dt / 6.0 * (k1.H + 2.0 * k2.H + 2.0 * k3.H + k4.H),
    )
    change = dt / 6.0 * sum(w * _energy_rate(params, ops, y, k, floor)
                            for w, y, k in zip(weights, stages, slopes))
    return increment, change


def _relaxation_factor(params: Params, ops: FieldOps, q: _Conserved, increment: _Conserved, change: float,
                      floor: float) -> float:
    """Factor r near 1 with E(q + r increment) - E(q) = r change
    離散エネルギーの変化を段の予測に一致させる緩和係数

    The energy is convex in the conservative variables, so the root is bracketed
    by [0.5, 1.5] for any reasonable step; 1 is returned when the step already
    matches to roundoff or no bracket exists.
    """
    E0 = _energy(params, ops, q, floor)

    def mismatch(r: float) -> float:
        return _energy(params, ops, q.axpy(r, increment), floor) - E0 - r * change

    if abs(mismatch(1.0)) <= 1e-13 * abs(E0):
        return 1.0
    low, high = mismatch(0.5), mismatch(1.5)
    if not (low < 0.0 < high):
        logger.debug("no relaxation bracket: mismatch %s at 0.5, %s at 1.5", low, high)
        return 1.0
    return float(optimize.brentq(mismatch, 0.5, 1.5))


def step_rk4(state: State, dt: float, config: Optional[SolverConfig] = None) -> State:
    """Advance a state by one classical Runge-Kutta step (without relaxation)
    古典的4段ルンゲ・クッタ法で1ステップ進める

    Raises:
        ProgrammingError: When dt is not positive or exceeds the CFL limit
                          dt が正でない、またはCFL限界を超える場合
        DataError: When the right-hand side produces NaN or Inf
                   右辺が NaN または Inf を生じた場合
    """
    config = config or SolverConfig()
    _check_mode(state.grid, config.mode)
    if not dt > 0:
        raise ProgrammingError(f"dt must be positive, got {dt}")
    q = _to_conserved(state)
    limit = _cfl_conserved(state.grid, state.params, q, 1.0, config.density_floor)
    if dt > limit:
        raise ProgrammingError(f"dt={dt} exceeds the CFL limit {limit}")
    ops = FieldOps(state.grid, config.stencil_order)
    increment, _ = _rk4(state.grid, state.params, ops, q, dt, config.mode, config.density_floor,
                        config.lorentz_form)
    return _to_state(state, q.axpy(1.0, increment), state.time + dt, config.density_floor)


def _integrals(ops: FieldOps, q: _Conserved) -> Tuple[float, np.ndarray, float]:
    m = ops.integrate(q.rho)
    P = np.array([ops.integrate(q.mom[j]) for j in range(ops.grid.n_dim)])
    div_H = float(np.sqrt(ops.integrate(ops.divergence(q.H) ** 2)))
    return m, P, div_H


def _floor_mass(q: _Conserved, grid: Grid, floor: float) -> float:
    return float(np.sum(np.abs(q.rho[q.rho <= floor])) * grid.quadrature_weight)


def _relative(change: float, scale: float) -> float:
    return change / scale if scale > 0 else change


def run(initial: State, config: SolverConfig) -> Trajectory:
    """Integrate to ``t_end`` or an earlier termination, sampling diagnostics
    ``t_end`` または早期終了まで積分し、診断量を記録

    CFL-scaled steps are capped at ``t_end / (2 sample_every)`` so a run that
    reaches ``t_end`` has at least three samples. The run stops with ``vacuum-detected``
    once the mass held at or below the density floor has grown by more than
    1e-6 of the total mass since the start.

    Args:
        initial (State): Initial state
                         初期状態
        config (SolverConfig): Solver settings
                               ソルバ設定

    Returns:
        Trajectory: Samples every ``sample_every`` steps plus the final state,
                    with termination reason and drift statistics in ``metadata``
                    サンプル列、終了理由、ドリフト統計

    Raises:
        ProgrammingError: When MHD mode is requested with n != 3
                          n != 3 で MHD モードが要求された場合
    """
    grid, params = initial.grid, initial.params
    _check_mode(grid, config.mode)
    params.validate(grid.n_dim)
    ops = FieldOps(grid, config.stencil_order)
    floor = config.density_floor
    q = _to_conserved(initial)
    if config.mode is Mode.NS:
        q.H = np.zeros_like(q.H)

    def observe(time: float) -> Tuple[EnergyBreakdown, float]:
        state = _to_state(initial, q, time, floor)
        discrepancy = lorentz_discrepancy(state, config.stencil_order) if config.mode is Mode.MHD else 0.0
        return energy_breakdown(state, config.stencil_order), discrepancy

    m0, P0, div_H0 = _integrals(ops, q)
    # drifts are relative to the total absolute momentum, which stays meaningful when P0 = 0
    P_scale = max(float(np.linalg.norm(P0)), ops.integrate(np.sqrt(np.sum(q.mom ** 2, axis=0))))
    H_norm0 = float(np.sqrt(ops.integrate(np.sum(q.H ** 2, axis=0))))
    first, max_lorentz = observe(initial.time)
    samples = [first]
    t = initial.time
    t_end = initial.time + config.t_end
    dt_cap = config.t_end / (2.0 * config.sample_every)
    termination = Termination.REACHED_T_END
    steps = 0
    max_div_H = div_H0
    floor_mass0 = _floor_mass(q, grid, floor)
    max_floor_mass = floor_mass0
    max_resolution = resolution_fraction(q.rho, grid)
    factors = []

    while t < t_end - 1e-12 * config.t_end:
        if steps >= config.max_steps:
            logger.debug("max_steps=%d reached at t=%s", config.max_steps, t)
            termination = Termination.CFL_COLLAPSE
            break
        try:
            limit = _cfl_conserved(grid, params, q, 1.0, floor)
        except OperationalError:
            termination = Termination.VACUUM_DETECTED
            break
        if config.dt_policy == "fixed":
            dt = config.dt
            if dt > limit:
                logger.debug("fixed dt=%s exceeds CFL limit %s at t=%s", dt, limit, t)
                termination = Termination.CFL_COLLAPSE
                break
        else:
            dt = min(config.cfl_number * limit, dt_cap)
            if dt < 1e-12 * config.t_end:
                logger.debug("CFL step collapsed to %s at t=%s", dt, t)
                termination = Termination.CFL_COLLAPSE
                break
        last = dt >= t_end - t
        dt = min(dt, t_end - t)
        try:
            increment, change = _rk4(grid, params, ops, q, dt, config.mode, floor, config.lorentz_form)
        except DataError as e:
            logger.debug("step %d: %s", steps, e)
            termination = Termination.NAN_DETECTED
            break
        factor = _relaxation_factor(params, ops, q, increment, change, floor) if config.relaxation else 1.0
        q = q.axpy(factor, increment)
        factors.append(factor)
        if not all(np.all(np.isfinite(a)) for a in (q.rho, q.mom, q.H)):
            termination = Termination.NAN_DETECTED
            break
        steps += 1
        # the final step lands on t_end; earlier steps advance by the relaxed step
        t = t_end if last or t_end - (t + factor * dt) <= 1e-12 * config.t_end else t + factor * dt

        floor_mass = _floor_mass(q, grid, floor)
        max_floor_mass = max(max_floor_mass, floor_mass)
        if floor_mass - floor_mass0 > 1e-6 * m0:
            logger.debug("floor region gained %s of mass %s by t=%s", floor_mass - floor_mass0, m0, t)
            termination = Termination.VACUUM_DETECTED
            break

        if steps % config.sample_every == 0 or t >= t_end:
            sample, discrepancy = observe(t)
            samples.append(sample)
            max_lorentz = max(max_lorentz, discrepancy)
            _, _, div_H = _integrals(ops, q)
            max_div_H = max(max_div_H, div_H)
            max_resolution = max(max_resolution, resolution_fraction(q.rho, grid))

    m1, P1, _ = _integrals(ops, q)
    metadata = {
        "steps": steps,
        "t_final": t,
        "mass_drift": _relative(abs(m1 - m0), m0),
        "momentum_drift": _relative(float(np.linalg.norm(P1 - P0)), P_scale),
        "div_H_max": max_div_H,
        "div_H_relative": _relative(max_div_H, H_norm0),
        "div_H_flagged": bool(H_norm0 > 0 and max_div_H > 1e-6 * H_norm0),
        "lorentz_discrepancy_max": max_lorentz,
        "floor_mass_max": max_floor_mass,
        "floor_mass_growth": max_floor_mass - floor_mass0,
        "resolution_fraction_max": max_resolution,
        "resolution_flagged": bool(max_resolution > 0.01),
        "relaxation_min": min(factors, default=1.0),
        "relaxation_max": max(factors, default=1.0),
    }
    logger.debug("run finished: %s after %d steps, %s", termination.value, steps, metadata)
    trajectory = Trajectory(samples, config, params, termination, metadata)
    trajectory.final_state = _to_state(initial, q, t, floor)
    return trajectory
