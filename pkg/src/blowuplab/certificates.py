'''certificates.py
Numerical certificates for the identities and inequalities of the blow-up
argument, evaluated on single states and along trajectories.
状態および軌道上で、爆発論法の恒等式と不等式を数値的に検証します。

Every check returns CertificateReport objects; a report passes when its slack
is at least minus the absolute tolerance of its class.
'''

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .constants import (Constants, compute_constants, constant_K2, constant_sigma,
                        lifespan_bound, q_slope_coefficient, sandwich_coefficient,
                        upper_bound_exponent)
from .exceptions import InterfaceError, ProgrammingError
from .functionals import EnergyBreakdown, critical_exponents, dissipation_decomposition
from .grid import Params, State
from .solver import Trajectory

logger = logging.getLogger(__name__)


class ToleranceClass(str, Enum):
    EXACT = "exact-to-roundoff"
    TRUNCATION = "truncation-error"
    ASYMPTOTIC = "asymptotic"


class Status(str, Enum):
    CHECKED = "checked"
    SKIPPED = "skipped"
    INVALID_DOMAIN = "invalid-domain-truncation"
    NOT_REACHED = "asymptotic-not-reached"


@dataclass(frozen=True)
class Tolerances:
    """Relative tolerances per class
    クラスごとの相対許容誤差

    Args:
        exact (float): Exact-to-roundoff checks
                       丸め誤差レベルの検査
        truncation (float): Quadrature and time-differencing checks
                            打ち切り誤差レベルの検査
        energy_monotone (float): Allowed energy increase per sample, relative to E(0)
                                 サンプルごとに許すエネルギー増加（E(0) 比）
        identity_order (float): Minimum refinement order of identity residuals
                                恒等式残差の最小収束次数
        contamination (float): Largest boundary mass fraction for moment checks
                               モーメント検査で許す境界質量の割合
        envelope_fraction (float): Share of tail samples an asymptotic envelope must satisfy
                                   漸近包絡線を満たすべき末尾サンプルの割合
    """
    exact: float = 1e-12
    truncation: float = 1e-2
    energy_monotone: float = 1e-10
    identity_order: float = 1.8
    contamination: float = 1e-8
    envelope_fraction: float = 0.5

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (np.isfinite(value) and value >= 0):
                raise ProgrammingError(f"Tolerance {f.name} must be non-negative, got {value}")

    def for_class(self, tolerance_class: ToleranceClass) -> float:
        if tolerance_class is ToleranceClass.EXACT:
            return self.exact
        return self.truncation

    def with_overrides(self, overrides: Dict[str, float]) -> "Tolerances":
        """Return a copy with ``key=value`` overrides applied
        ``key=value`` の上書きを適用したコピー

        Raises:
            InterfaceError: On an unknown key or a non-numeric value
                            未知のキーまたは数値でない値の場合
        """
        aliases = {"exact-to-roundoff": "exact", "truncation-error": "truncation"}
        known = {f.name for f in fields(self)}
        changes = {}
        for key, value in overrides.items():
            name = aliases.get(key, key).replace("-", "_")
            if name not in known:
                raise InterfaceError(f"Unknown tolerance class: {key}")
            try:
                changes[name] = float(value)
            except (TypeError, ValueError):
                raise InterfaceError(f"Tolerance {key} must be a number, got {value!r}")
        return replace(self, **changes)


@dataclass
class CertificateReport:
    """Outcome of one inequality or identity check
    1つの不等式または恒等式の検査結果

    ``slack`` is oriented so that non-negative means the inequality holds;
    ``passed`` is None unless ``status`` is ``checked``.
    """
    name: str
    lhs: float
    rhs: float
    slack: float
    passed: Optional[bool]
    tolerance_class: ToleranceClass
    context: Dict[str, Any] = field(default_factory=dict)
    status: Status = Status.CHECKED
    reason: str = ""
    tolerance: float = 0.0
    parts: List["CertificateReport"] = field(default_factory=list)

    @property
    def decides_exit(self) -> bool:
        return self.status is Status.CHECKED and self.tolerance_class is not ToleranceClass.ASYMPTOTIC

    @property
    def margin(self) -> float:
        return self.slack + self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        out = {
            "name": self.name,
            "lhs": _json_float(self.lhs),
            "rhs": _json_float(self.rhs),
            "slack": _json_float(self.slack),
            "pass": self.passed,
            "tolerance_class": self.tolerance_class.value,
            "context": {k: _json_value(v) for k, v in self.context.items()},
            "status": self.status.value,
            "reason": self.reason,
            "tolerance": _json_float(self.tolerance),
        }
        if self.parts:
            out["parts"] = [p.to_dict() for p in self.parts]
        return out


def _json_float(value: float) -> Optional[float]:
    value = float(value)
    return value if math.isfinite(value) else None


def _json_value(value: Any) -> Any:
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _json_float(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_json_value(v) for v in value]
    return str(value)


def _compare(name: str, lhs: float, rhs: float, tolerance_class: ToleranceClass, scale: float,
             tolerances: Tolerances, context: Optional[Dict[str, Any]] = None,
             at_least: bool = False) -> CertificateReport:
    """Report for lhs <= rhs (lhs >= rhs with ``at_least``) with absolute tolerance rel(class) * scale"""
    lhs, rhs = float(lhs), float(rhs)
    tolerance = tolerances.for_class(tolerance_class) * abs(float(scale))
    slack = lhs - rhs if at_least else rhs - lhs
    passed = bool(np.isfinite(slack) and slack >= -tolerance)
    return CertificateReport(name, lhs, rhs, slack, passed, tolerance_class, dict(context or {}),
                             tolerance=tolerance)


def _not_checked(name: str, tolerance_class: ToleranceClass, status: Status, reason: str,
                 context: Optional[Dict[str, Any]] = None) -> CertificateReport:
    logger.debug("%s not checked (%s): %s", name, status.value, reason)
    return CertificateReport(name, math.nan, math.nan, math.nan, None, tolerance_class,
                             dict(context or {}), status, reason)


def _worst(reports: Sequence[CertificateReport]) -> CertificateReport:
    """Report with the smallest margin; reports are scanned in time order so ties keep the earliest"""
    worst = reports[0]
    for r in reports[1:]:
        if r.margin < worst.margin:
            worst = r
    worst.context["samples"] = len(reports)
    worst.context["failures"] = sum(1 for r in reports if r.passed is False)
    worst.passed = not worst.context["failures"]
    return worst


def _params(trajectory: Trajectory) -> Params:
    if trajectory.params is None:
        raise ProgrammingError("Trajectory has no parameters attached")
    return trajectory.params


def _time_derivative(trajectory: Trajectory, name: str) -> np.ndarray:
    return np.gradient(trajectory.column(name), trajectory.times, edge_order=2)


def _require_samples(trajectory: Trajectory, count: int) -> None:
    if len(trajectory.samples) < count:
        raise ProgrammingError(f"Check needs at least {count} samples, got {len(trajectory.samples)}")


def _too_short(trajectory: Trajectory, names: Sequence[str]) -> Optional[List[CertificateReport]]:
    """Skipped reports when the trajectory is too short for time derivatives, else None"""
    count = len(trajectory.samples)
    if count >= 3:
        return None
    reason = f"needs at least 3 samples for time derivatives, got {count}"
    return [_not_checked(nm, ToleranceClass.TRUNCATION, Status.SKIPPED, reason) for nm in names]


# ---------------------------------------------------------------- single state


def check_gradient_lower_bound(breakdown: EnergyBreakdown, constants: Constants,
                               tolerances: Optional[Tolerances] = None) -> CertificateReport:
    """Gradient lower bound ∫|Du|^2 >= K E_i^{-alpha} as a chain of three inequalities
    勾配の下界 ∫|Du|^2 >= K E_i^{-alpha} を3段の不等式として検証

    The parts are the Hölder step |P| <= ||rho||_{q'} ||u||_q, the Jensen step
    ||rho||_{q'} <= K1 E_i^{alpha/2} (both exact on weighted sums) and the
    Sobolev step ||u||_q^2 <= K2 ∫|Du|^2.

    Args:
        breakdown (EnergyBreakdown): Functionals of one state
                                     1状態の汎関数
        constants (Constants): Constants for the same mass and momentum
                               同じ質量・運動量に対する定数
        tolerances (Tolerances, optional): Tolerances
                                           許容誤差

    Returns:
        CertificateReport: Composite report with the three steps in ``parts``
                           3段の結果を ``parts`` に持つ複合レポート
    """
    tolerances = tolerances or Tolerances()
    name = "gradient-lower-bound"
    context = {"t": breakdown.t}
    if breakdown.E_i <= 0:
        return _not_checked(name, ToleranceClass.TRUNCATION, Status.SKIPPED,
                            "E_i = 0: no pressure, the bound is degenerate", context)
    if breakdown.P_norm == 0 or constants.K is None:
        return _not_checked(name, ToleranceClass.TRUNCATION, Status.SKIPPED,
                            "P = 0: K is undefined and the bound says nothing", context)
    n = breakdown.n_dim
    q_rho, q_u = critical_exponents(n)
    alpha = constants.alpha
    rho_norm = breakdown.rho_L65 ** (1.0 / q_rho)
    u_norm = breakdown.u_L6 ** (1.0 / q_u)
    parts = [
        _compare("hoelder-momentum", breakdown.P_norm, rho_norm * u_norm, ToleranceClass.EXACT,
                 rho_norm * u_norm, tolerances, context),
        _compare("jensen-density", rho_norm, constants.K1 * breakdown.E_i ** (alpha / 2.0),
                 ToleranceClass.EXACT, rho_norm, tolerances, context),
        _compare("sobolev-embedding", u_norm ** 2, constant_K2(n) * breakdown.grad_u_sq,
                 ToleranceClass.TRUNCATION, u_norm ** 2, tolerances, context),
    ]
    rhs = constants.K * breakdown.E_i ** (-alpha)
    report = _compare(name, breakdown.grad_u_sq, rhs, ToleranceClass.TRUNCATION, rhs, tolerances, context,
                      at_least=True)
    report.parts = parts
    return report


def check_dissipation_decomposition(state: State, tolerances: Optional[Tolerances] = None,
                                    stencil_order: int = 4) -> CertificateReport:
    """Viscous dissipation equals mu ∫|Du|^2 + (mu + lambda) ∫(div u)^2 to roundoff
    粘性散逸の分解が丸め誤差内で成り立つことを確認
    """
    tolerances = tolerances or Tolerances()
    direct, decomposed = dissipation_decomposition(state, stencil_order)
    # two-sided: slack is minus the absolute difference
    scale = max(abs(direct), abs(decomposed))
    report = _compare("dissipation-decomposition", abs(direct - decomposed), 0.0, ToleranceClass.EXACT,
                      scale, tolerances, {"t": state.time, "direct": direct, "decomposed": decomposed})
    return report


# ---------------------------------------------------------------- trajectories


def check_energy_dissipation(trajectory: Trajectory,
                             tolerances: Optional[Tolerances] = None) -> List[CertificateReport]:
    """Energy monotonicity, the energy identity and the dissipation lower bound
    エネルギー単調性、エネルギー恒等式、散逸下界

    Returns:
        List[CertificateReport]: ``energy-monotonicity``, ``energy-identity`` and
                                 ``energy-dissipation-bound``; all skipped with
                                 fewer than 3 samples
    """
    tolerances = tolerances or Tolerances()
    short = _too_short(trajectory, ("energy-monotonicity", "energy-identity", "energy-dissipation-bound"))
    if short:
        return short
    params = _params(trajectory)
    n = trajectory.n_dim
    t = trajectory.times
    E = trajectory.column("E_total")
    dE = _time_derivative(trajectory, "E_total")
    dissipation = trajectory.column("dissipation")
    scale = energy_rate_scale(trajectory)

    # E(t_{k+1}) <= E(t_k) + energy_monotone * E(0) between consecutive samples
    increases = np.diff(E)
    allowed = tolerances.energy_monotone * abs(float(E[0]))
    k = int(np.argmax(increases))
    monotone = CertificateReport(
        "energy-monotonicity", float(E[k + 1]), float(E[k]), float(-increases[k]),
        bool(np.all(increases <= allowed)), ToleranceClass.EXACT,
        {"t": float(t[k + 1]), "samples": len(E), "failures": int(np.sum(increases > allowed))},
        tolerance=allowed)

    residual = np.abs(dE + dissipation)
    j = int(np.argmax(residual))
    identity = _compare("energy-identity", float(residual[j]), 0.0, ToleranceClass.TRUNCATION, scale,
                        tolerances, {"t": float(t[j]), "max_residual": float(residual[j])})

    try:
        sigma = constant_sigma(params.mu, params.lam, n)
    except ProgrammingError as e:
        return [monotone, identity, _not_checked("energy-dissipation-bound", ToleranceClass.TRUNCATION,
                                                 Status.SKIPPED, str(e))]
    rhs = -params.nu * trajectory.column("curl_H_sq") - sigma * trajectory.column("grad_u_sq")
    bound = _worst([
        _compare("energy-dissipation-bound", dE[i], rhs[i], ToleranceClass.TRUNCATION, scale, tolerances,
                 {"t": float(t[i]), "sigma": sigma}) for i in range(len(t))])
    return [monotone, identity, bound]


def energy_rate_scale(trajectory: Trajectory) -> float:
    """Largest rate at which energy is exchanged between its parts or dissipated"""
    rates = [np.abs(_time_derivative(trajectory, name)) for name in ("E_total", "E_k", "E_m", "E_i")]
    rates.append(trajectory.column("dissipation"))
    return float(max(np.max(r) for r in rates))


def moment_identity_residuals(trajectory: Trajectory) -> Tuple[np.ndarray, np.ndarray]:
    """Residuals |G' - F| and |F' - (2 E_k + (n-2) E_m + n(gamma-1) E_i)| per sample
    モーメント恒等式の残差
    """
    _require_samples(trajectory, 3)
    params = _params(trajectory)
    n = trajectory.n_dim
    dG = _time_derivative(trajectory, "G")
    dF = _time_derivative(trajectory, "F")
    F = trajectory.column("F")
    forcing = (2.0 * trajectory.column("E_k") + (n - 2.0) * trajectory.column("E_m")
               + n * (params.gamma - 1.0) * trajectory.column("E_i"))
    return np.abs(dG - F), np.abs(dF - forcing)


def check_moment_identities(trajectory: Trajectory,
                            tolerances: Optional[Tolerances] = None) -> List[CertificateReport]:
    """G' = F and F' = 2 E_k + E_m + n(gamma-1) E_i along a trajectory
    軌道に沿った G' = F と F' の恒等式

    Both residuals are time-differencing errors of the samples; they are
    meaningless once mass reaches the box boundary, in which case the reports
    are marked ``invalid-domain-truncation``.
    """
    tolerances = tolerances or Tolerances()
    names = ("moment-identity-G", "moment-identity-F")
    short = _too_short(trajectory, names)
    if short:
        return short
    boundary = trajectory.column("boundary_mass") / trajectory.column("m")
    if np.any(boundary >= tolerances.contamination):
        reason = (f"boundary mass fraction {float(boundary.max()):.3g} "
                  f">= {tolerances.contamination:.3g}")
        return [_not_checked(nm, ToleranceClass.TRUNCATION, Status.INVALID_DOMAIN, reason) for nm in names]
    res_G, res_F = moment_identity_residuals(trajectory)
    params = _params(trajectory)
    n = trajectory.n_dim
    t = trajectory.times
    scale_G = float(max(np.max(np.abs(trajectory.column("F"))), np.max(np.abs(_time_derivative(trajectory, "G")))))
    forcing = (2.0 * trajectory.column("E_k") + (n - 2.0) * trajectory.column("E_m")
               + n * (params.gamma - 1.0) * trajectory.column("E_i"))
    scale_F = float(np.max(np.abs(forcing)))
    reports = []
    for nm, res, scale in ((names[0], res_G, scale_G), (names[1], res_F, scale_F)):
        j = int(np.argmax(res))
        reports.append(_compare(nm, float(res[j]), 0.0, ToleranceClass.TRUNCATION, scale, tolerances,
                                {"t": float(t[j]), "max_residual": float(res[j])}))
    return reports


def check_G_bounds(trajectory: Trajectory, constants: Constants,
                   tolerances: Optional[Tolerances] = None) -> CertificateReport:
    """|P|^2/(2m) t^2 + F0 t + G0 <= G(t) <= c_gamma E0 t^2 + F0 t + G0
    慣性モーメント G の上下からの評価

    The worst sample decides; ``context['side']`` names the binding bound.
    """
    tolerances = tolerances or Tolerances()
    first = trajectory.samples[0]
    t = trajectory.times - first.t
    G = trajectory.column("G")
    n = trajectory.n_dim
    c_gamma = sandwich_coefficient(constants.gamma, n)
    base = first.F * t + first.G
    lower = first.P_norm ** 2 / (2.0 * first.m) * t ** 2 + base
    upper = c_gamma * first.E_total * t ** 2 + base
    reports = []
    for i in range(len(t)):
        ctx = {"t": float(trajectory.times[i]), "c_gamma": c_gamma}
        low = _compare("G-sandwich", lower[i], G[i], ToleranceClass.TRUNCATION, G[i], tolerances,
                       dict(ctx, side="lower"))
        high = _compare("G-sandwich", G[i], upper[i], ToleranceClass.TRUNCATION, G[i], tolerances,
                        dict(ctx, side="upper"))
        reports.append(low if low.margin <= high.margin else high)
    return _worst(reports)


def check_Q_chain(trajectory: Trajectory, tolerances: Optional[Tolerances] = None) -> List[CertificateReport]:
    """Q > 0, E_i + E_m <= Q/(4G) and the slope bound d log Q <= k d log G where G' > 0
    Q の正値性、エネルギー上界、傾き評価

    All three reports are skipped when G vanishes at some sample.
    """
    tolerances = tolerances or Tolerances()
    params = _params(trajectory)
    n = trajectory.n_dim
    t = trajectory.times
    G, Q, F = trajectory.column("G"), trajectory.column("Q"), trajectory.column("F")
    if np.any(G <= 0):
        reason = "G = 0 at some sample: the Q chain needs mass away from the origin"
        return [_not_checked(nm, tc, Status.SKIPPED, reason) for nm, tc in (
            ("Q-positive", ToleranceClass.EXACT), ("Q-energy-bound", ToleranceClass.EXACT),
            ("Q-slope", ToleranceClass.TRUNCATION))]
    E_im = trajectory.column("E_i") + trajectory.column("E_m")
    if not np.any(trajectory.column("E_i") > 0):
        reason = "E_i = 0 at every sample"
        return [_not_checked(nm, tc, Status.SKIPPED, reason) for nm, tc in (
            ("Q-positive", ToleranceClass.EXACT), ("Q-energy-bound", ToleranceClass.EXACT),
            ("Q-slope", ToleranceClass.TRUNCATION))]

    positive = [CertificateReport("Q-positive", 0.0, float(Q[i]), float(Q[i]), bool(Q[i] > 0),
                                  ToleranceClass.EXACT, {"t": float(t[i])}) for i in range(len(t))]
    energy = [_compare("Q-energy-bound", E_im[i], Q[i] / (4.0 * G[i]), ToleranceClass.EXACT,
                       trajectory.samples[i].E_total, tolerances, {"t": float(t[i])}) for i in range(len(t))]
    reports = [_worst(positive), _worst(energy)]

    k = q_slope_coefficient(params.gamma, n)
    if len(t) < 3 or np.any(Q <= 0):
        reports.append(_not_checked("Q-slope", ToleranceClass.TRUNCATION, Status.SKIPPED,
                                    "needs at least 3 samples with Q > 0", {"k": k}))
        return reports
    dlogQ = np.gradient(np.log(Q), t, edge_order=2)
    dlogG = np.gradient(np.log(G), t, edge_order=2)
    slope = []
    for i in np.flatnonzero(F > 0):
        scale = abs(dlogQ[i]) + abs(k * dlogG[i])
        slope.append(_compare("Q-slope", dlogQ[i], k * dlogG[i], ToleranceClass.TRUNCATION, scale, tolerances,
                              {"t": float(t[i]), "k": k}))
    if not slope:
        reports.append(_not_checked("Q-slope", ToleranceClass.TRUNCATION, Status.NOT_REACHED,
                                    "G' > 0 at no sample", {"k": k}))
    else:
        reports.append(_worst(slope))
    return reports


def tail_onset(trajectory: Trajectory) -> Optional[int]:
    """Index of the first sample after which F = G' > 0 persists, or None
    F = G' > 0 が以後持続する最初のサンプル番号
    """
    F = trajectory.column("F")
    bad = np.flatnonzero(F <= 0)
    start = 0 if bad.size == 0 else int(bad[-1]) + 1
    if start >= len(F) - 1:
        return None
    return start


def check_EiEm_bounds(trajectory: Trajectory, constants: Constants,
                      tolerances: Optional[Tolerances] = None) -> List[CertificateReport]:
    """Lower and upper bounds on E_i + E_m in terms of G
    G による E_i + E_m の上下界

    The lower bound C1 / (2G)^{n(gamma-1)/2} is checked at every sample. The
    upper bound C2 / G^beta is checked on the tail where G' > 0 persists, with
    C2 taken from Q and G at the tail onset.

    Returns:
        List[CertificateReport]: ``internal-energy-lower`` and ``internal-energy-upper``
    """
    tolerances = tolerances or Tolerances()
    n = trajectory.n_dim
    gamma = constants.gamma
    t = trajectory.times
    G = trajectory.column("G")
    E_im = trajectory.column("E_i") + trajectory.column("E_m")
    reports = []
    if constants.C1 is None:
        reports.append(_not_checked("internal-energy-lower", ToleranceClass.TRUNCATION, Status.SKIPPED,
                                    constants.errors.get("C1", "C1 unavailable")))
    else:
        exponent = n * (gamma - 1.0) / 2.0
        lower = constants.C1 / (2.0 * G) ** exponent
        reports.append(_worst([
            _compare("internal-energy-lower", lower[i], E_im[i], ToleranceClass.TRUNCATION, E_im[i], tolerances,
                     {"t": float(t[i]), "exponent": exponent}) for i in range(len(t))]))

    onset = tail_onset(trajectory)
    beta = upper_bound_exponent(gamma, n)
    if onset is None:
        reports.append(_not_checked("internal-energy-upper", ToleranceClass.TRUNCATION, Status.NOT_REACHED,
                                    "G' > 0 never persists to the end of the run", {"beta": beta}))
        return reports
    s0 = trajectory.samples[onset]
    C2 = 0.25 * s0.Q * s0.G ** (beta - 1.0)
    upper = C2 / G ** beta
    reports.append(_worst([
        _compare("internal-energy-upper", E_im[i], upper[i], ToleranceClass.TRUNCATION, upper[i], tolerances,
                 {"t": float(t[i]), "t_onset": s0.t, "beta": beta, "C2_onset": C2})
        for i in range(onset, len(t))]))
    return reports


def envelope_extinction_time(E0: float, L_env: float, power: float) -> float:
    """Zero of E0 - L t^{p+1} / (p+1), the extinction time implied by E' <= -L t^p"""
    return ((power + 1.0) * E0 / L_env) ** (1.0 / (power + 1.0))


def decay_envelope(trajectory: Trajectory, constants: Constants,
                   tolerances: Optional[Tolerances] = None) -> CertificateReport:
    """Energy decay envelope on the tail
    末尾区間におけるエネルギー減衰の包絡線

    Composing the dissipation bound, the gradient lower bound, the upper bound
    on E_i and the lower bound on G gives
    dE/dt <= -sigma K C2^{-alpha} g(t)^{alpha beta} with g the lower G bound,
    hence dE/dt <= -L t^p with L = sigma K C2^{-alpha} (|P|^2/2m)^{alpha beta}
    and p = 2 alpha beta. The check is asymptotic: it passes when the share of
    tail samples meeting the envelope reaches ``tolerances.envelope_fraction``.
    """
    tolerances = tolerances or Tolerances()
    name = "decay-envelope"
    n = trajectory.n_dim
    gamma = constants.gamma
    printed_power = 1.0 / 3.0 if gamma <= 4.0 / 3.0 else 2.0 / (3.0 * (gamma - 1.0))
    context: Dict[str, Any] = {"printed_power": printed_power}
    if constants.K is None or constants.sigma is None:
        return _not_checked(name, ToleranceClass.ASYMPTOTIC, Status.SKIPPED,
                            constants.errors.get("K", "K or sigma unavailable"), context)
    E_i = trajectory.column("E_i")
    if np.any(E_i <= 0):
        return _not_checked(name, ToleranceClass.ASYMPTOTIC, Status.SKIPPED, "E_i = 0: no pressure", context)
    onset = tail_onset(trajectory)
    if onset is None or len(trajectory.samples) < 3:
        return _not_checked(name, ToleranceClass.ASYMPTOTIC, Status.NOT_REACHED,
                            "G' > 0 never persists to the end of the run", context)

    first = trajectory.samples[0]
    s0 = trajectory.samples[onset]
    alpha, beta = constants.alpha, upper_bound_exponent(gamma, n)
    C2 = 0.25 * s0.Q * s0.G ** (beta - 1.0)
    rate = constants.sigma * constants.K * C2 ** (-alpha)
    t = trajectory.times - first.t
    g = np.maximum(first.P_norm ** 2 / (2.0 * first.m) * t ** 2 + first.F * t + first.G, 0.0)
    envelope = -rate * g ** (alpha * beta)
    dE = _time_derivative(trajectory, "E_total")
    scale = float(np.max(np.abs(dE[onset:]))) or 1.0
    tol = tolerances.truncation * scale
    met = dE[onset:] <= envelope[onset:] + tol
    fraction = float(np.mean(met))

    power = 2.0 * alpha * beta
    L_env = rate * (first.P_norm ** 2 / (2.0 * first.m)) ** (alpha * beta)
    context.update({
        "t_onset": s0.t, "tail_samples": int(met.size), "alpha": alpha, "beta": beta,
        "power": power, "L_env": L_env, "C2_onset": C2,
    })
    if L_env > 0:
        T_env = envelope_extinction_time(first.E_total, L_env, power)
        T_star = lifespan_bound(first.E_total, constants.sigma, constants.K, gamma, n)
        context.update({"T_env": T_env, "T_star": T_star, "envelope_within_linear": bool(T_env <= T_star)})
    required = tolerances.envelope_fraction
    return CertificateReport(name, fraction, required, fraction - required, bool(fraction >= required),
                             ToleranceClass.ASYMPTOTIC, context)


def residual_refinement_order(coarse: Trajectory, fine: Trajectory,
                              residuals: Callable[[Trajectory], np.ndarray]) -> float:
    """Observed order of a residual between two runs whose sample spacing differs
    サンプル間隔の異なる2つの軌道から残差の収束次数を求める

    ``residuals`` maps a trajectory to per-sample residuals; the maximum is compared.
    """
    rc = float(np.max(residuals(coarse)))
    rf = float(np.max(residuals(fine)))
    hc = float(np.max(np.diff(coarse.times)))
    hf = float(np.max(np.diff(fine.times)))
    if rf == 0 or rc == 0:
        return math.inf
    return math.log(rc / rf) / math.log(hc / hf)


def energy_identity_residual(trajectory: Trajectory) -> np.ndarray:
    """|dE/dt + dissipation| per sample"""
    return np.abs(_time_derivative(trajectory, "E_total") + trajectory.column("dissipation"))


# ---------------------------------------------------------------- suite


def thread_count() -> int:
    """Worker threads for :func:`run_suite`, from ``BLOWUPLAB_THREADS`` (default 1)

    Raises:
        InterfaceError: When the variable is not a positive integer
                        環境変数が正の整数でない場合
    """
    raw = os.environ.get("BLOWUPLAB_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise InterfaceError(f"BLOWUPLAB_THREADS must be a positive integer, got {raw!r}")
    if value < 1:
        raise InterfaceError(f"BLOWUPLAB_THREADS must be a positive integer, got {raw!r}")
    return value


def trajectory_constants(trajectory: Trajectory) -> Constants:
    first = trajectory.samples[0]
    return compute_constants(_params(trajectory), first.m, first.P, first.E_total, first.G, first.F, first.Q,
                             trajectory.n_dim)


def _gradient_bound_over(trajectory: Trajectory, constants: Constants,
                         tolerances: Tolerances) -> List[CertificateReport]:
    per_sample = [check_gradient_lower_bound(s, constants, tolerances) for s in trajectory.samples]
    checked = [r for r in per_sample if r.status is Status.CHECKED]
    if not checked:
        return [per_sample[0]]
    out = [_worst(checked)]
    for k in range(len(checked[0].parts)):
        out.append(_worst([r.parts[k] for r in checked]))
    out[0].parts = []
    return out


def run_suite(trajectory: Trajectory, tolerances: Optional[Tolerances] = None,
              constants: Optional[Constants] = None, threads: Optional[int] = None) -> List[CertificateReport]:
    """Run every trajectory certificate and return the reports in a fixed order
    全ての軌道証明書を実行し、固定順でレポートを返す

    Args:
        trajectory (Trajectory): Trajectory with parameters attached
                                 パラメータ付きの軌道
        tolerances (Tolerances, optional): Tolerances
                                           許容誤差
        constants (Constants, optional): Constants; computed from the first sample when omitted
                                         定数（省略時は最初のサンプルから計算）
        threads (int, optional): Worker threads; ``BLOWUPLAB_THREADS`` when omitted
                                 ワーカースレッド数

    Returns:
        List[CertificateReport]: Reports; independent checks run concurrently. Checks
                                 built on time derivatives are skipped when the
                                 trajectory has fewer than 3 samples
                                 レポート一覧
    """
    tolerances = tolerances or Tolerances()
    constants = constants or trajectory_constants(trajectory)
    threads = threads or thread_count()
    jobs: List[Callable[[], Any]] = [
        lambda: _gradient_bound_over(trajectory, constants, tolerances),
        lambda: check_energy_dissipation(trajectory, tolerances),
        lambda: check_moment_identities(trajectory, tolerances),
        lambda: [check_G_bounds(trajectory, constants, tolerances)],
        lambda: check_Q_chain(trajectory, tolerances),
        lambda: check_EiEm_bounds(trajectory, constants, tolerances),
        lambda: [decay_envelope(trajectory, constants, tolerances)],
    ]
    logger.debug("running %d certificate groups on %d thread(s)", len(jobs), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(job) for job in jobs]
        reports: List[CertificateReport] = []
        for future in futures:
            reports.extend(future.result())
    return reports


def suite_passed(reports: Sequence[CertificateReport]) -> bool:
    """True when every report that decides the exit status passed"""
    return all(r.passed for r in reports if r.decides_exit)
