'''functionals.py
Scalar functionals of a State: conserved quantities, energy components, the
moment of inertia G, the radial momentum F, Q = 4 G E - F^2 and the norms used
by the certificates.
状態のスカラー汎関数（保存量、エネルギー成分、慣性モーメントなど）を評価します。

All functionals use the positive part of the density, which equals the density
for every validated State.
'''

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Tuple

import numpy as np

from .exceptions import DataError, NotSupportedError
from .grid import FieldOps, Params, State, boundary_mass

logger = logging.getLogger(__name__)


def critical_exponents(n_dim: int) -> Tuple[float, float]:
    """Hölder pair (2n/(n+2), 2n/(n-2)) used by the momentum chain; (6/5, 6) for n = 3

    For n = 2 the three-dimensional pair is returned so smoke-test grids still
    fill every column.
    """
    if n_dim < 3:
        return 6.0 / 5.0, 6.0
    return 2.0 * n_dim / (n_dim + 2), 2.0 * n_dim / (n_dim - 2)


@dataclass(frozen=True)
class EnergyBreakdown:
    """Every scalar functional of a state at one instant
    ある時刻における状態の全スカラー汎関数

    ``u_L6`` and ``rho_L65`` hold the critical-exponent integrals
    ∫|u|^{2n/(n-2)} and ∫rho^{2n/(n+2)}; at n = 3 these are ∫|u|^6 and ∫rho^{6/5}.
    """
    t: float
    m: float
    P: Tuple[float, ...]
    E_k: float
    E_m: float
    E_i: float
    E_total: float
    G: float
    F: float
    Q: float
    grad_u_sq: float
    curl_H_sq: float
    u_L6: float
    rho_L65: float
    rho_Lgamma: float
    div_H_sq: float
    dissipation: float
    boundary_mass: float

    @property
    def n_dim(self) -> int:
        return len(self.P)

    @property
    def P_norm(self) -> float:
        return float(np.sqrt(sum(p * p for p in self.P)))

    def as_row(self) -> Dict[str, float]:
        """Flatten to the CSV column order
        CSVの列順に平坦化
        """
        values = asdict(self)
        row: Dict[str, float] = {"t": values["t"], "m": values["m"]}
        for j, p in enumerate(self.P, start=1):
            row[f"P{j}"] = p
        for name in SCALAR_COLUMNS:
            row[name] = values[name]
        return row

    @classmethod
    def from_row(cls, row: Dict[str, float], n_dim: int) -> "EnergyBreakdown":
        P = tuple(float(row[f"P{j}"]) for j in range(1, n_dim + 1))
        kwargs = {name: float(row[name]) for name in SCALAR_COLUMNS}
        return cls(t=float(row["t"]), m=float(row["m"]), P=P, **kwargs)


SCALAR_COLUMNS = (
    "E_k", "E_m", "E_i", "E_total", "G", "F", "Q", "grad_u_sq", "curl_H_sq",
    "u_L6", "rho_L65", "rho_Lgamma", "div_H_sq", "dissipation", "boundary_mass",
)


def csv_columns(n_dim: int) -> List[str]:
    """Stable CSV column order: t, m, P1..Pn, then the scalar functionals
    CSVの安定した列順
    """
    return ["t", "m"] + [f"P{j}" for j in range(1, n_dim + 1)] + list(SCALAR_COLUMNS)


def _positive_density(state: State) -> np.ndarray:
    negative = int(np.count_nonzero(state.rho < 0))
    if negative:
        logger.debug("t=%s: %d nodes with negative density excluded from functionals", state.time, negative)
    return np.maximum(state.rho, 0.0)


def _check_finite(state: State) -> None:
    for name in ("rho", "u", "H"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise DataError(f"{name} contains NaN or Inf at t={state.time}")


def mass(state: State) -> float:
    """Total mass ∫rho dx
    全質量
    """
    return FieldOps(state.grid).integrate(_positive_density(state))


def momentum(state: State) -> np.ndarray:
    """Total momentum ∫rho u dx, one entry per component
    全運動量（成分ごと）
    """
    ops = FieldOps(state.grid)
    rho = _positive_density(state)
    return np.array([ops.integrate(rho * state.u[j]) for j in range(state.grid.n_dim)])


def _curl_H_sq(state: State, ops: FieldOps) -> float:
    if state.grid.n_dim == 3:
        return ops.integrate(np.sum(ops.curl(state.H) ** 2, axis=0))
    if np.any(state.H != 0):
        raise NotSupportedError("A magnetic field is only supported for n = 3")
    return 0.0


def _viscous_density(J: np.ndarray, p: Params) -> np.ndarray:
    sym = J + np.swapaxes(J, 0, 1)
    return 0.5 * p.mu * np.sum(sym ** 2, axis=(0, 1)) + p.lam * np.trace(J) ** 2


def viscous_dissipation(state: State, stencil_order: int = 4) -> float:
    """∫ (mu/2) sum_ij (d_i u_j + d_j u_i)^2 + lambda (div u)^2 dx"""
    ops = FieldOps(state.grid, stencil_order)
    return ops.integrate(_viscous_density(ops.jacobian(state.u), state.params))


def dissipation_decomposition(state: State, stencil_order: int = 4) -> Tuple[float, float]:
    """Return (direct, decomposed) viscous dissipation

    The decomposed form is mu ∫|Du|^2 + (mu + lambda) ∫(div u)^2; on the periodic
    box the two agree to roundoff because the discrete derivatives commute.
    """
    ops = FieldOps(state.grid, stencil_order)
    J = ops.jacobian(state.u)
    divu = np.trace(J)
    p = state.params
    decomposed = p.mu * ops.integrate(np.sum(J ** 2, axis=(0, 1))) + (p.mu + p.lam) * ops.integrate(divu ** 2)
    return viscous_dissipation(state, stencil_order), decomposed


def energy_breakdown(state: State, stencil_order: int = 4) -> EnergyBreakdown:
    """Evaluate every functional of a state
    状態の全汎関数を評価

    Args:
        state (State): State to evaluate
                       評価する状態
        stencil_order (int): Stencil order of the derivative norms
                             微分ノルムのステンシル次数

    Returns:
        EnergyBreakdown: All functionals at ``state.time``
                         ``state.time`` における全汎関数

    Raises:
        DataError: When any field contains NaN or Inf
                   場に NaN または Inf が含まれる場合
    """
    _check_finite(state)
    grid = state.grid
    ops = FieldOps(grid, stencil_order)
    p = state.params
    rho = _positive_density(state)
    u, H = state.u, state.H

    m = ops.integrate(rho)
    P = tuple(ops.integrate(rho * u[j]) for j in range(grid.n_dim))
    u_sq = np.sum(u ** 2, axis=0)
    E_k = 0.5 * ops.integrate(rho * u_sq)
    E_m = 0.5 * ops.integrate(np.sum(H ** 2, axis=0))
    rho_Lgamma = ops.integrate(rho ** p.gamma)
    E_i = p.A / (p.gamma - 1.0) * rho_Lgamma
    E_total = E_k + E_m + E_i
    G = 0.5 * ops.integrate(rho * grid.radius_sq)
    F = ops.integrate(rho * np.sum(u * grid.mesh, axis=0))

    J = ops.jacobian(u)
    grad_u_sq = ops.integrate(np.sum(J ** 2, axis=(0, 1)))
    curl_H_sq = _curl_H_sq(state, ops)
    div_H_sq = ops.integrate(ops.divergence(H) ** 2)
    q_rho, q_u = critical_exponents(grid.n_dim)
    viscous = ops.integrate(_viscous_density(J, p))

    breakdown = EnergyBreakdown(
        t=state.time,
        m=m,
        P=P,
        E_k=E_k,
        E_m=E_m,
        E_i=E_i,
        E_total=E_total,
        G=G,
        F=F,
        Q=4.0 * G * E_total - F * F,
        grad_u_sq=grad_u_sq,
        curl_H_sq=curl_H_sq,
        u_L6=ops.integrate(u_sq ** (q_u / 2.0)),
        rho_L65=ops.integrate(rho ** q_rho),
        rho_Lgamma=rho_Lgamma,
        div_H_sq=div_H_sq,
        dissipation=p.nu * curl_H_sq + viscous,
        boundary_mass=boundary_mass(rho, grid, stencil_order),
    )
    if not all(np.isfinite(v) for v in breakdown.as_row().values()):
        raise DataError(f"Non-finite functional at t={state.time}")
    return breakdown


def electric_field(state: State, stencil_order: int = 4) -> np.ndarray:
    """Induced electric field E = nu curl H - u x H
    誘導電場 E = nu curl H - u x H

    Raises:
        NotSupportedError: When n != 3
                           n != 3 の場合
    """
    if state.grid.n_dim != 3:
        raise NotSupportedError(f"electric_field requires n = 3, got n = {state.grid.n_dim}")
    ops = FieldOps(state.grid, stencil_order)
    return state.params.nu * ops.curl(state.H) - np.cross(state.u, state.H, axis=0)


def lorentz_cross(H: np.ndarray, ops: FieldOps) -> np.ndarray:
    """(curl H) x H"""
    return np.cross(ops.curl(H), H, axis=0)


def lorentz_divergence(H: np.ndarray, ops: FieldOps) -> np.ndarray:
    """Div(H ⊗ H - |H|^2 I / 2)"""
    n = ops.grid.n_dim
    stress = H[:, None] * H[None, :]
    half_sq = 0.5 * np.sum(H ** 2, axis=0)
    for i in range(n):
        stress[i, i] = stress[i, i] - half_sq
    return ops.tensor_divergence(stress)


def lorentz_discrepancy(state: State, stencil_order: int = 4) -> float:
    """L2 norm of the difference between the cross and divergence forms of the Lorentz force

    Zero in exact arithmetic for solenoidal H; on the grid it measures truncation error.
    """
    ops = FieldOps(state.grid, stencil_order)
    diff = lorentz_cross(state.H, ops) - lorentz_divergence(state.H, ops)
    return float(np.sqrt(ops.integrate(np.sum(diff ** 2, axis=0))))
