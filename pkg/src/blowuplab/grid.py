'''grid.py
Periodic box discretization, physical parameters, field state and the discrete
differential operators used everywhere else in the package.
周期箱の離散化、物理パラメータ、場の状態、および離散微分演算子を提供します。

Fields are numpy arrays: a scalar field has shape ``grid.shape`` and a vector
field has shape ``(n_dim,) + grid.shape`` with the component on the leading axis.
'''

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np

from .exceptions import DataError, NotSupportedError, ProgrammingError


# Central first-derivative weights, f'(x_i) = sum_k w_k (f_{i+k} - f_{i-k}) / h
STENCIL_WEIGHTS: Dict[int, Tuple[Tuple[int, float], ...]] = {
    2: ((1, 0.5),),
    4: ((1, 2.0 / 3.0), (2, -1.0 / 12.0)),
}


@dataclass(frozen=True)
class Grid:
    """Periodic box [-L, L)^n sampled with N points per axis
    N点/軸でサンプリングした周期箱 [-L, L)^n

    Args:
        n_dim (int): Number of space dimensions
                     空間次元
        half_extent (float): Half side length L of the box
                             箱の半辺長 L
        points_per_axis (int): Number of nodes N on each axis
                               各軸の節点数 N
    """
    n_dim: int
    half_extent: float
    points_per_axis: int

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.points_per_axis

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points_per_axis,) * self.n_dim

    @property
    def quadrature_weight(self) -> float:
        return self.spacing ** self.n_dim

    @property
    def coordinates(self) -> np.ndarray:
        """Per-axis sample positions x_i = -L + i h
        各軸のサンプル位置 x_i = -L + i h
        """
        return -self.half_extent + self.spacing * np.arange(self.points_per_axis, dtype=np.float64)

    @cached_property
    def mesh(self) -> np.ndarray:
        """Node coordinates as a vector field of shape (n,) + shape
        節点座標をベクトル場として返す
        """
        axes = [self.coordinates] * self.n_dim
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def radius_sq(self) -> np.ndarray:
        return np.sum(self.mesh ** 2, axis=0)

    @property
    def total_weight(self) -> float:
        return self.quadrature_weight * self.points_per_axis ** self.n_dim


def make_grid(n_dim: int, half_extent: float, points_per_axis: int) -> Grid:
    """Create a periodic grid after checking its preconditions
    前提条件を確認してから周期グリッドを作成

    Args:
        n_dim (int): Space dimension (2 is accepted for smoke tests)
                     空間次元（2はスモークテスト用に許可）
        half_extent (float): Half side length L > 0
                             箱の半辺長 L > 0
        points_per_axis (int): Even N >= 8
                               偶数の N >= 8

    Returns:
        Grid: The grid
              グリッド

    Raises:
        ProgrammingError: When N is odd or smaller than 8, L is not positive or n < 2
                          N が奇数または8未満、L が正でない、n < 2 の場合
    """
    if int(n_dim) != n_dim or n_dim < 2:
        raise ProgrammingError(f"n_dim must be an integer >= 2, got {n_dim}")
    if int(points_per_axis) != points_per_axis or points_per_axis < 8:
        raise ProgrammingError(f"points_per_axis must be an integer >= 8, got {points_per_axis}")
    if points_per_axis % 2 != 0:
        raise ProgrammingError(f"points_per_axis must be even, got {points_per_axis}")
    if not np.isfinite(half_extent) or half_extent <= 0:
        raise ProgrammingError(f"half_extent must be positive, got {half_extent}")
    return Grid(int(n_dim), float(half_extent), int(points_per_axis))


@dataclass(frozen=True)
class Params:
    """Physical coefficients of the barotropic system
    バロトロピック系の物理係数

    Args:
        A (float): Pressure coefficient in p = A rho^gamma
                   状態方程式 p = A rho^gamma の係数
        gamma (float): Adiabatic exponent
                       断熱指数
        mu (float): Viscosity
                    粘性係数
        lam (float): Second viscosity (``lambda`` in JSON)
                     第二粘性係数（JSONでは ``lambda``）
        nu (float): Magnetic diffusivity
                    磁気拡散係数
    """
    A: float = 1.0
    gamma: float = 2.0
    mu: float = 1e-3
    lam: float = 0.0
    nu: float = 0.0

    def validate(self, n_dim: int) -> "Params":
        """Check A > 0, gamma > 1, mu > 0, lambda + 2 mu / n > 0 and nu >= 0
        パラメータの妥当性を確認

        Raises:
            ProgrammingError: When any coefficient is out of range
                              係数が範囲外の場合
        """
        if not self.A > 0:
            raise ProgrammingError(f"A must be positive, got {self.A}")
        if not self.gamma > 1:
            raise ProgrammingError(f"gamma must exceed 1, got {self.gamma}")
        if not self.mu > 0:
            raise ProgrammingError(f"mu must be positive, got {self.mu}")
        if not self.lam + 2.0 * self.mu / n_dim > 0:
            raise ProgrammingError(
                f"lambda + 2 mu / n must be positive, got lambda={self.lam}, mu={self.mu}, n={n_dim}")
        if not self.nu >= 0:
            raise ProgrammingError(f"nu must be non-negative, got {self.nu}")
        return self

    def as_dict(self) -> Dict[str, float]:
        return {"A": self.A, "gamma": self.gamma, "mu": self.mu, "lambda": self.lam, "nu": self.nu}

    @classmethod
    def from_dict(cls, values: Dict[str, float]) -> "Params":
        known = {"A", "gamma", "mu", "lambda", "nu"}
        unknown = set(values) - known
        if unknown:
            raise DataError(f"Unknown parameter keys: {sorted(unknown)}")
        kwargs = {("lam" if k == "lambda" else k): float(v) for k, v in values.items()}
        return cls(**kwargs)


@dataclass(frozen=True, eq=False)
class State:
    """Density, velocity and magnetic field on a grid at one instant
    ある時刻のグリッド上の密度、速度、磁場

    Use :func:`make_state` to build a validated instance.
    検証済みのインスタンスは :func:`make_state` で作成してください。
    """
    grid: Grid
    rho: np.ndarray
    u: np.ndarray
    H: np.ndarray
    params: Params
    time: float = 0.0

    def with_fields(self, **changes) -> "State":
        return replace(self, **changes)


def _check_scalar(values: np.ndarray, grid: Grid, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.shape != grid.shape:
        raise DataError(f"{name} has shape {values.shape}, expected {grid.shape}")
    return values


def _check_vector(values: np.ndarray, grid: Grid, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    expected = (grid.n_dim,) + grid.shape
    if values.shape != expected:
        raise DataError(f"{name} has shape {values.shape}, expected {expected}")
    return values


def make_state(grid: Grid, rho: np.ndarray, u: np.ndarray, H: Optional[np.ndarray] = None,
               params: Optional[Params] = None, time: float = 0.0) -> State:
    """Validate fields and build a State
    場を検証して State を作成

    Args:
        grid (Grid): Grid the fields live on
                     場が定義されるグリッド
        rho (np.ndarray): Density, non-negative
                          非負の密度
        u (np.ndarray): Velocity of shape (n,) + grid.shape
                        速度場
        H (np.ndarray, optional): Magnetic field; zero when omitted
                                  磁場（省略時はゼロ）
        params (Params, optional): Physical coefficients
                                   物理係数
        time (float): Time stamp
                      時刻

    Returns:
        State: Validated state
               検証済みの状態

    Raises:
        DataError: On shape mismatch, non-finite values or negative density
                   形状不一致、非有限値、負の密度の場合
    """
    rho = _check_scalar(rho, grid, "rho")
    u = _check_vector(u, grid, "u")
    H = np.zeros_like(u) if H is None else _check_vector(H, grid, "H")
    for name, values in (("rho", rho), ("u", u), ("H", H)):
        if not np.all(np.isfinite(values)):
            raise DataError(f"{name} contains NaN or Inf")
    if np.any(rho < 0):
        raise DataError(f"rho must be non-negative, min is {rho.min()}")
    return State(grid, rho, u, H, params if params is not None else Params(), float(time))


@dataclass(frozen=True)
class FieldOps:
    """Central-difference operators with periodic wrap
    周期境界付き中心差分演算子

    Args:
        grid (Grid): Grid the operators act on
                     演算子が作用するグリッド
        stencil_order (int): 2 or 4, applied uniformly to grad, div and curl
                             2 または 4（grad, div, curl に共通）
    """
    grid: Grid
    stencil_order: int = 4

    def __post_init__(self):
        if self.stencil_order not in STENCIL_WEIGHTS:
            raise ProgrammingError(f"stencil_order must be 2 or 4, got {self.stencil_order}")

    @property
    def width(self) -> int:
        return self.stencil_order // 2

    def derivative(self, values: np.ndarray, axis: int) -> np.ndarray:
        """First derivative of a scalar field along one axis"""
        out = np.zeros_like(values)
        for k, w in STENCIL_WEIGHTS[self.stencil_order]:
            out += w * (np.roll(values, -k, axis=axis) - np.roll(values, k, axis=axis))
        return out / self.grid.spacing

    def gradient(self, values: np.ndarray) -> np.ndarray:
        values = _check_scalar(values, self.grid, "field")
        return np.stack([self.derivative(values, a) for a in range(self.grid.n_dim)])

    def jacobian(self, vfield: np.ndarray) -> np.ndarray:
        """Array J with J[i, j] = d_i V_j"""
        vfield = _check_vector(vfield, self.grid, "vector field")
        n = self.grid.n_dim
        return np.stack([np.stack([self.derivative(vfield[j], i) for j in range(n)]) for i in range(n)])

    def divergence(self, vfield: np.ndarray) -> np.ndarray:
        vfield = _check_vector(vfield, self.grid, "vector field")
        out = self.derivative(vfield[0], 0)
        for a in range(1, self.grid.n_dim):
            out = out + self.derivative(vfield[a], a)
        return out

    def tensor_divergence(self, tensor: np.ndarray) -> np.ndarray:
        """Vector with component j equal to sum_i d_i T_ij"""
        n = self.grid.n_dim
        out = []
        for j in range(n):
            acc = self.derivative(tensor[0, j], 0)
            for i in range(1, n):
                acc = acc + self.derivative(tensor[i, j], i)
            out.append(acc)
        return np.stack(out)

    def curl(self, vfield: np.ndarray) -> np.ndarray:
        if self.grid.n_dim != 3:
            raise NotSupportedError(f"curl is defined for n = 3 only, got n = {self.grid.n_dim}")
        vfield = _check_vector(vfield, self.grid, "vector field")
        d = self.derivative
        return np.stack([
            d(vfield[2], 1) - d(vfield[1], 2),
            d(vfield[0], 2) - d(vfield[2], 0),
            d(vfield[1], 0) - d(vfield[0], 1),
        ])

    def integrate(self, values: np.ndarray) -> float:
        values = _check_scalar(values, self.grid, "field")
        return float(np.sum(values) * self.grid.quadrature_weight)


def gradient(values: np.ndarray, grid: Grid, stencil_order: int = 4) -> np.ndarray:
    """Gradient of a periodic scalar field; non-periodic inputs such as x_1 are unsupported
    周期的なスカラー場の勾配（x_1 のような非周期的入力は非対応）

    Raises:
        DataError: When the field does not match the grid
                   場がグリッドと一致しない場合
    """
    return FieldOps(grid, stencil_order).gradient(values)


def divergence(vfield: np.ndarray, grid: Grid, stencil_order: int = 4) -> np.ndarray:
    return FieldOps(grid, stencil_order).divergence(vfield)


def curl(vfield: np.ndarray, grid: Grid, stencil_order: int = 4) -> np.ndarray:
    """Curl of a vector field on a three-dimensional grid
    3次元グリッド上のベクトル場の回転

    Raises:
        NotSupportedError: When n != 3
                           n != 3 の場合
    """
    return FieldOps(grid, stencil_order).curl(vfield)


def integrate(values: np.ndarray, grid: Grid) -> float:
    """Tensor-product rectangle rule with weight h^n per node
    各節点の重み h^n による直積矩形則
    """
    return FieldOps(grid).integrate(values)


def boundary_mask(grid: Grid, width: int) -> np.ndarray:
    """Nodes within ``width`` nodes of any face of the box"""
    idx = np.arange(grid.points_per_axis)
    near = (idx < width) | (idx >= grid.points_per_axis - width)
    mask = np.zeros(grid.shape, dtype=bool)
    for a in range(grid.n_dim):
        shape = [1] * grid.n_dim
        shape[a] = grid.points_per_axis
        mask |= near.reshape(shape)
    return mask


def boundary_mass(rho: np.ndarray, grid: Grid, stencil_order: int = 4) -> float:
    """Mass within one stencil width of the box boundary (contamination monitor)
    箱の境界から1ステンシル幅以内の質量（境界汚染モニタ）
    """
    rho = _check_scalar(rho, grid, "rho")
    mask = boundary_mask(grid, stencil_order // 2)
    return float(np.sum(np.abs(rho[mask])) * grid.quadrature_weight)


def resolution_fraction(values: np.ndarray, grid: Grid) -> float:
    """Second-difference energy fraction, 1 for a pure Nyquist mode and ~0 for resolved data"""
    values = _check_scalar(values, grid, "field")
    fluct = values - values.mean()
    denom = np.sum(fluct ** 2)
    if denom == 0:
        return 0.0
    total = 0.0
    for a in range(grid.n_dim):
        second = np.roll(values, -1, axis=a) - 2.0 * values + np.roll(values, 1, axis=a)
        total += np.sum(second ** 2)
    return float(total / (16.0 * grid.n_dim * denom))
