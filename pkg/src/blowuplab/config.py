'''config.py
Run configuration: scenario, grid, parameters, solver settings, outputs and
tolerance overrides, read from JSON and merged with command-line overrides.
実行設定（シナリオ、グリッド、パラメータ、ソルバ設定、出力先、許容誤差）を扱います。
'''

import logging
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, Optional

from .exceptions import Error, InterfaceError
from .grid import Params, make_grid
from .scenarios import GaussianScenario, Scenario, get_scenario, scenario_from_dict, scenario_to_dict
from .solver import Mode, SolverConfig
from .store import read_json

logger = logging.getLogger(__name__)

_SECTIONS = {"scenario", "grid", "params", "solver", "outputs", "tolerances"}
_GRID_KEYS = {"n_dim", "half_extent", "points_per_axis"}


@dataclass(frozen=True)
class Outputs:
    """Where a run writes its files
    実行結果の出力先
    """
    csv_path: str = "trajectory.csv"
    json_path: str = "run.json"
    report_path: str = "report.json"
    snapshot_dir: Optional[str] = None

    def under(self, directory: str) -> "Outputs":
        """Paths re-rooted under ``directory`` (absolute paths are kept)"""
        def root(path: Optional[str]) -> Optional[str]:
            if path is None or os.path.isabs(path):
                return path
            return os.path.join(directory, path)
        return Outputs(root(self.csv_path), root(self.json_path), root(self.report_path), root(self.snapshot_dir))


@dataclass(frozen=True)
class RunConfig:
    """Everything a ``simulate`` or ``check`` invocation needs
    ``simulate`` / ``check`` の実行に必要な設定一式
    """
    scenario: Scenario = field(default_factory=lambda: get_scenario("gaussian-mhd"))
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(t_end=0.1))
    outputs: Outputs = field(default_factory=Outputs)
    tolerances: Dict[str, float] = field(default_factory=dict)

    @property
    def params(self) -> Params:
        return self.scenario.params

    def as_dict(self) -> Dict[str, Any]:
        return {
            "scenario": scenario_to_dict(self.scenario),
            "solver": self.solver.as_dict(),
            "outputs": {f.name: getattr(self.outputs, f.name) for f in fields(Outputs)},
            "tolerances": dict(self.tolerances),
        }


def _section(raw: Dict[str, Any], name: str) -> Dict[str, Any]:
    value = raw.get(name, {})
    if not isinstance(value, dict):
        raise InterfaceError(f"Config section '{name}' must be an object")
    return value


def _validated(scenario: Scenario) -> Scenario:
    make_grid(scenario.n_dim, scenario.half_extent, scenario.points_per_axis)
    scenario.params.validate(scenario.n_dim)
    return scenario


def _resize_velocity(scenario: Scenario, n_dim: int) -> Dict[str, Any]:
    if not isinstance(scenario, GaussianScenario) or len(scenario.U) == n_dim:
        return {}
    U = list(scenario.U[:n_dim]) + [0.0] * max(0, n_dim - len(scenario.U))
    changes: Dict[str, Any] = {"U": tuple(U)}
    if n_dim != 3:
        changes["magnetic_profile"] = "zero"
    return changes


def apply_overrides(config: RunConfig, mode: Optional[str] = None, n_dim: Optional[int] = None,
                    points_per_axis: Optional[int] = None, gamma: Optional[float] = None,
                    tolerances: Optional[Dict[str, float]] = None) -> RunConfig:
    """Apply command-line overrides to a loaded config
    コマンドラインの上書きを適用

    Raises:
        InterfaceError: When the resulting config is invalid
                        結果の設定が不正な場合
    """
    scenario, solver = config.scenario, config.solver
    try:
        changes: Dict[str, Any] = {}
        if n_dim is not None:
            changes.update(_resize_velocity(scenario, n_dim))
            changes["n_dim"] = n_dim
        if points_per_axis is not None:
            changes["points_per_axis"] = points_per_axis
        if gamma is not None:
            changes["params"] = replace(scenario.params, gamma=gamma)
        if changes:
            scenario = _validated(replace(scenario, **changes))
        if mode is not None:
            solver = replace(solver, mode=Mode(mode))
    except (Error, ValueError) as e:
        raise InterfaceError(f"Invalid override: {str(e)}")
    merged = dict(config.tolerances)
    merged.update(tolerances or {})
    return replace(config, scenario=scenario, solver=solver, tolerances=merged)


def parse_run_config(raw: Any) -> RunConfig:
    """Build a RunConfig from a decoded JSON document
    デコード済み JSON から RunConfig を作成

    ``scenario`` is either a library name or an inline object; ``grid`` and
    ``params`` override the scenario's own values.

    Raises:
        InterfaceError: On unknown sections or invalid values
                        未知のセクションまたは不正な値の場合
    """
    if not isinstance(raw, dict):
        raise InterfaceError("Config must be a JSON object")
    unknown = set(raw) - _SECTIONS
    if unknown:
        raise InterfaceError(f"Unknown config sections: {sorted(unknown)}")
    try:
        named = raw.get("scenario", "gaussian-mhd")
        scenario = get_scenario(named) if isinstance(named, str) else scenario_from_dict(named)

        grid = _section(raw, "grid")
        bad_grid = set(grid) - _GRID_KEYS
        if bad_grid:
            raise InterfaceError(f"Unknown grid keys: {sorted(bad_grid)}")
        changes: Dict[str, Any] = dict(grid)
        if "n_dim" in grid:
            changes.update(_resize_velocity(scenario, int(grid["n_dim"])))
        params = _section(raw, "params")
        if params:
            merged = scenario.params.as_dict()
            merged.update(params)
            changes["params"] = Params.from_dict(merged)
        scenario = _validated(replace(scenario, **changes) if changes else scenario)

        solver_values = dict(_section(raw, "solver"))
        solver = SolverConfig(**solver_values) if solver_values else SolverConfig(t_end=0.1)
        outputs = Outputs(**_section(raw, "outputs"))
        tolerances = {str(k): float(v) for k, v in _section(raw, "tolerances").items()}
    except InterfaceError:
        raise
    except (Error, TypeError, ValueError) as e:
        raise InterfaceError(f"Invalid config: {str(e)}")
    return RunConfig(scenario, solver, outputs, tolerances)


def load_run_config(path: Optional[str]) -> RunConfig:
    """Read a RunConfig from a JSON file, or the default config when ``path`` is None
    JSON ファイルから RunConfig を読み込む（None なら既定値）

    Raises:
        InterfaceError: When the file is malformed or invalid
                        ファイルが不正な場合
        OperationalError: When the file cannot be read
                          ファイルを読み込めない場合
    """
    if path is None:
        return RunConfig()
    logger.debug("loading config %s", path)
    return parse_run_config(read_json(path))
