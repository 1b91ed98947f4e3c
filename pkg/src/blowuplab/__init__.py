from .exceptions import (
    Error,
    InterfaceError,
    SimulationError,
    DataError,
    OperationalError,
    ProgrammingError,
    NotSupportedError
)
from .grid import Grid, Params, State, FieldOps, make_grid, make_state, gradient, divergence, curl, integrate
from .functionals import EnergyBreakdown, mass, momentum, energy_breakdown, electric_field
from .constants import Constants, compute_constants, lifespan_bound
from .solver import Mode, SolverConfig, Termination, Trajectory, rhs, energy_rate, step_rk4, cfl_dt, run
from .certificates import CertificateReport, Tolerances, ToleranceClass, run_suite
from .scenarios import GaussianScenario, ShearScenario, EquilibriumScenario, build_state, gaussian_reference

__version__ = "0.1.0"


def simulate(scenario, config: SolverConfig) -> Trajectory:
    """
    Build a scenario's initial state and integrate it.
    シナリオの初期状態を作成して時間積分します。

    Args:
        scenario: GaussianScenario, ShearScenario or EquilibriumScenario
                  シナリオ
        config (SolverConfig): Solver settings
                               ソルバ設定

    Returns:
        Trajectory: The resulting trajectory
                    得られた軌道
    """
    return run(build_state(scenario), config)


__all__ = [
    'simulate',
    'Grid',
    'Params',
    'State',
    'FieldOps',
    'make_grid',
    'make_state',
    'gradient',
    'divergence',
    'curl',
    'integrate',
    'EnergyBreakdown',
    'mass',
    'momentum',
    'energy_breakdown',
    'electric_field',
    'Constants',
    'compute_constants',
    'lifespan_bound',
    'Mode',
    'SolverConfig',
    'Termination',
    'Trajectory',
    'rhs',
    'energy_rate',
    'step_rk4',
    'cfl_dt',
    'run',
    'CertificateReport',
    'Tolerances',
    'ToleranceClass',
    'run_suite',
    'GaussianScenario',
    'ShearScenario',
    'EquilibriumScenario',
    'build_state',
    'gaussian_reference',
    'Error',
    'InterfaceError',
    'SimulationError',
    'DataError',
    'OperationalError',
    'ProgrammingError',
    'NotSupportedError'
]
