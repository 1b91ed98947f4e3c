import math

import numpy as np
import pytest
import sympy as sp

from blowuplab import (Params, ShearScenario, SolverConfig, Termination, Trajectory, cfl_dt, energy_breakdown,
                       energy_rate, make_grid, make_state, rhs, run, step_rk4)
from blowuplab.certificates import Tolerances, energy_identity_residual, residual_refinement_order
from blowuplab.exceptions import DataError, ProgrammingError
from blowuplab.functionals import lorentz_discrepancy
from blowuplab.grid import divergence, integrate
from blowuplab.scenarios import build_state, get_scenario
from blowuplab.solver import Mode


def _manufactured_forcing(params):
    # exact d rho/dt and d(rho u)/dt of the barotropic Navier-Stokes system for a periodic field on [-pi, pi)^2
    x, y = sp.symbols("x y")
    rho = 2 + sp.sin(x) * sp.cos(y)
    u = [sp.Rational(1, 2) * sp.sin(y) + sp.Rational(1, 5) * sp.cos(x),
         sp.Rational(3, 10) * sp.cos(x) * sp.sin(y)]
    X = [x, y]
    div_u = sum(sp.diff(u[i], X[i]) for i in range(2))
    p = params.A * rho ** params.gamma
    drho = -sum(sp.diff(rho * u[i], X[i]) for i in range(2))
    dmom = []
    for j in range(2):
        total = 0
        for i in range(2):
            flux = rho * u[j] * u[i] - params.mu * (sp.diff(u[j], X[i]) + sp.diff(u[i], X[j]))
            if i == j:
                flux += p - params.lam * div_u
            total += sp.diff(flux, X[i])
        dmom.append(-total)
    fields = [rho] + u + [drho] + dmom
    return [sp.lambdify((x, y), f, "numpy") for f in fields]


def _evaluate(fn, grid):
    X, Y = grid.mesh
    return fn(X, Y) * np.ones_like(X)


def test_manufactured_solution_order():
    """The semi-discrete right-hand side converges at fourth order against symbolic forcing
    半離散右辺が記号的に導いた強制項に4次で収束することのテスト
    """
    params = Params(A=1.0, gamma=2.0, mu=0.1, lam=0.05)
    rho_f, u1_f, u2_f, drho_f, dm1_f, dm2_f = _manufactured_forcing(params)
    errors = []
    for N in (32, 64):
        grid = make_grid(2, math.pi, N)
        state = make_state(grid, _evaluate(rho_f, grid),
                           np.stack([_evaluate(u1_f, grid), _evaluate(u2_f, grid)]), None, params)
        drho, dmom, dH = rhs(state, SolverConfig(mode=Mode.NS))
        np.testing.assert_array_equal(dH, 0.0)
        err = max(np.max(np.abs(drho - _evaluate(drho_f, grid))),
                  np.max(np.abs(dmom[0] - _evaluate(dm1_f, grid))),
                  np.max(np.abs(dmom[1] - _evaluate(dm2_f, grid))))
        errors.append(err)
    assert math.log2(errors[0] / errors[1]) >= 3.5


def test_rhs_conserves_and_keeps_div_H():
    """Mass and momentum tendencies integrate to zero and dH/dt is discretely solenoidal
    質量・運動量の時間微分の積分がゼロで dH/dt が離散的に発散ゼロであることのテスト
    """
    state = build_state(get_scenario("gaussian-mhd"))
    drho, dmom, dH = rhs(state)
    grid = state.grid
    assert abs(integrate(drho, grid)) < 1e-12
    for j in range(3):
        assert abs(integrate(dmom[j], grid)) < 1e-10
    assert np.max(np.abs(divergence(dH, grid))) < 1e-10
    assert np.max(np.abs(dH)) > 0


def test_lorentz_forms_agree_to_truncation():
    """The cross form of the Lorentz force differs from the divergence form by truncation error only
    ローレンツ力の外積形と発散形の差が打ち切り誤差程度であることのテスト
    """
    state = build_state(get_scenario("gaussian-mhd"))
    _, div_form, _ = rhs(state, SolverConfig(lorentz_form="divergence"))
    _, cross_form, _ = rhs(state, SolverConfig(lorentz_form="cross"))
    scale = np.max(np.abs(div_form))
    assert np.max(np.abs(div_form - cross_form)) < 0.5 * scale


def test_mhd_requires_three_dimensions():
    """MHD mode is refused for n = 2
    n = 2 では MHD モードが拒否されることのテスト
    """
    grid = make_grid(2, 1.0, 8)
    state = make_state(grid, np.ones(grid.shape), np.zeros((2,) + grid.shape))
    with pytest.raises(ProgrammingError):
        rhs(state, SolverConfig(mode=Mode.MHD))
    with pytest.raises(ProgrammingError):
        run(state, SolverConfig(mode=Mode.MHD, t_end=0.1))


def test_equilibrium_is_stationary():
    """Uniform density at rest stays exactly at rest
    静止した一様密度が厳密に静止したままであることのテスト
    """
    state = build_state(get_scenario("equilibrium"))
    trajectory = run(state, SolverConfig(t_end=0.05))
    assert trajectory.termination is Termination.REACHED_T_END
    assert trajectory.times[-1] == pytest.approx(0.05)
    first, last = trajectory.samples[0], trajectory.samples[-1]
    for name in ("m", "E_total", "E_i", "G"):
        assert getattr(last, name) == pytest.approx(getattr(first, name), rel=1e-14)
    assert last.E_k == 0.0


def test_shear_decays_at_viscous_rate():
    """The shear mode loses kinetic energy as exp(-2 mu k^2 t)
    せん断モードの運動エネルギーが exp(-2 mu k^2 t) で減衰することのテスト
    """
    scenario = get_scenario("shear")
    trajectory = run(build_state(scenario), SolverConfig(mode=Mode.NS, t_end=0.2))
    assert trajectory.termination is Termination.REACHED_T_END
    k = math.pi / scenario.half_extent
    E_k = trajectory.column("E_k")
    expected = E_k[0] * np.exp(-2.0 * scenario.params.mu * k * k * trajectory.times)
    np.testing.assert_allclose(E_k, expected, rtol=2e-3)
    assert trajectory.metadata["mass_drift"] < 1e-13


def test_magnetized_run_conserves():
    """A magnetized Gaussian run conserves mass and momentum and keeps div H at roundoff
    磁場付きガウス分布の計算で質量・運動量が保存され div H が丸め誤差に留まることのテスト
    """
    trajectory = run(build_state(get_scenario("gaussian-mhd")), SolverConfig(t_end=0.1))
    meta = trajectory.metadata
    assert trajectory.termination is Termination.REACHED_T_END
    assert len(trajectory.samples) >= 3
    assert meta["t_final"] == pytest.approx(0.1)
    assert meta["mass_drift"] < 1e-12
    assert meta["momentum_drift"] < 1e-10
    assert not meta["div_H_flagged"]
    assert trajectory.final_state.time == pytest.approx(0.1)
    assert np.all(np.diff(trajectory.times) > 0)


def test_vacuum_terminates():
    """A state with no density above the floor stops immediately
    床値を超える密度がない状態は直ちに停止することのテスト
    """
    grid = make_grid(3, 1.0, 8)
    state = make_state(grid, np.zeros(grid.shape), np.zeros((3,) + grid.shape))
    trajectory = run(state, SolverConfig(t_end=0.1))
    assert trajectory.termination is Termination.VACUUM_DETECTED
    assert len(trajectory.samples) == 1


def test_step_limits():
    """Fixed steps above the CFL limit and exhausted step budgets end the run
    CFL限界を超える固定刻みやステップ上限で計算が終了することのテスト
    """
    state = build_state(get_scenario("shear"))
    limit = cfl_dt(state, 1.0)
    trajectory = run(state, SolverConfig(dt_policy="fixed", dt=2.0 * limit, t_end=1.0))
    assert trajectory.termination is Termination.CFL_COLLAPSE
    assert trajectory.metadata["steps"] == 0

    trajectory = run(state, SolverConfig(t_end=1.0, max_steps=2))
    assert trajectory.termination is Termination.CFL_COLLAPSE
    assert trajectory.metadata["steps"] == 2

    with pytest.raises(ProgrammingError):
        step_rk4(state, 2.0 * limit)
    with pytest.raises(ProgrammingError):
        step_rk4(state, 0.0)
    advanced = step_rk4(state, 0.5 * limit)
    assert advanced.time == pytest.approx(0.5 * limit)


def test_sampling_interval():
    """Diagnostics are recorded every ``sample_every`` steps and at the final time
    診断量が ``sample_every`` ステップごとと終了時刻に記録されることのテスト
    """
    state = build_state(get_scenario("shear"))
    dt = 0.5 * cfl_dt(state, 1.0)
    trajectory = run(state, SolverConfig(dt_policy="fixed", dt=dt, t_end=5.5 * dt, sample_every=2))
    assert trajectory.metadata["steps"] == 6
    assert len(trajectory.samples) == 1 + 3
    assert trajectory.times[-1] == pytest.approx(5.5 * dt)


def test_solver_config_validation():
    """Invalid solver settings are rejected
    不正なソルバ設定を拒否するテスト
    """
    with pytest.raises(ProgrammingError):
        SolverConfig(cfl_number=1.5)
    with pytest.raises(ProgrammingError):
        SolverConfig(dt_policy="fixed")
    with pytest.raises(ProgrammingError):
        SolverConfig(lorentz_form="curl")
    with pytest.raises(ProgrammingError):
        SolverConfig(sample_every=0)
    assert SolverConfig(mode="ns").as_dict()["mode"] == "ns"


def test_trajectory_requires_increasing_times():
    """Trajectory samples must have strictly increasing times
    軌道のサンプル時刻が狭義単調増加であることのテスト
    """
    state = build_state(get_scenario("equilibrium"))
    trajectory = run(state, SolverConfig(t_end=0.05))
    sample = trajectory.samples[0]
    with pytest.raises(DataError):
        Trajectory([sample, sample])


def test_vacuum_is_floor_mass_growth():
    """Mass falling to the floor ends the run; a tail that starts below the floor does not
    床値以下への質量の流入で停止し、初めから床値以下の裾では停止しないことのテスト
    """
    grid = make_grid(3, 1.0, 8)
    u = np.zeros((3,) + grid.shape)
    u[0] = np.sin(math.pi * grid.mesh[0])
    state = make_state(grid, np.full(grid.shape, 0.6), u)
    trajectory = run(state, SolverConfig(t_end=1.0, density_floor=0.5))
    assert trajectory.termination is Termination.VACUUM_DETECTED
    assert trajectory.metadata["floor_mass_growth"] > 1e-6 * trajectory.samples[0].m

    soft = run(build_state(get_scenario("gaussian-soft")), SolverConfig(mode=Mode.NS, t_end=0.3))
    assert soft.termination is Termination.REACHED_T_END
    assert soft.metadata["floor_mass_growth"] <= 1e-6 * soft.samples[0].m
    assert soft.metadata["floor_mass_max"] > 0


def test_runs_have_three_samples():
    """A run reaching t_end records at least three samples even when one CFL step would cover it
    1ステップで終了時刻に届く場合でも3サンプル以上記録されることのテスト
    """
    state = build_state(get_scenario("equilibrium"))
    assert cfl_dt(state) > 0.05
    trajectory = run(state, SolverConfig(t_end=0.05))
    assert len(trajectory.samples) >= 3
    trajectory = run(state, SolverConfig(t_end=0.05, sample_every=3))
    assert len(trajectory.samples) >= 3


def test_energy_is_monotone_on_gaussian_runs():
    """Energy never rises between samples of the Gaussian runs
    ガウス分布の計算でサンプル間にエネルギーが増加しないことのテスト
    """
    for name, mode in (("gaussian-mhd", Mode.MHD), ("gaussian-soft", Mode.NS)):
        trajectory = run(build_state(get_scenario(name)), SolverConfig(mode=mode, t_end=0.2))
        assert trajectory.termination is Termination.REACHED_T_END
        E = trajectory.column("E_total")
        assert np.all(np.diff(E) <= 1e-10 * E[0]), name
        assert 0.5 <= trajectory.metadata["relaxation_min"] <= trajectory.metadata["relaxation_max"] <= 1.5


def test_energy_rate_matches_dissipation():
    """Without a floor region the discrete energy rate is minus the dissipation column
    床領域がなければ離散エネルギーの変化率が散逸列の符号反転に一致することのテスト
    """
    state = build_state(get_scenario("shear-mhd"))
    rate = energy_rate(state)
    dissipation = energy_breakdown(state).dissipation
    assert dissipation > 0
    assert rate == pytest.approx(-dissipation, rel=1e-10)


def test_energy_identity_converges_with_step():
    """The energy identity residual on solver output shrinks at second order when dt halves
    dt を半分にするとソルバ出力のエネルギー恒等式残差が2次で減少することのテスト
    """
    state = build_state(get_scenario("shear-mhd"))

    def trajectory(dt):
        return run(state, SolverConfig(dt_policy="fixed", dt=dt, t_end=0.2))

    coarse, fine = trajectory(0.01), trajectory(0.005)
    assert coarse.termination is fine.termination is Termination.REACHED_T_END
    order = residual_refinement_order(coarse, fine, energy_identity_residual)
    assert order >= Tolerances().identity_order


def test_long_run_conserves():
    """A thousand steps keep mass and momentum at roundoff and the field solenoidal
    1000ステップで質量と運動量が丸め誤差内に保たれ、磁場が発散ゼロに留まることのテスト
    """
    state = build_state(ShearScenario(points_per_axis=8, magnetic_amplitude=0.2, params=Params(mu=0.05, nu=0.02)))
    trajectory = run(state, SolverConfig(dt_policy="fixed", dt=0.005, t_end=5.0, sample_every=100))
    meta = trajectory.metadata
    assert trajectory.termination is Termination.REACHED_T_END
    assert meta["steps"] == 1000
    assert meta["mass_drift"] < 1e-12
    assert meta["momentum_drift"] < 1e-12
    assert meta["div_H_relative"] < 1e-10
    E = trajectory.column("E_total")
    assert np.all(np.diff(E) <= 1e-10 * E[0])


def test_navier_stokes_matches_unmagnetized_mhd():
    """With H = 0 the MHD and Navier-Stokes modes produce identical samples
    H = 0 では MHD モードとナビエ・ストークスモードのサンプルが一致することのテスト
    """
    state = build_state(get_scenario("gaussian-ns"))
    ns = run(state, SolverConfig(mode=Mode.NS, t_end=0.1))
    mhd = run(state, SolverConfig(mode=Mode.MHD, t_end=0.1))
    assert ns.samples == mhd.samples
    assert mhd.metadata["lorentz_discrepancy_max"] == 0.0


def test_repeated_runs_are_identical():
    """Repeating a run reproduces every sample and the final fields bit for bit
    同じ計算を繰り返すと全サンプルと最終状態がビット単位で一致することのテスト
    """
    state = build_state(get_scenario("gaussian-mhd"))
    first = run(state, SolverConfig(t_end=0.05))
    second = run(state, SolverConfig(t_end=0.05))
    assert first.samples == second.samples
    assert first.metadata == second.metadata
    for name in ("rho", "u", "H"):
        assert np.array_equal(getattr(first.final_state, name), getattr(second.final_state, name))


def test_lorentz_discrepancy_is_recorded():
    """MHD runs record the largest gap between the two Lorentz forms
    MHD の計算が2つのローレンツ力の形式の最大差を記録することのテスト
    """
    state = build_state(get_scenario("gaussian-mhd"))
    trajectory = run(state, SolverConfig(t_end=0.05))
    initial = lorentz_discrepancy(state)
    assert initial > 0.0
    assert trajectory.metadata["lorentz_discrepancy_max"] >= 0.999 * initial
    assert math.isfinite(trajectory.metadata["lorentz_discrepancy_max"])
