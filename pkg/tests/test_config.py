import json
import os

import pytest

from blowuplab.config import Outputs, RunConfig, apply_overrides, load_run_config, parse_run_config
from blowuplab.exceptions import InterfaceError, OperationalError
from blowuplab.scenarios import GaussianScenario, get_scenario
from blowuplab.solver import Mode


def test_defaults():
    """Without a file the magnetized Gaussian runs to t = 0.1
    ファイルなしでは磁場付きガウス分布を t = 0.1 まで計算することのテスト
    """
    config = load_run_config(None)
    assert config.scenario == get_scenario("gaussian-mhd")
    assert config.solver.t_end == 0.1
    assert config.solver.mode is Mode.MHD
    assert config.outputs.csv_path == "trajectory.csv"
    assert config.tolerances == {}
    assert parse_run_config({}) == config


def test_sections_and_overrides():
    """Grid and params sections override the named scenario
    grid と params セクションがシナリオの値を上書きすることのテスト
    """
    config = parse_run_config({
        "scenario": "gaussian-ns",
        "grid": {"points_per_axis": 16},
        "params": {"lambda": 0.1, "mu": 0.01},
        "solver": {"mode": "ns", "t_end": 0.2},
        "outputs": {"csv_path": "ns.csv"},
        "tolerances": {"truncation": "1e-3"},
    })
    assert config.scenario.points_per_axis == 16
    assert config.params.lam == 0.1 and config.params.mu == 0.01
    assert config.params.gamma == 2.0
    assert config.solver.mode is Mode.NS
    assert config.outputs.csv_path == "ns.csv"
    assert config.tolerances == {"truncation": 1e-3}


def test_inline_scenario():
    """An inline scenario object is accepted
    シナリオをオブジェクトで直接指定できることのテスト
    """
    config = parse_run_config({"scenario": {"kind": "gaussian", "s": 0.5, "U": [0.0, 1.0, 0.0]}})
    assert isinstance(config.scenario, GaussianScenario)
    assert config.scenario.U == (0.0, 1.0, 0.0)


def test_dict_round_trip():
    """A config survives its JSON echo
    設定が JSON 形式から復元できることのテスト
    """
    config = parse_run_config({"scenario": "shear", "solver": {"mode": "ns", "t_end": 0.3, "sample_every": 2}})
    assert parse_run_config(json.loads(json.dumps(config.as_dict()))) == config


@pytest.mark.parametrize("raw", [
    [],
    {"plot": {}},
    {"grid": {"spacing": 0.1}},
    {"grid": []},
    {"scenario": "vortex"},
    {"params": {"kappa": 1.0}},
    {"params": {"gamma": 0.5}},
    {"solver": {"cfl_number": 2.0}},
    {"solver": {"mode": "euler"}},
    {"outputs": {"plot_path": "x.png"}},
    {"tolerances": {"truncation": "tight"}},
])
def test_invalid_configs(raw):
    """Unknown sections, keys and out-of-range values raise InterfaceError
    未知のセクション・キーや範囲外の値で InterfaceError になることのテスト
    """
    with pytest.raises(InterfaceError):
        parse_run_config(raw)


def test_load_from_file(tmp_path):
    """Configs are read from JSON files; a missing file is an OperationalError
    JSON ファイルから設定を読み込み、存在しない場合は OperationalError になることのテスト
    """
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"scenario": "equilibrium", "solver": {"t_end": 0.05}}))
    config = load_run_config(str(path))
    assert config.scenario == get_scenario("equilibrium")
    assert config.solver.t_end == 0.05
    with pytest.raises(OperationalError):
        load_run_config(str(tmp_path / "absent.json"))
    path.write_text("{")
    with pytest.raises(InterfaceError):
        load_run_config(str(path))


def test_apply_overrides():
    """Command-line overrides for mode, grid, gamma and tolerances
    モード、グリッド、gamma、許容誤差のコマンドライン上書きのテスト
    """
    config = RunConfig(tolerances={"exact": 1e-11})
    changed = apply_overrides(config, mode="ns", points_per_axis=16, gamma=1.25, tolerances={"truncation": 1e-3})
    assert changed.solver.mode is Mode.NS
    assert changed.scenario.points_per_axis == 16
    assert changed.params.gamma == 1.25
    assert changed.tolerances == {"exact": 1e-11, "truncation": 1e-3}
    assert apply_overrides(config) == config
    with pytest.raises(InterfaceError):
        apply_overrides(config, gamma=0.5)
    with pytest.raises(InterfaceError):
        apply_overrides(config, mode="euler")
    with pytest.raises(InterfaceError):
        apply_overrides(config, points_per_axis=2)


def test_dimension_override_drops_magnetic_field():
    """Changing n resizes U and drops the magnetic profile outside n = 3
    次元の変更で U の長さを合わせ、n != 3 では磁場分布を外すことのテスト
    """
    config = apply_overrides(RunConfig(), n_dim=2)
    assert config.scenario.n_dim == 2
    assert config.scenario.U == (0.5, 0.0)
    assert config.scenario.magnetic_profile == "zero"
    config = apply_overrides(RunConfig(scenario=get_scenario("gaussian-ns")), n_dim=4)
    assert config.scenario.U == (0.5, 0.0, 0.0, 0.0)


def test_outputs_under():
    """Relative output paths are re-rooted; absolute ones are kept
    相対パスは指定ディレクトリ下に移し、絶対パスは維持することのテスト
    """
    absolute = os.path.abspath("report.json")
    outputs = Outputs(report_path=absolute).under("results")
    assert outputs.csv_path == os.path.join("results", "trajectory.csv")
    assert outputs.json_path == os.path.join("results", "run.json")
    assert outputs.report_path == absolute
    assert outputs.snapshot_dir is None
