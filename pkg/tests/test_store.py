import json

import pandas as pd
import pytest

from blowuplab import SolverConfig, run
from blowuplab.exceptions import DataError, InterfaceError, OperationalError, ProgrammingError
from blowuplab.functionals import csv_columns
from blowuplab.scenarios import build_state, get_scenario
from blowuplab.store import (
    RunStore,
    read_json,
    read_trajectory_csv,
    run_metadata,
    trajectory_to_frame,
    write_json,
    write_trajectory_csv
)


@pytest.fixture(scope="module")
def trajectory():
    """Short shear-flow run
    短いせん断流の計算
    """
    return run(build_state(get_scenario("shear")), SolverConfig(t_end=0.05))


def test_csv_round_trip(tmp_path, trajectory):
    """Written trajectories read back bit for bit, and rewriting gives the same bytes
    書き出した軌道がビット単位で復元され、再書き込みで同じバイト列になることのテスト
    """
    path = tmp_path / "out" / "trajectory.csv"
    write_trajectory_csv(trajectory, str(path))
    restored = read_trajectory_csv(str(path), trajectory.params)
    assert restored.samples == trajectory.samples
    assert restored.params == trajectory.params

    again = tmp_path / "again.csv"
    write_trajectory_csv(restored, str(again))
    assert again.read_bytes() == path.read_bytes()
    assert path.read_text().splitlines()[0] == ",".join(csv_columns(3))


def test_read_errors(tmp_path, trajectory):
    """Missing, empty, mismatched and non-numeric files raise the matching errors
    存在しない、空、列不一致、非数値のファイルで対応する例外になることのテスト
    """
    with pytest.raises(OperationalError):
        read_trajectory_csv(str(tmp_path / "missing.csv"))

    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(InterfaceError):
        read_trajectory_csv(str(empty))

    df = trajectory_to_frame(trajectory)
    swapped = tmp_path / "swapped.csv"
    df[["m", "t"] + list(df.columns[2:])].to_csv(swapped, index=False)
    with pytest.raises(InterfaceError):
        read_trajectory_csv(str(swapped))

    no_momentum = tmp_path / "no_momentum.csv"
    df.drop(columns=["P1", "P2", "P3"]).to_csv(no_momentum, index=False)
    with pytest.raises(InterfaceError):
        read_trajectory_csv(str(no_momentum))

    garbled = df.astype(object)
    garbled.loc[1, "E_k"] = "lots"
    bad = tmp_path / "bad.csv"
    garbled.to_csv(bad, index=False)
    with pytest.raises(DataError):
        read_trajectory_csv(str(bad))

    header_only = tmp_path / "header.csv"
    pd.DataFrame(columns=df.columns).to_csv(header_only, index=False)
    with pytest.raises(DataError):
        read_trajectory_csv(str(header_only))


def test_run_store(tmp_path, trajectory):
    """Registered tables are committed as the same CSV the plain writer produces
    登録したテーブルが通常の書き出しと同じ CSV として保存されることのテスト
    """
    store = RunStore(str(tmp_path / "run"))
    store.register_trajectory("shear", trajectory)
    with pytest.raises(ProgrammingError):
        store.register_trajectory("shear", trajectory)
    with pytest.raises(ProgrammingError):
        store.register_trajectory("", trajectory)
    store.commit()
    committed = tmp_path / "run" / "shear.csv"
    assert read_trajectory_csv(str(committed), trajectory.params).samples == trajectory.samples
    plain = tmp_path / "plain.csv"
    write_trajectory_csv(trajectory, str(plain))
    assert committed.read_bytes() == plain.read_bytes()


def test_run_store_unwritable(tmp_path, trajectory):
    """Committing into a path occupied by a file raises OperationalError
    ファイルが存在するパスへの保存で OperationalError となることのテスト
    """
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    store = RunStore(str(blocker))
    store.register_trajectory("shear", trajectory)
    with pytest.raises(OperationalError):
        store.commit()


def test_json_documents(tmp_path, trajectory):
    """JSON is deterministic, rejects NaN and reports malformed input
    JSON が決定的で、NaN を拒否し、不正な入力を報告することのテスト
    """
    meta = run_metadata(trajectory, {"scenario": "shear"})
    assert meta["termination"] == "reached-t_end"
    assert meta["scenario"] == "shear"
    assert meta["params"]["mu"] == pytest.approx(0.05)

    path = tmp_path / "meta.json"
    write_json(meta, str(path))
    first = path.read_bytes()
    write_json(read_json(str(path)), str(path))
    assert path.read_bytes() == first

    with pytest.raises(ProgrammingError):
        write_json({"x": float("nan")}, str(tmp_path / "nan.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(InterfaceError):
        read_json(str(broken))
    with pytest.raises(OperationalError):
        read_json(str(tmp_path / "missing.json"))
    assert json.loads(path.read_text())["samples"] == len(trajectory.samples)
