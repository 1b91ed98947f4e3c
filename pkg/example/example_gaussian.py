import os
import tempfile

import blowuplab
from blowuplab.certificates import run_suite, suite_passed
from blowuplab.scenarios import get_scenario
from blowuplab.store import read_trajectory_csv, write_trajectory_csv


def main():
    """
    Simulate a magnetized Gaussian, save it and certify the estimates along the run
    磁場付きガウス分布を計算・保存し、軌道に沿って評価式を検証する例
    """
    scenario = get_scenario("gaussian-mhd")

    # Integrate to t = 0.2
    # t = 0.2 まで時間積分
    trajectory = blowuplab.simulate(scenario, blowuplab.SolverConfig(t_end=0.2))
    print(f"termination: {trajectory.termination.value}, samples: {len(trajectory.samples)}")

    first, last = trajectory.samples[0], trajectory.samples[-1]
    print(f"E(0) = {first.E_total:.6g}, E(t) = {last.E_total:.6g}")
    print(f"G(0) = {first.G:.6g}, G(t) = {last.G:.6g}")

    # Constants and the lifespan bound from the initial functionals
    # 初期汎関数から定数と寿命上界を計算
    constants = blowuplab.compute_constants(scenario.params, first.m, first.P, first.E_total,
                                            first.G, first.F, first.Q)
    print(f"K = {constants.K:.6g}, T_star = {constants.T_star:.6g}")

    with tempfile.TemporaryDirectory() as directory:
        # Round trip through the CSV schema
        # CSV スキーマを経由して保存・読込
        path = os.path.join(directory, "trajectory.csv")
        write_trajectory_csv(trajectory, path)
        restored = read_trajectory_csv(path, scenario.params)

        reports = run_suite(restored)
        for report in reports:
            state = report.status.value if report.passed is None else ("pass" if report.passed else "FAIL")
            print(f"{report.name:28s} {state:28s} slack={report.slack:.3g}")
        print("all certificates passed" if suite_passed(reports) else "some certificates failed")


if __name__ == "__main__":
    main()
