'''cli.py
Command-line entry point: simulate, check, constants and oracle.
コマンドラインのエントリポイント（simulate, check, constants, oracle）。

Exit status: 0 success, 1 certificate failure, 2 input error, 3 runtime error.
終了コード: 0 成功、1 証明書の失敗、2 入力エラー、3 実行時エラー。
'''

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from .certificates import Tolerances, check_dissipation_decomposition, run_suite
from .config import RunConfig, apply_overrides, load_run_config
from .constants import compute_constants, lifespan_bound, lifespan_ode_oracle, sobolev_sharpness_probe
from .exceptions import DataError, Error, InterfaceError, NotSupportedError, ProgrammingError
from .functionals import energy_breakdown
from .grid import Params
from .scenarios import SCENARIOS, build_state, convergence_study, get_scenario
from .snapshot import read_snapshot, write_snapshot
from .solver import Termination, run
from .store import RunStore, dump_json, read_json, read_trajectory_csv, run_metadata, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CERTIFICATE = 1
EXIT_INPUT = 2
EXIT_RUNTIME = 3

ORACLE_FUNCTIONALS = ("m", "P1", "E_k", "E_i", "G", "F")
# box truncation at L = 6 s leaves errors near 1e-7 that refinement cannot remove
ORACLE_FLOOR = 1e-6


def _tolerance_overrides(items: Optional[List[str]]) -> Dict[str, float]:
    overrides: Dict[str, float] = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise InterfaceError(f"--tolerance-class expects key=value, got {item!r}")
        try:
            overrides[key.strip()] = float(value)
        except ValueError:
            raise InterfaceError(f"Tolerance {key} must be a number, got {value!r}")
    return overrides


def _load_config(args: argparse.Namespace) -> RunConfig:
    config = load_run_config(args.config)
    config = apply_overrides(config, mode=args.mode, n_dim=args.n_dim, points_per_axis=args.grid,
                             gamma=args.gamma, tolerances=_tolerance_overrides(args.tolerance_class))
    if args.out:
        config = RunConfig(config.scenario, config.solver, config.outputs.under(args.out), config.tolerances)
    return config


def _tolerances(config: RunConfig) -> Tolerances:
    return Tolerances().with_overrides(config.tolerances)


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run a scenario or resume a snapshot and write the trajectory CSV, run metadata and snapshots
    シナリオまたはスナップショットから計算し、軌道 CSV・メタデータ・スナップショットを書き出す
    """
    config = _load_config(args)
    if args.from_snapshot:
        if args.n_dim is not None or args.grid is not None or args.gamma is not None:
            raise InterfaceError("--from-snapshot takes the grid and parameters from the snapshot")
        initial = read_snapshot(args.from_snapshot)
        logger.info("resuming %s at t=%s", args.from_snapshot, initial.time)
    else:
        initial = build_state(config.scenario)
    trajectory = run(initial, config.solver)
    outputs = config.outputs
    store = RunStore(os.path.dirname(outputs.csv_path) or ".")
    name = os.path.splitext(os.path.basename(outputs.csv_path))[0]
    store.register_trajectory(name, trajectory)
    store.commit()
    decomposition = check_dissipation_decomposition(initial, _tolerances(config))
    write_json(run_metadata(trajectory, {
        "config": config.as_dict(),
        "initial_snapshot": args.from_snapshot,
        "dissipation_decomposition": decomposition.to_dict(),
    }), outputs.json_path)
    if outputs.snapshot_dir:
        write_snapshot(initial, os.path.join(outputs.snapshot_dir, "initial.mhds"))
        write_snapshot(trajectory.final_state, os.path.join(outputs.snapshot_dir, "final.mhds"))
    print(f"{trajectory.termination.value}: {len(trajectory.samples)} samples, "
          f"{trajectory.metadata['steps']} steps -> {outputs.csv_path}")
    if trajectory.termination is not Termination.REACHED_T_END:
        print(f"run stopped early at t={trajectory.metadata['t_final']:.6g} "
              f"({trajectory.termination.value})", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _check_params(args: argparse.Namespace, csv_path: str) -> Params:
    if args.config:
        params = _load_config(args).params
    else:
        meta_path = os.path.join(os.path.dirname(csv_path) or ".", "run.json")
        if os.path.exists(meta_path):
            meta = read_json(meta_path)
            params = Params.from_dict(meta.get("params") or {})
            logger.debug("parameters taken from %s", meta_path)
        else:
            params = Params()
            logger.debug("no run metadata next to %s, using default parameters", csv_path)
        if args.gamma is not None:
            params = Params(params.A, args.gamma, params.mu, params.lam, params.nu)
    return params


def cmd_check(args: argparse.Namespace) -> int:
    """Run the certificate suite on a trajectory CSV and write the JSON report
    軌道 CSV に証明書一式を実行し、JSON レポートを書き出す
    """
    csv_path = args.trajectory
    params = _check_params(args, csv_path)
    trajectory = read_trajectory_csv(csv_path, params)
    overrides = _load_config(args).tolerances if args.config else _tolerance_overrides(args.tolerance_class)
    reports = run_suite(trajectory, Tolerances().with_overrides(overrides))
    payload = [r.to_dict() for r in reports]
    report_path = os.path.join(args.out, "report.json") if args.out else None
    if report_path:
        write_json(payload, report_path)
    else:
        sys.stdout.write(dump_json(payload))
    failed = [r.name for r in reports if r.decides_exit and not r.passed]
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CERTIFICATE
    return EXIT_OK


def constants_report(params: Params, m: float, P, E0: float, G0: float, F0: float, Q0: float,
                     n: int) -> Dict[str, Any]:
    """Constants plus the lifespan bound and its ODE cross-check
    定数、寿命上界、および ODE による照合
    """
    constants = compute_constants(params, m, P, E0, G0, F0, Q0, n)
    report: Dict[str, Any] = {"inputs": {"m": m, "P": list(map(float, P)), "E0": E0, "G0": G0, "F0": F0,
                                         "Q0": Q0, "n": n, "params": params.as_dict()},
                              "constants": constants.as_dict()}
    if constants.T_star is not None:
        try:
            report["T_ode"] = lifespan_ode_oracle(E0, constants.sigma, constants.K, params.gamma, n)
        except Error as e:
            report["T_ode_error"] = str(e)
    return report


def cmd_constants(args: argparse.Namespace) -> int:
    """Print every constant for given parameters and initial functionals
    パラメータと初期汎関数から全定数を出力
    """
    if args.scenario:
        scenario = get_scenario(args.scenario)
        b = energy_breakdown(build_state(scenario))
        params = scenario.params
        values = dict(m=b.m, P=b.P, E0=b.E_total, G0=b.G, F0=b.F, Q0=b.Q, n=b.n_dim)
    else:
        missing = [k for k in ("m", "P", "E0", "G0", "Q0") if getattr(args, k) is None]
        if missing:
            raise InterfaceError(f"constants needs --scenario or all of --m --P --E0 --G0 --Q0 (missing {missing})")
        params = Params(args.A, args.gamma if args.gamma is not None else 2.0, args.mu, args.lam, args.nu)
        values = dict(m=args.m, P=[float(v) for v in args.P.split(",")], E0=args.E0, G0=args.G0,
                      F0=args.F0, Q0=args.Q0, n=args.n_dim or 3)
    payload = constants_report(params, **values)
    text = dump_json(payload)
    if args.out:
        write_json(payload, os.path.join(args.out, "constants.json"))
    sys.stdout.write(text)
    return EXIT_OK


def oracle_report(levels: List[int]) -> Dict[str, Any]:
    """Quadrature refinement studies, the lifespan ODE ordering and the Sobolev probe
    求積の収束解析、寿命 ODE の順序、ソボレフ最良定数の確認
    """
    scenario = get_scenario("gaussian-oracle")
    studies = [convergence_study(scenario, name, levels, floor=ORACLE_FLOOR).as_dict()
               for name in ORACLE_FUNCTIONALS]
    rng = np.random.default_rng(20240601)
    lifespan = []
    for _ in range(50):
        E0, rate, gamma = rng.uniform(0.1, 10.0), rng.uniform(0.1, 10.0), rng.uniform(1.2, 3.0)
        T_star = lifespan_bound(E0, rate, 1.0, gamma, 3)
        T_ode = lifespan_ode_oracle(E0, rate, 1.0, gamma, 3)
        alpha = 1.0 / (3.0 * (gamma - 1.0))
        exact = T_star / (1.0 + alpha)
        lifespan.append({"E0": E0, "sigma_K": rate, "gamma": gamma, "T_star": T_star, "T_ode": T_ode,
                         "relative_error": abs(T_ode - exact) / T_star, "ordered": T_ode <= T_star})
    probe = sobolev_sharpness_probe(3)
    return {
        "convergence": studies,
        "lifespan": lifespan,
        "sobolev_probe": {"ratio": probe, "passed": abs(probe - 1.0) <= 1e-6},
        "passed": (all(s["passed"] for s in studies)
                   and all(d["ordered"] and d["relative_error"] <= 1e-6 for d in lifespan)
                   and abs(probe - 1.0) <= 1e-6),
    }


def cmd_oracle(args: argparse.Namespace) -> int:
    """Run the convergence and oracle studies
    収束解析とオラクル検証を実行
    """
    levels = [int(v) for v in args.levels.split(",")]
    payload = oracle_report(levels)
    if args.out:
        write_json(payload, os.path.join(args.out, "oracle.json"))
    sys.stdout.write(dump_json(payload))
    return EXIT_OK if payload["passed"] else EXIT_CERTIFICATE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blowuplab",
                                     description="Barotropic MHD / Navier-Stokes blow-up certificate laboratory")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="Run configuration JSON")
        p.add_argument("--out", help="Output directory")
        p.add_argument("--mode", choices=["mhd", "ns"], help="Override the solver mode")
        p.add_argument("--n-dim", type=int, help="Override the space dimension")
        p.add_argument("--grid", type=int, help="Override points per axis")
        p.add_argument("--gamma", type=float, help="Override the adiabatic exponent")
        p.add_argument("--tolerance-class", action="append", metavar="KEY=VALUE",
                       help="Tolerance override, e.g. truncation=1e-3 (repeatable)")

    simulate = sub.add_parser("simulate", help="Integrate a scenario and write the trajectory")
    common(simulate)
    simulate.add_argument("--from-snapshot", metavar="PATH", help="Start from an MHDS snapshot instead of the scenario")
    simulate.set_defaults(handler=cmd_simulate)

    check = sub.add_parser("check", help="Run the certificate suite on a trajectory CSV")
    check.add_argument("trajectory", help="Trajectory CSV in the functionals schema")
    common(check)
    check.set_defaults(handler=cmd_check)

    constants = sub.add_parser("constants", help="Evaluate the constants and the lifespan bound")
    common(constants)
    constants.add_argument("--scenario", choices=sorted(SCENARIOS), help="Take initial functionals from a scenario")
    for name in ("m", "E0", "G0", "Q0"):
        constants.add_argument(f"--{name}", type=float)
    constants.add_argument("--F0", type=float, default=0.0)
    constants.add_argument("--P", help="Momentum components, comma separated")
    constants.add_argument("--A", type=float, default=1.0)
    constants.add_argument("--mu", type=float, default=1e-3)
    constants.add_argument("--lambda", dest="lam", type=float, default=0.0)
    constants.add_argument("--nu", type=float, default=0.0)
    constants.set_defaults(handler=cmd_constants)

    oracle = sub.add_parser("oracle", help="Run convergence studies and closed-form oracles")
    oracle.add_argument("--out", help="Output directory")
    oracle.add_argument("--levels", default="24,32,48", help="Points per axis, comma separated")
    oracle.set_defaults(handler=cmd_oracle)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch, and map exceptions to exit codes
    引数を解析して実行し、例外を終了コードに変換
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except (InterfaceError, ProgrammingError, DataError, NotSupportedError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Error as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def entry_point() -> None:
    sys.exit(main())
