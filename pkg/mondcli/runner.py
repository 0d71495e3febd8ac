"""
求解流水线：配置 -> 求解 -> 可观测量 -> 文件

solve、sweep 和 MCP 工具共用这里的函数。扫描的工作进程只接收
可 pickle 的扁平配置字典，在进程内重新构造模型。
"""

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from . import __version__
from .config import DEFAULT_CONFIG, RunConfig, SweepSpec, validate_run_config
from .errors import MondError
from .observables import ObservableSet, PhysicalUnits, compute_observables
from .oracle import resample_uniform, validation_suite
from .solver import RadialSolution, solve
from .store import CheckRecord, RunRecord, SweepStore, write_profile_csv, write_summary, write_validation_report

logger = logging.getLogger(__name__)

PROFILE_FILE = "profile.csv"
UNIFORM_PROFILE_FILE = "profile_uniform.csv"
SUMMARY_FILE = "summary.json"


def run_solution(config: RunConfig, with_jeans: bool = True) -> Tuple[RadialSolution, ObservableSet]:
    """只计算，不写文件"""
    zeta = config.build_zeta()
    ansatz = config.build_ansatz()
    logger.info("solving %s with %s, y0=%g", ansatz.label, zeta.interp.label, config.y0)
    sol = solve(config.solve_config(), ansatz, zeta, tail_decades=config.tail_decades)
    observables = compute_observables(sol, config.cutoff_convention, with_jeans=with_jeans)
    return sol, observables


def build_summary(sol: RadialSolution, observables: ObservableSet, config: RunConfig) -> Dict[str, Any]:
    support = sol.support
    summary: Dict[str, Any] = {
        "mondcli_version": __version__,
        "classification": support.classification if support else None,
        "phase": support.phase if support else None,
        "R": sol.R,
        "M": sol.M,
        **observables.summary(),
        "support": support.to_dict() if support else None,
        "diagnostics": dict(sol.diagnostics),
        "provenance": sol.provenance,
        "config": config.to_dict(),
    }
    if config.mass_scale > 0.0:
        units = PhysicalUnits(config.mass_scale)
        summary["physical_units"] = units.convert(sol.R, sol.M, observables.rotation.v_flat)
    return summary


def write_outputs(sol: RadialSolution, observables: ObservableSet, config: RunConfig,
                  output_dir: Path) -> Dict[str, Any]:
    """写 profile.csv、可选的均匀重采样和 summary.json，返回摘要"""
    output_dir = Path(output_dir)
    write_profile_csv(output_dir / PROFILE_FILE, {
        "r": sol.r,
        "y": sol.y,
        "m": sol.m,
        "rho": sol.rho,
        "uprime": sol.uprime,
        "U": observables.U,
        "vcirc": observables.vcirc,
    })
    if config.resample > 0:
        r, y, m = resample_uniform(sol, config.resample)
        write_profile_csv(output_dir / UNIFORM_PROFILE_FILE, {"r": r, "y": y, "m": m})

    summary = build_summary(sol, observables, config)
    write_summary(output_dir / SUMMARY_FILE, summary)
    logger.info("wrote %s", output_dir)
    return summary


def run_solve(config: RunConfig, output_dir: Optional[Path] = None) -> Dict[str, Any]:
    sol, observables = run_solution(config)
    return write_outputs(sol, observables, config, output_dir or config.output_dir)


def run_sweep_entry(task: Tuple[str, Dict[str, str], Dict[str, str], Optional[str], str]) -> Dict[str, Any]:
    """
    扫描中的一次运行（在工作进程中执行）

    失败不抛出，而是返回带 exit_code 的失败行。
    """
    run_id, base_values, overrides, source, output_root = task
    output_dir = Path(output_root) / run_id
    try:
        values = {**base_values, **overrides, "output.dir": str(output_dir)}
        config = validate_run_config(values, source=Path(source) if source else None)
        summary = run_solve(config, output_dir)
        return RunRecord.from_summary(run_id, summary, overrides, output_dir).to_dict()
    except MondError as e:
        return RunRecord.failure(run_id, overrides, e, e.code).to_dict()
    except Exception as e:  # noqa: BLE001
        return RunRecord.failure(run_id, overrides, e, 1).to_dict()


def run_sweep(
    base: RunConfig,
    spec: SweepSpec,
    workers: Optional[int] = None,
    on_done: Optional[Callable[[RunRecord], None]] = None,
) -> List[RunRecord]:
    """展开组合并运行；每行单独写文件，汇总表写到 output.dir"""
    overrides_list = spec.expand()
    output_root = base.output_dir
    base_values = {k: v for k, v in base.raw.items() if k in DEFAULT_CONFIG}
    source = str(base.source) if base.source else None
    tasks = [
        (f"run-{i:04d}", base_values, overrides, source, str(output_root))
        for i, overrides in enumerate(overrides_list)
    ]
    workers = workers or base.effective_workers
    logger.info("sweep: %d runs on %d workers", len(tasks), workers)

    store = SweepStore(output_root)
    store.clear()

    def record(data: Dict[str, Any]) -> None:
        run = RunRecord.from_dict(data)
        if not run.ok:
            logger.warning("%s failed: %s", run.run_id, run.error)
        store.add(run)
        if on_done is not None:
            on_done(run)

    if workers <= 1 or len(tasks) <= 1:
        for task in tasks:
            record(run_sweep_entry(task))
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(run_sweep_entry, task) for task in tasks]
            for future in as_completed(futures):
                record(future.result())

    store.save()
    return store.list()


def run_validate(report: Optional[Path] = None, **suite_options: Any) -> List[CheckRecord]:
    """运行校验套件；给出 report 时写 JSON 报告"""
    records = validation_suite(**suite_options)
    failed = [r.name for r in records if not r.passed]
    logger.info("validation: %d checks, %d failed", len(records), len(failed))
    if report is not None:
        write_validation_report(Path(report), records)
    return records
