#!/usr/bin/env python3
"""
mondcli - MOND 稳态求解 CLI
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .config import load_run_config, load_sweep_spec
from .display import format_number, get_display, setup_logging
from .errors import EXIT_OK, MondError, ValidationFailure
from .interp import KINDS, SIMPLE, build_interp
from .runner import run_solve, run_sweep, run_validate
from .solver import PHASE_UNCLASSIFIED
from .store import jsonable
from .zeta import ZetaModel, round_trip_error, zeta_deep_exponent_check

DEFAULT_SIGMAS = [1e-8, 1e-4, 1e-2, 1.0, 1e2, 1e4, 1e8]


def cmd_solve(args):
    """单次求解"""
    display = get_display()
    config = load_run_config(Path(args.config))
    output_dir = Path(args.output) if args.output else config.output_dir

    summary = run_solve(config, output_dir)
    if args.json:
        print(json.dumps(jsonable(summary), indent=2, ensure_ascii=False))
        return EXIT_OK

    display.print_summary(summary, title=f"求解结果: {Path(args.config).name}")
    if summary["diagnostics"].get("series_flagged"):
        display.print_warning("级数起点未达到 solve.series_eps，见 summary.json 中的 series_error")
    if summary.get("phase") == PHASE_UNCLASSIFIED:
        display.print_warning("尾部点数不足，延展解未分类；可增大 solve.r_max")
    display.print_success(f"结果已写入 {output_dir}")
    return EXIT_OK


def cmd_sweep(args):
    """参数扫描"""
    display = get_display()
    config = load_run_config(Path(args.config))
    if args.output:
        config.output_dir = Path(args.output)
    spec = load_sweep_spec(Path(args.axes), config.max_runs)

    total = spec.run_count
    display.print("\n[bold]参数扫描[/bold]")
    display.print(f"  配置文件: {args.config}")
    if spec.axes:
        display.print(f"  扫描维度: {' x '.join(f'{k}({len(v)})' for k, v in spec.axes)}")
    display.print(f"  总运行数: {total}")
    display.print("")

    progress = display.create_progress()
    if progress is not None:
        with progress:
            task = progress.add_task("求解中", total=total)
            runs = run_sweep(config, spec, workers=args.workers,
                             on_done=lambda run: progress.advance(task))
    else:
        runs = run_sweep(config, spec, workers=args.workers)

    display.print_sweep_table(runs)
    failed = [r for r in runs if not r.ok]
    if failed:
        display.print_warning(f"{len(failed)} 个运行失败，详见 {config.output_dir / 'sweep.json'}")
    display.print_success(f"扫描表已写入 {config.output_dir / 'sweep.csv'}")
    return EXIT_OK


def cmd_validate(args):
    """运行校验套件"""
    display = get_display()
    records = run_validate(
        report=Path(args.report) if args.report else None,
        interp_table=Path(args.interp_table) if args.interp_table else None,
        alpha=args.alpha,
        phi_table=Path(args.phi_table) if args.phi_table else None,
        kappa=args.kappa,
        l=args.l,
        include_solves=not args.skip_solves,
    )
    display.print_checks_table(records, only_failed=args.failed_only)
    if args.report:
        display.print(f"[dim]报告: {args.report}[/dim]")

    failed = [r.name for r in records if not r.passed]
    if failed:
        raise ValidationFailure(failed)
    display.print_success(f"全部 {len(records)} 项校验通过")
    return EXIT_OK


def cmd_zeta(args):
    """打印 ζ(σ) 及其渐近诊断"""
    display = get_display()
    interp = build_interp(args.kind, args.alpha, Path(args.table) if args.table else None)
    model = ZetaModel(interp)
    sigmas: List[float] = args.sigma or DEFAULT_SIGMAS

    rows = []
    for sigma in sigmas:
        z = model.eval(sigma)
        rows.append({
            "sigma": sigma,
            "zeta": z,
            "zeta_prime": model.prime(sigma) if sigma > 0.0 else None,
            "mu": interp.mu(z),
        })
    asym = zeta_deep_exponent_check(model)
    diagnostics = {
        "model": interp.label,
        "alpha": model.alpha,
        "inversion": model.inversion,
        "deep_deviation": asym.deep_deviation,
        "far_deviation": asym.far_deviation,
        "round_trip_error": round_trip_error(model),
    }

    if args.json:
        print(json.dumps(jsonable({"diagnostics": diagnostics, "values": rows}), indent=2, ensure_ascii=False))
        return EXIT_OK

    display.print(f"\n[bold]ζ 反函数[/bold] {interp.label} ({model.inversion})")
    for row in rows:
        display.print(
            f"  σ={format_number(row['sigma'], 4):>8}  ζ={format_number(row['zeta'], 12):>20}  "
            f"ζ′={format_number(row['zeta_prime'], 8):>16}  μ(ζ)={format_number(row['mu'], 8)}"
        )
    display.print("")
    display.print(f"  深 MOND 偏差: {format_number(asym.deep_deviation, 3)}")
    display.print(f"  牛顿端偏差:   {format_number(asym.far_deviation, 3)}")
    display.print(f"  往返误差:     {format_number(diagnostics['round_trip_error'], 3)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mondcli",
        description="MOND Vlasov-Poisson / Euler-Poisson 稳态求解 CLI",
    )
    parser.add_argument(
        "--version", "-V", action="version", version=f"mondcli {__version__}"
    )
    parser.add_argument("--verbose", "-v", action="count", default=0, help="输出日志（-vv 为调试级别）")

    subparsers = parser.add_subparsers(dest="command", help="子命令")

    # solve 命令
    solve_parser = subparsers.add_parser("solve", help="求解单个配置")
    solve_parser.add_argument("config", help="配置文件 (key = value)")
    solve_parser.add_argument("--output", "-o", help="输出目录（覆盖 output.dir）")
    solve_parser.add_argument("--json", "-j", action="store_true", help="以 JSON 输出摘要")

    # sweep 命令
    sweep_parser = subparsers.add_parser("sweep", help="参数扫描")
    sweep_parser.add_argument("config", help="基础配置文件")
    sweep_parser.add_argument("--axes", "-a", required=True, help="扫描轴 JSON 文件")
    sweep_parser.add_argument("--workers", "-w", type=int, help="并行进程数（覆盖 sweep.workers）")
    sweep_parser.add_argument("--output", "-o", help="输出目录（覆盖 output.dir）")

    # validate 命令
    validate_parser = subparsers.add_parser("validate", help="运行校验套件")
    validate_parser.add_argument("--report", "-r", help="JSON 报告路径")
    validate_parser.add_argument("--interp-table", help="额外校验的 μ 表")
    validate_parser.add_argument("--alpha", type=float, help="μ 表声明的 α")
    validate_parser.add_argument("--phi-table", help="额外校验的 Φ 表")
    validate_parser.add_argument("--kappa", type=float, help="Φ 表的 κ")
    validate_parser.add_argument("--l", type=float, default=0.0, help="Φ 表校验使用的 l")
    validate_parser.add_argument("--skip-solves", action="store_true", help="跳过需要求解 ODE 的检查")
    validate_parser.add_argument("--failed-only", action="store_true", help="只显示失败项")

    # zeta 命令
    zeta_parser = subparsers.add_parser("zeta", help="计算 ζ(σ)")
    zeta_parser.add_argument("--kind", "-k", choices=KINDS, default=SIMPLE, help="插值函数类型")
    zeta_parser.add_argument("--alpha", "-a", type=float, default=1.0, help="α（simple/table）")
    zeta_parser.add_argument("--table", "-t", help="μ 表路径（kind=table）")
    zeta_parser.add_argument("--sigma", "-s", type=float, action="append", help="σ 取值（可重复）")
    zeta_parser.add_argument("--json", "-j", action="store_true", help="输出 JSON")

    return parser


def main(argv: Optional[List[str]] = None):
    """主入口"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    commands = {
        "solve": cmd_solve,
        "sweep": cmd_sweep,
        "validate": cmd_validate,
        "zeta": cmd_zeta,
    }

    cmd_func = commands.get(args.command)
    if cmd_func:
        try:
            return cmd_func(args)
        except KeyboardInterrupt:
            print("\n操作已取消")
            return 130
        except MondError as e:
            display = get_display()
            display.print_error(str(e))
            return e.code
        except Exception as e:
            display = get_display()
            display.print_error(f"{type(e).__name__}: {e}")
            return 1
    else:
        parser.print_help()
        return 1


if __name__ == "__main__":
    sys.exit(main())
