"""
mondcli MCP server
"""

from __future__ import annotations

from datetime import datetime
from pathlib import Path
from typing import Any, Optional

from mcp.server.fastmcp import FastMCP

from .config import load_config_file, validate_run_config
from .errors import ConfigError
from .interp import SIMPLE, build_interp
from .runner import build_summary, run_solution, run_solve, run_validate
from .store import jsonable
from .zeta import ZetaModel, round_trip_error, zeta_deep_exponent_check


server = FastMCP(
    name="mondcli-mcp",
    instructions=(
        "MOND 稳态求解 MCP。内部单位 G = a0 = 1。"
        "先用 mond_validate 自检，再用 mond_solve 求解；配置键与 CLI 配置文件相同。"
    ),
    dependencies=["numpy>=1.22", "scipy>=1.10", "rich>=13.0", "mcp>=1.0"],
)


def _now_iso() -> str:
    return datetime.now().isoformat()


def _result(data: Any, *, message: str = "", warnings: Optional[list[str]] = None) -> dict[str, Any]:
    return {
        "ok": True,
        "message": message,
        "generated_at": _now_iso(),
        "warnings": warnings or [],
        "data": jsonable(data),
    }


@server.tool(description="求解一个稳态。config_path 为 key = value 配置文件，overrides 覆盖其中的键。")
def mond_solve(
    config_path: str = "",
    overrides: Optional[dict[str, str]] = None,
    output_dir: str = "",
    write_files: bool = False,
) -> dict[str, Any]:
    values: dict[str, str] = {}
    source = None
    if config_path:
        source = Path(config_path)
        values, problems = load_config_file(source)
        if problems:
            raise ConfigError(problems)
    values.update({k: str(v) for k, v in (overrides or {}).items()})
    config = validate_run_config(values, source=source)

    if write_files:
        target = Path(output_dir) if output_dir else config.output_dir
        summary = run_solve(config, target)
        message = f"结果已写入 {target}"
    else:
        sol, observables = run_solution(config)
        summary = build_summary(sol, observables, config)
        message = "求解完成（未写文件）。"

    warnings = []
    if summary["diagnostics"].get("series_flagged"):
        warnings.append("级数起点未达到 solve.series_eps")
    return _result(summary, message=message, warnings=warnings)


@server.tool(description="计算 ζ(σ)（τμ(τ) = σ 的反函数）及其渐近诊断。")
def mond_zeta(
    sigmas: list[float],
    kind: str = SIMPLE,
    alpha: float = 1.0,
    table_path: str = "",
) -> dict[str, Any]:
    interp = build_interp(kind, alpha, Path(table_path) if table_path else None)
    model = ZetaModel(interp)
    values = [
        {"sigma": s, "zeta": model.eval(s), "zeta_prime": model.prime(s) if s > 0.0 else None}
        for s in sigmas
    ]
    asym = zeta_deep_exponent_check(model)
    return _result(
        {
            "model": interp.label,
            "alpha": model.alpha,
            "inversion": model.inversion,
            "values": values,
            "deep_deviation": asym.deep_deviation,
            "far_deviation": asym.far_deviation,
            "round_trip_error": round_trip_error(model),
        },
    )


@server.tool(description="运行校验套件（c_l、ζ 往返、Poisson 残差、Lane-Emden 等），可附加用户 μ/Φ 表。")
def mond_validate(
    skip_solves: bool = False,
    interp_table: str = "",
    alpha: Optional[float] = None,
    phi_table: str = "",
    kappa: Optional[float] = None,
    l: float = 0.0,
) -> dict[str, Any]:
    records = run_validate(
        interp_table=Path(interp_table) if interp_table else None,
        alpha=alpha,
        phi_table=Path(phi_table) if phi_table else None,
        kappa=kappa,
        l=l,
        include_solves=not skip_solves,
    )
    failed = [r.name for r in records if not r.passed]
    return _result(
        {
            "passed": not failed,
            "total": len(records),
            "failed": failed,
            "checks": [r.to_dict() for r in records],
        },
        message="全部校验通过。" if not failed else f"{len(failed)} 项校验失败。",
        warnings=[f"校验失败: {name}" for name in failed],
    )


def main() -> None:
    server.run(transport="stdio")


if __name__ == "__main__":
    main()
