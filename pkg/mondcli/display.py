"""
显示渲染模块 - 使用 rich 库
"""

import logging
from typing import Any, Dict, List, Optional

try:
    from rich.console import Console
    from rich.logging import RichHandler
    from rich.table import Table
    from rich.panel import Panel
    from rich.text import Text
    from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn
    from rich import box
    RICH_AVAILABLE = True
except ImportError:
    RICH_AVAILABLE = False

from .store import CheckRecord, RunRecord

LOG_FORMAT = "%(name)s: %(message)s"

# 运行状态 (样式, 图标, 名称)
STATUS_STYLES = {
    "ok": ("bold green", "✓", "成功"),
    "failed": ("bold red", "✗", "失败"),
}


def setup_logging(verbose: int = 0) -> None:
    """配置日志：-v 为 INFO，-vv 为 DEBUG"""
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose >= 2:
        level = logging.DEBUG

    if RICH_AVAILABLE:
        handler: logging.Handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=True)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
    else:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s " + LOG_FORMAT))

    root = logging.getLogger("mondcli")
    root.handlers = [handler]
    root.setLevel(level)
    root.propagate = False


def format_number(value: Any, digits: int = 6) -> str:
    """数值的紧凑显示；字符串原样返回"""
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "是" if value else "否"
    if isinstance(value, (int, float)):
        return f"{value:.{digits}g}"
    return str(value)


def truncate_string(s: str, max_len: int) -> str:
    """截断字符串"""
    if len(s) <= max_len:
        return s
    return s[:max_len - 3] + "..."


class Display:
    """显示渲染器"""

    def __init__(self):
        if RICH_AVAILABLE:
            self.console = Console()
        else:
            self.console = None

    def print(self, *args, **kwargs):
        """打印输出"""
        if self.console:
            self.console.print(*args, **kwargs)
        else:
            print(*args)

    def print_error(self, message: str):
        """打印错误"""
        if self.console:
            self.console.print(f"[bold red]错误:[/bold red] {message}")
        else:
            print(f"错误: {message}")

    def print_success(self, message: str):
        """打印成功"""
        if self.console:
            self.console.print(f"[bold green]✓[/bold green] {message}")
        else:
            print(f"✓ {message}")

    def print_warning(self, message: str):
        """打印警告"""
        if self.console:
            self.console.print(f"[bold yellow]⚠[/bold yellow] {message}")
        else:
            print(f"⚠ {message}")

    def print_summary(self, summary: Dict[str, Any], title: str = "求解结果"):
        """打印单次求解的摘要面板"""
        lines = [
            ("分类", summary.get("classification")),
            ("相", summary.get("phase")),
            ("R", summary.get("R")),
            ("M", summary.get("M")),
            ("E0", summary.get("E0")),
            ("S", summary.get("S")),
            ("v_flat", summary.get("v_flat")),
            ("v⁴/M", summary.get("tully_fisher_ratio")),
        ]
        units = summary.get("physical_units")
        if units:
            lines.append(("R [kpc]", units.get("R_kpc")))
            lines.append(("M [Msun]", units.get("M_msun")))
            lines.append(("v_flat [km/s]", units.get("v_flat_km_s")))
        lines = [(k, v) for k, v in lines if v is not None]

        if not RICH_AVAILABLE:
            print(f"\n{'=' * 60}")
            print(title)
            print(f"{'=' * 60}")
            for key, value in lines:
                print(f"{key + ':':<16}{format_number(value, 10)}")
            print(f"{'=' * 60}\n")
            return

        body = "\n".join(f"[bold]{key}:[/bold] {format_number(value, 10)}" for key, value in lines)
        self.console.print(Panel(body, title=title, border_style="blue"))

    def print_sweep_table(self, runs: List[RunRecord], title: Optional[str] = None):
        """打印扫描结果表"""
        if not runs:
            self.print("[dim]没有运行记录[/dim]" if RICH_AVAILABLE else "没有运行记录")
            return
        if title is None:
            failed = sum(1 for r in runs if not r.ok)
            title = f"参数扫描 (共 {len(runs)} 个, 失败 {failed} 个)"

        if not RICH_AVAILABLE:
            print(f"\n{title}")
            print("-" * 100)
            print(f"{'Run':<10} {'Status':<8} {'Overrides':<36} {'Phase':<24} {'R':>10} {'M':>10}")
            print("-" * 100)
            for run in runs:
                _, icon, name = STATUS_STYLES.get(run.status, ("", "?", run.status))
                overrides = truncate_string(", ".join(f"{k}={v}" for k, v in run.overrides.items()), 34)
                print(f"{run.run_id:<10} {icon} {name:<6} {overrides:<36} {run.phase:<24} "
                      f"{format_number(run.R):>10} {format_number(run.M):>10}")
            print("-" * 100)
            return

        table = Table(
            title=title,
            box=box.SIMPLE,
            show_header=True,
            header_style="bold",
            title_style="bold",
            expand=False,
            padding=(0, 1),
        )
        table.add_column("Run", style="cyan", no_wrap=True)
        table.add_column("Status", justify="center")
        table.add_column("Overrides", style="white")
        table.add_column("Phase")
        table.add_column("R", justify="right")
        table.add_column("M", justify="right")
        table.add_column("S", justify="right")

        for run in runs:
            style, icon, name = STATUS_STYLES.get(run.status, ("dim", "?", run.status))
            overrides = ", ".join(f"{k}={v}" for k, v in run.overrides.items()) or "-"
            phase = run.phase if run.ok else truncate_string(run.error, 40)
            table.add_row(
                run.run_id,
                Text(f"{icon} {name}", style=style),
                overrides,
                phase,
                format_number(run.R),
                format_number(run.M),
                format_number(run.S),
            )
        self.console.print(table)

    def print_checks_table(self, records: List[CheckRecord], only_failed: bool = False):
        """打印校验结果"""
        shown = [r for r in records if not r.passed] if only_failed else records
        failed = sum(1 for r in records if not r.passed)
        title = f"校验 (共 {len(records)} 项, 失败 {failed} 项)"

        if not RICH_AVAILABLE:
            print(f"\n{title}")
            print("-" * 90)
            for record in shown:
                icon = "✓" if record.passed else "✗"
                print(f"{icon} {record.name:<48} {format_number(record.value, 3):>10} "
                      f"<= {format_number(record.threshold, 3)}")
            print("-" * 90)
            return

        table = Table(title=title, box=box.SIMPLE, header_style="bold", title_style="bold", padding=(0, 1))
        table.add_column("", justify="center")
        table.add_column("Check", style="cyan")
        table.add_column("Value", justify="right")
        table.add_column("Threshold", justify="right")
        table.add_column("Detail", style="dim")
        for record in shown:
            icon = Text("✓", style="bold green") if record.passed else Text("✗", style="bold red")
            table.add_row(
                icon,
                record.name,
                format_number(record.value, 3),
                format_number(record.threshold, 3),
                truncate_string(record.detail, 60),
            )
        self.console.print(table)

    def create_progress(self) -> "Progress":
        """创建进度条"""
        if RICH_AVAILABLE:
            return Progress(
                SpinnerColumn(),
                TextColumn("[progress.description]{task.description}"),
                BarColumn(),
                MofNCompleteColumn(),
                console=self.console,
            )
        return None


# 全局显示实例
_display_instance: Optional[Display] = None


def get_display() -> Display:
    """获取全局显示实例"""
    global _display_instance
    if _display_instance is None:
        _display_instance = Display()
    return _display_instance
