"""
配置管理模块

运行配置是扁平的 `key = value` 文本文件（点号分节，# 注释，
可选 export 前缀与引号），合并在 DEFAULT_CONFIG 之上。
"""

import itertools
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from . import eos, interp
from .errors import ConfigError, MondError
from .solver import SolveConfig
from .zeta import ZetaModel

# 默认配置（空字符串表示未设置）
DEFAULT_CONFIG: Dict[str, str] = {
    "interp.kind": "simple",
    "interp.alpha": "1.0",
    "interp.table_path": "",
    "ansatz.kind": "polytrope",
    "ansatz.k": "",
    "ansatz.l": "0",
    "ansatz.kappa": "",
    "ansatz.phi_table_path": "",
    "ansatz.eos": "polytropic-fluid",
    "ansatz.eos_n": "",
    "ansatz.eos_K": "1.0",
    "ansatz.cutoff_convention": "auto",
    "solve.y0": "1.0",
    "solve.rel_tol": "1e-10",
    "solve.abs_tol": "1e-12",
    "solve.r_max": "1e8",
    "solve.event_tol": "1e-12",
    "solve.series_eps": "1e-10",
    "solve.tail_decades": "6",
    "output.dir": "mondcli-out",
    "output.profile_format": "csv",
    "output.summary_format": "json",
    "output.resample": "0",
    "output.mass_scale": "0",
    "sweep.workers": "0",
    "sweep.max_runs": "10000",
}

FLOAT_KEYS = {
    "interp.alpha", "ansatz.k", "ansatz.l", "ansatz.kappa", "ansatz.eos_n", "ansatz.eos_K",
    "solve.y0", "solve.rel_tol", "solve.abs_tol", "solve.r_max", "solve.event_tol",
    "solve.series_eps", "solve.tail_decades", "output.mass_scale",
}
INT_KEYS = {"output.resample", "sweep.workers", "sweep.max_runs"}
PATH_KEYS = {"interp.table_path", "ansatz.phi_table_path"}

POSITIVE_KEYS = ("solve.y0", "solve.rel_tol", "solve.abs_tol", "solve.r_max", "solve.event_tol", "solve.series_eps")

# sweep 轴的短名
AXIS_ALIASES = {
    "alpha": "interp.alpha",
    "k": "ansatz.k",
    "l": "ansatz.l",
    "y0": "solve.y0",
    "kind": "ansatz.kind",
}
SWEEP_KEYS = set(AXIS_ALIASES.values()) | {"interp.kind"}

DEFAULT_MAX_RUNS = 10000


def parse_config_text(text: str) -> Tuple[Dict[str, str], List[str]]:
    """解析 key = value 文本，返回 (值, 问题列表)"""
    values: Dict[str, str] = {}
    problems: List[str] = []
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("export "):
            line = line[7:].lstrip()
        if "=" not in line:
            problems.append(f"第 {lineno} 行缺少 '=': {raw_line.strip()}")
            continue

        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            problems.append(f"第 {lineno} 行缺少键名")
            continue

        if len(value) >= 2 and value[0] == value[-1] and value[0] in {"'", '"'}:
            value = value[1:-1]
        if key not in DEFAULT_CONFIG:
            problems.append(f"未知的配置键: {key}")
            continue
        values[key] = value
    return values, problems


def load_config_file(path: Path) -> Tuple[Dict[str, str], List[str]]:
    """读取配置文件；文件问题也作为 problems 返回"""
    path = Path(path)
    if not path.exists():
        return {}, [f"配置文件不存在: {path}"]
    try:
        with open(path, "r", encoding="utf-8") as f:
            return parse_config_text(f.read())
    except (IOError, UnicodeDecodeError) as e:
        return {}, [f"无法读取配置文件 {path}: {e}"]


@dataclass
class RunConfig:
    """校验后的运行配置"""

    raw: Dict[str, str]
    interp_kind: str
    alpha: float
    table_path: Optional[Path]
    ansatz_kind: str
    k: Optional[float]
    l: float
    kappa: Optional[float]
    phi_table_path: Optional[Path]
    eos: str
    eos_n: Optional[float]
    eos_K: float
    cutoff_convention: str
    y0: float
    rel_tol: float
    abs_tol: float
    r_max: float
    event_tol: float
    series_eps: float
    tail_decades: float
    output_dir: Path
    profile_format: str
    summary_format: str
    resample: int
    mass_scale: float
    workers: int
    max_runs: int
    source: Optional[Path] = None

    def build_interp(self) -> interp.InterpolationModel:
        return interp.build_interp(self.interp_kind, self.alpha, self.table_path)

    def build_zeta(self) -> ZetaModel:
        return ZetaModel(self.build_interp())

    def build_ansatz(self) -> eos.AnsatzModel:
        return eos.build_ansatz(
            self.ansatz_kind,
            k=self.k,
            l=self.l,
            kappa=self.kappa,
            phi_table_path=self.phi_table_path,
            eos=self.eos,
            eos_n=self.eos_n,
            eos_K=self.eos_K,
            cutoff_convention=self.cutoff_convention,
        )

    def solve_config(self) -> SolveConfig:
        return SolveConfig(
            y0=self.y0,
            series_eps=self.series_eps,
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
            r_max=self.r_max,
            event_tol=self.event_tol,
        )

    @property
    def effective_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def to_dict(self) -> Dict[str, str]:
        """合并后的扁平配置（写入 summary 作为来源记录）"""
        return {**DEFAULT_CONFIG, **self.raw}


def _typed(values: Dict[str, str], problems: List[str], base_dir: Path) -> Dict[str, Any]:
    typed: Dict[str, Any] = {}
    for key, text in values.items():
        if text == "":
            typed[key] = None
            continue
        if key in FLOAT_KEYS:
            try:
                number = float(text)
            except ValueError:
                problems.append(f"{key} 必须是数值: {text!r}")
                continue
            if not math.isfinite(number):
                problems.append(f"{key} 必须是有限值: {text!r}")
                continue
            typed[key] = number
        elif key in INT_KEYS:
            try:
                typed[key] = int(text)
            except ValueError:
                problems.append(f"{key} 必须是整数: {text!r}")
        elif key in PATH_KEYS:
            path = Path(text).expanduser()
            typed[key] = path if path.is_absolute() else base_dir / path
        else:
            typed[key] = text
    return typed


def _check_ranges(t: Dict[str, Any], problems: List[str]) -> None:
    kind = t["interp.kind"]
    if kind not in interp.KINDS:
        problems.append(f"interp.kind 必须是 {'/'.join(interp.KINDS)} 之一: {kind!r}")
    alpha = t.get("interp.alpha")
    if kind in (interp.SIMPLE, interp.TABLE):
        if alpha is None:
            problems.append(f"interp.kind={kind} 需要 interp.alpha")
        elif not 0.0 <= alpha <= 1.0:
            problems.append(f"interp.alpha 必须在 [0, 1] 内: {alpha}")
    if kind == interp.TABLE:
        path = t.get("interp.table_path")
        if path is None:
            problems.append("interp.kind=table 需要 interp.table_path")
        elif not path.exists():
            problems.append(f"interp.table_path 文件不存在: {path}")

    ansatz_kind = t["ansatz.kind"]
    if ansatz_kind not in eos.ANSATZ_KINDS:
        problems.append(f"ansatz.kind 必须是 {'/'.join(eos.ANSATZ_KINDS)} 之一: {ansatz_kind!r}")
    l = t.get("ansatz.l")
    if l is None:
        problems.append("缺少 ansatz.l")
    elif ansatz_kind in (eos.POLYTROPE, eos.PHI_TABLE) and not l > -0.5:
        problems.append(f"ansatz.l 必须大于 -1/2: {l}")
    elif ansatz_kind in (eos.MAXWELLIAN, eos.FLUID) and l != 0.0:
        problems.append(f"ansatz.kind={ansatz_kind} 要求 ansatz.l = 0: {l}")

    if ansatz_kind == eos.POLYTROPE:
        k = t.get("ansatz.k")
        if k is None:
            problems.append("ansatz.kind=polytrope 需要 ansatz.k")
        elif not k > -1.0:
            problems.append(f"ansatz.k 必须大于 -1: {k}")
    elif ansatz_kind == eos.PHI_TABLE:
        kappa = t.get("ansatz.kappa")
        if kappa is None:
            problems.append("ansatz.kind=phi-table 需要 ansatz.kappa")
        elif not kappa > -1.0:
            problems.append(f"ansatz.kappa 必须大于 -1: {kappa}")
        path = t.get("ansatz.phi_table_path")
        if path is None:
            problems.append("ansatz.kind=phi-table 需要 ansatz.phi_table_path")
        elif not path.exists():
            problems.append(f"ansatz.phi_table_path 文件不存在: {path}")
    elif ansatz_kind == eos.FLUID:
        if t["ansatz.eos"] not in eos.FLUID_EOS_KINDS:
            problems.append(f"ansatz.eos 必须是 {'/'.join(eos.FLUID_EOS_KINDS)} 之一: {t['ansatz.eos']!r}")
        n = t.get("ansatz.eos_n")
        if n is None:
            problems.append("ansatz.kind=fluid 需要 ansatz.eos_n")
        elif not n > 0.0:
            problems.append(f"ansatz.eos_n 必须为正: {n}")
        K = t.get("ansatz.eos_K")
        if K is None or not K > 0.0:
            problems.append(f"ansatz.eos_K 必须为正: {K}")

    convention = t["ansatz.cutoff_convention"]
    if convention not in eos.CONVENTIONS:
        problems.append(f"ansatz.cutoff_convention 必须是 {'/'.join(eos.CONVENTIONS)} 之一: {convention!r}")
    elif convention == eos.E0_AT_INFINITY:
        effective_alpha = 1.0 if kind == interp.STANDARD else (0.0 if kind == interp.NEWTONIAN else alpha)
        if effective_alpha == 1.0:
            problems.append("ansatz.cutoff_convention=E0-at-infinity 在 α=1 时不可用 (y_∞ = -∞)")
        if ansatz_kind == eos.MAXWELLIAN:
            problems.append("maxwellian 没有截断能量，不能使用 E0-at-infinity")

    for key in POSITIVE_KEYS:
        value = t.get(key)
        if value is None or not value > 0.0:
            problems.append(f"{key} 必须为正: {value}")
    if ansatz_kind == eos.MAXWELLIAN and t.get("solve.y0") is not None and t["solve.y0"] > eos.MAXWELLIAN_MAX_Y:
        problems.append(f"maxwellian 的 solve.y0 不能超过 {eos.MAXWELLIAN_MAX_Y:g}")
    tail = t.get("solve.tail_decades")
    if tail is None or tail < 0.0:
        problems.append(f"solve.tail_decades 不能为负: {tail}")

    if t["output.profile_format"] != "csv":
        problems.append(f"output.profile_format 只支持 csv: {t['output.profile_format']!r}")
    if t["output.summary_format"] != "json":
        problems.append(f"output.summary_format 只支持 json: {t['output.summary_format']!r}")
    if t.get("output.dir") is None:
        problems.append("缺少 output.dir")
    for key in ("output.resample", "sweep.workers"):
        if t.get(key) is None or t[key] < 0:
            problems.append(f"{key} 不能为负: {t.get(key)}")
    if t.get("output.mass_scale") is None or t["output.mass_scale"] < 0.0:
        problems.append(f"output.mass_scale 不能为负: {t.get('output.mass_scale')}")
    if t.get("sweep.max_runs") is None or t["sweep.max_runs"] < 1:
        problems.append(f"sweep.max_runs 必须至少为 1: {t.get('sweep.max_runs')}")


def validate_run_config(values: Dict[str, str], source: Optional[Path] = None) -> RunConfig:
    """
    合并默认值并校验，所有问题一次性抛出 ConfigError

    表文件在这里就加载一次，以便 μ 表的单调性与 α 交叉校验在计算前报错。
    """
    problems: List[str] = []
    unknown = sorted(set(values) - set(DEFAULT_CONFIG))
    problems.extend(f"未知的配置键: {key}" for key in unknown)

    merged = {**DEFAULT_CONFIG, **{k: v for k, v in values.items() if k in DEFAULT_CONFIG}}
    base_dir = source.parent if source is not None else Path.cwd()
    t = _typed(merged, problems, base_dir)
    if problems:
        raise ConfigError(problems)

    _check_ranges(t, problems)
    if problems:
        raise ConfigError(problems)

    kind = t["interp.kind"]
    alpha = {interp.NEWTONIAN: 0.0, interp.STANDARD: 1.0}.get(kind, t.get("interp.alpha"))
    config = RunConfig(
        raw=dict(values),
        interp_kind=kind,
        alpha=alpha,
        table_path=t.get("interp.table_path"),
        ansatz_kind=t["ansatz.kind"],
        k=t.get("ansatz.k"),
        l=t["ansatz.l"],
        kappa=t.get("ansatz.kappa"),
        phi_table_path=t.get("ansatz.phi_table_path"),
        eos=t["ansatz.eos"],
        eos_n=t.get("ansatz.eos_n"),
        eos_K=t["ansatz.eos_K"],
        cutoff_convention=t["ansatz.cutoff_convention"],
        y0=t["solve.y0"],
        rel_tol=t["solve.rel_tol"],
        abs_tol=t["solve.abs_tol"],
        r_max=t["solve.r_max"],
        event_tol=t["solve.event_tol"],
        series_eps=t["solve.series_eps"],
        tail_decades=t["solve.tail_decades"],
        output_dir=Path(t["output.dir"]),
        profile_format=t["output.profile_format"],
        summary_format=t["output.summary_format"],
        resample=t["output.resample"],
        mass_scale=t["output.mass_scale"],
        workers=t["sweep.workers"],
        max_runs=t["sweep.max_runs"],
        source=source,
    )

    # 模型构造本身的检查（表文件内容、物态方程假设）
    for builder in (config.build_interp, config.build_ansatz):
        try:
            builder()
        except MondError as e:
            problems.append(str(e))
    if problems:
        raise ConfigError(problems)
    return config


def load_run_config(path: Path) -> RunConfig:
    values, problems = load_config_file(path)
    if problems:
        raise ConfigError(problems)
    return validate_run_config(values, source=Path(path))


@dataclass
class SweepSpec:
    """参数扫描：各轴取值的笛卡尔积"""

    axes: List[Tuple[str, List[Any]]] = field(default_factory=list)
    max_runs: int = DEFAULT_MAX_RUNS

    @property
    def run_count(self) -> int:
        count = 1
        for _, values in self.axes:
            count *= len(values)
        return count

    def expand(self) -> List[Dict[str, str]]:
        """每个组合一个覆盖字典；没有轴时返回一个空覆盖"""
        if self.run_count > self.max_runs:
            raise ConfigError([f"扫描组合数 {self.run_count} 超过上限 sweep.max_runs={self.max_runs}"])
        keys = [key for key, _ in self.axes]
        value_lists = [values for _, values in self.axes]
        return [
            {key: str(value) for key, value in zip(keys, combo)}
            for combo in itertools.product(*value_lists)
        ]


def parse_sweep_spec(data: Dict[str, Any], default_max_runs: int = DEFAULT_MAX_RUNS) -> SweepSpec:
    problems: List[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["扫描文件必须是 JSON 对象"])
    unknown = sorted(set(data) - {"matrix", "max_runs"})
    problems.extend(f"扫描文件中未知的字段: {key}" for key in unknown)
    matrix = data.get("matrix", {})
    if not isinstance(matrix, dict):
        problems.append("matrix 必须是对象 {axis: [values...]}")
        matrix = {}

    axes: List[Tuple[str, List[Any]]] = []
    for name, values in matrix.items():
        key = AXIS_ALIASES.get(name, name)
        if key not in SWEEP_KEYS:
            problems.append(f"不支持的扫描轴: {name}（可选: {', '.join(sorted(AXIS_ALIASES))}）")
            continue
        if not isinstance(values, list) or not values:
            problems.append(f"扫描轴 {name} 必须是非空列表")
            continue
        axes.append((key, values))

    max_runs = data.get("max_runs", default_max_runs)
    if not isinstance(max_runs, int) or isinstance(max_runs, bool) or max_runs < 1:
        problems.append(f"max_runs 必须是正整数: {max_runs!r}")
        max_runs = default_max_runs
    if problems:
        raise ConfigError(problems)
    return SweepSpec(axes=axes, max_runs=max_runs)


def load_sweep_spec(path: Path, default_max_runs: int = DEFAULT_MAX_RUNS) -> SweepSpec:
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"扫描文件不存在: {path}"])
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError([f"扫描文件不是合法 JSON: {e}"])
    return parse_sweep_spec(data, default_max_runs)
