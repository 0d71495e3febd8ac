"""
结果存储模块 - CSV 剖面、JSON 摘要、扫描表与校验报告
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

STORE_VERSION = "1.0"

PROFILE_COLUMNS = ("r", "y", "m", "rho", "uprime", "U", "vcirc")
RESAMPLED_COLUMNS = ("r", "y", "m")

SWEEP_CSV_COLUMNS = (
    "run_id", "status", "exit_code", "overrides", "phase", "classification",
    "R", "M", "E0", "S", "v_flat", "tully_fisher_ratio", "output_dir", "error",
)


def jsonable(value: Any) -> Any:
    """numpy 标量/数组与非有限浮点数转为 JSON 可写的值"""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


@dataclass
class CheckRecord:
    """一条校验记录：value 与 threshold 比较得到 passed"""

    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return jsonable(asdict(self))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CheckRecord":
        # 只取已知字段
        known_fields = {f.name for f in cls.__dataclass_fields__.values()}
        filtered = {k: v for k, v in data.items() if k in known_fields}
        if filtered.get("value") is None:
            filtered["value"] = math.nan
        return cls(**filtered)


@dataclass
class RunRecord:
    """扫描中一次运行的摘要行"""

    run_id: str
    status: str = "ok"
    exit_code: int = 0
    overrides: Dict[str, str] = field(default_factory=dict)
    phase: str = ""
    classification: str = ""
    R: Optional[float] = None
    M: Optional[float] = None
    E0: Optional[float] = None
    S: Any = None
    v_flat: Optional[float] = None
    tully_fisher_ratio: Optional[float] = None
    output_dir: str = ""
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> Dict[str, Any]:
        return jsonable(asdict(self))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunRecord":
        known_fields = {f.name for f in cls.__dataclass_fields__.values()}
        filtered = {k: v for k, v in data.items() if k in known_fields}
        return cls(**filtered)

    @classmethod
    def from_summary(cls, run_id: str, summary: Dict[str, Any], overrides: Dict[str, str],
                     output_dir: Path) -> "RunRecord":
        """从 summary.json 的内容生成扫描行"""
        return cls(
            run_id=run_id,
            overrides=dict(overrides),
            phase=summary.get("phase", ""),
            classification=summary.get("classification", ""),
            R=summary.get("R"),
            M=summary.get("M"),
            E0=summary.get("E0"),
            S=summary.get("S"),
            v_flat=summary.get("v_flat"),
            tully_fisher_ratio=summary.get("tully_fisher_ratio"),
            output_dir=str(output_dir),
        )

    @classmethod
    def failure(cls, run_id: str, overrides: Dict[str, str], error: Exception, exit_code: int) -> "RunRecord":
        return cls(
            run_id=run_id,
            status="failed",
            exit_code=exit_code,
            overrides=dict(overrides),
            error=f"{type(error).__name__}: {error}",
        )


def write_profile_csv(path: Path, columns: Dict[str, Sequence[float]]) -> Path:
    """按列写 CSV，首行为列名"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[name], dtype=float) for name in names])
    np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", fmt="%.17g")
    return path


def read_profile_csv(path: Path) -> Dict[str, np.ndarray]:
    """读回 write_profile_csv 写的文件"""
    data = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


def write_json(path: Path, data: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(jsonable(data), f, indent=2, ensure_ascii=False)
    return path


def read_json(path: Path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_summary(path: Path, summary: Dict[str, Any]) -> Path:
    """summary.json: 分类、R、M、E0、S、拟合指数与求解器诊断"""
    return write_json(path, {
        "version": STORE_VERSION,
        "generated_at": datetime.now().isoformat(),
        **summary,
    })


def write_validation_report(path: Path, records: Iterable[CheckRecord]) -> Path:
    records = list(records)
    failed = [r.name for r in records if not r.passed]
    return write_json(path, {
        "version": STORE_VERSION,
        "generated_at": datetime.now().isoformat(),
        "passed": not failed,
        "total": len(records),
        "failed": failed,
        "checks": [r.to_dict() for r in records],
    })


def read_validation_report(path: Path) -> List[CheckRecord]:
    return [CheckRecord.from_dict(item) for item in read_json(path).get("checks", [])]


class SweepStore:
    """扫描结果表：sweep.json 为主，sweep.csv 便于表格工具读取"""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.json_file = self.directory / "sweep.json"
        self.csv_file = self.directory / "sweep.csv"
        self._runs: Dict[str, RunRecord] = {}
        self._loaded = False

    def _ensure_loaded(self) -> None:
        if self._loaded:
            return
        if self.json_file.exists():
            try:
                data = read_json(self.json_file)
                for item in data.get("runs", []):
                    record = RunRecord.from_dict(item)
                    self._runs[record.run_id] = record
            except (json.JSONDecodeError, IOError):
                self._runs = {}
        self._loaded = True

    def save(self) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        write_json(self.json_file, {
            "version": STORE_VERSION,
            "updated_at": datetime.now().isoformat(),
            "runs": [r.to_dict() for r in self.list()],
        })
        with open(self.csv_file, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=SWEEP_CSV_COLUMNS)
            writer.writeheader()
            for record in self.list():
                row = record.to_dict()
                row["overrides"] = ";".join(f"{k}={v}" for k, v in record.overrides.items())
                row["S"] = "" if row["S"] is None else row["S"]
                writer.writerow({k: ("" if row[k] is None else row[k]) for k in SWEEP_CSV_COLUMNS})

    def add(self, record: RunRecord) -> None:
        self._ensure_loaded()
        self._runs[record.run_id] = record

    def get(self, run_id: str) -> Optional[RunRecord]:
        self._ensure_loaded()
        return self._runs.get(run_id)

    def list(self, status: Optional[str] = None) -> List[RunRecord]:
        self._ensure_loaded()
        runs = sorted(self._runs.values(), key=lambda r: r.run_id)
        if status:
            runs = [r for r in runs if r.status == status]
        return runs

    def count(self) -> int:
        self._ensure_loaded()
        return len(self._runs)

    def clear(self) -> None:
        self._runs = {}
        self._loaded = True
        self.save()
