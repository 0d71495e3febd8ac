"""
MOND 插值函数 μ 及场能量原函数 F

所有模型满足:
    μ 在 [0,∞) 上单调不减、连续，在 (0,∞) 上连续可微
    lim_{τ→∞} μ(τ) = 1,  lim_{τ→0} τ^{-α} μ(τ) = 1
a0 在内部单位中归一化为 1。
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Optional, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError
from .quadrature import piecewise_quad
from .store import CheckRecord

NEWTONIAN = "newtonian"
SIMPLE = "simple"
STANDARD = "standard"
TABLE = "table"

KINDS = (NEWTONIAN, SIMPLE, STANDARD, TABLE)

# 用户表的 α 与最小样本处局部斜率允许的相对偏差
TABLE_ALPHA_TOLERANCE = 0.2

# 小 τ 时改用级数，避免闭式中的相消
_SERIES_U = 1e-3


def _check_tau(tau: float, strict: bool = False) -> float:
    tau = float(tau)
    if not math.isfinite(tau):
        raise DomainError(f"τ 必须是有限值: {tau}")
    if strict and tau <= 0.0:
        raise DomainError(f"τ 必须为正: {tau}")
    if tau < 0.0:
        raise DomainError(f"τ 不能为负: {tau}")
    return tau


@dataclass(frozen=True)
class InterpolationModel:
    """插值函数模型（构造后不可变）"""

    kind: str
    alpha: float
    a0: float = 1.0
    table_tau: Optional[Tuple[float, ...]] = None
    table_mu: Optional[Tuple[float, ...]] = None
    source: str = ""
    _pchip: Any = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"未知的插值函数类型: {self.kind}（可选: {', '.join(KINDS)}）")
        if not (0.0 <= self.alpha <= 1.0):
            raise DomainError(f"alpha 必须在 [0, 1] 内: {self.alpha}")
        if self.kind == NEWTONIAN and self.alpha != 0.0:
            raise DomainError("newtonian 模型的 alpha 固定为 0")
        if self.kind == STANDARD and self.alpha != 1.0:
            raise DomainError("standard 模型的 alpha 固定为 1")
        if self.kind == TABLE:
            self._build_table()

    def _build_table(self) -> None:
        if self.table_tau is None or self.table_mu is None:
            raise DomainError("table 模型需要 (tau, mu) 样本")
        tau = np.asarray(self.table_tau, dtype=float)
        mu = np.asarray(self.table_mu, dtype=float)
        if tau.ndim != 1 or tau.shape != mu.shape or tau.size < 2:
            raise DomainError("μ 表至少需要两行 (tau, mu)")
        if not np.all(np.isfinite(tau)) or not np.all(np.isfinite(mu)):
            raise DomainError("μ 表包含非有限值")
        if np.any(tau <= 0.0) or np.any(np.diff(tau) <= 0.0):
            raise DomainError("μ 表的 tau 列必须为正且严格递增")
        if np.any(mu <= 0.0):
            raise DomainError("μ 表的 mu 列必须为正")
        object.__setattr__(self, "_pchip", PchipInterpolator(np.log(tau), mu, extrapolate=False))

    @property
    def label(self) -> str:
        if self.kind == TABLE:
            return f"table(alpha={self.alpha:g}, source={self.source or '-'})"
        if self.kind == SIMPLE:
            return f"simple(alpha={self.alpha:g})"
        return self.kind

    @property
    def is_newtonian(self) -> bool:
        return self.kind == NEWTONIAN or (self.kind == SIMPLE and self.alpha == 0.0)

    def mu(self, tau: float) -> float:
        """μ(τ)"""
        tau = _check_tau(tau)
        if self.is_newtonian:
            return 1.0
        if self.kind == SIMPLE:
            return (tau / (1.0 + tau)) ** self.alpha
        if self.kind == STANDARD:
            return tau / math.hypot(1.0, tau)
        return self._table_mu(tau)

    def mu_prime(self, tau: float) -> float:
        """μ′(τ)，τ > 0"""
        tau = _check_tau(tau, strict=True)
        if self.is_newtonian:
            return 0.0
        if self.kind == SIMPLE:
            q = tau / (1.0 + tau)
            return self.alpha * q ** (self.alpha - 1.0) / (1.0 + tau) ** 2
        if self.kind == STANDARD:
            return (1.0 + tau * tau) ** -1.5
        return self._table_mu_prime(tau)

    def F(self, tau: float) -> float:
        """F(τ) = ∫_0^τ μ(√s) ds"""
        tau = _check_tau(tau)
        if tau == 0.0:
            return 0.0
        if self.is_newtonian:
            return tau
        u = math.sqrt(tau)
        if self.kind == SIMPLE and self.alpha == 1.0:
            if u < _SERIES_U:
                return u ** 3 * (2.0 / 3.0 - u / 2.0 + 0.4 * u * u - u ** 3 / 3.0)
            return tau - 2.0 * u + 2.0 * math.log1p(u)
        if self.kind == STANDARD:
            if u < _SERIES_U:
                return u ** 3 * (2.0 / 3.0 - tau / 5.0 + 3.0 * tau * tau / 28.0)
            return math.sqrt(tau * (1.0 + tau)) - math.asinh(u)
        # s = u^2: F(τ) = ∫_0^{√τ} 2u μ(u) du, split per decade
        breaks = [0.0] + [10.0 ** j for j in range(-8, 9) if 10.0 ** j < u] + [u]
        return piecewise_quad(lambda x: 2.0 * x * self.mu(x), breaks, what="F(τ)")

    def _table_mu(self, tau: float) -> float:
        tau_lo, tau_hi = self.table_tau[0], self.table_tau[-1]
        mu_lo, mu_hi = self.table_mu[0], self.table_mu[-1]
        if tau <= tau_lo:
            return mu_lo * (tau / tau_lo) ** self.alpha
        if tau >= tau_hi:
            return 1.0 - (1.0 - mu_hi) * tau_hi / tau
        return float(self._pchip(math.log(tau)))

    def _table_mu_prime(self, tau: float) -> float:
        tau_lo, tau_hi = self.table_tau[0], self.table_tau[-1]
        mu_lo, mu_hi = self.table_mu[0], self.table_mu[-1]
        if tau <= tau_lo:
            return self.alpha * mu_lo * tau ** (self.alpha - 1.0) / tau_lo ** self.alpha
        if tau >= tau_hi:
            return (1.0 - mu_hi) * tau_hi / (tau * tau)
        return float(self._pchip(math.log(tau), 1)) / tau

    def table_alpha_estimate(self) -> Optional[float]:
        """用最小的两个样本估计表的深 MOND 指数"""
        if self.kind != TABLE:
            return None
        t0, t1 = self.table_tau[0], self.table_tau[1]
        m0, m1 = self.table_mu[0], self.table_mu[1]
        return math.log(m1 / m0) / math.log(t1 / t0)

    def composite_is_increasing(self) -> bool:
        """τμ(τ) 在样本上是否严格递增（ζ 存在的条件）"""
        if self.kind != TABLE:
            return True
        tau = np.asarray(self.table_tau)
        return bool(np.all(np.diff(tau * np.asarray(self.table_mu)) > 0.0))

    def check_assumptions(self) -> List[CheckRecord]:
        """在 τ = 10^j (j=-8..8) 上检查 μ 的假设"""
        taus = [10.0 ** j for j in range(-8, 9)]
        values = [self.mu(t) for t in taus]
        prefix = f"interp[{self.label}]"

        drops = [a - b for a, b in zip(values[:-1], values[1:])]
        worst_drop = max(0.0, max(drops))
        deep = abs(values[0] / taus[0] ** self.alpha - 1.0)
        far = abs(values[-1] - 1.0)
        records = [
            CheckRecord(f"{prefix}.monotone", worst_drop, 0.0, worst_drop <= 0.0,
                        "max μ(τ_j) - μ(τ_{j+1})"),
            CheckRecord(f"{prefix}.bounded", max(values), 1.0, max(values) <= 1.0,
                        "max μ on grid"),
            CheckRecord(f"{prefix}.deep_limit", deep, 1e-3, deep <= 1e-3,
                        "|τ^-α μ(τ) - 1| at τ=1e-8"),
            CheckRecord(f"{prefix}.newtonian_limit", far, 1e-4, far <= 1e-4,
                        "|μ(τ) - 1| at τ=1e8"),
        ]
        if self.kind == TABLE:
            records.append(CheckRecord(
                f"{prefix}.composite_increasing",
                0.0 if self.composite_is_increasing() else 1.0,
                0.0,
                self.composite_is_increasing(),
                "τμ(τ) strictly increasing on samples",
            ))
        return records


def newtonian() -> InterpolationModel:
    return InterpolationModel(kind=NEWTONIAN, alpha=0.0)


def simple(alpha: float = 1.0) -> InterpolationModel:
    return InterpolationModel(kind=SIMPLE, alpha=float(alpha))


def standard() -> InterpolationModel:
    return InterpolationModel(kind=STANDARD, alpha=1.0)


def load_two_column_table(path: Path) -> Tuple[np.ndarray, np.ndarray]:
    """读取两列文本表（# 开头为注释）"""
    path = Path(path)
    if not path.exists():
        raise DomainError(f"表文件不存在: {path}")
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except ValueError as e:
        raise DomainError(f"无法解析表文件 {path}: {e}")
    if data.shape[1] != 2:
        raise DomainError(f"表文件 {path} 必须恰好两列，实际 {data.shape[1]} 列")
    return data[:, 0], data[:, 1]


def from_table(
    path: Path, alpha: float, check_alpha: bool = True, strict: bool = True
) -> InterpolationModel:
    """
    从 (tau, mu) 表构造插值函数

    Args:
        path: 两列文本文件
        alpha: 声明的深 MOND 指数
        check_alpha: 是否用最小样本交叉校验 alpha
        strict: 是否要求 τμ(τ) 严格递增
    """
    tau, mu = load_two_column_table(path)
    model = InterpolationModel(
        kind=TABLE,
        alpha=float(alpha),
        table_tau=tuple(float(t) for t in tau),
        table_mu=tuple(float(m) for m in mu),
        source=str(path),
    )
    if strict and not model.composite_is_increasing():
        raise DomainError(f"μ 表 {path} 中 τμ(τ) 不是严格递增的")
    if check_alpha:
        estimate = model.table_alpha_estimate()
        if abs(estimate - alpha) > TABLE_ALPHA_TOLERANCE * max(alpha, 0.1):
            raise DomainError(
                f"μ 表 {path} 的深 MOND 指数估计为 {estimate:.4g}，与声明的 alpha={alpha:g} 相差超过 20%"
            )
    return model


def build_interp(kind: str, alpha: float = 1.0, table_path: Optional[Path] = None) -> InterpolationModel:
    """按配置键构造模型"""
    if kind == NEWTONIAN:
        return newtonian()
    if kind == SIMPLE:
        return simple(alpha)
    if kind == STANDARD:
        return standard()
    if kind == TABLE:
        if table_path is None:
            raise DomainError("interp.kind=table 需要 interp.table_path")
        return from_table(Path(table_path), alpha)
    raise DomainError(f"未知的插值函数类型: {kind}")


def mu_eval(model: InterpolationModel, tau: float) -> float:
    return model.mu(tau)


def mu_prime_eval(model: InterpolationModel, tau: float) -> float:
    return model.mu_prime(tau)


def F_eval(model: InterpolationModel, tau: float) -> float:
    return model.F(tau)
