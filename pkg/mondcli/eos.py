"""
物质模型 - 约化密度律 g(y)

ρ(r) = r^{2l} g(y(r))，y = E0 - U。
支持: 动理学多方 (polytrope)、一般 Φ 表 (phi-table)、Maxwell 分布、流体物态方程。
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import beta

from .errors import DomainError
from .interp import load_two_column_table
from .quadrature import checked_quad, piecewise_quad
from .roots import expand_bracket, safeguarded_newton
from .store import CheckRecord

logger = logging.getLogger(__name__)

POLYTROPE = "polytrope"
PHI_TABLE = "phi-table"
MAXWELLIAN = "maxwellian"
FLUID = "fluid"

ANSATZ_KINDS = (POLYTROPE, PHI_TABLE, MAXWELLIAN, FLUID)

E0_ZERO = "E0-zero"
E0_AT_INFINITY = "E0-at-infinity"
AUTO = "auto"

CONVENTIONS = (AUTO, E0_ZERO, E0_AT_INFINITY)

FLUID_EOS_KINDS = ("polytropic-fluid",)

MAXWELLIAN_PREFACTOR = (2.0 * math.pi) ** 1.5
MAXWELLIAN_MAX_Y = 700.0

G_EPSREL = 1e-9


def c_l_constant(l: float) -> float:
    """ρ = r^{2l} g(y) 中的常数 c_l = 2^{l+3/2} π B(1/2, l+1)"""
    if not l > -0.5:
        raise DomainError(f"l 必须大于 -1/2: {l}")
    return 2.0 ** (l + 1.5) * math.pi * beta(0.5, l + 1.0)


def _check_polytrope(k: float, l: float) -> None:
    if not k > -1.0:
        raise DomainError(f"多方指数 k 必须大于 -1: {k}")
    if not l > -0.5:
        raise DomainError(f"l 必须大于 -1/2: {l}")


def g_polytrope(k: float, l: float, y: float) -> float:
    """Φ(η) = η_+^k 时的 g(y) = c_l B(k+1, l+3/2) y^{k+l+3/2}"""
    _check_polytrope(k, l)
    if y <= 0.0:
        return 0.0
    return c_l_constant(l) * beta(k + 1.0, l + 1.5) * y ** (k + l + 1.5)


def g_maxwellian(y: float) -> float:
    """(2π)^{3/2} e^y（E0 = 0）"""
    if y > MAXWELLIAN_MAX_Y:
        raise DomainError(f"Maxwell 分布在 y={y:.6g} > {MAXWELLIAN_MAX_Y:g} 处溢出")
    return MAXWELLIAN_PREFACTOR * math.exp(y)


@dataclass(frozen=True)
class PhiTable:
    """
    采样的 Φ(η)，η > 0

    ψ = Φ/η^κ 在 log η 上做单调三次插值；首个样本以下 ψ 取常数，
    末样本为 0 时视为紧支撑，否则按最后两点的幂律外推。
    """

    eta: Tuple[float, ...]
    phi: Tuple[float, ...]
    kappa: float
    source: str = ""
    _psi: Any = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if not self.kappa > -1.0:
            raise DomainError(f"kappa 必须大于 -1: {self.kappa}")
        if eta.ndim != 1 or eta.shape != phi.shape or eta.size < 2:
            raise DomainError("Φ 表至少需要两行 (eta, phi)")
        if np.any(eta <= 0.0) or np.any(np.diff(eta) <= 0.0):
            raise DomainError("Φ 表的 eta 列必须为正且严格递增")
        if np.any(phi < 0.0) or not np.all(np.isfinite(phi)):
            raise DomainError("Φ 表的 phi 列必须为非负有限值")
        if phi[0] <= 0.0:
            raise DomainError("Φ 在最小样本处必须为正（Φ > 0 a.e. on [0, η1]）")
        object.__setattr__(
            self, "_psi", PchipInterpolator(np.log(eta), phi / eta ** self.kappa, extrapolate=False)
        )

    @property
    def support_end(self) -> float:
        """Φ 的支撑上界，无界时为 inf"""
        return self.eta[-1] if self.phi[-1] == 0.0 else math.inf

    @property
    def tail_exponent(self) -> float:
        e0, e1 = self.eta[-2], self.eta[-1]
        p0, p1 = self.phi[-2], self.phi[-1]
        return math.log(p1 / p0) / math.log(e1 / e0)

    def psi(self, eta: float) -> float:
        if eta <= self.eta[0]:
            return self.phi[0] / self.eta[0] ** self.kappa
        if eta >= self.eta[-1]:
            if self.phi[-1] == 0.0:
                return 0.0
            psi_n = self.phi[-1] / self.eta[-1] ** self.kappa
            return psi_n * (eta / self.eta[-1]) ** (self.tail_exponent - self.kappa)
        return max(0.0, float(self._psi(math.log(eta))))

    def __call__(self, eta: float) -> float:
        if eta <= 0.0:
            return 0.0
        return self.psi(eta) * eta ** self.kappa


def load_phi_table(path: Path, kappa: float) -> PhiTable:
    eta, phi = load_two_column_table(path)
    return PhiTable(
        eta=tuple(float(e) for e in eta),
        phi=tuple(float(p) for p in phi),
        kappa=float(kappa),
        source=str(path),
    )


def g_from_phi(phi: PhiTable, kappa: float, l: float, y: float) -> float:
    """
    g(y) = c_l ∫_0^y Φ(η)(y-η)^{l+1/2} dη

    η^κ 与 (y-η)^{l+1/2} 两个端点因子交给 QUADPACK 的代数权 (weight='alg')。
    """
    if not l > -0.5:
        raise DomainError(f"l 必须大于 -1/2: {l}")
    if kappa != phi.kappa:
        raise DomainError(f"kappa={kappa} 与 Φ 表声明的 {phi.kappa} 不一致")
    if y <= 0.0:
        return 0.0

    upper = min(y, phi.support_end)
    what = f"g(y={y:.6g})"
    if upper < y:
        integral = checked_quad(
            lambda eta: phi.psi(eta) * (y - eta) ** (l + 0.5),
            0.0, upper, epsrel=G_EPSREL, weight="alg", wvar=(kappa, 0.0), what=what,
        )
    else:
        integral = checked_quad(
            phi.psi, 0.0, y, epsrel=G_EPSREL, weight="alg", wvar=(kappa, l + 0.5), what=what,
        )
    return c_l_constant(l) * integral


@dataclass(frozen=True)
class FluidEOS:
    """
    流体物态方程 P(ρ)

    Q(ρ) = ∫_0^ρ P′(s)/s ds，g = Q^{-1}。提供 Q_exact/Q_inverse_exact 时走闭式。
    """

    P: Callable[[float], float]
    Pprime: Callable[[float], float]
    n_growth: Optional[float] = None
    name: str = "custom"
    Q_exact: Optional[Callable[[float], float]] = None
    Q_inverse_exact: Optional[Callable[[float], float]] = None
    _table: Dict[str, np.ndarray] = field(default_factory=dict, init=False, repr=False, compare=False)

    TABLE_LOG_RHO = (-12.0, 12.0)
    TABLE_POINTS = 241

    def _integrand(self, s: float) -> float:
        return self.Pprime(s) / s if s > 0.0 else 0.0

    def _q_from_zero(self, rho: float) -> float:
        decades = [10.0 ** j for j in range(-30, 31) if 10.0 ** j < rho]
        return piecewise_quad(self._integrand, [0.0] + decades + [rho], what=f"Q({rho:.6g})")

    def _q_table(self) -> Tuple[np.ndarray, np.ndarray]:
        if "rho" not in self._table:
            rho = np.logspace(*self.TABLE_LOG_RHO, self.TABLE_POINTS)
            q = np.empty_like(rho)
            q[0] = self._q_from_zero(float(rho[0]))
            for i in range(1, rho.size):
                q[i] = q[i - 1] + checked_quad(self._integrand, float(rho[i - 1]), float(rho[i]), what="Q table")
            self._table["rho"] = rho
            self._table["q"] = q
            logger.debug("Q table built for %s: Q(1e-12)=%.6g Q(1e12)=%.6g", self.name, q[0], q[-1])
        return self._table["rho"], self._table["q"]

    def Q(self, rho: float) -> float:
        if rho <= 0.0:
            return 0.0
        if self.Q_exact is not None:
            return self.Q_exact(rho)
        rho_grid, q_grid = self._q_table()
        if rho < rho_grid[0]:
            return self._q_from_zero(rho)
        i = min(int(np.searchsorted(rho_grid, rho, side="right")) - 1, rho_grid.size - 1)
        return float(q_grid[i]) + checked_quad(self._integrand, float(rho_grid[i]), rho, what="Q")

    def Q_inverse(self, y: float) -> float:
        """Q^{-1}(y)，在 log ρ 上带保护 Newton"""
        if y <= 0.0:
            return 0.0
        if self.Q_inverse_exact is not None:
            return self.Q_inverse_exact(y)
        rho_grid, q_grid = self._q_table()
        i = int(np.searchsorted(q_grid, y))
        if 0 < i < q_grid.size:
            lo, hi = math.log(rho_grid[i - 1]), math.log(rho_grid[i])
        else:
            edge = math.log(rho_grid[0] if i == 0 else rho_grid[-1])
            lo, hi = expand_bracket(lambda x: self.Q(math.exp(x)) - y, edge, edge, step=math.log(10.0))

        def residual(x: float) -> Tuple[float, float]:
            rho = math.exp(x)
            return self.Q(rho) - y, self.Pprime(rho)

        x = safeguarded_newton(residual, lo, hi, ftol=1e-11 * max(1.0, y))
        return math.exp(x)

    def check_assumptions(self) -> List[CheckRecord]:
        """P′ > 0，∫_0^1 P′/s < ∞，∫_0^∞ P′/s = ∞（数值发散检测）"""
        prefix = f"eos[{self.name}]"
        samples = np.logspace(-12, 12, 49)
        min_pprime = min(self.Pprime(float(s)) for s in samples)

        # ∫_ε^1 在 ε = 1e-4, 1e-8, 1e-12 的增量比
        i4 = checked_quad(self._integrand, 1e-4, 1.0, what="∫P′/s")
        i8 = i4 + checked_quad(self._integrand, 1e-8, 1e-4, what="∫P′/s")
        i12 = i8 + checked_quad(self._integrand, 1e-12, 1e-8, what="∫P′/s")
        d1, d2 = i8 - i4, i12 - i8
        near_zero_ratio = d2 / d1 if d1 > 0.0 else 0.0

        inner = piecewise_quad(self._integrand, [1.0, 1e3, 1e6], what="∫P′/s")
        outer = piecewise_quad(self._integrand, [1e6, 1e9, 1e12], what="∫P′/s")
        growth = outer / max(inner, 1e-300)

        return [
            CheckRecord(f"{prefix}.pprime_positive", min_pprime, 0.0, min_pprime > 0.0,
                        "min P′ on [1e-12, 1e12]"),
            CheckRecord(f"{prefix}.q_finite_at_zero", near_zero_ratio, 0.99, near_zero_ratio < 0.99,
                        "increment ratio of ∫_ε^1 P′/s ds, ε=1e-8→1e-12 vs 1e-4→1e-8"),
            CheckRecord(f"{prefix}.q_unbounded", growth, 0.5, growth >= 0.5,
                        "(Q(1e12)-Q(1e6)) / (Q(1e6)-Q(1))"),
        ]


def polytropic_fluid(n: float, K: float = 1.0) -> FluidEOS:
    """P = K ρ^{1+1/n}，Q = K(n+1) ρ^{1/n}"""
    if not n > 0.0:
        raise DomainError(f"流体多方指数 n 必须为正: {n}")
    if not K > 0.0:
        raise DomainError(f"K 必须为正: {K}")
    return FluidEOS(
        P=lambda rho: K * rho ** (1.0 + 1.0 / n),
        Pprime=lambda rho: K * (1.0 + 1.0 / n) * rho ** (1.0 / n),
        n_growth=n,
        name=f"polytropic-fluid(n={n:g}, K={K:g})",
        Q_exact=lambda rho: K * (n + 1.0) * rho ** (1.0 / n),
        Q_inverse_exact=lambda y: (y / (K * (n + 1.0))) ** n,
    )


def g_fluid(eos: FluidEOS, y: float) -> float:
    """g(y) = Q^{-1}(y)，y ≤ 0 时为 0"""
    if y <= 0.0:
        return 0.0
    return eos.Q_inverse(y)


@dataclass(frozen=True)
class AnsatzModel:
    """微观物质模型（构造后不可变）"""

    kind: str
    l: float = 0.0
    k: Optional[float] = None
    kappa: Optional[float] = None
    phi_table: Optional[PhiTable] = None
    eos: Optional[FluidEOS] = None
    cutoff_convention: str = AUTO

    def __post_init__(self):
        if self.kind not in ANSATZ_KINDS:
            raise DomainError(f"未知的 ansatz 类型: {self.kind}（可选: {', '.join(ANSATZ_KINDS)}）")
        if self.cutoff_convention not in CONVENTIONS:
            raise DomainError(f"未知的截断约定: {self.cutoff_convention}")
        if self.kind == POLYTROPE:
            if self.k is None:
                raise DomainError("polytrope 需要 ansatz.k")
            _check_polytrope(self.k, self.l)
        elif self.kind == PHI_TABLE:
            if self.phi_table is None:
                raise DomainError("phi-table 需要 Φ 表")
            if not self.l > -0.5:
                raise DomainError(f"l 必须大于 -1/2: {self.l}")
            object.__setattr__(self, "kappa", self.phi_table.kappa)
        elif self.l != 0.0:
            raise DomainError(f"{self.kind} 的 l 固定为 0")
        if self.kind == FLUID and self.eos is None:
            raise DomainError("fluid 需要物态方程")
        if self.kind == MAXWELLIAN and self.cutoff_convention == E0_AT_INFINITY:
            raise DomainError("Maxwell 分布没有截断能量，不能使用 E0-at-infinity")

    @property
    def label(self) -> str:
        if self.kind == POLYTROPE:
            return f"polytrope(k={self.k:g}, l={self.l:g})"
        if self.kind == PHI_TABLE:
            return f"phi-table(kappa={self.kappa:g}, l={self.l:g}, source={self.phi_table.source or '-'})"
        if self.kind == FLUID:
            return f"fluid({self.eos.name})"
        return MAXWELLIAN

    @property
    def has_cutoff(self) -> bool:
        """y ≤ 0 时 g = 0（Maxwell 分布除外）"""
        return self.kind != MAXWELLIAN

    @property
    def is_kinetic(self) -> bool:
        return self.kind != FLUID

    def g(self, y: float) -> float:
        if self.kind == POLYTROPE:
            return g_polytrope(self.k, self.l, y)
        if self.kind == PHI_TABLE:
            return g_from_phi(self.phi_table, self.kappa, self.l, y)
        if self.kind == MAXWELLIAN:
            return g_maxwellian(y)
        return g_fluid(self.eos, y)

    def phi(self, eta: float) -> float:
        """分布函数的能量因子 Φ(η)"""
        if self.kind == POLYTROPE:
            return eta ** self.k if eta > 0.0 else 0.0
        if self.kind == PHI_TABLE:
            return self.phi_table(eta)
        if self.kind == MAXWELLIAN:
            return math.exp(eta)
        raise DomainError("流体模型没有分布函数 Φ")

    def pressure(self, rho: float) -> float:
        if self.kind != FLUID:
            raise DomainError("只有流体模型有物态方程 P(ρ)")
        return self.eos.P(rho) if rho > 0.0 else 0.0


def polytrope(k: float, l: float = 0.0, cutoff_convention: str = AUTO) -> AnsatzModel:
    return AnsatzModel(kind=POLYTROPE, k=float(k), l=float(l), cutoff_convention=cutoff_convention)


def maxwellian() -> AnsatzModel:
    return AnsatzModel(kind=MAXWELLIAN, cutoff_convention=E0_ZERO)


def phi_table_ansatz(table: PhiTable, l: float = 0.0, cutoff_convention: str = AUTO) -> AnsatzModel:
    return AnsatzModel(kind=PHI_TABLE, phi_table=table, l=float(l), cutoff_convention=cutoff_convention)


def fluid(eos: FluidEOS, cutoff_convention: str = AUTO, check: bool = True) -> AnsatzModel:
    if check and eos.Q_exact is None:
        failed = [c for c in eos.check_assumptions() if not c.passed]
        if failed:
            raise DomainError(
                f"物态方程 {eos.name} 不满足假设: " + ", ".join(f"{c.name}={c.value:.4g}" for c in failed)
            )
    return AnsatzModel(kind=FLUID, eos=eos, cutoff_convention=cutoff_convention)


@dataclass
class ExponentFit:
    exponent: float
    prefactor: float
    residual: float


def g_exponent_fit(ansatz: AnsatzModel, y_lo: float = 1e-6, y_hi: float = 1e-2, points: int = 25) -> ExponentFit:
    """
    在 [y_lo, y_hi] 的对数网格上拟合 g(y) ≈ C y^p

    prefactor 取网格上 min g(y)/y^p，对应下界 g(y) ≥ C y^p。
    """
    ys = np.geomspace(y_lo, y_hi, points)
    gs = np.array([ansatz.g(float(y)) for y in ys])
    if np.any(gs <= 0.0):
        raise DomainError(f"g 在 [{y_lo:g}, {y_hi:g}] 上不全为正，无法拟合指数")
    coeffs, residuals, *_ = np.polyfit(np.log(ys), np.log(gs), 1, full=True)
    p = float(coeffs[0])
    return ExponentFit(
        exponent=p,
        prefactor=float(np.min(gs / ys ** p)),
        residual=float(np.sqrt(residuals[0] / points)) if residuals.size else 0.0,
    )


def build_ansatz(
    kind: str,
    k: Optional[float] = None,
    l: float = 0.0,
    kappa: Optional[float] = None,
    phi_table_path: Optional[Path] = None,
    eos: str = "polytropic-fluid",
    eos_n: Optional[float] = None,
    eos_K: float = 1.0,
    cutoff_convention: str = AUTO,
) -> AnsatzModel:
    """按配置键构造 ansatz"""
    if kind == POLYTROPE:
        if k is None:
            raise DomainError("ansatz.kind=polytrope 需要 ansatz.k")
        return polytrope(k, l, cutoff_convention)
    if kind == PHI_TABLE:
        if phi_table_path is None or kappa is None:
            raise DomainError("ansatz.kind=phi-table 需要 ansatz.phi_table_path 和 ansatz.kappa")
        return phi_table_ansatz(load_phi_table(Path(phi_table_path), kappa), l, cutoff_convention)
    if kind == MAXWELLIAN:
        return maxwellian()
    if kind == FLUID:
        if eos not in FLUID_EOS_KINDS:
            raise DomainError(f"未知的物态方程: {eos}")
        if eos_n is None:
            raise DomainError("ansatz.kind=fluid 需要 ansatz.eos_n")
        return fluid(polytropic_fluid(eos_n, eos_K), cutoff_convention)
    raise DomainError(f"未知的 ansatz 类型: {kind}")
