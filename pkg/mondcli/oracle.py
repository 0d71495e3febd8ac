"""
独立的慢速参考实现与校验套件

- rho_bruteforce: 速度空间二重积分直接求 ρ
- poisson_residual: 径向修正 Poisson 方程的差分残差（均匀加几何网格）
- lane_emden_reference: 牛顿极限 n=1 的解析解
- validation_suite: validate 子命令执行的全部检查
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.integrate import dblquad

from . import interp as interp_mod
from .eos import (
    MAXWELLIAN,
    MAXWELLIAN_PREFACTOR,
    POLYTROPE,
    AnsatzModel,
    g_from_phi,
    load_phi_table,
    maxwellian,
    phi_table_ansatz,
    polytrope,
)
from .errors import DomainError, MondError, QuadratureError
from .interp import InterpolationModel
from .observables import CONVERGENT, DIVERGENT_LOG, field_energy, rotation_curve
from .solver import RadialSolution, SolveConfig, extend_tail, integrate
from .store import CheckRecord
from .zeta import (
    ZetaModel,
    jeans_monotonicity_margin,
    round_trip_error,
    zeta_deep_exponent_check,
    zeta_sq_lipschitz_bound,
)

logger = logging.getLogger(__name__)

BRUTEFORCE_EPSREL = 1e-8
RESIDUAL_POINTS = 20001
GRADED_MIN_FRACTION = 1e-12
MIN_INTERIOR_POINTS = 100

C_L_CASES = [(l, k) for l in (0.0, 0.5, 1.0, 2.0) for k in (0.0, 1.0)]


def rho_bruteforce(ansatz: AnsatzModel, y: float, r: float) -> float:
    """
    ρ = π/r² ∫∫ Φ(y - w²/2 - L/(2r²)) L^l dL dw

    截断模型: w ∈ (-√(2y), √(2y))，L ∈ (0, 2r²(y - w²/2))；
    Maxwell 分布: w ∈ ℝ，L ∈ (0, ∞)。
    """
    if not ansatz.is_kinetic:
        raise DomainError("rho_bruteforce 只适用于动理学模型")
    if not (math.isfinite(y) and math.isfinite(r) and r > 0.0):
        raise DomainError(f"需要有限的 y 与 r > 0: y={y}, r={r}")
    l = ansatz.l
    two_r2 = 2.0 * r * r

    def integrand(L: float, w: float) -> float:
        return ansatz.phi(y - 0.5 * w * w - L / two_r2) * L ** l

    if ansatz.kind == MAXWELLIAN:
        value, err = dblquad(integrand, 0.0, math.inf, 0.0, math.inf, epsabs=0.0, epsrel=BRUTEFORCE_EPSREL)
    else:
        if y <= 0.0:
            return 0.0
        value, err = dblquad(
            integrand, 0.0, math.sqrt(2.0 * y), 0.0, lambda w: two_r2 * (y - 0.5 * w * w),
            epsabs=0.0, epsrel=BRUTEFORCE_EPSREL,
        )
    if not math.isfinite(value) or err > 1e3 * BRUTEFORCE_EPSREL * abs(value):
        raise QuadratureError(f"ρ 二重积分不收敛: y={y:g} r={r:g} value={value:.6g} err={err:.3g}")
    # w 只积了正半轴
    return 2.0 * math.pi / (r * r) * value


@dataclass
class ResidualReport:
    max_residual: float
    location: float
    grid_spacing: float


def profile_residual(
    r: np.ndarray,
    y: np.ndarray,
    m: np.ndarray,
    ansatz: AnsatzModel,
    zeta: ZetaModel,
) -> ResidualReport:
    """
    (r² μ(U′) U′)′ 与 4πr²ρ 的差，只在内点上计算

    U′ = ζ(m/r²)。r 严格递增即可，np.gradient 按非均匀间距取二阶差分。
    """
    if r.size < MIN_INTERIOR_POINTS + 2:
        raise DomainError(f"网格过粗：需要至少 {MIN_INTERIOR_POINTS} 个内点，实际 {r.size - 2}")
    interp = zeta.interp
    l = ansatz.l
    q = np.zeros_like(r)
    source = np.zeros_like(r)
    for i in range(r.size):
        if r[i] <= 0.0:
            continue
        u = zeta.eval(max(m[i], 0.0) / (r[i] * r[i]))
        q[i] = r[i] * r[i] * interp.mu(u) * u
        source[i] = 4.0 * math.pi * r[i] ** (2.0 + 2.0 * l) * ansatz.g(float(y[i]))

    dq = np.gradient(q, r)
    scale = float(np.max(np.abs(source)))
    if scale == 0.0:
        scale = 1.0
    diff = np.abs(dq[1:-1] - source[1:-1]) / scale
    i = int(np.argmax(diff))
    return ResidualReport(
        max_residual=float(diff[i]),
        location=float(r[i + 1]),
        grid_spacing=float(np.max(np.diff(r))),
    )


def resample_uniform(sol: RadialSolution, points: int, r_hi: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """在 [0, r_hi] 上用 dense output 均匀重采样 (r, y, m)"""
    if sol.dense is None:
        raise DomainError("解不带 dense output，无法重采样")
    if r_hi is None:
        r_hi = sol.R if sol.is_compact else float(sol.diagnostics.get("r_switch", sol.r[-1]))
    r = np.linspace(0.0, r_hi, points)
    y, m = sol.dense.sample(r[1:])
    return r, np.concatenate([[sol.y0], y]), np.concatenate([[0.0], m])


def residual_grid(r_lo: float, r_hi: float, points: int) -> np.ndarray:
    """[0, r_hi] 的均匀网格并上 [r_lo, r_hi] 的几何网格，过近的点合并"""
    if not 0.0 < r_lo < r_hi:
        raise DomainError(f"需要 0 < r_lo < r_hi: r_lo={r_lo}, r_hi={r_hi}")
    uniform = np.linspace(0.0, r_hi, points)
    graded = np.geomspace(r_lo, r_hi, points)
    r = np.unique(np.concatenate([uniform, graded]))
    ratio = graded[1] / graded[0] - 1.0
    gap = 0.1 * np.minimum(uniform[1], r[1:] * ratio)
    keep = np.concatenate([[True], np.diff(r) > gap])
    return r[keep]


def resample_graded(sol: RadialSolution, points: int, r_hi: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """在 residual_grid 上用 dense output 采样 (r, y, m)，几何段从级数起点开始"""
    if sol.dense is None:
        raise DomainError("解不带 dense output，无法重采样")
    if r_hi is None:
        r_hi = sol.R if sol.is_compact else float(sol.diagnostics.get("r_switch", sol.r[-1]))
    r_lo = float(sol.diagnostics.get("r_start") or sol.r[1])
    r = residual_grid(max(r_lo, GRADED_MIN_FRACTION * r_hi), r_hi, points)
    y, m = sol.dense.sample(r[1:])
    return r, np.concatenate([[sol.y0], y]), np.concatenate([[0.0], m])


def poisson_residual(
    sol: RadialSolution, interp: Optional[InterpolationModel] = None, points: int = RESIDUAL_POINTS,
    r_hi: Optional[float] = None,
) -> ResidualReport:
    """在 resample_graded 的网格上检查修正 Poisson 方程"""
    zeta = sol.zeta if interp is None else ZetaModel(interp)
    r, y, m = resample_graded(sol, points, r_hi)
    return profile_residual(r, y, m, sol.ansatz, zeta)


@dataclass
class LaneEmdenReference:
    """y = ẙ sin(ar)/(ar)，g(y) = c y"""

    y0: float
    c: float
    a: float
    R: float
    M: float

    def y(self, r: np.ndarray) -> np.ndarray:
        x = self.a * np.asarray(r, dtype=float)
        return self.y0 * np.sinc(x / math.pi)

    def m(self, r: np.ndarray) -> np.ndarray:
        x = self.a * np.asarray(r, dtype=float)
        return 4.0 * math.pi * self.c * self.y0 / self.a ** 3 * (np.sin(x) - x * np.cos(x))


def lane_emden_reference(y0: float, alpha: float = 0.0, k: float = -0.5, l: float = 0.0) -> LaneEmdenReference:
    if alpha != 0.0 or k != -0.5 or l != 0.0:
        raise DomainError(f"Lane-Emden 参考解只适用于 α=0, k=-1/2, l=0（收到 α={alpha}, k={k}, l={l}）")
    if not y0 > 0.0:
        raise DomainError(f"ẙ 必须为正: {y0}")
    c = polytrope(-0.5).g(1.0)
    a = math.sqrt(4.0 * math.pi * c)
    return LaneEmdenReference(y0=y0, c=c, a=a, R=math.pi / a, M=math.pi * y0 / a)


def compare_lane_emden(sol: RadialSolution) -> Tuple[float, float]:
    """(max |Δy|/ẙ, |ΔR|/R)"""
    ansatz = sol.ansatz
    if ansatz.kind != POLYTROPE:
        raise DomainError("Lane-Emden 比较需要 polytrope ansatz")
    ref = lane_emden_reference(sol.y0, sol.alpha, ansatz.k, ansatz.l)
    if not sol.is_compact:
        raise DomainError("Lane-Emden 比较需要紧支撑解")
    inside = sol.r <= sol.R
    dev_y = float(np.max(np.abs(sol.y[inside] - ref.y(sol.r[inside])))) / sol.y0
    dev_R = abs(sol.R - ref.R) / ref.R
    return dev_y, dev_R


# --------------------------------------------------------------------------
# validation suite
# --------------------------------------------------------------------------

def _check(records: List[CheckRecord], name: str, threshold: float, func: Callable[[], Tuple[float, str]],
           lower_is_better: bool = True) -> None:
    """运行一项检查；任何 mondcli 错误都记为该项失败"""
    try:
        value, detail = func()
    except MondError as e:
        logger.debug("check %s raised %s", name, e)
        records.append(CheckRecord(name, math.nan, threshold, False, f"{type(e).__name__}: {e}"))
        return
    passed = value <= threshold if lower_is_better else value > threshold
    records.append(CheckRecord(name, value, threshold, bool(passed), detail))


def bundled_models() -> List[InterpolationModel]:
    return [interp_mod.newtonian(), interp_mod.simple(0.5), interp_mod.simple(1.0), interp_mod.standard()]


def _c_l_checks(records: List[CheckRecord]) -> None:
    for l, k in C_L_CASES:
        def run(l=l, k=k):
            ansatz = polytrope(k, l)
            brute = rho_bruteforce(ansatz, 1.0, 1.0)
            return abs(brute / ansatz.g(1.0) - 1.0), f"brute={brute:.10g}"
        _check(records, f"c_l[l={l:g},k={k:g}]", 1e-6, run)

    def maxwell():
        brute = rho_bruteforce(maxwellian(), 0.0, 1.0)
        return abs(brute / MAXWELLIAN_PREFACTOR - 1.0), f"brute={brute:.10g}"
    _check(records, "rho_bruteforce[maxwellian]", 1e-6, maxwell)


def _zeta_checks(records: List[CheckRecord], model: InterpolationModel) -> None:
    zeta = ZetaModel(model)
    label = model.label
    for record in model.check_assumptions():
        records.append(record)

    _check(records, f"zeta_round_trip[{label}]", 1e-10,
           lambda: (round_trip_error(zeta), "max |ζ(τμ(τ)) - τ|/max(1,τ) on [1e-8, 1e8]"))

    def asymptotics():
        report = zeta_deep_exponent_check(zeta)
        return report.deep_deviation, f"far={report.far_deviation:.3g}"
    _check(records, f"zeta_deep_branch[{label}]", 1e-2, asymptotics)
    _check(records, f"zeta_far_branch[{label}]", 1e-3,
           lambda: (zeta_deep_exponent_check(zeta).far_deviation, "σ ∈ [1e4, 1e10]"))

    def lipschitz():
        report = zeta_sq_lipschitz_bound(zeta)
        return report.max_slope / report.bound, f"slope={report.max_slope:.6g} bound={report.bound:.6g}"
    _check(records, f"zeta_sq_lipschitz[{label}]", 1.0 + 1e-9, lipschitz)

    def jeans():
        margin = jeans_monotonicity_margin(zeta)
        return margin.min_margin, f"at σ={margin.at_sigma:.3g}"
    _check(records, f"jeans_margin[{label}]", 0.0, jeans, lower_is_better=False)


CANONICAL_SOLVES = [
    ("newtonian,k=1", lambda: interp_mod.newtonian(), 1.0, 1.0),
    ("simple(alpha=1),k=1", lambda: interp_mod.simple(1.0), 1.0, 1.0),
    ("simple(alpha=0.5),k=0", lambda: interp_mod.simple(0.5), 0.0, 1.0),
    ("simple(alpha=1),k=4,y0=10", lambda: interp_mod.simple(1.0), 4.0, 10.0),
]


def _solve(model: InterpolationModel, ansatz: AnsatzModel, y0: float = 1.0) -> RadialSolution:
    return integrate(SolveConfig(y0=y0), ansatz, ZetaModel(model))


def _poisson_checks(records: List[CheckRecord]) -> None:
    for name, factory, k, y0 in CANONICAL_SOLVES:
        def run(factory=factory, k=k, y0=y0):
            sol = _solve(factory(), polytrope(k), y0)
            report = poisson_residual(sol)
            return report.max_residual, f"at r={report.location:.4g}, h={report.grid_spacing:.3g}"
        _check(records, f"poisson_residual[{name}]", 1e-6, run)


def _lane_emden_check(records: List[CheckRecord]) -> None:
    def run():
        sol = _solve(interp_mod.newtonian(), polytrope(-0.5))
        dev_y, dev_R = compare_lane_emden(sol)
        return max(dev_y, dev_R), f"|Δy|/ẙ={dev_y:.3g} |ΔR|/R={dev_R:.3g}"
    _check(records, "lane_emden", 1e-8, run)


def _asymptotic_checks(records: List[CheckRecord]) -> None:
    def tully_fisher():
        sol = _solve(interp_mod.simple(1.0), polytrope(1.0))
        ratio = rotation_curve(sol).tully_fisher_ratio
        return abs(ratio - 1.0), f"v_flat⁴/M={ratio:.8g}"
    _check(records, "tully_fisher[alpha=1]", 1e-3, tully_fisher)

    def energy(model: InterpolationModel, expected: str, target: float):
        sol = _solve(model, polytrope(1.0))
        sol = extend_tail(sol, sol.R * 1e6)
        report = field_energy(sol, sol.R * 1e6)
        if report.classification != expected:
            return math.inf, f"classification={report.classification}"
        ratio = float(np.mean(report.ratios[-2:]))
        return abs(ratio / target - 1.0), f"decade ratio={ratio:.4g}"

    _check(records, "field_energy[alpha=1,log-divergent]", 0.05,
           lambda: energy(interp_mod.simple(1.0), DIVERGENT_LOG, 1.0))
    _check(records, "field_energy[alpha=0.5,convergent]", 0.1,
           lambda: energy(interp_mod.simple(0.5), CONVERGENT, 10.0 ** (-1.0 / 3.0)))


def _user_table_checks(
    records: List[CheckRecord],
    interp_table: Optional[Path],
    alpha: Optional[float],
    phi_table: Optional[Path],
    kappa: Optional[float],
    l: float,
) -> None:
    if interp_table is not None:
        try:
            model = interp_mod.from_table(Path(interp_table), float(alpha), check_alpha=False, strict=False)
        except MondError as e:
            records.append(CheckRecord(f"interp_table[{interp_table}]", math.nan, 0.0, False, str(e)))
        else:
            estimate = model.table_alpha_estimate()
            deviation = abs(estimate - model.alpha) / max(model.alpha, 0.1)
            records.append(CheckRecord(
                f"table_alpha[{interp_table}]", deviation, interp_mod.TABLE_ALPHA_TOLERANCE,
                deviation <= interp_mod.TABLE_ALPHA_TOLERANCE, f"estimated α={estimate:.4g}",
            ))
            _zeta_checks(records, model)

    if phi_table is not None:
        def run():
            table = load_phi_table(Path(phi_table), float(kappa))
            ansatz = phi_table_ansatz(table, l)
            brute = rho_bruteforce(ansatz, 1.0, 1.0)
            fast = g_from_phi(table, table.kappa, l, 1.0)
            return abs(brute / fast - 1.0), f"brute={brute:.10g} fast={fast:.10g}"
        _check(records, f"phi_table[{phi_table}]", 1e-6, run)


def validation_suite(
    interp_table: Optional[Path] = None,
    alpha: Optional[float] = None,
    phi_table: Optional[Path] = None,
    kappa: Optional[float] = None,
    l: float = 0.0,
    include_solves: bool = True,
) -> List[CheckRecord]:
    """validate 子命令的全部检查，每项一条记录"""
    if interp_table is not None and alpha is None:
        raise DomainError("--interp-table 需要同时给出 --alpha")
    if phi_table is not None and kappa is None:
        raise DomainError("--phi-table 需要同时给出 --kappa")

    records: List[CheckRecord] = []
    _c_l_checks(records)
    for model in bundled_models():
        _zeta_checks(records, model)
    if include_solves:
        _poisson_checks(records)
        _lane_emden_check(records)
        _asymptotic_checks(records)
    _user_table_checks(records, interp_table, alpha, phi_table, kappa, l)
    return records
