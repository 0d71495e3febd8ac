"""
径向约化系统求解

    y′ = -ζ(m/r²),   m′ = 4π r^{2+2l} g(y)

从正则奇点 r=0 出发：先用级数给出 r_s 处的状态，再用 DOP853 积分；
y=0 处终止（紧支撑），否则积分到 r_max 并按尾部拟合分类。
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .eos import MAXWELLIAN, AnsatzModel
from .errors import DomainError, IntegrationError
from .quadrature import checked_quad
from .zeta import ZetaCache, ZetaModel

logger = logging.getLogger(__name__)

COMPACT = "compact"
EXTENDED = "extended"

PHASE_COMPACT = "compact"
PHASE_FINITE_Y_INF = "extended-finite-y∞"
PHASE_DIVERGENT = "extended-divergent"
PHASE_UNCLASSIFIED = "extended-unclassified"
# phase 描述 y∞，质量收敛与否见 MASS_*

MASS_DIVERGENT = "extended; mass divergent"
MASS_FINITE = "extended; mass finite"

# σ 低于此值时级数积分直接用深 MOND 渐近式
SERIES_DEEP_SIGMA = 1e-12
SERIES_MAX_ITER = 60

DENSE_PER_DECADE = 40
TAIL_PER_DECADE = 60
SWITCH_FACTOR = 10.0

# |y′| 尾部指数低于此值视为 y∞ 有限
Y_INF_EXPONENT = -1.05

MAXWELLIAN_MASS_DEVICE = 36.0
MAXWELLIAN_SLOPE_DEVICE = 3.0


@dataclass(frozen=True)
class SolveConfig:
    """单次积分参数"""

    y0: float
    series_eps: float = 1e-10
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    r_max: float = 1e8
    event_tol: float = 1e-12
    r_start: Optional[float] = None

    def __post_init__(self):
        problems = []
        if not (math.isfinite(self.y0) and self.y0 > 0.0):
            problems.append(f"solve.y0 必须为正: {self.y0}")
        if not self.r_max > 0.0:
            problems.append(f"solve.r_max 必须为正: {self.r_max}")
        for name in ("series_eps", "rel_tol", "abs_tol", "event_tol"):
            value = getattr(self, name)
            if not value > 0.0:
                problems.append(f"solve.{name} 必须为正: {value}")
        if self.r_start is not None and not 0.0 < self.r_start < self.r_max:
            problems.append(f"r_start 必须在 (0, r_max) 内: {self.r_start}")
        if problems:
            raise DomainError("; ".join(problems))


@dataclass
class SeriesStart:
    r: float
    y: float
    m: float
    delta: float
    error_estimate: float
    flagged: bool = False


@dataclass
class SupportClassification:
    """
    支撑分类

    phase 只看势的尾部（y∞ 是否有限），classification 只看质量是否收敛，两者独立：
    牛顿 k=4 的 phase 为 extended-finite-y∞，classification 仍是 mass divergent。
    """

    kind: str
    classification: str
    phase: str
    R: Optional[float] = None
    M: Optional[float] = None
    mass_exponent: Optional[float] = None
    uprime_exponent: Optional[float] = None
    rho_r3_exponent: Optional[float] = None
    y_inf_finite: Optional[bool] = None
    mass_converged: Optional[bool] = None
    fit_residuals: Dict[str, float] = field(default_factory=dict)
    r_mass_36: Optional[float] = None
    r_slope_above_3: Optional[float] = None
    tail_range: Optional[Tuple[float, float]] = None

    @property
    def is_compact(self) -> bool:
        return self.kind == COMPACT

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class DenseProfile:
    """
    (y, m) 的连续插值

    r < r_s 用级数，积分段用 solve_ivp 的 dense output，
    紧支撑解在 R 之外用真空尾部。
    """

    def __init__(self, series: Callable[[float], Tuple[float, float]], r_start: float):
        self._series = series
        self._r_start = r_start
        self._segments: List[Tuple[float, float, Any, bool]] = []
        self._vacuum: Optional[Tuple[float, float, ZetaModel]] = None

    def add_segment(self, r_lo: float, r_hi: float, dense: Any, log_var: bool) -> None:
        self._segments.append((r_lo, r_hi, dense, log_var))

    def set_vacuum(self, R: float, M: float, zeta: ZetaModel) -> None:
        self._vacuum = (R, M, zeta)

    @property
    def r_end(self) -> float:
        return self._segments[-1][1] if self._segments else self._r_start

    def __call__(self, r: float) -> Tuple[float, float]:
        r = float(r)
        if r <= self._r_start:
            return self._series(r)
        if self._vacuum is not None and r > self._vacuum[0]:
            R, M, zeta = self._vacuum
            drop = checked_quad(lambda s: zeta.eval(M / (s * s)), R, r, what="vacuum y")
            return -drop, M
        for r_lo, r_hi, dense, log_var in self._segments:
            if r <= r_hi * (1.0 + 1e-14):
                y, m = dense(math.log(r) if log_var else r)
                return float(y), float(m)
        y, m = self._segments[-1][2](math.log(r) if self._segments[-1][3] else r)
        return float(y), float(m)

    def sample(self, radii: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ys = np.empty(len(radii))
        ms = np.empty(len(radii))
        for i, r in enumerate(radii):
            ys[i], ms[i] = self(r)
        return ys, ms


@dataclass
class RadialSolution:
    """径向解及其分类"""

    r: np.ndarray
    y: np.ndarray
    m: np.ndarray
    rho: np.ndarray
    uprime: np.ndarray
    y0: float
    l: float
    config: SolveConfig
    ansatz: AnsatzModel
    zeta: ZetaModel
    support: Optional[SupportClassification] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    dense: Optional[DenseProfile] = field(default=None, repr=False, compare=False)
    tail_start: Optional[int] = None

    @property
    def alpha(self) -> float:
        return self.zeta.alpha

    @property
    def R(self) -> Optional[float]:
        return self.support.R if self.support else None

    @property
    def M(self) -> Optional[float]:
        return self.support.M if self.support else None

    @property
    def is_compact(self) -> bool:
        return self.support is not None and self.support.is_compact

    @property
    def provenance(self) -> Dict[str, Any]:
        return {
            "interp": self.zeta.interp.label,
            "ansatz": self.ansatz.label,
            "solve": asdict(self.config),
        }


def central_density(ansatz: AnsatzModel, y0: float, l: float) -> float:
    """ρ(0)：l=0 为 g(ẙ)，l>0 为 0，l<0 发散"""
    if l == 0.0:
        return ansatz.g(y0)
    return 0.0 if l > 0.0 else math.inf


def radius_estimate(ansatz: AnsatzModel, y0: float) -> float:
    """Lane-Emden 量级的半径估计 π √(ẙ / (4π g(ẙ)))"""
    return math.pi * math.sqrt(y0 / (4.0 * math.pi * ansatz.g(y0)))


def reduced_rhs(
    r: float,
    state: np.ndarray,
    g: Callable[[float], float],
    zeta: ZetaModel,
    l: float,
    cache: Optional[ZetaCache] = None,
) -> List[float]:
    """(y′, m′) at radius r"""
    y, m = state
    sigma = max(m, 0.0) / (r * r)
    return [-zeta.eval(sigma, cache), 4.0 * math.pi * r ** (2.0 + 2.0 * l) * g(y)]


def _series_drop(zeta: ZetaModel, c: float, l: float, r: float) -> float:
    """∫_0^r ζ(c s^{2l+1}) ds"""
    if r <= 0.0 or c <= 0.0:
        return 0.0
    q = 2.0 * l + 1.0
    if c * r ** q < SERIES_DEEP_SIGMA:
        p = 1.0 / (1.0 + zeta.alpha)
        return c ** p * r ** (q * p + 1.0) / (q * p + 1.0)
    return checked_quad(lambda s: zeta.eval(c * s ** q), 0.0, r, epsrel=1e-12, what="series start")


def series_start(config: SolveConfig, ansatz: AnsatzModel, zeta: ZetaModel) -> SeriesStart:
    """
    r_s 处的首阶状态

    m = 4πg(ẙ)/(2l+3) r^{2l+3}，y = ẙ - ∫_0^r ζ(m/s²) ds。r_s 取使
    g(ẙ/2) 与 g(ẙ) 两侧夹逼之差不超过 series_eps·ẙ 的半径。
    """
    l = ansatz.l
    y0 = config.y0
    g_hi = ansatz.g(y0)
    if not g_hi > 0.0:
        raise DomainError(f"g(ẙ)=0：ẙ={y0:g} 只给出平凡解 (trivial state)")
    g_lo = ansatz.g(0.5 * y0)
    c_hi = 4.0 * math.pi * g_hi / (2.0 * l + 3.0)
    c_lo = 4.0 * math.pi * g_lo / (2.0 * l + 3.0)

    def error_at(r: float) -> float:
        return _series_drop(zeta, c_hi, l, r) - _series_drop(zeta, c_lo, l, r)

    target = config.series_eps * y0
    r_cap = 1e-3 * radius_estimate(ansatz, y0)
    flagged = False

    if config.r_start is not None:
        r = config.r_start
        err = error_at(r)
    else:
        # err ∝ r^order 在 r → 0 时成立
        order = (2.0 * l + 1.0) / (1.0 + zeta.alpha) + 1.0
        r = r_cap
        err = error_at(r)
        for _ in range(SERIES_MAX_ITER):
            if err <= 0.0:
                break
            if 0.5 * target <= err <= target:
                break
            r_new = min(r * (target / err) ** (1.0 / order), r_cap)
            if r_new == r:
                break
            r = r_new
            err = error_at(r)
        if err > target or r < 1e-150:
            flagged = True
            logger.warning(
                "series start ill-conditioned: r_s=%.3g error estimate %.3g > %.3g (%s)",
                r, err, target, ansatz.label,
            )

    delta = _series_drop(zeta, c_hi, l, r)
    return SeriesStart(
        r=r,
        y=y0 - delta,
        m=c_hi * r ** (2.0 * l + 3.0),
        delta=delta,
        error_estimate=err,
        flagged=flagged,
    )


def _refine_crossing(dense: Any, a: float, t_event: float, tol: float) -> float:
    """在 dense output 上用 brentq 把 y=0 定位到 tol"""
    f = lambda t: float(dense(t)[0])
    b = t_event
    if f(b) > 0.0:
        b = t_event + max(t_event - a, abs(t_event) * 1e-12)
    if f(a) <= 0.0 or f(b) > 0.0:
        return t_event
    rtol = max(tol, 4.0 * np.finfo(float).eps)
    return brentq(f, a, b, xtol=tol * max(abs(t_event), 1e-300), rtol=rtol)


def _check_ivp(result: Any, what: str) -> None:
    if result.status == -1 or not np.all(np.isfinite(result.y)):
        last = result.t[-1]
        finite = np.all(np.isfinite(result.y), axis=0)
        idx = int(np.nonzero(finite)[0][-1]) if np.any(finite) else 0
        raise IntegrationError(
            f"{what} 失败: {result.message}",
            last_state=(float(result.t[idx]), float(result.y[0, idx]), float(result.y[1, idx]))
            if result.y.size else (float(last), math.nan, math.nan),
        )


def integrate(config: SolveConfig, ansatz: AnsatzModel, zeta: ZetaModel) -> RadialSolution:
    """从 r_s 积分到 y=0 或 r_max"""
    l = ansatz.l
    g = ansatz.g
    cache = ZetaCache()
    start = series_start(config, ansatz, zeta)
    c_hi = start.m / start.r ** (2.0 * l + 3.0)

    def series(r: float) -> Tuple[float, float]:
        return config.y0 - _series_drop(zeta, c_hi, l, r), c_hi * r ** (2.0 * l + 3.0)

    def rhs_r(r, s):
        return reduced_rhs(r, s, g, zeta, l, cache)

    def rhs_log(t, s):
        r = math.exp(t)
        dy, dm = reduced_rhs(r, s, g, zeta, l, cache)
        return [r * dy, r * dm]

    def crossing(t, s):
        return s[0]

    crossing.terminal = True
    crossing.direction = -1
    events = [crossing] if ansatz.has_cutoff else None

    atol = [config.abs_tol, max(config.abs_tol * start.m, 1e-300)]
    r_switch = min(SWITCH_FACTOR * max(1.0, radius_estimate(ansatz, config.y0)), config.r_max)
    dense = DenseProfile(series, start.r)

    ts: List[np.ndarray] = [np.array([start.r])]
    ys: List[np.ndarray] = [np.array([[start.y], [start.m]])]
    R = None
    nfev = 0
    steps = 0

    phase1 = solve_ivp(
        rhs_r, (start.r, r_switch), [start.y, start.m], method="DOP853",
        rtol=config.rel_tol, atol=atol, dense_output=True, events=events,
    )
    _check_ivp(phase1, "phase 1 integration")
    nfev += phase1.nfev
    steps += phase1.t.size - 1
    dense.add_segment(start.r, float(phase1.t[-1]), phase1.sol, False)
    ts.append(phase1.t[1:])
    ys.append(phase1.y[:, 1:])

    if phase1.status == 1:
        R = _refine_crossing(phase1.sol, float(phase1.t[-2]), float(phase1.t[-1]), config.event_tol)
    elif r_switch < config.r_max:
        state = phase1.y[:, -1]
        phase2 = solve_ivp(
            rhs_log, (math.log(r_switch), math.log(config.r_max)), state, method="DOP853",
            rtol=config.rel_tol, atol=atol, dense_output=True, events=events,
        )
        _check_ivp(phase2, "phase 2 integration")
        nfev += phase2.nfev
        steps += phase2.t.size - 1
        dense.add_segment(r_switch, float(math.exp(phase2.t[-1])), phase2.sol, True)
        ts.append(np.exp(phase2.t[1:]))
        ys.append(phase2.y[:, 1:])
        if phase2.status == 1:
            t_R = _refine_crossing(phase2.sol, float(phase2.t[-2]), float(phase2.t[-1]), config.event_tol)
            R = math.exp(t_R)

    r_steps = np.concatenate(ts)
    y_steps = np.concatenate([s[0] for s in ys])
    m_steps = np.concatenate([s[1] for s in ys])

    if R is not None:
        keep = r_steps < R * (1.0 - 1e-12)
        r_steps, y_steps, m_steps = r_steps[keep], y_steps[keep], m_steps[keep]
        _, M = dense(R)
        r_end = R
    else:
        r_end = dense.r_end
        M = None

    decades = math.log10(r_end / start.r)
    samples = np.geomspace(start.r, r_end, max(2, int(math.ceil(DENSE_PER_DECADE * decades)) + 1))[1:-1]
    y_dense, m_dense = dense.sample(samples)

    r = np.concatenate([[0.0], r_steps, samples])
    y = np.concatenate([[config.y0], y_steps, y_dense])
    m = np.concatenate([[0.0], m_steps, m_dense])
    if R is not None:
        r = np.append(r, R)
        y = np.append(y, 0.0)
        m = np.append(m, M)
        dense.set_vacuum(R, M, zeta)

    order = np.argsort(r, kind="stable")
    r, y, m = r[order], y[order], m[order]
    keep = np.concatenate([[True], np.diff(r) > 1e-12 * r[1:]])
    r, y, m = r[keep], y[keep], m[keep]
    if R is not None:
        y[-1] = 0.0
    m = np.maximum.accumulate(np.maximum(m, 0.0))

    rho = np.empty_like(r)
    uprime = np.empty_like(r)
    rho[0] = central_density(ansatz, config.y0, l)
    uprime[0] = 0.0
    for i in range(1, r.size):
        rho[i] = r[i] ** (2.0 * l) * g(float(y[i]))
        uprime[i] = zeta.eval(m[i] / (r[i] * r[i]), cache)

    sol = RadialSolution(
        r=r, y=y, m=m, rho=rho, uprime=uprime, y0=config.y0, l=l,
        config=config, ansatz=ansatz, zeta=zeta, dense=dense,
        diagnostics={
            "r_start": start.r,
            "series_error": start.error_estimate,
            "series_flagged": start.flagged,
            "r_switch": r_switch,
            "nfev": nfev,
            "steps": steps,
            "zeta_inversion": zeta.inversion,
            "zeta_cache_hits": cache.hits,
        },
    )

    if R is not None:
        sol.support = SupportClassification(
            kind=COMPACT, classification=COMPACT, phase=PHASE_COMPACT, R=R, M=M,
        )
    else:
        try:
            sol.support = classify_support(sol)
        except DomainError as e:
            logger.warning("tail classification skipped: %s", e)
            sol.support = SupportClassification(
                kind=EXTENDED, classification="extended; unclassified", phase=PHASE_UNCLASSIFIED,
            )
    logger.debug(
        "integrated %s / %s ẙ=%g: %s, %d steps, %d rhs evaluations",
        ansatz.label, zeta.interp.label, config.y0, sol.support.classification, steps, nfev,
    )
    return sol


@dataclass
class LogLogFit:
    slope: float
    intercept: float
    residual: float


def loglog_fit(x: np.ndarray, v: np.ndarray) -> LogLogFit:
    """最小二乘拟合 log|v| = slope·log x + intercept，返回 RMS 残差"""
    x = np.asarray(x, dtype=float)
    v = np.abs(np.asarray(v, dtype=float))
    ok = (x > 0.0) & (v > 0.0) & np.isfinite(v)
    if np.count_nonzero(ok) < 3:
        raise DomainError("拟合点不足（需要至少 3 个正值点）")
    lx, lv = np.log(x[ok]), np.log(v[ok])
    coeffs = np.polyfit(lx, lv, 1)
    resid = lv - np.polyval(coeffs, lx)
    return LogLogFit(slope=float(coeffs[0]), intercept=float(coeffs[1]), residual=float(np.sqrt(np.mean(resid ** 2))))


def tail_window(r: np.ndarray, decades: float = 2.0, min_points: int = 10) -> np.ndarray:
    """网格最后 decades 个数量级的布尔掩码"""
    r_end = r[-1]
    positive = r[r > 0.0]
    if positive.size == 0 or r_end / positive[0] < 10.0 ** (decades + 1.0):
        raise DomainError(f"尾部数据不足：网格只覆盖到 r={r_end:.3g}，请增大 solve.r_max")
    mask = r >= r_end / 10.0 ** decades
    if np.count_nonzero(mask) < min_points:
        raise DomainError(f"尾部数据不足：最后 {decades:g} 个数量级只有 {np.count_nonzero(mask)} 个点")
    return mask


def classify_support(sol: RadialSolution) -> SupportClassification:
    """紧支撑 / 延展分类；延展解按最后两个数量级的 log-log 拟合判断"""
    if sol.support is not None and sol.support.is_compact:
        return sol.support

    mask = tail_window(sol.r)
    r = sol.r[mask]
    mass_fit = loglog_fit(r, sol.m[mask])
    uprime_fit = loglog_fit(r, sol.uprime[mask])
    rho3_fit = loglog_fit(r, sol.rho[mask] * r ** 3)

    y_inf_finite = uprime_fit.slope < Y_INF_EXPONENT
    mass_converged = rho3_fit.slope < 0.0
    residuals = {"mass": mass_fit.residual, "uprime": uprime_fit.residual, "rho_r3": rho3_fit.residual}
    for name, value in residuals.items():
        if value > 0.05:
            logger.warning("tail fit %s has large residual %.3g", name, value)

    r_mass_36 = None
    r_slope_above_3 = None
    if sol.ansatz.kind == MAXWELLIAN:
        above = np.nonzero(sol.m > MAXWELLIAN_MASS_DEVICE)[0]
        if above.size:
            r_mass_36 = float(sol.r[above[0]])
        slope = sol.r * sol.uprime
        below = np.nonzero(slope <= MAXWELLIAN_SLOPE_DEVICE)[0]
        last = int(below[-1]) if below.size else -1
        if last < sol.r.size - 1:
            r_slope_above_3 = float(sol.r[last + 1])

    return SupportClassification(
        kind=EXTENDED,
        classification=MASS_FINITE if mass_converged else MASS_DIVERGENT,
        phase=PHASE_FINITE_Y_INF if y_inf_finite else PHASE_DIVERGENT,
        M=float(sol.m[-1]) if mass_converged else None,
        mass_exponent=mass_fit.slope,
        uprime_exponent=uprime_fit.slope,
        rho_r3_exponent=rho3_fit.slope,
        y_inf_finite=y_inf_finite,
        mass_converged=mass_converged,
        fit_residuals=residuals,
        r_mass_36=r_mass_36,
        r_slope_above_3=r_slope_above_3,
        tail_range=(float(r[0]), float(r[-1])),
    )


def extend_tail(sol: RadialSolution, r_out: float) -> RadialSolution:
    """在 R 之外追加真空段：ρ=0，m=M，U′=ζ(M/r²)"""
    if not sol.is_compact:
        raise DomainError("extend_tail 只适用于紧支撑解")
    R, M = sol.R, sol.M
    if not r_out > R:
        raise DomainError(f"r_out={r_out:g} 必须大于 R={R:g}")

    decades = math.log10(r_out / R)
    n = max(1, int(math.ceil(TAIL_PER_DECADE * decades - 1e-9)))
    # k/60 为整数时 10**k 精确，网格包含 R·10^j
    radii = R * 10.0 ** (np.arange(1, n + 1) / TAIL_PER_DECADE)
    radii = np.append(radii[radii < r_out * (1.0 - 1e-12)], r_out)

    zeta = sol.zeta
    field_at = lambda s: zeta.eval(M / (s * s))
    y_tail = np.empty(radii.size)
    y_prev, r_prev = float(sol.y[-1]), R
    for i, r in enumerate(radii):
        y_prev -= checked_quad(field_at, r_prev, float(r), what="vacuum tail")
        r_prev = float(r)
        y_tail[i] = y_prev

    return replace(
        sol,
        r=np.concatenate([sol.r, radii]),
        y=np.concatenate([sol.y, y_tail]),
        m=np.concatenate([sol.m, np.full(radii.size, M)]),
        rho=np.concatenate([sol.rho, np.zeros(radii.size)]),
        uprime=np.concatenate([sol.uprime, [field_at(float(r)) for r in radii]]),
        tail_start=sol.r.size if sol.tail_start is None else sol.tail_start,
    )


def solve(config: SolveConfig, ansatz: AnsatzModel, zeta: ZetaModel, tail_decades: float = 0.0) -> RadialSolution:
    """integrate + 可选的真空尾部"""
    sol = integrate(config, ansatz, zeta)
    if tail_decades > 0.0 and sol.is_compact:
        sol = extend_tail(sol, sol.R * 10.0 ** tail_decades)
    return sol
