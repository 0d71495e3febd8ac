"""
由径向解导出的可观测量：势、旋转曲线、场能量、有效势扫描、物理单位
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.integrate import simpson

from .eos import AUTO, E0_AT_INFINITY, E0_ZERO, FLUID
from .errors import DomainError
from .quadrature import piecewise_quad
from .solver import RadialSolution, loglog_fit, tail_window

logger = logging.getLogger(__name__)

# M/r_b² 低于此值后用深 MOND 渐近式积分尾部
TAIL_ASYMPTOTE_SIGMA = 1e-12

FLAT_RADIUS_FACTOR = 1e6

CONVERGENT = "convergent"
DIVERGENT_LOG = "divergent(log)"
DIVERGENT = "divergent"

JEANS_L_COUNT = 20
JEANS_L_SPAN = 1e6

A0_SI = 1.2e-10
G_SI = 6.674e-11
MSUN_KG = 1.989e30
KPC_M = 3.0857e19


def vacuum_tail_integral(zeta, M: float, R: float) -> float:
    """∫_R^∞ ζ(M/s²) ds，需要 α < 1"""
    alpha = zeta.alpha
    if alpha >= 1.0:
        raise DomainError("α=1 时真空尾部积分发散 (y_∞ = -∞ in genuine MOND)")
    p = 1.0 / (1.0 + alpha)
    r_b = max(R, math.sqrt(M / TAIL_ASYMPTOTE_SIGMA))
    breaks = [R]
    while breaks[-1] * 10.0 < r_b:
        breaks.append(breaks[-1] * 10.0)
    breaks.append(r_b)
    near = piecewise_quad(lambda s: zeta.eval(M / (s * s)), breaks, what="∫ζ(M/s²)")
    return near + M ** p * r_b ** (1.0 - 2.0 * p) / (2.0 * p - 1.0)


def resolve_convention(sol: RadialSolution, convention: str) -> str:
    """auto: α<1 的紧支撑解取 E0-at-infinity，否则 E0-zero"""
    if convention == AUTO:
        if sol.alpha < 1.0 and sol.is_compact and sol.ansatz.has_cutoff:
            return E0_AT_INFINITY
        return E0_ZERO
    if convention not in (E0_ZERO, E0_AT_INFINITY):
        raise DomainError(f"未知的截断约定: {convention}")
    return convention


@dataclass
class PotentialProfile:
    U: np.ndarray
    E0: float
    convention: str
    y_inf: Optional[float] = None


def reconstruct_potential(sol: RadialSolution, convention: str = AUTO) -> PotentialProfile:
    """U = E0 - y"""
    convention = resolve_convention(sol, convention)
    if convention == E0_ZERO:
        return PotentialProfile(U=-sol.y, E0=0.0, convention=E0_ZERO)

    if sol.alpha >= 1.0:
        raise DomainError("E0-at-infinity 不可用: y_∞ = -∞ in genuine MOND (α=1)")
    if not sol.is_compact:
        raise DomainError("E0-at-infinity 需要紧支撑解（否则 y_∞ 无定义）")
    y_inf = 0.0 - vacuum_tail_integral(sol.zeta, sol.M, sol.R)
    return PotentialProfile(U=y_inf - sol.y, E0=y_inf, convention=E0_AT_INFINITY, y_inf=y_inf)


@dataclass
class RotationCurve:
    r: np.ndarray
    v: np.ndarray
    v_flat: Optional[float] = None
    tully_fisher_ratio: Optional[float] = None
    r_flat: Optional[float] = None


def rotation_curve(sol: RadialSolution) -> RotationCurve:
    """v(r) = √(r U′)；α=1 时给出平坦速度与 v⁴/M"""
    v = np.sqrt(sol.r * sol.uprime)
    curve = RotationCurve(r=sol.r, v=v)
    if sol.alpha == 1.0 and sol.M is not None:
        if sol.is_compact:
            r_flat = max(FLAT_RADIUS_FACTOR * sol.R, float(sol.r[-1]))
        else:
            r_flat = float(sol.r[-1])
        v_flat = math.sqrt(r_flat * sol.zeta.eval(sol.M / (r_flat * r_flat)))
        curve.v_flat = v_flat
        curve.r_flat = r_flat
        curve.tully_fisher_ratio = v_flat ** 4 / sol.M
    return curve


@dataclass
class FieldEnergy:
    R_max: float
    value: float
    classification: str
    reference_radius: float
    decade_values: List[float] = field(default_factory=list)
    increments: List[float] = field(default_factory=list)
    ratios: List[float] = field(default_factory=list)

    @property
    def summary_value(self) -> Any:
        return self.value if self.classification == CONVERGENT else self.classification


def _reference_radius(sol: RadialSolution) -> float:
    if sol.is_compact:
        return sol.R
    half = 0.5 * sol.m[-1]
    return float(sol.r[int(np.searchsorted(sol.m, half))])


def field_energy(sol: RadialSolution, R_max: float) -> FieldEnergy:
    """
    S(R_max) = ½ ∫_0^{R_max} F(U′²) 4πr² dr，在 ln r 上做 Simpson 积分

    按十倍半径的增量比分类：比值 ≈ 1 为对数发散，< 0.95 为收敛。
    """
    r = sol.r
    if r[-1] < R_max * (1.0 - 1e-9):
        raise DomainError(f"网格只到 r={r[-1]:.3g}，不足 R_max={R_max:.3g}（先延伸尾部）")
    interp = sol.zeta.interp
    pos = r > 0.0
    lr = np.log(r[pos])
    integrand = np.array([0.5 * interp.F(u * u) * 4.0 * math.pi * x ** 3 for x, u in zip(r[pos], sol.uprime[pos])])
    # [0, r_1] 上 F(U′²) r³ → 0
    head = integrand[0] / 3.0

    def S(radius: float) -> float:
        t = math.log(radius)
        keep = lr <= t + 1e-12
        xs, fs = lr[keep], integrand[keep]
        if xs[-1] < t - 1e-12:
            xs = np.append(xs, t)
            fs = np.append(fs, np.interp(t, lr, integrand))
        if xs.size < 2:
            return head
        return head + float(simpson(fs, x=xs))

    r_ref = _reference_radius(sol)
    decades = int(math.floor(math.log10(R_max / r_ref) + 1e-9))
    if decades < 3:
        raise DomainError(f"网格不足以分类场能量：R_max/R_ref 只有 {decades} 个数量级（至少 3）")
    values = [S(r_ref * 10.0 ** j) for j in range(decades + 1)]
    increments = [b - a for a, b in zip(values[:-1], values[1:])]
    ratios = [b / a for a, b in zip(increments[:-1], increments[1:]) if a > 0.0]

    tail = ratios[-2:] if len(ratios) >= 2 else ratios
    ratio = float(np.mean(tail)) if tail else 0.0
    if abs(ratio - 1.0) <= 0.05:
        classification = DIVERGENT_LOG
    elif ratio < 0.95:
        classification = CONVERGENT
    else:
        classification = DIVERGENT

    return FieldEnergy(
        R_max=R_max,
        value=S(R_max),
        classification=classification,
        reference_radius=r_ref,
        decade_values=values,
        increments=increments,
        ratios=ratios,
    )


@dataclass
class JeansScan:
    L: float
    critical_points: int
    h_increasing: bool
    r_L: Optional[float] = None


def effective_potential_scan(sol: RadialSolution, L: float) -> JeansScan:
    """Ψ_L′(r) = (h(r) - L)/r³，h = r³ ζ(m/r²)"""
    if not L > 0.0:
        raise DomainError(f"L 必须为正: {L}")
    pos = sol.r > 0.0
    r = sol.r[pos]
    h = r ** 3 * sol.uprime[pos]
    massive = sol.m[pos] > 0.0
    h_increasing = bool(np.all(np.diff(h[massive]) > 0.0))

    sign = np.sign(h - L)
    changes = np.nonzero(sign[:-1] * sign[1:] < 0.0)[0]
    critical = int(changes.size)
    r_L = None
    if changes.size:
        i = int(changes[0])
        r_L = float(np.interp(L, h[i:i + 2], r[i:i + 2]))
    elif h[0] > L:
        # 交点落在第一个网格点之内，用首阶级数 h ≈ c^p r^{3+(2l+1)p}
        p = 1.0 / (1.0 + sol.alpha)
        c = sol.m[pos][0] / r[0] ** (2.0 * sol.l + 3.0)
        r_L = (L / c ** p) ** (1.0 / (3.0 + (2.0 * sol.l + 1.0) * p))
        critical = 1
    return JeansScan(L=L, critical_points=critical, h_increasing=h_increasing, r_L=r_L)


def jeans_scan(sol: RadialSolution, count: int = JEANS_L_COUNT) -> List[JeansScan]:
    """L 在 [1e-6, 1e6]·L_ref 上取对数均匀的 count 个值，L_ref = R_ref² ẙ"""
    r_ref = _reference_radius(sol)
    L_ref = r_ref * r_ref * sol.y0
    return [
        effective_potential_scan(sol, float(L))
        for L in np.geomspace(L_ref / JEANS_L_SPAN, L_ref * JEANS_L_SPAN, count)
    ]


def asymptotic_fits(sol: RadialSolution, potential: PotentialProfile) -> Dict[str, Optional[float]]:
    """最后两个数量级上 U′ 与 U 的 log-log 拟合"""
    fits: Dict[str, Optional[float]] = {}
    try:
        mask = tail_window(sol.r)
    except DomainError as e:
        logger.debug("asymptotic fits skipped: %s", e)
        return fits
    r = sol.r[mask]
    uprime = loglog_fit(r, sol.uprime[mask])
    fits["uprime_exponent"] = uprime.slope
    fits["uprime_residual"] = uprime.residual
    fits["log_slope"] = float(r[-1] * sol.uprime[mask][-1])

    U = potential.U[mask]
    if potential.convention == E0_AT_INFINITY and np.all(U < 0.0):
        pot = loglog_fit(r, U)
        fits["potential_exponent"] = pot.slope
        fits["potential_residual"] = pot.residual
    else:
        coeffs = np.polyfit(np.log(r), U, 1)
        fits["potential_log_slope"] = float(coeffs[0])
        fits["potential_log_offset"] = float(coeffs[1])
    return fits


@dataclass(frozen=True)
class PhysicalUnits:
    """G = a0 = 1 的内部单位到 SI 的换算（纯标注）"""

    mass_scale_msun: float

    @property
    def mass_kg(self) -> float:
        return self.mass_scale_msun * MSUN_KG

    @property
    def length_m(self) -> float:
        return math.sqrt(G_SI * self.mass_kg / A0_SI)

    @property
    def velocity_ms(self) -> float:
        return (G_SI * self.mass_kg * A0_SI) ** 0.25

    def convert(self, R: Optional[float], M: Optional[float], v_flat: Optional[float]) -> Dict[str, Optional[float]]:
        return {
            "mass_scale_msun": self.mass_scale_msun,
            "a0_m_s2": A0_SI,
            "R_kpc": R * self.length_m / KPC_M if R is not None else None,
            "M_msun": M * self.mass_scale_msun if M is not None else None,
            "v_flat_km_s": v_flat * self.velocity_ms / 1e3 if v_flat is not None else None,
        }


@dataclass
class ObservableSet:
    potential: PotentialProfile
    rotation: RotationCurve
    energy: Optional[FieldEnergy]
    asymptotics: Dict[str, Optional[float]]
    jeans: List[JeansScan] = field(default_factory=list)
    central_pressure: Optional[float] = None

    @property
    def U(self) -> np.ndarray:
        return self.potential.U

    @property
    def E0(self) -> float:
        return self.potential.E0

    @property
    def vcirc(self) -> np.ndarray:
        return self.rotation.v

    def jeans_ok(self) -> bool:
        return all(s.critical_points <= 1 and s.h_increasing for s in self.jeans)

    def summary(self) -> Dict[str, Any]:
        energy = self.energy
        return {
            "E0": self.E0,
            "cutoff_convention": self.potential.convention,
            "S": energy.summary_value if energy else None,
            "S_classification": energy.classification if energy else None,
            "S_R_max": energy.R_max if energy else None,
            "v_flat": self.rotation.v_flat,
            "tully_fisher_ratio": self.rotation.tully_fisher_ratio,
            "asymptotics": dict(self.asymptotics),
            "jeans_max_critical_points": max((s.critical_points for s in self.jeans), default=None),
            "jeans_h_increasing": all(s.h_increasing for s in self.jeans) if self.jeans else None,
            "central_pressure": self.central_pressure,
        }


def compute_observables(sol: RadialSolution, convention: str = AUTO, with_jeans: bool = True) -> ObservableSet:
    """在（已延伸尾部的）网格上计算全部可观测量"""
    potential = reconstruct_potential(sol, convention)
    try:
        energy = field_energy(sol, float(sol.r[-1]))
    except DomainError as e:
        logger.debug("field energy skipped: %s", e)
        energy = None
    central_pressure = None
    if sol.ansatz.kind == FLUID:
        central_pressure = sol.ansatz.pressure(float(sol.rho[0]))
    return ObservableSet(
        potential=potential,
        rotation=rotation_curve(sol),
        energy=energy,
        asymptotics=asymptotic_fits(sol, potential),
        jeans=jeans_scan(sol) if with_jeans else [],
        central_pressure=central_pressure,
    )
