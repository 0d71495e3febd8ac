"""
ζ: τ ↦ τμ(τ) 的反函数

U′ = ζ(m/r²)。newtonian / simple(α=1) / standard 使用闭式，
其余模型在 log τ 上做带保护的 Newton 迭代。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import BracketError, DomainError
from .interp import SIMPLE, STANDARD, InterpolationModel
from .roots import expand_bracket, safeguarded_newton

logger = logging.getLogger(__name__)

CLOSED_FORM = "closed-form"
SAFEGUARDED_NEWTON = "safeguarded-newton"

# 低于此值直接返回深 MOND 渐近式，避免残差下溢
UNDERFLOW_SIGMA = 1e-300

DEEP_SIGMAS = tuple(10.0 ** j for j in range(-10, -3))
FAR_SIGMAS = tuple(10.0 ** j for j in range(4, 11))


@dataclass
class ZetaCache:
    """单次积分内复用的上一个根（不跨 worker 共享）"""

    last_log_tau: Optional[float] = None
    hits: int = 0
    evaluations: int = 0


@dataclass(frozen=True)
class ZetaModel:
    interp: InterpolationModel
    tol: float = 1e-12
    inversion: str = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.tol < 1e-2):
            raise DomainError(f"ζ 反演容差必须在 (0, 1e-2) 内: {self.tol}")
        model = self.interp
        closed = (
            model.is_newtonian
            or model.kind == STANDARD
            or (model.kind == SIMPLE and model.alpha == 1.0)
        )
        object.__setattr__(self, "inversion", CLOSED_FORM if closed else SAFEGUARDED_NEWTON)

    @property
    def alpha(self) -> float:
        return self.interp.alpha

    def __call__(self, sigma: float, cache: Optional[ZetaCache] = None) -> float:
        return self.eval(sigma, cache)

    def eval(self, sigma: float, cache: Optional[ZetaCache] = None) -> float:
        """ζ(σ)"""
        sigma = float(sigma)
        if not math.isfinite(sigma):
            raise DomainError(f"σ 必须是有限值: {sigma}")
        if sigma < 0.0:
            raise DomainError(f"σ 不能为负: {sigma}")
        if sigma == 0.0:
            return 0.0
        if sigma < UNDERFLOW_SIGMA:
            return sigma ** (1.0 / (1.0 + self.alpha))

        model = self.interp
        if model.is_newtonian:
            return sigma
        if model.kind == SIMPLE and model.alpha == 1.0:
            if sigma < 1.0:
                return 0.5 * (sigma + math.sqrt(sigma * sigma + 4.0 * sigma))
            return 0.5 * sigma * (1.0 + math.sqrt(1.0 + 4.0 / sigma))
        if model.kind == STANDARD:
            if sigma < 1.0:
                return math.sqrt(0.5 * (sigma * sigma + sigma * math.sqrt(sigma * sigma + 4.0)))
            return sigma * math.sqrt(0.5 + 0.5 * math.sqrt(1.0 + 4.0 / (sigma * sigma)))
        return self._newton(sigma, cache)

    def _newton(self, sigma: float, cache: Optional[ZetaCache]) -> float:
        model = self.interp
        log_sigma = math.log(sigma)

        def residual(x: float) -> float:
            tau = math.exp(x)
            return x + math.log(model.mu(tau)) - log_sigma

        def residual_and_slope(x: float) -> Tuple[float, float]:
            tau = math.exp(x)
            mu = model.mu(tau)
            return x + math.log(mu) - log_sigma, 1.0 + tau * model.mu_prime(tau) / mu

        if cache is not None and cache.last_log_tau is not None:
            lo, hi = cache.last_log_tau - math.log(2.0), cache.last_log_tau + math.log(2.0)
        else:
            lo = log_sigma / (1.0 + self.alpha)
            hi = log_sigma

        try:
            lo, hi = expand_bracket(residual, lo, hi)
        except BracketError as e:
            raise BracketError(f"ζ({sigma:.6g}) 无法建立区间，τμ(τ) 可能不单调: {e}")

        x = safeguarded_newton(residual_and_slope, lo, hi, ftol=0.5 * self.tol)
        _, slope = residual_and_slope(x)
        if not slope > 0.0:
            raise BracketError(
                f"ζ({sigma:.6g}) 的根 τ={math.exp(x):.6g} 处 τμ(τ) 不递增（μ 表不满足单调性）"
            )

        if cache is not None:
            if cache.last_log_tau is not None:
                cache.hits += 1
            cache.last_log_tau = x
            cache.evaluations += 1
        return math.exp(x)

    def prime(self, sigma: float) -> float:
        """ζ′(σ) = 1 / (μ(τ) + τμ′(τ))，τ = ζ(σ)"""
        tau = self.eval(sigma)
        if tau == 0.0:
            if self.alpha == 0.0:
                return 1.0 / self.interp.mu(0.0)
            return math.inf
        return 1.0 / (self.interp.mu(tau) + tau * self.interp.mu_prime(tau))


def zeta_eval(model: ZetaModel, sigma: float) -> float:
    return model.eval(sigma)


def zeta_prime_eval(model: ZetaModel, sigma: float) -> float:
    return model.prime(sigma)


@dataclass
class ZetaAsymptotics:
    """ζ 两端渐近行为的偏差"""

    deep_deviation: float
    far_deviation: float
    deep_samples: List[float]
    far_samples: List[float]


def zeta_deep_exponent_check(model: ZetaModel) -> ZetaAsymptotics:
    """σ^{-1/(1+α)}ζ(σ) 在 σ∈[1e-10,1e-4]，σ^{-1}ζ(σ) 在 σ∈[1e4,1e10] 上与 1 的最大偏差"""
    p = 1.0 / (1.0 + model.alpha)
    deep = [abs(model.eval(s) / s ** p - 1.0) for s in DEEP_SIGMAS]
    far = [abs(model.eval(s) / s - 1.0) for s in FAR_SIGMAS]
    return ZetaAsymptotics(
        deep_deviation=max(deep),
        far_deviation=max(far),
        deep_samples=deep,
        far_samples=far,
    )


def round_trip_error(model: ZetaModel, lo: float = 1e-8, hi: float = 1e8, points: int = 161) -> float:
    """max |ζ(τμ(τ)) - τ| / max(1, τ) 在对数网格上"""
    worst = 0.0
    for tau in np.geomspace(lo, hi, points):
        tau = float(tau)
        sigma = tau * model.interp.mu(tau)
        worst = max(worst, abs(model.eval(sigma) - tau) / max(1.0, tau))
    return worst


@dataclass
class LipschitzReport:
    max_slope: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.max_slope <= self.bound * (1.0 + 1e-9)


def zeta_sq_lipschitz_bound(model: ZetaModel, points: int = 2001) -> LipschitzReport:
    """ζ² 在 [0,1] 上的差分斜率，对照上界 2ζ(σ)/μ(ζ(σ))"""
    sigmas = np.linspace(0.0, 1.0, points)
    zetas = np.array([model.eval(float(s)) for s in sigmas])
    slopes = np.diff(zetas ** 2) / np.diff(sigmas)
    bound = max(2.0 * z / model.interp.mu(float(z)) for z in zetas[1:])
    return LipschitzReport(max_slope=float(slopes.max()), bound=float(bound))


@dataclass
class JeansMargin:
    """min (ζ(σ) - (2/3)σζ′(σ)) / ζ(σ)，需为正"""

    min_margin: float
    at_sigma: float

    @property
    def passed(self) -> bool:
        return self.min_margin > 0.0


def jeans_monotonicity_margin(
    model: ZetaModel, lo: float = 1e-8, hi: float = 1e8, points: int = 161, step: float = 1e-5
) -> JeansMargin:
    worst, at = math.inf, lo
    for sigma in np.geomspace(lo, hi, points):
        sigma = float(sigma)
        z = model.eval(sigma)
        dz = (model.eval(sigma * (1.0 + step)) - model.eval(sigma * (1.0 - step))) / (2.0 * sigma * step)
        margin = (z - 2.0 / 3.0 * sigma * dz) / z
        if margin < worst:
            worst, at = margin, sigma
    logger.debug("Jeans margin %.6g at σ=%.3g", worst, at)
    return JeansMargin(min_margin=worst, at_sigma=at)
