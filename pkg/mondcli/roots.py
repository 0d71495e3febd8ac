"""
标量求根工具 - 区间扩展 + 带保护的 Newton 迭代
"""

import math
from typing import Callable, Tuple

from .errors import BracketError

MAX_EXPANSIONS = 200


def expand_bracket(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    step: float = math.log(2.0),
    max_expansions: int = MAX_EXPANSIONS,
) -> Tuple[float, float]:
    """
    对单调递增函数扩展区间，直到 func(lo) <= 0 <= func(hi)

    Args:
        func: 单调递增函数（通常以 log τ 为自变量）
        lo, hi: 初始猜测
        step: 每次扩展的加性步长，对数变量下 ln 2 即每次放大一倍
        max_expansions: 两端合计的最大扩展次数

    Returns:
        (lo, hi)
    """
    if lo > hi:
        lo, hi = hi, lo

    expansions = 0
    while func(lo) > 0.0:
        expansions += 1
        if expansions > max_expansions:
            raise BracketError(f"无法建立求根区间: {max_expansions} 次扩展后下端仍为正")
        lo -= step

    while func(hi) < 0.0:
        expansions += 1
        if expansions > max_expansions:
            raise BracketError(f"无法建立求根区间: {max_expansions} 次扩展后上端仍为负")
        hi += step

    return lo, hi


def safeguarded_newton(
    func: Callable[[float], Tuple[float, float]],
    lo: float,
    hi: float,
    ftol: float,
    xtol: float = 1e-15,
    maxiter: int = 200,
) -> float:
    """
    Newton + 二分混合求根（要求 f(lo) <= 0 <= f(hi)）

    func 返回 (f, df)。Newton 步越界或收敛过慢时退化为二分，
    始终维持包含根的区间。
    """
    f_lo, _ = func(lo)
    if f_lo == 0.0:
        return lo
    f_hi, _ = func(hi)
    if f_hi == 0.0:
        return hi
    if f_lo > 0.0 or f_hi < 0.0:
        raise BracketError(f"区间 [{lo:.6g}, {hi:.6g}] 不包含根")

    x = 0.5 * (lo + hi)
    dx_old = abs(hi - lo)
    dx = dx_old
    f, df = func(x)

    for _ in range(maxiter):
        if abs(f) <= ftol:
            return x

        # Bisect if Newton out of range or not decreasing fast enough
        if ((x - hi) * df - f) * ((x - lo) * df - f) >= 0.0 or abs(2.0 * f) > abs(dx_old * df):
            dx_old = dx
            dx = 0.5 * (hi - lo)
            x = lo + dx
        else:
            dx_old = dx
            dx = f / df
            x = x - dx

        if abs(dx) <= xtol * max(1.0, abs(x)):
            return x

        f, df = func(x)
        if not math.isfinite(f):
            raise BracketError(f"求根过程中出现非有限值 (x={x:.6g})")
        if f < 0.0:
            lo = x
        else:
            hi = x

    return x
