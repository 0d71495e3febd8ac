"""
自适应积分封装 - scipy.integrate.quad 加收敛检查
"""

import warnings
from typing import Any, Callable, Dict, Optional, Sequence

from scipy import integrate

from .errors import QuadratureError

DEFAULT_EPSREL = 1e-10


def checked_quad(
    func: Callable[[float], float],
    a: float,
    b: float,
    epsrel: float = DEFAULT_EPSREL,
    epsabs: float = 0.0,
    limit: int = 200,
    what: str = "",
    **kwargs: Any,
) -> float:
    """
    调用 quad，QUADPACK 报告不收敛时抛出 QuadratureError

    epsabs 默认为 0，只做相对误差控制（被积量可能非常小）。
    其余关键字参数（weight / wvar / points）原样传给 quad。
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        result = integrate.quad(
            func, a, b, epsrel=epsrel, epsabs=epsabs, limit=limit, full_output=1, **kwargs
        )

    value, abserr = result[0], result[1]
    if len(result) > 3:
        info: Optional[Dict[str, Any]] = result[2] if isinstance(result[2], dict) else None
        # ier=2 (roundoff) with a tiny error estimate is still usable
        if abserr > 100.0 * max(epsrel * abs(value), epsabs, 1e-300):
            label = f" ({what})" if what else ""
            raise QuadratureError(
                f"积分不收敛{label}: [{a:.6g}, {b:.6g}] value={value:.6g} abserr={abserr:.3g}"
                + (f" neval={info.get('neval')}" if info else "")
            )
    return float(value)


def piecewise_quad(
    func: Callable[[float], float],
    breakpoints: Sequence[float],
    epsrel: float = DEFAULT_EPSREL,
    what: str = "",
) -> float:
    """在相邻断点之间分段积分后求和"""
    total = 0.0
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        if b > a:
            total += checked_quad(func, a, b, epsrel=epsrel, what=what)
    return total
