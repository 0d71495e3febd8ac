"""
错误类型定义

所有错误都带有 code，CLI 直接把它作为进程退出码。
"""

from typing import List, Optional, Sequence, Tuple

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4


class MondError(Exception):
    """mondcli 基础错误"""

    code = 1

    def __init__(self, message: str, code: Optional[int] = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class ConfigError(MondError):
    """配置错误（一次性列出所有问题）"""

    code = EXIT_CONFIG

    def __init__(self, problems: Sequence[str]):
        self.problems: List[str] = list(problems)
        super().__init__("配置校验失败:\n  - " + "\n  - ".join(self.problems))


class DomainError(MondError, ValueError):
    """参数超出操作的定义域"""

    code = EXIT_CONFIG


class NumericalError(MondError):
    """数值计算失败"""

    code = EXIT_NUMERICAL


class QuadratureError(NumericalError):
    """积分不收敛"""


class BracketError(NumericalError):
    """无法建立求根区间"""


class IntegrationError(NumericalError):
    """ODE 积分失败，附带最后一个有效状态 (r, y, m)"""

    def __init__(self, message: str, last_state: Optional[Tuple[float, float, float]] = None):
        if last_state is not None:
            r, y, m = last_state
            message = f"{message} (last state: r={r:.6g}, y={y:.6g}, m={m:.6g})"
        super().__init__(message)
        self.last_state = last_state


class ValidationFailure(MondError):
    """validate 套件存在失败项"""

    code = EXIT_VALIDATION

    def __init__(self, failed: Sequence[str]):
        self.failed: List[str] = list(failed)
        super().__init__("校验失败: " + ", ".join(self.failed))
