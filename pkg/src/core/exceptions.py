"""计算核心的异常类型"""
from typing import Any, Optional


class RFPMError(Exception):
    """所有可预期错误的基类，命令行据此返回退出码 2"""


class ParameterError(RFPMError, ValueError):
    """参数不合法"""


class DomainError(RFPMError, ValueError):
    """对象之间不匹配，例如格点不在盒子内、q 不一致"""


class FieldLoadError(RFPMError):
    """场文件无法读取"""


class LengthMismatchError(FieldLoadError):
    """文件头声明的长度与数据不一致"""


class UnsupportedVersionError(FieldLoadError):
    """未知的文件格式版本"""


class StateSpaceTooLargeError(RFPMError):
    """精确枚举的状态空间超过上限"""


class EmptyFamilyError(RFPMError):
    """候选格点动物集合为空"""


class FitError(RFPMError, ValueError):
    """拟合前置条件不满足"""

    def __init__(self, message: str, point: Optional[Any] = None):
        super().__init__(message)
        self.point = point


class PlotError(RFPMError):
    """绘图数据无法输出"""
