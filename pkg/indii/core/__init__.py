"""核心模块 - 模拟、辅助准则、约束估计、间接推断、过度识别设计与蒙特卡洛"""

from .errors import IndiiError

__all__ = ["IndiiError"]
