"""
indii - 带约束辅助模型的间接推断
"""

__version__ = "0.1.0"
