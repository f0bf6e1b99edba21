"""
工具函数包
包含配置加载、日志、线性代数与结果输出等辅助功能
"""
