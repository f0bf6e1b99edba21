"""
冻结的新息库

每条路径使用独立的计数器型随机流 Philox(SeedSequence(seed, spawn_key=(0, h)))，
因此第h条路径与生成顺序、并行调度无关。
每条路径有 T+1 行：第0行保留给初始条件（SV的 ln h_0，probit的 u_0）。
"""
import logging
from dataclasses import dataclass

import numpy as np

from indii.core.errors import ParameterError

# 配置日志
logger = logging.getLogger(__name__)

_PATH_STREAM = 0
_COVARIATE_STREAM = 1


def make_generator(seed: int, *keys: int) -> np.random.Generator:
    """按 (seed, keys) 构造计数器型随机数生成器"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=tuple(keys))))


def derive_seed(master: int, *keys: int) -> int:
    """从主种子派生子种子（与调用顺序无关）"""
    state = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys)).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


@dataclass(frozen=True)
class InnovationBank:
    """
    H条标准正态新息路径，形状 (H, T+1, k)

    创建后数组只读。
    """

    paths: np.ndarray
    seed: int

    @property
    def H(self) -> int:
        return self.paths.shape[0]

    @property
    def T(self) -> int:
        return self.paths.shape[1] - 1

    @property
    def k(self) -> int:
        return self.paths.shape[2]

    def path(self, h: int) -> np.ndarray:
        """第h条路径，形状 (T+1, k)"""
        return self.paths[h]

    def head(self, H: int) -> "InnovationBank":
        """前H条路径组成的子库"""
        if not 1 <= H <= self.H:
            raise ParameterError(f"H 必须在 [1, {self.H}] 内，当前为 {H}")
        return InnovationBank(paths=self.paths[:H], seed=self.seed)


def draw_path(T: int, k: int, seed: int, index: int) -> np.ndarray:
    return make_generator(seed, _PATH_STREAM, index).standard_normal((T + 1, k))


def draw_innovation_bank(H: int, T: int, k: int, seed: int) -> InnovationBank:
    """
    生成新息库

    Args:
        H: 路径数，≥ 1
        T: 样本长度，≥ 1
        k: 每期新息个数（SV为2，probit为1）
        seed: 种子

    Returns:
        只读的InnovationBank
    """
    if H < 1 or T < 1 or k < 1:
        raise ParameterError(f"需要 H ≥ 1, T ≥ 1, k ≥ 1，当前为 H={H}, T={T}, k={k}")
    paths = np.stack([draw_path(T, k, seed, h) for h in range(H)])
    paths.setflags(write=False)
    logger.debug(f"生成新息库: H={H}, T={T}, k={k}, seed={seed}")
    return InnovationBank(paths=paths, seed=int(seed))


def default_covariates(T: int, seed: int) -> np.ndarray:
    """probit实验的默认协变量 x_t = (1, z_t)，z_t 来自独立的随机流"""
    z = make_generator(seed, _COVARIATE_STREAM).standard_normal(T)
    return np.column_stack([np.ones(T), z])
