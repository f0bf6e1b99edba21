"""
线性代数辅助函数

对称矩阵的平方根、正定性检查、PSD序比较等，均基于对称特征分解。
"""
import logging
from typing import Tuple

import numpy as np

from indii.core.errors import ParameterError, RankDeficiency

logger = logging.getLogger(__name__)

PSD_SLACK = 1e-8


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    return 0.5 * (matrix + matrix.T)


def sym_sqrt(matrix: np.ndarray, inverse: bool = False) -> Tuple[np.ndarray, bool]:
    """
    对称矩阵的平方根（或逆平方根）

    负特征值被截断为0，并返回是否发生了截断。

    Args:
        matrix: 对称矩阵
        inverse: 为True时返回逆平方根（截断后为0的特征值保持为0）

    Returns:
        (平方根矩阵, 是否非半正定)
    """
    values, vectors = np.linalg.eigh(symmetrize(matrix))
    scale = max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0
    non_psd = bool(np.any(values < -1e-12 * scale))
    clipped = np.clip(values, 0.0, None)
    if inverse:
        roots = np.zeros_like(clipped)
        positive = clipped > 1e-300
        roots[positive] = 1.0 / np.sqrt(clipped[positive])
    else:
        roots = np.sqrt(clipped)
    return (vectors * roots) @ vectors.T, non_psd


def is_positive_definite(matrix: np.ndarray, tol: float = 0.0) -> bool:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    if not np.allclose(matrix, matrix.T, atol=1e-10 * max(1.0, np.max(np.abs(matrix)))):
        return False
    return bool(np.linalg.eigvalsh(symmetrize(matrix)).min() > tol)


def require_positive_definite(matrix: np.ndarray, name: str) -> np.ndarray:
    """检查对称正定，失败时抛出ParameterError"""
    if not is_positive_definite(matrix):
        raise ParameterError(f"{name} 必须是对称正定矩阵")
    return symmetrize(matrix)


def psd_leq(lower: np.ndarray, upper: np.ndarray, slack: float = PSD_SLACK) -> bool:
    """在PSD序下判断 lower ⪯ upper（差的最小特征值 ≥ -slack）"""
    diff = symmetrize(np.asarray(upper) - np.asarray(lower))
    return bool(np.linalg.eigvalsh(diff).min() >= -slack)


def projector(x: np.ndarray) -> np.ndarray:
    """列空间投影 P_X = X(X'X)^+X'"""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return symmetrize(x @ np.linalg.pinv(x.T @ x) @ x.T)


def check_full_column_rank(matrix: np.ndarray, name: str, rel_tol: float = 1e-10) -> None:
    """
    检查列满秩，失败时指出秩亏的列

    逐列加入，若新列落在已有列张成的空间内则记为秩亏列。
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    n_rows, n_cols = matrix.shape
    deficient = []
    kept = []
    scale = max(1.0, float(np.max(np.abs(matrix)))) if matrix.size else 1.0
    for j in range(n_cols):
        candidate = kept + [j]
        sub = matrix[:, candidate]
        singular = np.linalg.svd(sub, compute_uv=False)
        if len(candidate) > n_rows or singular[-1] <= rel_tol * max(scale, singular[0]):
            deficient.append(j)
        else:
            kept.append(j)
    if deficient:
        raise RankDeficiency(f"{name} 不是列满秩", columns=deficient)
