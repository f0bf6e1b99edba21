"""
凸二次规划的原始积极集解法

    min ½p'Mp + c'p   s.t.  G_i p ≥ r_i (不等式)，G_i p = r_i (等式)

M对称正定。每一步在工作集上解等式约束子问题的KKT方程（最小二乘），
乘子约定为 Mp + c = G_W'μ，不等式乘子 μ ≥ 0。
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from indii.core.errors import NoConvergence

logger = logging.getLogger(__name__)

STEP_TOL = 1e-14
FEAS_TOL = 1e-12


@dataclass
class QPResult:
    p: np.ndarray
    multipliers: np.ndarray
    working_set: np.ndarray
    iterations: int


def _solve_eqp(M: np.ndarray, gradient: np.ndarray, G_w: np.ndarray):
    """工作集上的等式约束子问题：返回步长d与乘子μ"""
    n = M.shape[0]
    m = G_w.shape[0]
    kkt = np.zeros((n + m, n + m))
    kkt[:n, :n] = M
    kkt[:n, n:] = -G_w.T
    kkt[n:, :n] = G_w
    rhs = np.concatenate([-gradient, np.zeros(m)])
    solution = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return solution[:n], solution[n:]


def solve_qp(
    M: np.ndarray,
    c: np.ndarray,
    G: np.ndarray,
    r: np.ndarray,
    equality: np.ndarray,
    p0: Optional[np.ndarray] = None,
    max_iter: Optional[int] = None,
) -> QPResult:
    """
    原始积极集法求解凸QP

    Args:
        M: 正定矩阵 (n × n)
        c: 线性项 (n)
        G: 约束矩阵 (m × n)
        r: 约束右端 (m)
        equality: 等式约束掩码 (m)
        p0: 可行的初始点；缺省时取满足等式约束的最小范数点
        max_iter: 迭代上限

    Returns:
        QPResult，multipliers 长度为m，工作集之外为0
    """
    n = M.shape[0]
    m = G.shape[0]
    equality = np.asarray(equality, dtype=bool)
    if p0 is None:
        p = np.zeros(n)
        if equality.any():
            p = np.linalg.lstsq(G[equality], r[equality], rcond=None)[0]
    else:
        p = np.asarray(p0, dtype=float).copy()
    max_iter = max_iter or 50 * (n + m + 1)

    scale = 1.0 + np.abs(r)
    active = equality.copy()
    active |= (~equality) & (G @ p - r <= FEAS_TOL * scale)

    for iteration in range(1, max_iter + 1):
        gradient = M @ p + c
        idx = np.flatnonzero(active)
        d, mu = _solve_eqp(M, gradient, G[idx])

        if np.linalg.norm(d, np.inf) <= STEP_TOL * (1.0 + np.linalg.norm(p, np.inf)):
            multipliers = np.zeros(m)
            multipliers[idx] = mu
            candidates = [(mu_j, j) for mu_j, j in zip(mu, idx) if not equality[j]]
            if not candidates:
                return QPResult(p, multipliers, active.copy(), iteration)
            worst, j_worst = min(candidates)
            if worst >= -1e-12 * (1.0 + np.max(np.abs(mu))):
                return QPResult(p, multipliers, active.copy(), iteration)
            active[j_worst] = False
            continue

        alpha = 1.0
        blocking = None
        Gd = G @ d
        for j in np.flatnonzero(~active):
            if Gd[j] < -1e-15:
                ratio = (r[j] - G[j] @ p) / Gd[j]
                if ratio < alpha:
                    alpha = max(ratio, 0.0)
                    blocking = j
        p = p + alpha * d
        if blocking is not None:
            active[blocking] = True

    raise NoConvergence("二次规划子问题未收敛", best=p)
