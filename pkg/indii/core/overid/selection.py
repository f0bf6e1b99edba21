"""
选择矩阵设计

把 q > d_β 个估计方程用 d_β × q 的选择矩阵 A 化为 Ag(β, ς̂) = 0，并给出：
  Avar(β̂(A)) = (AΓ)⁻¹AVA'(Γ'A')⁻¹
  ∂b_A/∂θ'   = -(AΓ)⁻¹AΓ_θ
  Avar(θ̂[A, W*(A)]) = [Γ_θ'A'(AVA')⁻¹AΓ_θ]⁻¹
以及使θ的方差达到 [Γ_θ'V⁻¹Γ_θ]⁻¹ 的 A* = [Γ_θ'V⁻¹; C']。
按 H = ∞ 处理：绑定函数 b_A(θ) 由 Ag(b, ς(θ)) = 0 直接求得。
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from indii.core.errors import (
    InadmissibleC,
    IndiiError,
    NoConvergence,
    NonIdentification,
    RankDeficiency,
    SingularAGamma,
)
from indii.core.inference.search import GridSpec, gauss_seidel_grid
from indii.core.overid.systems import LinearAlsSystem, MomentSystem, NonlinearAlsSystem
from indii.utils.linalg import check_full_column_rank, projector, require_positive_definite, sym_sqrt, symmetrize

# 配置日志
logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
RANK_TOL = 1e-10
SOLVE_TOL = 1e-10

# d_θ 通常很小，细化次数多一些以得到接近闭式解的精度
OVERID_GRID = GridSpec(points=21, sweeps=2, refinements=30)


@dataclass
class OverIdEstimate:
    """过度识别系统上的Wald型间接推断估计"""

    theta_hat: np.ndarray
    beta_hat: np.ndarray
    objective: float
    W: np.ndarray
    method: str
    resolution: Optional[np.ndarray] = None
    trace: List[Dict[str, Any]] = field(default_factory=list)


def _check_agamma(A: np.ndarray, Gamma: np.ndarray) -> np.ndarray:
    AG = np.asarray(A, dtype=float) @ np.asarray(Gamma, dtype=float)
    if AG.shape[0] != AG.shape[1]:
        raise SingularAGamma(f"AΓ 不是方阵: {AG.shape}")
    if not np.all(np.isfinite(AG)) or np.linalg.cond(AG) > CONDITION_LIMIT:
        raise SingularAGamma("AΓ 奇异或条件数过大", context={"AGamma": AG})
    return AG


def selection_rank_ok(A: np.ndarray, rel_tol: float = RANK_TOL) -> bool:
    """选择矩阵秩为 d_β：奇异值 > rel_tol·σ_max"""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    singular = np.linalg.svd(A, compute_uv=False)
    return bool(singular.size == A.shape[0] and singular[0] > 0 and singular[-1] > rel_tol * singular[0])


def solve_selected(A: np.ndarray, system: MomentSystem, sigma: np.ndarray, start: Optional[np.ndarray] = None,
                   tol: float = SOLVE_TOL, max_iter: int = 100) -> np.ndarray:
    """
    求解 Ag(β, ς) = 0

    Newton迭代，步长在无效点上减半。线性系统一步即得 (AΓ)⁻¹Aς。

    Args:
        A: d_β × q 选择矩阵
        system: 矩系统
        sigma: ς̂_T（ALS）或样本矩（GMM）
        start: 起点，缺省由系统给出

    Returns:
        β̂(A)

    Raises:
        SingularAGamma: AΓ 在迭代点处不可逆
        NoConvergence: 迭代上限内 ‖Ag‖ 未降到 tol 以下
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    sigma = np.asarray(sigma, dtype=float)
    if not selection_rank_ok(A):
        raise SingularAGamma(f"选择矩阵的秩小于 {A.shape[0]}")
    beta = system.start(sigma) if start is None else np.asarray(start, dtype=float).copy()
    residual = A @ system.g(beta, sigma)
    for iteration in range(max_iter):
        norm = float(np.linalg.norm(residual))
        if norm < tol:
            return beta
        AG = _check_agamma(A, system.dg_dbeta(beta, sigma))
        step = np.linalg.solve(AG, residual)
        alpha = 1.0
        while True:
            trial = beta - alpha * step
            try:
                trial_residual = A @ system.g(trial, sigma)
                if np.all(np.isfinite(trial_residual)) and np.linalg.norm(trial_residual) < norm:
                    break
            except IndiiError:
                pass
            alpha /= 2.0
            if alpha < 1e-10:
                raise NoConvergence("Ag = 0 的Newton迭代无法继续下降", best=beta,
                                    context={"residual": norm})
        beta, residual = trial, trial_residual
    if np.linalg.norm(residual) < tol:
        return beta
    raise NoConvergence(f"Ag = 0 在 {max_iter} 次迭代内未收敛", best=beta,
                        context={"residual": float(np.linalg.norm(residual))})


def naive_optimal_A(Gamma: np.ndarray, V: np.ndarray) -> np.ndarray:
    """使β方差最小的 A = Γ'V⁻¹"""
    V = require_positive_definite(V, "V")
    return np.linalg.solve(V, np.asarray(Gamma, dtype=float)).T


def avar_beta(A: np.ndarray, Gamma: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Avar(β̂(A) - β⁰) = (AΓ)⁻¹AVA'(Γ'A')⁻¹"""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    AG = _check_agamma(A, Gamma)
    M = np.linalg.solve(AG, A)
    return symmetrize(M @ np.asarray(V, dtype=float) @ M.T)


def binding_slope(A: np.ndarray, Gamma: np.ndarray, Gamma_theta: np.ndarray) -> np.ndarray:
    """∂b_A(θ⁰)/∂θ' = -(AΓ)⁻¹AΓ_θ；d_θ = 0 时返回空矩阵"""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Gamma_theta = np.asarray(Gamma_theta, dtype=float).reshape(A.shape[1], -1)
    if Gamma_theta.shape[1] == 0:
        return np.zeros((A.shape[0], 0))
    AG = _check_agamma(A, Gamma)
    return -np.linalg.solve(AG, A @ Gamma_theta)


def theta_information(A: np.ndarray, Gamma_theta: np.ndarray, V: np.ndarray, form: str = "direct") -> np.ndarray:
    """
    θ的信息矩阵

    Args:
        form: direct 为 Γ_θ'A'(AVA')⁻¹AΓ_θ；
              projection 为 (V^{-1/2}Γ_θ)'P_X(V^{-1/2}Γ_θ)，X = V^{1/2}A'
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    V = require_positive_definite(V, "V")
    Gamma_theta = np.asarray(Gamma_theta, dtype=float).reshape(V.shape[0], -1)
    if form == "direct":
        AG = A @ Gamma_theta
        return symmetrize(AG.T @ np.linalg.solve(A @ V @ A.T, AG))
    if form == "projection":
        root, _ = sym_sqrt(V)
        inv_root, _ = sym_sqrt(V, inverse=True)
        Z = inv_root @ Gamma_theta
        return symmetrize(Z.T @ projector(root @ A.T) @ Z)
    raise ValueError(f"未知的形式: {form}")


def ii_avar_theta(A: np.ndarray, Gamma_theta: np.ndarray, V: np.ndarray, form: str = "direct") -> np.ndarray:
    """
    Avar(θ̂[A, W*(A)]) = [Γ_θ'A'(AVA')⁻¹AΓ_θ]⁻¹

    Raises:
        NonIdentification: 信息矩阵奇异（A 与 Γ_θ 的某些方向正交）
    """
    info = theta_information(A, Gamma_theta, V, form)
    values = np.linalg.eigvalsh(info) if info.size else np.zeros(0)
    scale = max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0
    if values.size and values.min() <= RANK_TOL * scale:
        raise NonIdentification("θ的信息矩阵奇异，选择矩阵A使θ不可识别",
                                context={"min_eigenvalue": float(values.min())})
    return symmetrize(np.linalg.inv(info))


def optimal_A_for_theta(Gamma_theta: np.ndarray, V: np.ndarray, C: Optional[np.ndarray] = None,
                        Gamma: Optional[np.ndarray] = None) -> np.ndarray:
    """
    使θ方差最小的选择矩阵 A* = [Γ_θ'V⁻¹; C']

    Args:
        Gamma_theta: q × d_θ
        V: q × q 正定
        C: q × (d_β - d_θ)，列满秩且不落在 span(V⁻¹Γ_θ) 内；d_β = d_θ 时省略
        Gamma: 给出时检查 A*Γ 是否可逆（只记录警告）

    Raises:
        InadmissibleC: C 不满足上述秩条件
    """
    V = require_positive_definite(V, "V")
    Gamma_theta = np.asarray(Gamma_theta, dtype=float).reshape(V.shape[0], -1)
    top = np.linalg.solve(V, Gamma_theta).T
    if C is None or np.size(C) == 0:
        A = top
    else:
        C = np.asarray(C, dtype=float).reshape(V.shape[0], -1)
        try:
            check_full_column_rank(C, "C")
            check_full_column_rank(np.hstack([top.T, C]), "[V⁻¹Γ_θ, C]")
        except RankDeficiency as e:
            raise InadmissibleC(f"C 不可容许: {e}", context={"columns": e.columns}) from e
        A = np.vstack([top, C.T])
    if Gamma is not None:
        try:
            _check_agamma(A, Gamma)
        except SingularAGamma:
            logger.warning("A*Γ 奇异：θ的方差公式仍然成立，但 A*g = 0 不能用来求解β")
    return A


def default_C(Gamma_theta: np.ndarray, V: np.ndarray, Gamma: np.ndarray) -> Optional[np.ndarray]:
    """
    选取一个可容许的 C

    依次尝试 V⁻¹Γ 的列与标准基向量，保留使 [V⁻¹Γ_θ, C] 列满秩的列，
    优先选择使 A*Γ 可逆的组合。
    """
    V = require_positive_definite(V, "V")
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    Gamma_theta = np.asarray(Gamma_theta, dtype=float).reshape(V.shape[0], -1)
    need = Gamma.shape[1] - Gamma_theta.shape[1]
    if need <= 0:
        return None
    base = np.linalg.solve(V, Gamma_theta)
    candidates = list(np.linalg.solve(V, Gamma).T) + list(np.eye(V.shape[0]))
    chosen: List[np.ndarray] = []
    for candidate in candidates:
        trial = np.column_stack([base] + chosen + [candidate])
        if np.linalg.matrix_rank(trial) == trial.shape[1]:
            chosen.append(candidate)
        if len(chosen) == need:
            break
    C = np.column_stack(chosen)
    A = np.vstack([base.T, C.T])
    if np.linalg.cond(A @ Gamma) > CONDITION_LIMIT:
        logger.debug("缺省的C使 A*Γ 奇异")
    return C


def random_selection(d_beta: int, q: int, rng: np.random.Generator) -> np.ndarray:
    """标准正态元素的随机选择矩阵"""
    return rng.standard_normal((d_beta, q))


def gls_theta(A: np.ndarray, W: np.ndarray, system: LinearAlsSystem, beta_hat: np.ndarray) -> np.ndarray:
    """
    线性ALS下 b_A(θ) = β⁰ + B(θ - θ⁰) 的闭式Wald解

    θ̂ = θ⁰ + (B'WB)⁻¹B'W(β̂ - β⁰)，B = ∂b_A/∂θ'。
    """
    B = binding_slope(A, system.Gamma, system.Gamma_theta)
    W = np.asarray(W, dtype=float)
    return system.theta0 + np.linalg.solve(B.T @ W @ B, B.T @ W @ (np.asarray(beta_hat) - system.beta0))


def wald_ii_overid(A: np.ndarray, system: MomentSystem, sigma_hat: np.ndarray, W: Optional[np.ndarray] = None,
                   method: str = "grid", grid: Optional[GridSpec] = None,
                   bounds: Optional[np.ndarray] = None) -> OverIdEstimate:
    """
    θ̂[A, W] = argmin (β̂(A) - b_A(θ))'W(β̂(A) - b_A(θ))

    Args:
        A: 选择矩阵
        system: 矩系统
        sigma_hat: 观测到的 ς̂_T
        W: 加权矩阵，缺省为 W*(A) = Avar(β̂(A))⁻¹
        method: grid 为网格搜索加细化；closed_form 只适用于线性ALS
        grid: 网格设置
        bounds: θ的搜索范围，缺省由系统给出

    Returns:
        OverIdEstimate
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if W is None:
        W = np.linalg.inv(avar_beta(A, system.Gamma, system.V))
    W = require_positive_definite(W, "W")
    beta_hat = solve_selected(A, system, sigma_hat)

    if method == "closed_form":
        if not isinstance(system, LinearAlsSystem) or isinstance(system, NonlinearAlsSystem):
            raise ValueError("闭式解只适用于线性ALS系统")
        theta = gls_theta(A, W, system, beta_hat)
        diff = beta_hat - solve_selected(A, system, system.sigma(theta))
        return OverIdEstimate(theta_hat=theta, beta_hat=beta_hat, objective=float(diff @ W @ diff), W=W,
                              method=method)
    if method != "grid":
        raise ValueError(f"未知的方法: {method}")

    def objective(theta: np.ndarray) -> float:
        diff = beta_hat - solve_selected(A, system, system.sigma(theta))
        return float(diff @ W @ diff)

    result = gauss_seidel_grid(objective, system.theta_bounds() if bounds is None else bounds, grid or OVERID_GRID)
    return OverIdEstimate(theta_hat=result.theta, beta_hat=beta_hat, objective=result.value, W=W, method=method,
                          resolution=result.resolution, trace=result.trace)


def selection_report(system: MomentSystem, selections: Dict[str, np.ndarray]) -> Dict[str, Dict[str, Any]]:
    """
    各选择矩阵下的 Avar(β̂)、∂b_A/∂θ' 与 Avar(θ̂)

    不可识别或 AΓ 奇异时相应项为 None。
    """
    report = {}
    for name, A in selections.items():
        entry: Dict[str, Any] = {"A": A, "avar_beta": None, "binding_slope": None, "avar_theta": None}
        try:
            entry["avar_beta"] = avar_beta(A, system.Gamma, system.V)
            entry["binding_slope"] = binding_slope(A, system.Gamma, system.Gamma_theta)
        except SingularAGamma as e:
            logger.warning(f"选择矩阵 {name}: {e}")
        try:
            entry["avar_theta"] = ii_avar_theta(A, system.Gamma_theta, system.V)
        except NonIdentification as e:
            logger.warning(f"选择矩阵 {name}: {e}")
        report[name] = entry
    return report


def standard_selections(system: MomentSystem, C: Optional[np.ndarray] = None) -> Dict[str, np.ndarray]:
    """朴素的 Γ'V⁻¹ 与最优的 A*"""
    if C is None:
        C = default_C(system.Gamma_theta, system.V, system.Gamma)
    return {
        "naive": naive_optimal_A(system.Gamma, system.V),
        "optimal": optimal_A_for_theta(system.Gamma_theta, system.V, C, system.Gamma),
    }


def selection_names(compare: Sequence[str]) -> List[str]:
    names = [name.strip() for name in compare if name.strip()]
    unknown = set(names) - {"naive", "optimal"}
    if unknown:
        raise ValueError(f"未知的选择矩阵: {sorted(unknown)}，可选 naive, optimal")
    return names
