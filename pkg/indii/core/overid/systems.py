"""
过度识别的辅助矩系统

统一写成 g(β, ς)：ALS 为 g = Γβ - ς（或其非线性版本），GMM 为 g = ς̄ - m(β)，
其中 ς̄ 为样本矩。Γ = ∂g/∂β'，Γ_θ = ∂g/∂ς' · ∂ς/∂θ'，V 为 √T g(β⁰, ς̂) 的长期方差。
三个合成系统都给出闭式的 Γ、Γ_θ、V。
"""
import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Sequence

import numpy as np
from scipy.special import comb

from indii.core.errors import ParameterError, UsageError
from indii.utils.linalg import require_positive_definite

# 配置日志
logger = logging.getLogger(__name__)

SYSTEMS = ("linear", "nonlinear", "gmm")


class MomentSystem(ABC):
    """
    过度识别矩系统基类

    子类实现 sigma / dsigma_dtheta / g / dg_dbeta / V_sigma / simulate_sigma；
    sign 为 ∂g/∂ς（ALS 为 -1，GMM 为 +1）。
    """

    kind: str = "ALS"
    sign: float = -1.0
    name: str = ""

    def __init__(self, theta0: Sequence[float], beta0: Sequence[float]):
        self.theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
        self.beta0 = np.atleast_1d(np.asarray(beta0, dtype=float))

    @abstractmethod
    def sigma(self, theta: Sequence[float]) -> np.ndarray:
        """冗余参数 ς(θ) 的概率极限"""

    @abstractmethod
    def dsigma_dtheta(self, theta: Sequence[float]) -> np.ndarray:
        pass

    @abstractmethod
    def g(self, beta: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def dg_dbeta(self, beta: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def V_sigma(self, theta: Sequence[float]) -> np.ndarray:
        """√T(ς̂ - ς(θ)) 的渐近方差"""

    @abstractmethod
    def simulate_sigma(self, theta: Sequence[float], T: int, rng: np.random.Generator) -> np.ndarray:
        """在θ下生成长度为T的样本对应的 ς̂_T"""

    @property
    def q(self) -> int:
        return int(self.sigma(self.theta0).size)

    @property
    def d_beta(self) -> int:
        return int(self.beta0.size)

    @property
    def d_theta(self) -> int:
        return int(self.theta0.size)

    @property
    def Gamma(self) -> np.ndarray:
        return self.dg_dbeta(self.beta0, self.sigma(self.theta0))

    @property
    def Gamma_theta(self) -> np.ndarray:
        return self.sign * self.dsigma_dtheta(self.theta0)

    @property
    def V(self) -> np.ndarray:
        return self.V_sigma(self.theta0)

    def start(self, sigma: np.ndarray) -> np.ndarray:
        """Newton求解的缺省起点"""
        return self.beta0.copy()

    def theta_bounds(self) -> np.ndarray:
        """θ网格搜索的缺省范围 θ⁰ ± 1"""
        return np.column_stack([self.theta0 - 1.0, self.theta0 + 1.0])

    def check(self) -> None:
        """检查 g(β⁰, ς⁰) = 0、rank(Γ) = d_β、V 正定与 q > d_β ≥ d_θ"""
        residual = np.max(np.abs(self.g(self.beta0, self.sigma(self.theta0))))
        if residual > 1e-10:
            raise ParameterError(f"{self.name} 系统在 (β⁰, ς⁰) 处不满足 g = 0，残差 {residual:.3e}")
        if np.linalg.matrix_rank(self.Gamma) < self.d_beta:
            raise ParameterError(f"{self.name} 系统的 Γ 列秩不足")
        require_positive_definite(self.V, "V")
        if not self.q > self.d_beta >= self.d_theta:
            raise ParameterError(f"需要 q > d_β ≥ d_θ，当前 q={self.q}, d_β={self.d_beta}, d_θ={self.d_theta}")

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "q": self.q,
            "d_beta": self.d_beta,
            "d_theta": self.d_theta,
            "theta0": self.theta0,
            "beta0": self.beta0,
            "Gamma": self.Gamma,
            "Gamma_theta": self.Gamma_theta,
            "V": self.V,
        }


class LinearAlsSystem(MomentSystem):
    """
    线性ALS：g(β, ς) = Γβ - ς，ς(θ) = Γβ⁰ - Γ_θ(θ - θ⁰)

    ς̂ 取 ς(θ) + V^{1/2}z/√T 的高斯近似。Γ_θ 不在 span(Γ) 内时，
    绑定函数 b_A 依赖于 A。
    """

    name = "linear"

    def __init__(self, Gamma: np.ndarray, Gamma_theta: np.ndarray, V: np.ndarray,
                 theta0: Sequence[float], beta0: Sequence[float]):
        super().__init__(theta0, beta0)
        self.Gamma_matrix = np.atleast_2d(np.asarray(Gamma, dtype=float))
        self.Gamma_theta_matrix = np.asarray(Gamma_theta, dtype=float).reshape(self.Gamma_matrix.shape[0], -1)
        self.V_matrix = require_positive_definite(V, "V")
        self._chol = np.linalg.cholesky(self.V_matrix)

    def sigma(self, theta: Sequence[float]) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return self.Gamma_matrix @ self.beta0 - self.Gamma_theta_matrix @ (theta - self.theta0)

    def dsigma_dtheta(self, theta: Sequence[float]) -> np.ndarray:
        return -self.Gamma_theta_matrix

    def g(self, beta: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        return self.Gamma_matrix @ np.asarray(beta, dtype=float) - np.asarray(sigma, dtype=float)

    def dg_dbeta(self, beta: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        return self.Gamma_matrix

    def V_sigma(self, theta: Sequence[float]) -> np.ndarray:
        return self.V_matrix

    def simulate_sigma(self, theta: Sequence[float], T: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal(self.q)
        return self.sigma(theta) + self._chol @ z / np.sqrt(T)


class NonlinearAlsSystem(LinearAlsSystem):
    """
    非线性ALS（三角链接）：g_i(β, ς) = Σ_j L_ij sin β_j - ς_i

    ς(θ) = L sin β⁰ - Γ_θ(θ - θ⁰)，Γ = L·diag(cos β⁰)。
    """

    name = "nonlinear"

    def sigma(self, theta: Sequence[float]) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return self.Gamma_matrix @ np.sin(self.beta0) - self.Gamma_theta_matrix @ (theta - self.theta0)

    def g(self, beta: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        return self.Gamma_matrix @ np.sin(np.asarray(beta, dtype=float)) - np.asarray(sigma, dtype=float)

    def dg_dbeta(self, beta: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        return self.Gamma_matrix * np.cos(np.asarray(beta, dtype=float))[None, :]


def _shifted_moments(order: int) -> np.ndarray:
    """
    μ'_k = E(1 + ε)^k，k = 0..order，ε = (χ²₁ - 1)/√2

    ε 的中心矩由 χ²₁ 的累积量 κ_n = 2^{n-1}(n-1)! 得到。
    """
    central = {0: 1.0, 1: 0.0, 2: 1.0, 3: 2.0 * np.sqrt(2.0), 4: 15.0, 5: 544.0 / 2.0**2.5, 6: 755.0}
    if order > 6:
        raise ValueError("只支持到6阶矩")
    return np.array([sum(comb(k, j) * central[j] for j in range(k + 1)) for k in range(order + 1)])


class PowerMomentGmmSystem(MomentSystem):
    """
    幂矩GMM：y_t = θ(1 + ε_t)，ε_t = (χ²₁ - 1)/√2

    辅助模型是形状已知（偏度 γ = 2√2）的位置-尺度族，β = (均值, 方差)：
      m(β) = (β₁, β₁² + β₂, β₁³ + 3β₁β₂ + γβ₂^{3/2})
    g(β, ς̄) = ς̄ - m(β)，ς̄ 为 (y, y², y³) 的样本均值，β⁰ = (θ⁰, θ⁰²)。
    """

    name = "gmm"
    kind = "GMM"
    sign = 1.0
    SKEWNESS = 2.0 * np.sqrt(2.0)

    def __init__(self, theta0: float = 1.0):
        theta0 = float(np.atleast_1d(theta0)[0])
        if theta0 <= 0:
            raise ParameterError(f"θ⁰ 必须为正，当前为 {theta0}")
        super().__init__([theta0], [theta0, theta0**2])
        self._moments = _shifted_moments(6)

    def sigma(self, theta: Sequence[float]) -> np.ndarray:
        t = float(np.atleast_1d(theta)[0])
        return self._moments[1:4] * t ** np.arange(1, 4)

    def dsigma_dtheta(self, theta: Sequence[float]) -> np.ndarray:
        t = float(np.atleast_1d(theta)[0])
        powers = np.arange(1, 4)
        return (self._moments[1:4] * powers * t ** (powers - 1))[:, None]

    def start(self, sigma: np.ndarray) -> np.ndarray:
        mean = float(sigma[0])
        return np.array([mean, max(float(sigma[1]) - mean**2, 1e-6)])

    def theta_bounds(self) -> np.ndarray:
        return np.array([[0.5 * self.theta0[0], 1.5 * self.theta0[0]]])

    def moment_map(self, beta: np.ndarray) -> np.ndarray:
        b1, b2 = np.asarray(beta, dtype=float)
        if b2 <= 0:
            raise ParameterError(f"方差参数必须为正，当前为 {b2}", context={"beta": np.asarray(beta)})
        return np.array([b1, b1**2 + b2, b1**3 + 3.0 * b1 * b2 + self.SKEWNESS * b2**1.5])

    def g(self, beta: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        return np.asarray(sigma, dtype=float) - self.moment_map(beta)

    def dg_dbeta(self, beta: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        b1, b2 = np.asarray(beta, dtype=float)
        if b2 <= 0:
            raise ParameterError(f"方差参数必须为正，当前为 {b2}", context={"beta": np.asarray(beta)})
        dm = np.array([
            [1.0, 0.0],
            [2.0 * b1, 1.0],
            [3.0 * b1**2 + 3.0 * b2, 3.0 * b1 + 1.5 * self.SKEWNESS * np.sqrt(b2)],
        ])
        return -dm

    def V_sigma(self, theta: Sequence[float]) -> np.ndarray:
        """Cov(y^a, y^b) = θ^{a+b}(μ'_{a+b} - μ'_a μ'_b)，a, b = 1, 2, 3"""
        t = float(np.atleast_1d(theta)[0])
        powers = np.arange(1, 4)
        mu = self._moments
        cov = np.array([[mu[a + b] - mu[a] * mu[b] for b in powers] for a in powers])
        return cov * t ** np.add.outer(powers, powers)

    def simulate_sigma(self, theta: Sequence[float], T: int, rng: np.random.Generator) -> np.ndarray:
        t = float(np.atleast_1d(theta)[0])
        eps = (rng.chisquare(1.0, size=T) - 1.0) / np.sqrt(2.0)
        y = t * (1.0 + eps)
        return np.array([y.mean(), np.mean(y**2), np.mean(y**3)])


def conflict_instance() -> LinearAlsSystem:
    """
    手工构造的冲突例：q = 3, d_β = 2, d_θ = 1, V = I, Γ_θ = (1,0,0)', Γ = [e₂, e₃]

    朴素的 A = Γ' 与 Γ_θ 正交，θ 不可识别；最优方差为1。
    """
    Gamma = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    return LinearAlsSystem(Gamma, np.array([[1.0], [0.0], [0.0]]), np.eye(3), theta0=[0.0], beta0=[0.0, 0.0])


def default_linear_system() -> LinearAlsSystem:
    """Γ_θ 部分落在 span(Γ) 之外的线性系统：朴素A可识别但非最优"""
    Gamma = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    Gamma_theta = np.array([[1.0], [0.5], [-1.0]])
    V = np.array([[1.0, 0.3, 0.0], [0.3, 2.0, 0.4], [0.0, 0.4, 1.5]])
    return LinearAlsSystem(Gamma, Gamma_theta, V, theta0=[0.5], beta0=[0.2, -0.3])


def default_nonlinear_system() -> NonlinearAlsSystem:
    L = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    Gamma_theta = np.array([[1.0], [0.5], [-1.0]])
    V = np.array([[1.0, 0.3, 0.0], [0.3, 2.0, 0.4], [0.0, 0.4, 1.5]])
    return NonlinearAlsSystem(L, Gamma_theta, V, theta0=[0.5], beta0=[0.2, -0.3])


def create_moment_system(name: str, config: Optional[Dict[str, Any]] = None) -> MomentSystem:
    """
    根据名称和overid配置段创建合成矩系统

    Args:
        name: linear | nonlinear | gmm | conflict
        config: 可选的 theta0（仅gmm）
    """
    config = config or {}
    if name == "linear":
        system = default_linear_system()
    elif name == "nonlinear":
        system = default_nonlinear_system()
    elif name == "gmm":
        system = PowerMomentGmmSystem(config.get("theta0", 1.0))
    elif name == "conflict":
        system = conflict_instance()
    else:
        raise UsageError(f"未知的矩系统: {name}，可选 {SYSTEMS + ('conflict',)}")
    system.check()
    logger.debug(f"已创建矩系统 {name}: q={system.q}, d_β={system.d_beta}, d_θ={system.d_theta}")
    return system
