"""
Drift target q(x) = sum_j r_j (b + x)^{-alpha j} for premium rates v_c + theta / x^alpha.

Moments of the jump are expanded as m_k(x) = sum_j a_{k,j} u^j in u = (b + x)^{-alpha}
and the r_j are chosen so the low-order coefficients of

    -m_1 + sum_{j=2}^{gamma} (-1)^j m_j q^{j-1} / j!

vanish. All series arithmetic is done over exact fractions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Dict, List, Tuple

import numpy as np

import config
from stochastic_model.premium_rate import CriticalPower
from stochastic_model.risk_model import RiskModel
from utilities.errors import ModelError, NumericalError
from utilities.logger import Logger

logger = Logger.get_logger()

Series = List[Fraction]


@dataclass(frozen=True)
class PowerCase:
    alpha: float
    theta: float
    gamma: int
    r: Tuple[float, ...]
    r_exact: Tuple[Fraction, ...]
    b_shift: int
    log_corrected: bool
    residuals: Tuple[float, ...]

    def q(self, x):
        y = self.b_shift + np.maximum(np.asarray(x, dtype=float), 0.0)
        return sum(r_j * y ** (-self.alpha * j) for j, r_j in enumerate(self.r, start=1))

    def Q(self, x):
        """int_0^x q, with the log term where alpha j = 1."""
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        b = float(self.b_shift)
        total = np.zeros_like(x)
        for j, r_j in enumerate(self.r, start=1):
            power = 1.0 - self.alpha * j
            if math.isclose(power, 0.0, abs_tol=1e-12):
                total = total + r_j * (np.log(b + x) - math.log(b))
            else:
                total = total + r_j * ((b + x) ** power - b**power) / power
        return total


def gamma_index(alpha: float) -> int:
    """min{k >= 1: alpha k > 1}."""
    if not 0 < alpha < 1:
        raise ModelError(f"alpha must lie in (0, 1), got {alpha}")
    k = 1
    while not alpha * k > 1 + 1e-12:
        k += 1
    return k


def _exact_moments(model: RiskModel, order: int) -> Tuple[List[Fraction], List[Fraction]]:
    moments = {"xi": [], "tau": []}
    for name, dist in (("xi", model.claims.xi), ("tau", model.claims.tau)):
        for k in range(order + 1):
            value = dist.exact_moment(k)
            if value is None:
                logger.error(f"E {name}^{k} is infinite")
                raise ModelError(f"moment of order {k} of {name} is infinite (E {name}^{k})")
            moments[name].append(value)
    return moments["xi"], moments["tau"]


def a_coefficients(model: RiskModel, theta: float, gamma: int) -> Dict[Tuple[int, int], Fraction]:
    """a_{k,j} = C(k,j) theta^j E tau^j (v_c tau - xi)^{k-j} for 0 <= j <= k <= gamma."""
    if gamma < 1:
        raise ModelError(f"gamma must be >= 1, got {gamma}")
    m_xi, m_tau = _exact_moments(model, gamma + 1)
    v_c = m_xi[1] / m_tau[1]
    theta = Fraction(theta)
    table = {}
    for k in range(gamma + 1):
        for j in range(k + 1):
            rest = k - j
            expectation = sum(
                comb(rest, i) * v_c**i * (-1) ** (rest - i) * m_tau[j + i] * m_xi[rest - i]
                for i in range(rest + 1)
            )
            table[(k, j)] = comb(k, j) * theta**j * expectation
    return table


def _multiply(left: Series, right: Series, degree: int) -> Series:
    out = [Fraction(0)] * (degree + 1)
    for i, a in enumerate(left):
        if a == 0:
            continue
        for j, b in enumerate(right[: degree + 1 - i]):
            out[i + j] += a * b
    return out


def _residual_series(a: Dict[Tuple[int, int], Fraction], r: Series, gamma: int) -> Series:
    degree = gamma - 1
    m = {
        k: [a.get((k, j), Fraction(0)) if j <= k else Fraction(0) for j in range(degree + 1)]
        for k in range(1, gamma + 1)
    }
    q = [Fraction(0)] + list(r[1 : degree + 1])
    total = [-c for c in m[1]]
    q_power = [Fraction(1)] + [Fraction(0)] * degree
    for j in range(2, gamma + 1):
        q_power = _multiply(q_power, q, degree)
        term = _multiply(m[j], q_power, degree)
        scale = Fraction((-1) ** j, factorial(j))
        total = [t + scale * c for t, c in zip(total, term)]
    return total


def _solve_r(a: Dict[Tuple[int, int], Fraction], gamma: int) -> Tuple[Series, Series]:
    a20 = a[(2, 0)]
    if a20 == 0:
        raise ModelError("degenerate jumps: E (v_c tau - xi)^2 = 0")
    r = [Fraction(0)] * gamma
    for level in range(1, gamma):
        # r_level enters the u^level coefficient only through m_2 q / 2
        coefficient = _residual_series(a, r, gamma)[level]
        r[level] = -coefficient / (a20 / 2)
    return r, _residual_series(a, r, gamma)


def _shift_ok(r: Tuple[float, ...], alpha: float, b: float, grid: np.ndarray) -> bool:
    y = b + grid
    q = sum(r_j * y ** (-alpha * j) for j, r_j in enumerate(r, start=1))
    slope = -sum(alpha * j * r_j * y ** (-alpha * j - 1) for j, r_j in enumerate(r, start=1))
    return bool(np.all(q > 0) and np.all(slope <= 0))


def _select_shift(r: Tuple[float, ...], alpha: float) -> int:
    """Smallest integer b >= 1 making q positive and non-increasing on a verification grid, doubled."""
    grid = np.concatenate(([0.0], np.geomspace(1e-3, config.BOUNDS_SHIFT_GRID_MAX, 2000)))
    if _shift_ok(r, alpha, 1, grid):
        return 2
    high = 2
    while not _shift_ok(r, alpha, high, grid):
        high *= 2
        if high > config.BOUNDS_SHIFT_SEARCH_MAX:
            raise NumericalError(f"no shift up to {config.BOUNDS_SHIFT_SEARCH_MAX} makes q decreasing")
    low = high // 2
    while high - low > 1:
        middle = (low + high) // 2
        if _shift_ok(r, alpha, middle, grid):
            high = middle
        else:
            low = middle
    return 2 * high


def r_coefficients(model: RiskModel, theta: float, alpha: float) -> PowerCase:
    gamma = gamma_index(alpha)
    a = a_coefficients(model, theta, gamma)
    r_exact, residual = _solve_r(a, gamma)
    r_exact = tuple(r_exact[1:])
    r = tuple(float(value) for value in r_exact)
    residuals = tuple(float(value) for value in residual[1:gamma])
    worst = max((abs(value) for value in residuals), default=0.0)
    if worst > 1e-10:
        logger.error(f"Series residuals {residuals} exceed 1e-10")
        raise NumericalError(f"r-recursion residual {worst:g} exceeds 1e-10")
    b_shift = _select_shift(r, alpha)
    log_corrected = math.isclose(alpha * (gamma - 1), 1.0, rel_tol=1e-12)
    logger.info(
        f"Power case alpha={alpha}: gamma={gamma}, r={r}, b_shift={b_shift}, "
        f"log_corrected={log_corrected}"
    )
    return PowerCase(
        alpha=alpha,
        theta=theta,
        gamma=gamma,
        r=r,
        r_exact=r_exact,
        b_shift=b_shift,
        log_corrected=log_corrected,
        residuals=residuals,
    )


def shape_value(power_case: PowerCase, x):
    """
    Decay shape of psi for the power family:
        x^alpha exp{-sum_{j<gamma} r_j x^{1-alpha j} / (1-alpha j)}
    and, when alpha (gamma - 1) = 1, the last term becomes the power x^{-r_{gamma-1}}.
    """
    x = np.asarray(x, dtype=float)
    alpha, r = power_case.alpha, power_case.r
    exponent = alpha * np.log(x)
    stretched = r[:-1] if power_case.log_corrected else r
    for j, r_j in enumerate(stretched, start=1):
        exponent = exponent - r_j * x ** (1 - alpha * j) / (1 - alpha * j)
    if power_case.log_corrected:
        exponent = exponent - r[-1] * np.log(x)
    return np.exp(exponent)


def leading_stretch(power_case: PowerCase) -> float:
    """Coefficient of x^{1-alpha} in -log psi."""
    return power_case.r[0] / (1 - power_case.alpha)


def power_case_for(model: RiskModel) -> PowerCase:
    rate = model.rate
    if not isinstance(rate, CriticalPower):
        raise ModelError("power case needs a critical_power rate")
    return r_coefficients(model, rate.theta, rate.alpha)
