"""
Ruin probabilities for exponential claims and exponential inter-claim times.

With tau ~ Exp(lam) and xi ~ Exp(mu) the ruin probability is proportional to

    I(x) = int_x^inf (1 / v(y)) exp{E(y)} dy,   E(y) = lam * Lambda(y) - mu * y,

where Lambda(y) = int_0^y dz / v(z). The proportionality constant cancels in
ratios, which is how every caller here uses I.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

import config
from stochastic_model.claims import Exponential
from stochastic_model.premium_rate import (
    Constant,
    CriticalInverse,
    CriticalPower,
    PremiumRateSpec,
    Tabulated,
    evaluate_rate,
    is_critical,
)
from stochastic_model.risk_model import RiskModel
from utilities.errors import ModelError, NumericalError
from utilities.logger import Logger

logger = Logger.get_logger()

RECURRENT_MESSAGE = "recurrent: psi = 1 for every initial reserve (ψ ≡ 1)"


@dataclass(frozen=True)
class ExpExpParams:
    lam: float
    mu: float
    rate: PremiumRateSpec

    def __post_init__(self):
        if not (self.lam > 0 and self.mu > 0):
            raise ModelError(f"lam and mu must be positive, got {self.lam}, {self.mu}")
        if is_critical(self.rate) and not math.isclose(
            self.rate.v_c, self.lam / self.mu, rel_tol=1e-12
        ):
            raise ModelError(
                f"critical rate v_c={self.rate.v_c} must equal lam/mu={self.lam / self.mu}"
            )

    @property
    def v_c(self) -> float:
        return self.lam / self.mu

    @classmethod
    def from_model(cls, model: RiskModel) -> "ExpExpParams":
        xi, tau = model.claims.xi, model.claims.tau
        if not (isinstance(xi, Exponential) and isinstance(tau, Exponential)):
            raise ModelError("closed form needs exponential claim sizes and inter-claim times")
        return cls(lam=tau.rate, mu=xi.rate, rate=model.rate)


def _gauss_legendre(f, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    nodes, weights = _legendre(config.GAUSS_LEGENDRE_NODES)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    points = mid[:, None] + half[:, None] * nodes[None, :]
    return half * (f(points) * weights[None, :]).sum(axis=1)


@lru_cache(maxsize=8)
def _legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


class _PowerInnerIntegral:
    """Lambda(y) for v_c + theta / max(z, z_min)^alpha on a lazily extended geometric grid."""

    GROWTH = 1.05

    def __init__(self, rate: CriticalPower):
        self.rate = rate
        self.r0 = evaluate_rate(rate, 0.0)
        self.nodes = np.array([rate.z_min])
        self.cumulative = np.array([rate.z_min / self.r0])
        self._lock = threading.Lock()

    def _inverse_rate(self, z):
        return 1.0 / evaluate_rate(self.rate, z)

    def _extend(self, upto: float) -> None:
        with self._lock:
            if self.nodes[-1] >= upto:
                return
            count = int(math.ceil(math.log(upto / self.nodes[-1]) / math.log(self.GROWTH))) + 1
            new_nodes = self.nodes[-1] * self.GROWTH ** np.arange(1, count + 1)
            starts = np.concatenate(([self.nodes[-1]], new_nodes[:-1]))
            panels = _gauss_legendre(self._inverse_rate, starts, new_nodes)
            self.cumulative = np.concatenate(
                (self.cumulative, self.cumulative[-1] + np.cumsum(panels))
            )
            self.nodes = np.concatenate((self.nodes, new_nodes))

    def __call__(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = y / self.r0
        above = y > self.rate.z_min
        if above.any():
            ya = y[above]
            self._extend(float(ya.max()))
            with self._lock:
                nodes, cumulative = self.nodes, self.cumulative
            seg = np.searchsorted(nodes, ya, side="right") - 1
            out[above] = cumulative[seg] + _gauss_legendre(self._inverse_rate, nodes[seg], ya)
        return out


class _Exponent:
    """E(y) = lam * Lambda(y) - mu * y for one parameter set."""

    def __init__(self, params: ExpExpParams):
        self.params = params
        rate = params.rate
        self._power_inner = _PowerInnerIntegral(rate) if isinstance(rate, CriticalPower) else None
        if isinstance(rate, Tabulated):
            starts = np.concatenate(([0.0], rate.levels[1:]))
            if np.any(rate.rates <= 0):
                raise ModelError("closed form needs strictly positive tabulated rates")
            self._starts = starts
            self._cum = np.concatenate(([0.0], np.cumsum(np.diff(starts) / rate.rates[:-1])))

    def inner(self, y: np.ndarray) -> np.ndarray:
        rate = self.params.rate
        y = np.asarray(y, dtype=float)
        if isinstance(rate, Constant):
            return y / rate.v
        if isinstance(rate, CriticalInverse):
            v_c, theta, z_min = rate.v_c, rate.theta, rate.z_min
            r0 = v_c + theta / z_min
            ya = np.maximum(y, z_min)
            above = (
                z_min / r0
                + (ya - z_min) / v_c
                - theta / v_c**2 * np.log((v_c * ya + theta) / (v_c * z_min + theta))
            )
            return np.where(y <= z_min, y / r0, above)
        if isinstance(rate, CriticalPower):
            return self._power_inner(y)
        seg = np.searchsorted(self._starts, y, side="right") - 1
        return self._cum[seg] + (y - self._starts[seg]) / rate.rates[seg]

    def __call__(self, y):
        return self.params.lam * self.inner(y) - self.params.mu * np.asarray(y, dtype=float)


def _check_convergent(params: ExpExpParams) -> None:
    rate, lam, mu = params.rate, params.lam, params.mu
    if isinstance(rate, Constant):
        convergent = mu - lam / rate.v > 0
    elif isinstance(rate, CriticalInverse):
        convergent = lam * rate.theta / rate.v_c**2 > 1
    elif isinstance(rate, CriticalPower):
        convergent = rate.theta > 0
    else:
        convergent = mu - lam / rate.rates[-1] > 0
    if not convergent:
        logger.error(f"Outer integral diverges for {params}")
        raise ModelError(RECURRENT_MESSAGE)


@lru_cache(maxsize=32)
def _exponent_for(params: ExpExpParams) -> _Exponent:
    _check_convergent(params)
    return _Exponent(params)


def log_unnormalized_psi(params: ExpExpParams, x: float) -> float:
    """log I(x), computed as E(x) + log int_x^inf (1/v) e^{E(y) - E(x)} dy."""
    if x < 0:
        raise ModelError(f"x must be >= 0, got {x}")
    exponent = _exponent_for(params)
    e_x = float(exponent(np.array([x]))[0])

    def integrand(y):
        return math.exp(float(exponent(np.array([y]))[0]) - e_x) / evaluate_rate(params.rate, y)

    total, a = 0.0, float(x)
    for _ in range(config.QUAD_MAX_PANELS):
        b = 2.0 * a + 1.0
        value, _ = integrate.quad(
            integrand, a, b, epsabs=0.0, epsrel=config.QUAD_REL_TOL, limit=config.QUAD_LIMIT
        )
        total += value
        a = b
        bracket = tail_bracket(params, a)
        if bracket is None:
            continue
        scale = math.exp(float(exponent(np.array([a]))[0]) - e_x)
        lo, hi = scale * bracket[0], scale * bracket[1]
        if 0.5 * (hi - lo) <= 0.1 * config.QUAD_REL_TOL * total:
            total += 0.5 * (lo + hi)
            return e_x + math.log(total)
    logger.error(f"Outer integral did not settle from x={x}")
    raise NumericalError(f"outer integral did not converge from x={x}")


def tail_bracket(params: ExpExpParams, a: float) -> Optional[Tuple[float, float]]:
    """
    Bounds (lo, hi) on int_a^inf (1/v(y)) e^{E(y) - E(a)} dy, or None when no
    envelope applies yet at a.

    Constant rates and the last tabulated piece give the exact value
    1 / (mu r - lam). For the inverse rate e^{E(y) - E(a)} is the power
    ((v_c a + theta) / (v_c y + theta))^kappa, kappa = lam theta / v_c^2, and
    y / (v_c y + theta) is squeezed between its value at a and 1 / v_c. For the
    power rate E'(y) <= -c y^-alpha with c = lam theta / (v(a) v_c), and the
    resulting incomplete Gamma integral is bounded above by its leading term.
    """
    _check_convergent(params)
    rate, lam, mu = params.rate, params.lam, params.mu
    if isinstance(rate, Constant):
        exact = 1.0 / (mu * rate.v - lam)
        return exact, exact
    if isinstance(rate, Tabulated):
        if a < rate.levels[-1]:
            return None
        exact = 1.0 / (mu * rate.rates[-1] - lam)
        return exact, exact
    if a < rate.z_min:
        return None
    v_c, theta = rate.v_c, rate.theta
    if isinstance(rate, CriticalInverse):
        kappa = lam * theta / v_c**2
        return a / (v_c * (kappa - 1.0)), (v_c * a + theta) / (v_c**2 * (kappa - 1.0))
    alpha = rate.alpha
    beta = 1.0 - alpha
    c = lam * theta / (float(evaluate_rate(rate, a)) * v_c)
    z0 = c * a**beta / beta
    excess = alpha / beta
    if z0 <= 2.0 * excess:
        return None
    return 0.0, a**alpha / (v_c * c * (1.0 - excess / z0))


def unnormalized_psi(params: ExpExpParams, x: float) -> float:
    """I(x); may underflow to 0 for fast exponential decay, use psi_ratio for ratios."""
    return math.exp(log_unnormalized_psi(params, x))


def integrand_value(params: ExpExpParams, x: float) -> float:
    """(1/v(x)) e^{E(x)}, which equals -dI/dx."""
    exponent = _exponent_for(params)
    return math.exp(float(exponent(np.array([x]))[0])) / evaluate_rate(params.rate, x)


def psi_ratio(params: ExpExpParams, x: float, x_ref: float) -> float:
    """psi(x) / psi(x_ref) = I(x) / I(x_ref); the unknown constant cancels."""
    if x == x_ref:
        return 1.0
    return math.exp(log_unnormalized_psi(params, x) - log_unnormalized_psi(params, x_ref))


def anchored_psi(params: ExpExpParams, xs: Sequence[float], anchor) -> np.ndarray:
    """Absolute curve psi(x) ~ p_hat(x_a) I(x) / I(x_a) calibrated from one RuinEstimate."""
    if anchor.p_hat <= 0:
        raise ModelError("anchor estimate has no ruin events")
    log_ref = log_unnormalized_psi(params, anchor.x)
    return np.array(
        [anchor.p_hat * math.exp(log_unnormalized_psi(params, x) - log_ref) for x in xs]
    )


@dataclass(frozen=True)
class AsymptoticShape:
    """
    Leading behaviour of psi(x):
        power        x^{-power}
        stretched    x^{prefactor + log_power} exp{-sum c x^e} over stretch_terms (c, e)
        exponential  e^{-beta x}
    """

    kind: str
    power: Optional[float] = None
    prefactor_exponent: Optional[float] = None
    stretch_exponent: Optional[float] = None
    c2: Optional[float] = None
    log_corrected: bool = False
    log_power: float = 0.0
    stretch_terms: Tuple[Tuple[float, float], ...] = ()
    beta: Optional[float] = None

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "power":
            return x ** (-self.power)
        if self.kind == "exponential":
            return np.exp(-self.beta * x)
        log_value = (self.prefactor_exponent + self.log_power) * np.log(x)
        for coefficient, exponent in self.stretch_terms:
            log_value = log_value - coefficient * x**exponent
        return np.exp(log_value)


def asymptotic_shape(params: ExpExpParams) -> AsymptoticShape:
    rate, lam, mu = params.rate, params.lam, params.mu
    if isinstance(rate, CriticalInverse):
        return AsymptoticShape(kind="power", power=rate.theta * mu**2 / lam - 1.0)
    if isinstance(rate, CriticalPower):
        return _stretched_shape(params)
    last = rate.v if isinstance(rate, Constant) else float(rate.rates[-1])
    beta = mu - lam / last
    if beta <= 0:
        raise ModelError(RECURRENT_MESSAGE)
    return AsymptoticShape(kind="exponential", beta=beta)


def _stretched_shape(params: ExpExpParams) -> AsymptoticShape:
    """
    Expand 1/v = (1/v_c) sum_j (-theta/v_c)^j z^{-alpha j}. Terms with alpha j < 1
    stretch the exponential; alpha j = 1 turns into a power of x.
    """
    rate, lam = params.rate, params.lam
    alpha, theta, v_c = rate.alpha, rate.theta, rate.v_c
    inverse_alpha = 1.0 / alpha
    log_corrected = math.isclose(inverse_alpha, round(inverse_alpha), rel_tol=1e-12)
    terms, log_power = [], 0.0
    j = 1
    while alpha * j < 1.0 - 1e-12 or (log_corrected and j == round(inverse_alpha)):
        c_j = lam / v_c * (-theta / v_c) ** j
        if log_corrected and j == round(inverse_alpha):
            log_power = c_j
        else:
            terms.append((-c_j / (1.0 - alpha * j), 1.0 - alpha * j))
        j += 1
    return AsymptoticShape(
        kind="stretched",
        prefactor_exponent=alpha,
        stretch_exponent=1.0 - alpha,
        c2=theta * params.mu**2 / (lam * (1.0 - alpha)),
        log_corrected=log_corrected,
        log_power=log_power,
        stretch_terms=tuple(terms),
    )
