"""Four-parameter logistic mapping from objective to subjective scores.

    f(x) = (tau1 - tau2) / (1 + exp((x - tau3) / tau4)) + tau2

Fitted by trust-region least squares with an analytic Jacobian, started from
tau1 = max(subjective), tau2 = min(subjective), tau3 = median(objective),
tau4 = -std(objective) / 4, and again from the same start with tau4 negated.
The lower-SSE outcome wins; the start itself is a candidate, so the fit never
ends above its initial SSE.
"""
from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.optimize import least_squares
from scipy.special import expit

from src.errors import (
    DegenerateInput, LengthMismatch, STATUS_NON_CONVERGENCE, STATUS_OK,
)

MIN_POINTS = 5


@dataclass(frozen=True)
class LogisticParams:
    tau1: float
    tau2: float
    tau3: float
    tau4: float

    def __post_init__(self):
        if self.tau4 == 0:
            raise ValueError("tau4 must be non-zero")

    def as_array(self) -> np.ndarray:
        return np.array([self.tau1, self.tau2, self.tau3, self.tau4])

    def __call__(self, x) -> np.ndarray:
        return logistic(np.asarray(x, dtype=np.float64), *self.as_array())

    def to_dict(self) -> dict:
        return {"tau1": self.tau1, "tau2": self.tau2, "tau3": self.tau3, "tau4": self.tau4}


@dataclass(frozen=True)
class LogisticFit:
    params: LogisticParams
    sse: float
    initial_sse: float
    status: str = STATUS_OK

    def to_dict(self) -> dict:
        return {**self.params.to_dict(), "sse": self.sse,
                "initial_sse": self.initial_sse, "status": self.status}


def logistic(x: np.ndarray, tau1: float, tau2: float, tau3: float, tau4: float) -> np.ndarray:
    return (tau1 - tau2) * expit(-(x - tau3) / tau4) + tau2


def _jacobian(theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    tau1, tau2, tau3, tau4 = theta
    s = expit(-(x - tau3) / tau4)
    slope = (tau1 - tau2) * s * (1.0 - s) / tau4
    return np.column_stack((s, 1.0 - s, slope, slope * (x - tau3) / tau4))


def _sse(theta: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    r = logistic(x, *theta) - y
    return float(r @ r)


def initial_params(objective, subjective) -> np.ndarray:
    x = np.asarray(objective, dtype=np.float64)
    y = np.asarray(subjective, dtype=np.float64)
    return np.array([y.max(), y.min(), np.median(x), -x.std() / 4.0])


def fit_logistic(objective, subjective, max_nfev: int = 2000, tol: float = 1e-12) -> LogisticFit:
    x = np.asarray(objective, dtype=np.float64).reshape(-1)
    y = np.asarray(subjective, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise LengthMismatch(f"Objective/subjective lengths differ: {x.size} vs {y.size}")
    if x.size < MIN_POINTS:
        raise DegenerateInput(f"Logistic fit needs at least {MIN_POINTS} points, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DegenerateInput("Logistic fit inputs must be finite")
    if np.ptp(x) == 0:
        raise DegenerateInput("Objective scores are constant; the logistic slope is undefined")

    start = initial_params(x, y)
    initial_sse = _sse(start, x, y)
    best_theta, best_sse, status = start, initial_sse, STATUS_OK
    if initial_sse == 0:
        return LogisticFit(LogisticParams(*start), 0.0, 0.0)

    flipped = start.copy()
    flipped[3] = -flipped[3]
    for theta0 in (start, flipped):
        result = least_squares(
            lambda theta: logistic(x, *theta) - y,
            theta0,
            jac=lambda theta: _jacobian(theta, x),
            method="trf",
            x_scale="jac",
            ftol=tol, xtol=tol, gtol=tol,
            max_nfev=max_nfev,
        )
        if result.x[3] == 0 or not np.all(np.isfinite(result.x)):
            continue
        sse = _sse(result.x, x, y)
        if sse < best_sse:
            best_theta, best_sse = result.x, sse
            status = STATUS_NON_CONVERGENCE if result.status == 0 else STATUS_OK

    if status == STATUS_NON_CONVERGENCE:
        logger.warning(f"Logistic fit hit {max_nfev} evaluations; keeping best SSE {best_sse:.6g}")
    return LogisticFit(LogisticParams(*(float(v) for v in best_theta)), best_sse, initial_sse, status)
