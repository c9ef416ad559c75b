"""Classification surrogate losses and their log-domain evaluations.

Both supported losses are functions of the per-point margin m = y * f(x):
exponential zeta(m) = exp(-m) (default) and logistic
zeta(m) = log(1 + exp(-m)). On separable data the empirical risk decays to
zero exponentially fast, so risks and gradient magnitudes are tracked in
the log domain.
"""

from __future__ import annotations

import numpy as np

LOSSES = ("exponential", "logistic")


def check_loss(loss: str) -> str:
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}; expected one of {LOSSES}")
    return loss


def logsumexp(a: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    shift = np.max(a)
    if not np.isfinite(shift):
        return float(shift)
    return float(shift + np.log(np.sum(np.exp(a - shift))))


def loss_value(margins: np.ndarray, loss: str = "exponential") -> np.ndarray:
    """Per-point loss values zeta(m_i)."""
    check_loss(loss)
    m = np.asarray(margins, dtype=np.float64)
    if loss == "exponential":
        return np.exp(-m)
    return np.logaddexp(0.0, -m)


def loss_derivative(margins: np.ndarray, loss: str = "exponential") -> np.ndarray:
    """Per-point derivatives zeta'(m_i); strictly negative for both losses."""
    check_loss(loss)
    m = np.asarray(margins, dtype=np.float64)
    if loss == "exponential":
        return -np.exp(-m)
    # -sigmoid(-m), evaluated without overflow on either tail
    out = np.empty_like(m)
    pos = m >= 0
    out[pos] = -np.exp(-m[pos]) / (1.0 + np.exp(-m[pos]))
    out[~pos] = -1.0 / (1.0 + np.exp(m[~pos]))
    return out


def log_loss_weights(margins: np.ndarray, loss: str = "exponential") -> np.ndarray:
    """log(-zeta'(m_i)), the log of the positive per-point gradient weights."""
    check_loss(loss)
    m = np.asarray(margins, dtype=np.float64)
    if loss == "exponential":
        return -m
    return -np.logaddexp(0.0, m)


def _log_softplus(t: np.ndarray) -> np.ndarray:
    """log(log(1 + exp(t))) elementwise, stable on both tails."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    lo = t < -30.0
    hi = t > 30.0
    mid = ~(lo | hi)
    out[lo] = t[lo]  # log1p(e^t) ~ e^t
    out[hi] = np.log(t[hi])  # log1p(e^t) ~ t
    out[mid] = np.log(np.log1p(np.exp(t[mid])))
    return out


def log_risk(margins: np.ndarray, loss: str = "exponential") -> float:
    """log of the mean loss over the sample, computed in the log domain."""
    check_loss(loss)
    m = np.asarray(margins, dtype=np.float64)
    if loss == "exponential":
        return logsumexp(-m) - np.log(m.size)
    return logsumexp(_log_softplus(-m)) - np.log(m.size)
