import numpy as np
import pytest
import scipy.special

from maxrobust.losses import (
    LOSSES,
    log_loss_weights,
    log_risk,
    logsumexp,
    loss_derivative,
)

from conftest import rng


def test_loss_catalogue():
    assert set(LOSSES) == {"exponential", "logistic"}


def test_log_risk_known_values():
    m = np.array([0.0, 0.0])
    # exp loss at margin 0 is 1, mean 1, log 0
    assert log_risk(m, "exponential") == pytest.approx(0.0)
    assert log_risk(m, "logistic") == pytest.approx(np.log(np.log(2.0)))
    assert log_risk(np.array([np.log(2.0)]), "exponential") == pytest.approx(-np.log(2.0))


def test_log_risk_stable_at_large_negative_margin():
    # mean of exp(2000) overflows naive evaluation; the log must come out finite
    m = np.array([-2000.0, -2000.0])
    assert log_risk(m, "exponential") == pytest.approx(2000.0)
    # logistic loss is asymptotically linear, so the mean loss is about 2000
    assert log_risk(m, "logistic") == pytest.approx(np.log(2000.0), rel=1e-6)


def test_log_risk_stable_at_large_positive_margin():
    m = np.array([2000.0, 2000.0])
    assert log_risk(m, "exponential") == pytest.approx(-2000.0)
    # logistic loss decays like exp(-m); log under flow is the negative margin
    assert log_risk(m, "logistic") == pytest.approx(-2000.0, rel=1e-6)


def test_loss_derivative_matches_finite_differences():
    g = rng(0)
    h = 1e-6
    for name in LOSSES:
        for m in g.uniform(-3.0, 3.0, size=25):
            want = (_loss_value(m + h, name) - _loss_value(m - h, name)) / (2 * h)
            assert loss_derivative(np.array([m]), name)[0] == pytest.approx(
                want, rel=1e-6, abs=1e-9
            )


def _loss_value(m, name):
    if name == "exponential":
        return np.exp(-m)
    return np.log1p(np.exp(-m))


def test_log_loss_weights_exponentiate_to_negative_derivative():
    g = rng(1)
    for name in LOSSES:
        m = g.uniform(-5.0, 5.0, size=30)
        lw = log_loss_weights(m, name)
        np.testing.assert_allclose(np.exp(lw), -loss_derivative(m, name), rtol=1e-12)


def test_log_loss_weights_stable_where_derivative_underflows():
    m = np.array([800.0, -800.0])
    for name in LOSSES:
        lw = log_loss_weights(m, name)
        assert np.all(np.isfinite(lw))
        assert lw[0] == pytest.approx(-800.0, rel=1e-6)


def test_logsumexp_agrees_with_scipy():
    g = rng(2)
    for _ in range(20):
        v = g.uniform(-500.0, 500.0, size=g.integers(1, 12))
        assert logsumexp(v) == pytest.approx(scipy.special.logsumexp(v), rel=1e-12)


def test_unknown_loss_rejected():
    with pytest.raises(ValueError):
        log_risk(np.zeros(2), "hinge")
    with pytest.raises(ValueError):
        loss_derivative(np.zeros(2), "hinge")
