import math

import pytest

from rgrsim import LOG_SLOW, WidthFunction, scaling_regime


def test_subcritical_regime():
    regime = scaling_regime(0.25)
    assert regime.alpha == 0.5
    assert regime.width_fn is WidthFunction.SQRT_T
    assert regime.transient_exponent == 0.5
    assert regime.width(400.0) == pytest.approx(20.0)


def test_supercritical_regime():
    regime = scaling_regime(0.75)
    assert regime.alpha == 0.75
    assert regime.width_fn is WidthFunction.T_POW_R
    assert regime.transient_exponent == pytest.approx(0.5)
    assert regime.width(10_000.0) == pytest.approx(1000.0)


def test_critical_regime_is_exact_match_only():
    regime = scaling_regime(0.5)
    assert regime.width_fn is WidthFunction.SQRT_T_LOG_T
    assert regime.transient_exponent == LOG_SLOW
    assert regime.width(math.e) == pytest.approx(math.sqrt(math.e))
    assert scaling_regime(0.4999999).width_fn is WidthFunction.SQRT_T
    assert scaling_regime(0.5000001).width_fn is WidthFunction.T_POW_R


def test_log_width_needs_t_above_one():
    with pytest.raises(ValueError):
        scaling_regime(0.5).width(1.0)


def test_r_validation():
    with pytest.raises(ValueError):
        scaling_regime(-0.1)
    with pytest.raises(ValueError):
        scaling_regime(1.1)
