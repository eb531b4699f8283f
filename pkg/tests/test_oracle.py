import math

import pytest

from nehari_lab import InvalidExponent, PExactEigen, exact_lambda1, pi_r, shoot_lambda1


def test_linear_case():
    assert pi_r(2.0) == pytest.approx(math.pi)
    assert exact_lambda1(2.0) == pytest.approx(math.pi ** 2)
    assert exact_lambda1(2.0, 2.0) == pytest.approx(math.pi ** 2 / 4)


@pytest.mark.parametrize("r", [1.5, 3.0, 5.0])
def test_shooting_agrees_with_closed_form(r):
    assert shoot_lambda1(r) == pytest.approx(exact_lambda1(r), rel=1e-5)


def test_scaling_with_length():
    r = 3.0
    assert exact_lambda1(r, 0.5) == pytest.approx(exact_lambda1(r) * 2 ** r)


def test_record_and_errors():
    e = PExactEigen.of(3.0)
    assert e.lambda1 == exact_lambda1(3.0) and e.pi_r == pi_r(3.0)
    with pytest.raises(InvalidExponent):
        pi_r(1.0)
    with pytest.raises(ValueError):
        exact_lambda1(2.0, 0.0)
