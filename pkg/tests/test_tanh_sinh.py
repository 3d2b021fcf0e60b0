import math

import numpy as np
import pytest

from pxlab.utils.tanh_sinh import TanhSinh, integrate_unit


def test_polynomial():
    value, _ = integrate_unit(lambda x, c: x ** 3)
    assert value == pytest.approx(0.25, rel=1e-13)


def test_endpoint_singularity():
    # integral of 1/sqrt(x (1-x)) over [0, 1] is pi
    value, _ = integrate_unit(lambda x, c: 1.0 / np.sqrt(x * c))
    assert value == pytest.approx(math.pi, rel=1e-10)


def test_log_singularity():
    value, _ = integrate_unit(lambda x, c: np.log(x))
    assert value == pytest.approx(-1.0, rel=1e-10)


def test_complement_is_exact_near_one():
    rule = TanhSinh()
    x, c, w = rule.nodes(3)
    assert np.all(c > 0.0)
    assert np.allclose(x + c, 1.0, rtol=0.0, atol=1e-15)
    assert np.all(w > 0.0)


def test_levels_are_cached_and_nested():
    rule = TanhSinh()
    first = rule.nodes(2)
    assert rule.nodes(2) is first
    rule.clear()
    assert rule.nodes(2) is not first
    # level > 0 only adds the odd multiples of the step
    coarse = set(zip(*rule.nodes(0)[:2]))
    assert coarse.isdisjoint(set(zip(*rule.nodes(1)[:2])))
