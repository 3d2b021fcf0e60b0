import math

import pytest

from pxlab.errors import PxLabError
from pxlab.utils.bracketing import BracketError, ExpansionSchedule, bracket_positive_root, first_crossing


def test_bracket_grows_up_to_root():
    lo, hi = bracket_positive_root(lambda x: 100.0 - x, 1.0)
    assert lo <= 100.0 <= hi
    assert hi / lo == 2.0


def test_bracket_shrinks_down_to_root():
    lo, hi = bracket_positive_root(lambda x: 1e-3 - x, 1.0)
    assert lo <= 1e-3 <= hi


def test_bracket_increasing_function():
    lo, hi = bracket_positive_root(lambda x: math.log(x) - 3.0, 1.0, decreasing=False)
    assert lo <= math.exp(3.0) <= hi


def test_bracket_root_at_guess():
    assert bracket_positive_root(lambda x: 2.0 - x, 2.0) == (2.0, 2.0)


def test_bracket_exhausted():
    with pytest.raises(BracketError):
        bracket_positive_root(lambda x: 1.0, 1.0, schedule=ExpansionSchedule(max_expansions=10))


def test_bracket_error_is_pxlab_error():
    assert issubclass(BracketError, PxLabError)
    assert issubclass(BracketError, ArithmeticError)


@pytest.mark.parametrize("x0", [0.0, -1.0, math.inf])
def test_bracket_rejects_bad_guess(x0):
    with pytest.raises(ValueError):
        bracket_positive_root(lambda x: 1.0 - x, x0)


def test_schedule_rejects_factor_below_one():
    with pytest.raises(ValueError):
        ExpansionSchedule(factor=1.0)


def test_first_crossing_upward():
    lo, hi = first_crossing(lambda x: x > 37.0, 1.0)
    assert lo <= 37.0 < hi


def test_first_crossing_when_start_already_holds():
    lo, hi = first_crossing(lambda x: x > 0.01, 1.0)
    assert lo <= 0.01 < hi
