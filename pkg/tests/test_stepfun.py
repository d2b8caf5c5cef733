import numpy as np
import pytest
from hypothesis import given, strategies as st

from truncdr.stepfun import StepFunction, constant


def test_right_continuous_evaluation():
    f = StepFunction([1.0, 2.0, 3.0], [0.5, 0.7, 1.0], 0.0)
    assert f(0.5) == 0.0
    assert f(1.0) == 0.5          # value at the jump is the post-jump value
    assert f(1.999) == 0.5
    assert f(2.0) == 0.7
    assert f(100.0) == 1.0
    np.testing.assert_allclose(f([0.0, 1.0, 2.5]), [0.0, 0.5, 0.7])


def test_left_limit():
    f = StepFunction([1.0, 2.0], [0.5, 1.0], 0.0)
    assert f.left_limit(1.0) == 0.0
    assert f.left_limit(1.5) == 0.5
    assert f.left_limit(2.0) == 0.5
    assert f.left_limit(2.5) == 1.0


def test_jumps():
    f = StepFunction([1.0, 2.0], [0.4, 1.0], 0.0)
    np.testing.assert_allclose(f.jumps(), [0.4, 0.6])


def test_constant():
    c = constant(1.0)
    assert c(0.0) == 1.0 and c(1e9) == 1.0 and c.n_jumps == 0


def test_rejects_non_increasing_times():
    with pytest.raises(ValueError):
        StepFunction([1.0, 1.0], [0.1, 0.2], 0.0)


@given(st.lists(st.floats(0.1, 100.0), min_size=1, max_size=20, unique=True),
       st.floats(-50.0, 150.0))
def test_matches_bruteforce_lookup(times, t):
    times = sorted(times)
    values = np.linspace(0.1, 1.0, len(times))
    f = StepFunction(times, values, 0.0)
    expect = 0.0
    for tt, v in zip(times, values):
        if tt <= t:
            expect = v
    assert f(t) == expect
