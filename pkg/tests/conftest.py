import numpy as np
import pytest

from truncdr.sim import generate_scenario


@pytest.fixture(scope="session")
def scen1_small():
    """Scenario-1 observed data, n=400 (cheap shared fixture)."""
    return generate_scenario("1", 400, seed=11)


@pytest.fixture(scope="session")
def scen1_1000():
    return generate_scenario("1", 1000, seed=7)


@pytest.fixture(scope="session")
def wu_1000():
    return generate_scenario("wu", 1000, seed=19)


def random_step_cdf(rng, n_jumps, lo=0.0, hi=10.0, top=None, floor=0.0):
    """A random step CDF on (lo, hi) rising from `floor` to `top`.

    A positive floor keeps weighting denominators bounded away from zero, so
    oracle comparisons can draw subjects anywhere.
    """
    from truncdr.stepfun import StepFunction

    times = np.sort(rng.uniform(lo, hi, size=n_jumps))
    raw = rng.uniform(0.1, 1.0, size=n_jumps)
    cum = np.cumsum(raw)
    top = rng.uniform(max(0.5, floor + 0.1), 0.999) if top is None else top
    vals = floor + cum / cum[-1] * (top - floor)
    return StepFunction(times, vals, floor)
