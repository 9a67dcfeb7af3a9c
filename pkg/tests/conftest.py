import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from massera.expr import BinOp, Call, Const, FUNCTIONS, Neg, Num, Var

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

numbers = st.floats(min_value=0.0, max_value=1e20, allow_nan=False, allow_infinity=False).map(abs)
leaves = st.one_of(
    numbers.map(Num),
    st.sampled_from(["pi", "e"]).map(Const),
    st.sampled_from(["t", "x"]).map(Var),
)


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda a: BinOp(*a)),
        st.tuples(st.sampled_from(sorted(FUNCTIONS)), children).map(lambda a: Call(*a)),
    )


expr_trees = st.recursive(leaves, _extend, max_leaves=25)


def trig_poly(rng: np.random.Generator, n_terms: int, period: float) -> str:
    """Random trigonometric polynomial in t with the given period."""
    w = 2 * math.pi / period
    parts = [f"{rng.uniform(-1, 1):.6f}"]
    for k in range(1, n_terms + 1):
        parts.append(f"{rng.uniform(-1, 1):.6f}*cos({k * w!r}*t)")
        parts.append(f"{rng.uniform(-1, 1):.6f}*sin({k * w!r}*t)")
    return "+".join(parts)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[number])
