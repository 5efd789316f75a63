import os
import sys
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from vfalg import make_model, parse_sfn

settings.register_profile(
    "vfalg", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.register_profile("thorough", deadline=None, max_examples=400)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "vfalg"))


def make_free(text="(x1-x2)^-2"):
    return make_model(propagator=[[parse_sfn(text, {1, 2})]])


@pytest.fixture(scope="session")
def a1():
    return make_model([[2]])


@pytest.fixture(scope="session")
def qa1():
    return make_model([[2]], mode="quantum")


@pytest.fixture(scope="session")
def free():
    return make_free()


def evaluate(f, point, q):
    """Value of a SingularFn at rational ``x_i = point[i]`` and ``q``, by direct
    substitution into its stored numerator and denominator factors."""
    q = Fraction(q)

    def scalar_at(c):
        num, den = c.as_polys()
        n = sum((a * q ** e for e, a in enumerate(num)), Fraction(0))
        d = sum((a * q ** e for e, a in enumerate(den)), Fraction(0))
        return n / d

    total = Fraction(0)
    for mono, c in f.num.items():
        t = scalar_at(c)
        for v, e in mono:
            t *= Fraction(point[v]) ** e
        total += t
    for key, m in f.den:
        total /= (Fraction(point[key.i]) - q ** key.n * Fraction(point[key.j])) ** m
    return total


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
