import numpy as np
import pytest
from hypothesis import settings

from dirichletkit.datasets import load_iris
from dirichletkit.model import to_type1

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def iris_type1():
    return {s: to_type1(load_iris(s)) for s in ("setosa", "versicolor", "virginica")}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    store = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number, ok, detail):
        store[number] = (bool(ok), detail)
        print(f"\ncriterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(store):
        ok, detail = store[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
