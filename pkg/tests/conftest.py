import random

import pytest
from hypothesis import settings

from lcsketch import bundle_generate, derive_params
from lcsketch.acceptance import stress_params

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def desk():
    """Small desk parameters: strings up to 256 symbols, k = 4."""
    return derive_params(256, 4)


@pytest.fixture(scope="session")
def desk_bundle(desk):
    return bundle_generate(desk, 11)


@pytest.fixture(scope="session")
def stress():
    """Parameters under which a few hundred symbols split into many grammars."""
    return stress_params(1024, 3, T=48)


@pytest.fixture(scope="session")
def stress_bundle(stress):
    return bundle_generate(stress, 5)


@pytest.fixture
def rng():
    return random.Random(1234)


def random_string(rng, length, sigma=None):
    sigma = sigma or rng.choice((2, 4, 26, 256))
    return [rng.randrange(sigma) for _ in range(length)]


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for r in RESULTS:
            terminalreporter.write_line(r.line())
