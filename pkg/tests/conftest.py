import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=200,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
# derandomize=False lets --hypothesis-seed=N pick the examples
settings.register_profile("seeded", settings.get_profile("default"), derandomize=False)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def criterion(request):
    """Run a numbered acceptance check and record PASS or FAIL for the summary."""
    results = request.config.stash[ACCEPTANCE]

    def run(number, title, body):
        try:
            body()
        except BaseException:
            results[number] = ("FAIL", title)
            raise
        results[number] = ("PASS", title)
        print(f"criterion {number}: PASS {title}")

    return run


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[ACCEPTANCE]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        status, title = results[number]
        terminalreporter.write_line(f"criterion {number}: {status} {title}")
