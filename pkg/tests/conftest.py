import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lograt.curvature import EvaluationGrid  # noqa: E402
from lograt.pipeline import ModelSettings, analyze, fit_elements  # noqa: E402
from lograt.synth import Anomaly, SyntheticSpec, generate  # noqa: E402

SINGLE_BUMP = SyntheticSpec(
    n=30, elements=6, anomalies=(Anomaly(0, 0.45, 0.03, 2.0),), noise=0.1, seed=0
)


@pytest.fixture(scope="session")
def bump_data():
    return generate(SINGLE_BUMP)


@pytest.fixture(scope="session")
def bump_fits(bump_data):
    dataset, _ = bump_data
    return fit_elements(dataset, ModelSettings())


@pytest.fixture(scope="session")
def bump_result(bump_data, bump_fits):
    dataset, _ = bump_data
    return analyze(dataset, ModelSettings(), EvaluationGrid(), bump_fits)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for name in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[name][1])
