import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import synth  # noqa: E402

from botcal.forest import ForestParams  # noqa: E402
from botcal.pipeline import train_bundle  # noqa: E402


@pytest.fixture(scope="session")
def small_corpus():
    corpus, _, _ = synth(5, 0.5, 150, 150)
    return corpus


@pytest.fixture(scope="session")
def small_bundle(small_corpus):
    bundle, _ = train_bundle(small_corpus, params=ForestParams(n_trees=25, seed=5), k=3)
    return bundle


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
