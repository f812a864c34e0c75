import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from locsim import gamesim, presets  # noqa: E402


@pytest.fixture(scope="session")
def archives():
    """Simulated reference runs, built once per session and keyed by (game, encoding)."""
    cache = {}

    def get(game, encoding, **kw):
        key = (game, encoding, tuple(sorted(kw.items())))
        if key not in cache:
            cache[key] = gamesim.simulate(getattr(presets, game)(encoding, **kw))
        return cache[key]

    return get


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(VERDICTS):
        terminalreporter.write_line(VERDICTS[number])
