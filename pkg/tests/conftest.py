import pytest

from hdspeaker import synth

_criteria: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria.append((marker.args[0], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _criteria:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Three speakers, three contexts of five 1-second utterances."""
    root = tmp_path_factory.mktemp("small_corpus")
    synth.write_corpus(root, n_speakers=3, n_contexts=3, n_utterances=5, seconds=1.0, seed=7)
    return root
