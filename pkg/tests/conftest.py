from hypothesis import settings

# fixed-seed property runs keep the suite reproducible
settings.register_profile("repo", derandomize=True, deadline=None, max_examples=50)
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
