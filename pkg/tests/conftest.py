import os

from hypothesis import HealthCheck, settings

# Property suites must be replayable: derandomize so every run draws the same examples.
settings.register_profile(
    "deterministic",
    derandomize=True,
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "deterministic"))


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance report lines at the end of the run."""
    import sys

    lines = []
    for name, module in list(sys.modules.items()):
        if name.endswith("test_acceptance") and hasattr(module, "REPORT"):
            lines = module.REPORT
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
