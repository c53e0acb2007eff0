import sys


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance criteria verdicts after the run, capture or not."""
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance"):
            verdicts = getattr(mod, "VERDICTS", None)
            if verdicts:
                terminalreporter.section("acceptance criteria")
                for line in verdicts:
                    terminalreporter.write_line(line)
            break
