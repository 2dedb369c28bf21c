import pytest

from shadownet.activations import expand, make_activation

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def erf_act():
    return make_activation("erf_sigmoid")


@pytest.fixture(scope="session")
def erf_exp(erf_act):
    return expand(erf_act, 20)


@pytest.fixture(scope="session")
def identity_exp():
    return expand(make_activation("identity"), 6)


@pytest.fixture(scope="session")
def relu_exp():
    return expand(make_activation("relu"), 20)


@pytest.fixture(scope="session")
def relu_like_exp():
    return expand(make_activation("relu_like"), 20)


@pytest.fixture
def record_acceptance():
    def record(label: str, ok: bool, detail: str = "") -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f" :: {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
