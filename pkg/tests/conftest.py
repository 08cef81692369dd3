from fractions import Fraction

import pytest

from rifsdim.config import load_config, rifs_from_dict
from rifsdim.finite_type import enumerate_graph


def two_map(ratio: str, probs=("1/2", "1/2"), field=None):
    """{r x, r x + 1 - r} as a one-system config dict."""
    r = Fraction(ratio)
    d = {"systems": [{"maps": [{"ratio": ratio, "translation": "0"},
                               {"ratio": ratio, "translation": str(1 - r)}],
                      "probs": list(probs)}]}
    if field:
        d["field"] = field
    return d


@pytest.fixture(scope="session")
def sec61():
    return load_config("sec61.json")[0]


@pytest.fixture(scope="session")
def sec61_graph(sec61):
    return enumerate_graph(sec61)


@pytest.fixture(scope="session")
def sec63():
    return load_config("sec63.json")[0]


@pytest.fixture(scope="session")
def sec63_graph(sec63):
    return enumerate_graph(sec63)


@pytest.fixture(scope="session")
def golden():
    return load_config("golden_bernoulli.json")[0]


@pytest.fixture(scope="session")
def golden_graph(golden):
    return enumerate_graph(golden)


@pytest.fixture(scope="session")
def random_cantor():
    return load_config("random_cantor.json")[0]


@pytest.fixture(scope="session")
def dyadic():
    return rifs_from_dict(two_map("1/2"))


@pytest.fixture(scope="session")
def dyadic_graph(dyadic):
    return enumerate_graph(dyadic)


# acceptance criteria report: one line per criterion in the terminal summary
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n}. {title}: {detail}")
