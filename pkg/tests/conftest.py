import json
from pathlib import Path

import pytest

from edukg.embedding import HashEmbedder
from edukg.kb import KBStore, preprocess_dump

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def embedder() -> HashEmbedder:
    return HashEmbedder()


@pytest.fixture(scope="session")
def dump_xml() -> bytes:
    return (FIXTURES / "dump.xml").read_bytes()


@pytest.fixture(scope="session")
def dump_expected() -> dict:
    return json.loads((FIXTURES / "dump_expected.json").read_text())


@pytest.fixture(scope="session")
def kb(tmp_path_factory, dump_xml, embedder) -> KBStore:
    path = tmp_path_factory.mktemp("kb") / "store"
    preprocess_dump(dump_xml, embedder, path)
    return KBStore.load(path)


@pytest.fixture(scope="session")
def slides_doc() -> dict:
    return json.loads((FIXTURES / "slides_layout.json").read_text())


@pytest.fixture(scope="session")
def bullets_doc() -> dict:
    return json.loads((FIXTURES / "bullets.json").read_text())


# One verdict line per end-to-end acceptance criterion, filled in by
# tests/test_acceptance.py and echoed after the run so the PASS/FAIL lines
# are visible even under output capture.
ACCEPTANCE_REPORT: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_REPORT:
            terminalreporter.write_line(line)
