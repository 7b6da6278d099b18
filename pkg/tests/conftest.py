import json
import shutil
from pathlib import Path

import pytest

from constraint_eval.corpus import load_sample_bank, sample_bank_path
from constraint_eval.synthetic import synthesize_script


@pytest.fixture(scope="session")
def bank():
    return load_sample_bank()


@pytest.fixture
def mock_project(tmp_path, bank):
    """A directory holding a bank copy, a synthetic mock script and a config."""
    shutil.copy(sample_bank_path(), tmp_path / "bank.json")
    script = synthesize_script(bank, seed=7)
    (tmp_path / "mock.json").write_text(json.dumps(script), encoding="utf-8")
    (tmp_path / "config.yaml").write_text(
        "schema_version: 1\n"
        "bank: bank.json\n"
        "output_dir: out\n"
        "global_seed: 42\n"
        "max_in_flight: 4\n"
        "models:\n"
        "  - id: mock-1\n"
        "    backend: mock\n"
        "    script: mock.json\n",
        encoding="utf-8",
    )
    return tmp_path


def data_file(name: str) -> dict:
    root = Path(__file__).resolve().parents[1] / "src" / "constraint_eval" / "data"
    return json.loads((root / name).read_text(encoding="utf-8"))


ACCEPTANCE_RESULTS: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        status, title = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {title}")
