import json
from pathlib import Path

import jsonschema
import pytest
from hypothesis import settings

from coalwalsh import _accel
from coalwalsh.cli import main

# first calls into numba kernels include JIT compilation
settings.register_profile("default", deadline=None)
settings.load_profile("default")

SCHEMA_DIR = Path(__file__).resolve().parents[1] / "src" / "coalwalsh" / "schemas"

ACCEPTANCE_LINES = []


@pytest.fixture(params=_accel.BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def run_cli(capsys, monkeypatch):
    """Run the CLI in-process; returns (exit_code, stdout, stderr)."""
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")

    def run(*argv):
        code = main([str(a) for a in argv])
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return run


def load_schema(name):
    return json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text())


def validate(name, obj):
    jsonschema.validate(obj, load_schema(name))


@pytest.fixture
def acceptance_record():
    def record(criterion, passed, detail):
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
