"""The twelve acceptance criteria at their stated tolerances.

Each test prints one PASS/FAIL line; the lines are repeated in the terminal
summary. The checks themselves live in :mod:`thinsteklov.acceptance` so the
``selftest`` command runs exactly the same code.
"""

import pytest

from conftest import ACCEPTANCE_LINES
from thinsteklov import acceptance


@pytest.mark.parametrize("check", acceptance.CHECKS, ids=lambda c: f"criterion_{c.number:02d}")
def test_criterion(check):
    result = check()
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, line
