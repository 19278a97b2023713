"""Full-size acceptance criteria, one test each.

Every test prints its pass/fail line and the measured values; the lines are
collected again in the terminal summary under "acceptance criteria".
"""

import pytest

from conftest import ACCEPTANCE_LINES
from stochvortex.acceptance import CRITERIA, run_criterion


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(number):
    res = run_criterion(number)
    report = [res.line()] + ["    " + d for d in res.details]
    ACCEPTANCE_LINES.append(res.line())
    print("\n".join(report))
    assert res.passed, "\n".join(report)
