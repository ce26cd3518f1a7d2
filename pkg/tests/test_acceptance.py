"""Acceptance gate: every criterion at full sample counts and its stated tolerance."""

import pytest

from curvlab.acceptance import CRITERIA, AcceptanceConfig, run_criterion


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA], ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(number, request):
    result = run_criterion(number, AcceptanceConfig())
    line = f"{result.line()} ({result.seconds:.2f}s)"
    print(line)
    request.config._acceptance_lines.append(line)
    assert result.passed, line
