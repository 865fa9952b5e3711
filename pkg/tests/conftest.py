import numpy as np
import pytest

from pmlayers.model import FluxSpec, ModelParams, PotentialSpec


@pytest.fixture(params=["rational", "gaussian"])
def flux(request):
    return FluxSpec(request.param)


def model(eps=0.1, a=-1.0, b=1.0, kind="rational", alpha=1.0, theta=2.0):
    return ModelParams(eps, a, b, FluxSpec(kind, alpha), PotentialSpec(theta))


def sup(v):
    return float(np.max(np.abs(v)))


#: (criterion, passed, detail) lines collected by the acceptance suite
ACCEPTANCE: list[tuple[str, bool, str]] = []


def record(criterion: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE.append((criterion, bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}")
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
