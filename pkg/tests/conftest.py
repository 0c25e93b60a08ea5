import pytest

from casimir_films import ConstantDielectric, Drude, DrudeParams

AU_PARAMS = DrudeParams(omega_p=9.0, omega_tau=0.035, v_F=0.00467)

# acceptance verdicts, filled by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def au():
    return Drude(AU_PARAMS)


@pytest.fixture(scope="session")
def au_local():
    return Drude(DrudeParams(9.0, 0.035, 0.0))


@pytest.fixture(scope="session")
def sio2():
    return ConstantDielectric(4.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
