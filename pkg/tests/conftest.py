import numpy as np
import pytest

from tflotfs.pulses import effective_pulse, srrc_prototype, tfl_prototype

M_SEC5, N_SEC5, DF = 32, 16, 15e3
TS = 1.0 / (M_SEC5 * DF)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@pytest.fixture(scope="session")
def rc_proto():
    return srrc_prototype(0.22)


@pytest.fixture(scope="session")
def tfl_proto():
    return tfl_prototype()


@pytest.fixture(scope="session")
def g_rc(rc_proto):
    return effective_pulse(rc_proto)


@pytest.fixture(scope="session")
def g_tfl(tfl_proto):
    return effective_pulse(tfl_proto)


@pytest.fixture(scope="session")
def sec5_pulses():
    """RC beta=0.22 and TFL prototypes at the physical symbol period."""
    return {"rc": srrc_prototype(0.22, Ts=TS), "tfl": tfl_prototype(Ts=TS)}


# acceptance bookkeeping: criterion number -> [(ok, detail), ...]
ACCEPTANCE: dict[int, list] = {}


def record_criterion(number: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(number, []).append((bool(ok), detail))
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}  " + "; ".join(d for _, d in parts))
