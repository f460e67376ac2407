import pytest

from rmcipher import general_key, right_form_key, symmetric_key


def pytest_runtest_logreport(report):
    # One visible PASS/FAIL line per acceptance criterion.
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        print(f"[ACCEPTANCE] {name}: {outcome}", flush=True)

ALGORITHM = b"ALGORITHM"
EXTRATERRESTRIAL = b"EXTRATERRESTRIAL"

# The worked ciphertext for ALGORITHM under the order-3 key below at n = 15.
C_ALGORITHM_15 = [[60861, 41528, 28337],
                  [68585, 46798, 31933],
                  [68601, 46809, 31940]]

M15_2FIB = [[406, 277, 189], [277, 189, 129], [189, 129, 88]]
M15_2FIB_INV = [[9, -5, -12], [-5, -7, 21], [-12, 21, -5]]
M5_TETRA = [[108, 56, 29, 15], [56, 29, 15, 8], [29, 15, 8, 4], [15, 8, 4, 2]]


@pytest.fixture
def fib_key():
    return symmetric_key((1, 1), (1, 0), 4)


@pytest.fixture
def two_fib_key():
    """X[n+3] = X[n+2] + X[n], standard seed."""
    return symmetric_key((1, 0, 1), (1, 0, 0), 15)


@pytest.fixture
def tribonacci_key():
    return symmetric_key((1, 1, 1), (1, 0, 0), 12)


@pytest.fixture
def tetranacci_key():
    return symmetric_key((1, 1, 1, 1), (1, 0, 0, 0), 5)


@pytest.fixture
def wielandt3_key():
    """X[n+3] = X[n+1] + X[n], standard seed."""
    return symmetric_key((1, 1, 0), (1, 0, 0), 12)


@pytest.fixture
def wielandt4_key():
    return symmetric_key((1, 1, 0, 0), (1, 0, 0, 0), 12)


@pytest.fixture
def general_1234_key():
    return general_key([[1, 2], [3, 4]], (1, 0), 9)


@pytest.fixture
def right_form_504_key():
    """Recurrence X[n+3] = 5 X[n+2] - 4 X[n] acting on the right."""
    return right_form_key((-4, 0, 5), [[8, 2, 1], [4, 0, 0], [8, 2, 0]], 5)
