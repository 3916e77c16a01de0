import numpy as np
import pytest

from dgvf.sim import TrajectoryLog


def make_log(t, x, omega, r=0.4, R=0.6, alive=None, omega_hat=None):
    """Minimal TrajectoryLog from position and coordinate arrays (T, N, n) / (T, N)."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    omega = np.asarray(omega, dtype=float)
    T, N = omega.shape
    alive = np.ones((T, N), dtype=bool) if alive is None else np.asarray(alive, dtype=bool)
    zeros = np.zeros((T, N))
    return TrajectoryLog(
        t=t, x=x, omega=omega,
        omega_hat=omega if omega_hat is None else omega_hat,
        phi=np.zeros_like(x), u=np.zeros_like(x), u_omega=zeros, eta=zeros,
        alive=alive, neighbor_count=np.zeros((T, N), dtype=int),
        omega_star=np.zeros(T), V=np.zeros(T), Omega=np.zeros(T),
        min_gap=np.zeros(T), min_distance=np.zeros(T),
        meta={"r": r, "R": R},
    )


@pytest.fixture
def log_factory():
    return make_log


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for an acceptance criterion."""
    table = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        table[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = config.stash.get(ACCEPTANCE, {})
    if table:
        terminalreporter.section("acceptance criteria")
        for number in sorted(table):
            terminalreporter.write_line(table[number])
