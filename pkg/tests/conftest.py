import numpy as np
import pytest
from hypothesis import settings

from hdmdc import synth

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def linear_oracle_record(n=6, l=2, m=500, seed=0, radius=0.9, t_hat=32.0):
    """Record of a random stable system driven by Gaussian inputs."""
    rng = np.random.default_rng(seed)
    sys_ = synth.random_stable_system(n, l, rng, radius=radius)
    x0 = rng.standard_normal(n)
    u = rng.standard_normal((l, m))
    return sys_, synth.linear_record(sys_, x0, u, t_hat=t_hat)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, title, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {title} ({detail})")
