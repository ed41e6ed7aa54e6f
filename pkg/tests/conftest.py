import pytest

from rgrsim import ModelParams, evolve_expected


@pytest.fixture(scope="session")
def occ_a100_r025_t1e6():
    """Expected occupancies at A=100, r=0.25, t=1e6 (shared: ~4 s to build)."""
    params = ModelParams(agents=100, r=0.25, seed=0)
    return evolve_expected(params, 1_000_000)[0]
