import numpy as np
import pytest
from hypothesis import strategies as st

from hesslab.field import GridDomain, GridField
from hesslab.symmfunc import sample_cone


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def disk():
    """n=1 unit ball, 17 points per axis."""
    return GridDomain.ball(1, 17)


@pytest.fixture
def ball2():
    """n=2 unit ball, 9 points per axis."""
    return GridDomain.ball(2, 9)


@pytest.fixture
def square():
    return GridDomain.box(1, 9)


def quadratic(domain: GridDomain, c: float = 1.0) -> GridField:
    return GridField.from_function(domain, lambda x: c * np.sum(x * x, axis=-1))


@pytest.fixture
def isolated_env(monkeypatch, tmp_path):
    """Ledger and outputs under tmp_path, no inherited HESSLAB_ overrides."""
    monkeypatch.setenv("HESSLAB_DB_PATH", str(tmp_path / "ledger.sqlite"))
    monkeypatch.setenv("HESSLAB_OUT_DIR", str(tmp_path / "out"))
    monkeypatch.delenv("HESSLAB_THREADS", raising=False)
    monkeypatch.delenv("HESSLAB_SEED", raising=False)
    return tmp_path


@st.composite
def cone_pairs(draw, max_n=4):
    """(λ, μ, m) with both spectra in Γ_m."""
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, n))
    seed = draw(st.integers(0, 2**32 - 1))
    lam, mu = sample_cone(np.random.default_rng(seed), n, m, 2)
    return lam, mu, m
