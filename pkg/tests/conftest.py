import numpy as np
import pytest

from spinsteady.liouville import build_embedding, partial_trace_aux
from spinsteady.models import PRESET_IDS, preset
from spinsteady.steady import steady_state


def random_hermitian(dim, rng):
    X = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (X + X.conj().T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def solved_presets():
    """Default-parameter preset, its embedding generator and steady state, keyed by id."""
    out = {}
    for pid in PRESET_IDS:
        pm = preset(pid)
        L = build_embedding(pm.model)
        out[pid] = (pm, L, steady_state(L))
    return out


def spin_state(entry):
    """Reduced spin steady state of a ``solved_presets`` entry."""
    pm, _, rep = entry
    return partial_trace_aux(rep.rho_ss, pm.model)
