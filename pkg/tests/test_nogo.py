import numpy as np
import pytest

from spinsteady.groups import generate_group
from spinsteady.nogo import (
    FAMILIES, NogoInstance, check_instance, random_d2_hamiltonian, random_instance, verify_nogo,
)
from spinsteady.spin import SpinSystem, collective_spin_ops, ladder_ops


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("n", [2, 3, 5])
def test_every_family_relaxes_to_mms(family, n):
    rng = np.random.default_rng(n)
    res = check_instance(random_instance(SpinSystem(n), family, rng))
    assert res.passed, res
    assert res.commutator_sum < 1e-10


def test_independence_flag():
    rng = np.random.default_rng(0)
    sys = SpinSystem(3)
    assert not random_instance(sys, "K1_hermitian", rng).independent
    for fam in ("K2_hermitian", "K2_pair", "K3_hermitian", "K3_mixed"):
        assert random_instance(sys, fam, rng).independent


def test_random_hamiltonian_is_d2_invariant(rng):
    sys = SpinSystem(4)
    H = random_d2_hamiltonian(sys, rng)
    assert np.allclose(H, H.conj().T)
    for el in generate_group(sys, "D2"):
        assert np.allclose(el.act(H), H, atol=1e-12)


def test_symmetry_breaking_jump_is_flagged():
    sys = SpinSystem(3)
    _, sm = ladder_ops(sys)
    inst = NogoInstance(3, "lowering", 0, (sm,), np.zeros((4, 4)), False)
    res = check_instance(inst)
    assert not res.passed
    assert res.hs_dist_mms > 0.5


def test_single_hermitian_jump_may_be_degenerate():
    sys = SpinSystem(3)
    sz = collective_spin_ops(sys)[2]
    res = check_instance(NogoInstance(3, "K1_hermitian", 0, (sz,), np.zeros((4, 4)), False))
    # Sz alone conserves populations; the MMS is stationary but not unique
    assert res.passed and res.nullity == 4


def test_unknown_family():
    with pytest.raises(ValueError):
        random_instance(SpinSystem(2), "K4", np.random.default_rng(0))


def test_verify_nogo_is_seeded():
    a = verify_nogo([2, 3], n_instances=3, seed=7)
    b = verify_nogo([2, 3], n_instances=3, seed=7)
    assert len(a) == 2 * len(FAMILIES) * 3
    assert all(r.passed for r in a)
    assert [r.hs_dist_mms for r in a] == [r.hs_dist_mms for r in b]
    assert a[0].instance.describe() == "N=2 family=K1_hermitian instance=0"
