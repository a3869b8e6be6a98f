import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cvnet.channels import thermal_tmsv, tmsv
from cvnet.entanglement import (
    duan_lhs,
    duan_test,
    entanglement_report,
    epr_aleph,
    epr_variances,
    log_negativity,
    pt_min_symplectic_eigenvalue,
)
from cvnet.errors import NotBonaFide
from cvnet.random_states import random_cm
from cvnet.serialize import dumps
from cvnet.symplectic import local_symplectic, partial_transpose, williamson_eigenvalues

from conftest import random_two_mode


def test_pt_eigenvalue_examples():
    assert pt_min_symplectic_eigenvalue(tmsv(0).cm) == pytest.approx(0.5, abs=1e-12)
    assert pt_min_symplectic_eigenvalue(tmsv(0.5).cm) == pytest.approx(np.exp(-1) / 2, abs=1e-12)
    assert pt_min_symplectic_eigenvalue(tmsv(0.5).cm) == pytest.approx(0.18394, abs=1e-5)
    assert pt_min_symplectic_eigenvalue(np.eye(4)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("r", np.linspace(0, 3, 20))
def test_pt_eigenvalue_tmsv_curve(r):
    assert pt_min_symplectic_eigenvalue(tmsv(r).cm) == pytest.approx(np.exp(-2 * r) / 2, abs=1e-10)


def test_pt_eigenvalue_matches_general_solver(rng):
    for _ in range(500):
        v = random_two_mode(rng)
        ref = williamson_eigenvalues(partial_transpose(v, [1]))[0]
        assert pt_min_symplectic_eigenvalue(v) == pytest.approx(ref, abs=1e-10)


def _rot(t):
    return np.array([[np.cos(t), np.sin(t)], [-np.sin(t), np.cos(t)]])


def test_pt_eigenvalue_local_rotation_invariant(rng):
    v = random_two_mode(rng)
    nu = pt_min_symplectic_eigenvalue(v)
    for _ in range(10):
        s = local_symplectic([_rot(rng.uniform(0, 6)), _rot(rng.uniform(0, 6))])
        assert pt_min_symplectic_eigenvalue(s @ v @ s.T) == pytest.approx(nu, abs=1e-10)


def test_invalid_cm_rejected_before_verdict():
    with pytest.raises(NotBonaFide):
        entanglement_report(np.eye(4) / 4)


def test_log_negativity_examples():
    assert log_negativity(tmsv(0.5).cm) == pytest.approx(1.0, abs=1e-12)
    assert log_negativity(tmsv(1.0).cm) == pytest.approx(2.0, abs=1e-12)
    assert log_negativity(np.eye(4) / 2) == 0.0


def test_duan_examples():
    for r in (0.1, 0.5, 1.0):
        v = tmsv(r).cm.entries
        assert duan_lhs(v, -1.0) == pytest.approx(2 * np.exp(-2 * r), rel=1e-12)
        w = duan_test(v)
        assert w is not None and w.lhs < w.rhs
    assert duan_test(np.eye(4) / 2) is None
    assert duan_test(np.eye(4) * 1.5) is None


def test_duan_implies_ppt_violation(rng):
    found = 0
    for _ in range(1000):
        v = random_two_mode(rng)
        w = duan_test(v)
        if w is not None:
            found += 1
            assert pt_min_symplectic_eigenvalue(v) < 0.5
            assert w.lhs < w.rhs
            assert 1e-3 - 1e-12 <= abs(w.q) <= 1e3 + 1e-9
    assert found > 0


def test_epr_measures():
    for r in (0.0, 0.4, 1.2):
        v = tmsv(r).cm.entries
        assert epr_aleph(v) == pytest.approx(np.exp(-2 * r), rel=1e-12)
        assert epr_variances(v) == pytest.approx((np.exp(-2 * r),) * 2, rel=1e-12)
    assert epr_aleph(np.eye(4) / 2) == pytest.approx(1.0)
    # c' != -c: asymmetric EPR variances
    v = np.diag([1.0, 1.0, 1.0, 1.0])
    v[0, 2] = v[2, 0] = 0.5
    v[1, 3] = v[3, 1] = 0.2
    assert epr_aleph(v) is None


def test_aleph_below_one_implies_entangled(rng):
    # the V^I(a, b, c, -c) class
    for _ in range(300):
        a, b = rng.uniform(0.5, 3, size=2)
        c = rng.uniform(0, np.sqrt((a - 0.5) * (b - 0.5)) + 1e-12) * 0.999
        v = np.array([[a, 0, c, 0], [0, a, 0, -c], [c, 0, b, 0], [0, -c, 0, b]])
        al = epr_aleph(v)
        if al is not None and al < 1:
            assert pt_min_symplectic_eigenvalue(v) < 0.5


@given(st.integers(0, 2**32 - 1))
def test_report_consistency(seed):
    v = random_cm(2, np.random.default_rng(seed), scale=0.7)
    rep = entanglement_report(v)
    assert rep.log_negativity == pytest.approx(max(0.0, -np.log(2 * rep.nu_tilde_minus)), abs=1e-12)
    assert rep.ppt_separable == (rep.nu_tilde_minus >= 0.5 - 1e-9)
    if rep.duan_witness is not None:
        assert not rep.ppt_separable


def test_report_json_has_all_fields():
    data = json.loads(dumps(entanglement_report(thermal_tmsv(0.5, 0.6, 0.7).cm)))
    assert set(data) == {"nu_tilde_minus", "log_negativity", "ppt_separable", "duan_witness", "aleph"}
