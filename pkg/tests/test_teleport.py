import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from cvnet.channels import input_state, thermal_tmsv, tmsv
from cvnet.entanglement import pt_min_symplectic_eigenvalue
from cvnet.errors import InvalidInput
from cvnet.random_states import random_cm
from cvnet.symplectic import CovarianceMatrix, GaussianState, TwoModeBlocks
from cvnet.teleport import (
    Method,
    coherent_fidelity_of_r,
    coherent_fidelity_standard_form,
    fidelity,
    gamma_from_epr_variances,
    gamma_matrix,
    local_squeeze_optimize,
    optimal_delta,
    shift_vector,
    squeezing_for_fidelity,
)

from conftest import VAC, random_two_mode


def test_gamma_examples():
    assert np.allclose(gamma_matrix(VAC, np.eye(4) / 2), 2 * np.eye(2))
    for r in (0.2, 1.0):
        assert np.allclose(gamma_matrix(VAC, TwoModeBlocks.from_cm(tmsv(r).cm.entries)),
                           (1 + np.exp(-2 * r)) * np.eye(2), atol=1e-14)


def test_gamma_epr_form(rng):
    for _ in range(200):
        v = random_two_mode(rng)
        vin = input_state("squeezed", xi=rng.uniform(0.2, 5), phi=rng.uniform(0, np.pi)).cm.entries
        assert np.allclose(gamma_matrix(vin, v), gamma_from_epr_variances(vin, v), atol=1e-12)
        assert np.linalg.det(gamma_matrix(vin, v)) >= 1 - 1e-9


def test_optimal_delta_examples():
    assert np.array_equal(optimal_delta(np.zeros(4)), [0, 0])
    # amplitude d1 = 1 is quadrature mean sqrt(2)
    d = np.sqrt(2) * np.array([1.0, 0, 0, 0])
    assert np.allclose(optimal_delta(d), [1, 0])
    assert np.allclose(shift_vector(d, optimal_delta(d)), 0)


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_optimal_delta_zeroes_h(d):
    assert np.allclose(shift_vector(d, optimal_delta(d)), 0, atol=1e-12)


@pytest.mark.parametrize("r", [0, 0.25, 0.5, 1, 2])
def test_tmsv_fidelity(r):
    rep = fidelity(VAC, tmsv(r))
    assert rep.fidelity == pytest.approx(np.exp(2 * r) / (1 + np.exp(2 * r)), abs=1e-12)
    assert rep.method is Method.CLOSED_FORM


def test_fidelity_values():
    assert fidelity(VAC, tmsv(0)).fidelity == 0.5
    assert fidelity(VAC, tmsv(0.5)).fidelity == pytest.approx(np.e / (1 + np.e), abs=1e-15)
    assert fidelity(VAC, tmsv(0.5)).fidelity == pytest.approx(0.73106, abs=1e-5)
    assert fidelity(VAC, tmsv(10)).fidelity > 1 - 1e-8


def test_shifted_channel_with_zero_delta():
    # quadrature mean (sqrt2, sqrt2, 0, 0) is amplitude (1, 1, 0, 0), so h = (1, -1)
    d = np.sqrt(2) * np.array([1.0, 1.0, 0, 0])
    ch = GaussianState(d, tmsv(0.5).cm)
    f = fidelity(VAC, ch, delta=(0, 0)).fidelity
    expected = np.e / (1 + np.e) * np.exp(-2 / (1 + np.exp(-1)))
    assert f == pytest.approx(expected, rel=1e-12)
    assert f == pytest.approx(0.169419, abs=1e-6)


def test_fidelity_displacement_invariant(rng):
    for _ in range(50):
        v = random_two_mode(rng)
        base = fidelity(VAC, v).fidelity
        ch = GaussianState(rng.uniform(-3, 3, 4), CovarianceMatrix(v))
        assert fidelity(VAC, ch).fidelity == pytest.approx(base, abs=1e-12)
        assert fidelity(VAC, ch, optimal_delta(ch.displacement)).fidelity == pytest.approx(base, abs=1e-12)


def test_delta_argmax(rng):
    for _ in range(10):
        ch = GaussianState(rng.uniform(-2, 2, 4), CovarianceMatrix(random_two_mode(rng)))
        vin = input_state("squeezed", xi=rng.uniform(0.3, 3), phi=rng.uniform(0, np.pi)).cm.entries
        grid = np.linspace(-4, 4, 41)
        vals = [(fidelity(vin, ch, (a, b)).fidelity, a, b) for a in grid for b in grid]
        _, a, b = max(vals)
        res = minimize(lambda t: -fidelity(vin, ch, t).fidelity, [a, b], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-15})
        assert np.allclose(res.x, optimal_delta(ch.displacement), atol=1e-6)


def test_fidelity_bounds_and_witness(rng):
    for _ in range(1000):
        v = random_two_mode(rng, scale=0.8)
        f = fidelity(VAC, v).fidelity
        assert 0 < f <= 1
        if f > 0.5:
            assert pt_min_symplectic_eigenvalue(v) < 0.5


def test_standard_form_fidelity():
    assert coherent_fidelity_standard_form(0.5, 0.5, 0, 0) == pytest.approx(0.5)
    ch, sh = np.cosh(1) / 2, np.sinh(1) / 2
    assert coherent_fidelity_standard_form(ch, ch, sh, -sh) == pytest.approx(1 / (1 + np.exp(-1)))
    for c in (0.1, 0.3):
        assert coherent_fidelity_standard_form(0.8, 0.8, c, c) <= 0.5


def test_standard_form_matches_general(rng):
    from cvnet.symplectic import standard_form_I

    for _ in range(50):
        v = random_two_mode(rng)
        sf = standard_form_I(v)
        assert coherent_fidelity_standard_form(sf.a, sf.b, sf.c, sf.c_prime) == pytest.approx(
            fidelity(VAC, sf.matrix()).fidelity, rel=1e-9
        )


def test_inversion():
    r = squeezing_for_fidelity(0.58)
    assert r == pytest.approx(np.log(0.58 / 0.42) / 2, abs=1e-6)
    assert r == pytest.approx(0.1613, abs=1e-4)
    assert coherent_fidelity_of_r(r) == pytest.approx(0.58, abs=1e-12)
    assert squeezing_for_fidelity(0.5) == 0.0
    with pytest.raises(InvalidInput):
        squeezing_for_fidelity(1.0)


def test_local_squeeze_examples():
    assert local_squeeze_optimize(thermal_tmsv(0.7, 0.8, 0.8)).kappa == pytest.approx(0.0, abs=1e-9)
    res = local_squeeze_optimize(thermal_tmsv(0.4, 1.0, 0.5))
    assert res.kappa == pytest.approx(np.log(2) / 4, abs=1e-6)
    assert res.kappa == pytest.approx(res.kappa_analytic, abs=1e-6)
    r = 0.9
    pure = local_squeeze_optimize(thermal_tmsv(r, 0.5, 0.5))
    assert pure.fidelity == pytest.approx(1 / (1 + np.exp(-2 * r)), abs=1e-12)


def test_local_squeeze_optimum_formula(rng):
    for _ in range(20):
        r, na, nb = rng.uniform(0, 1.5), rng.uniform(0.5, 3), rng.uniform(0.5, 3)
        res = local_squeeze_optimize(thermal_tmsv(r, na, nb))
        assert res.kappa == pytest.approx(np.log(na / nb) / 4, abs=1e-6)
        assert res.fidelity == pytest.approx(1 / (1 + 2 * np.sqrt(na * nb) * np.exp(-2 * r)), rel=1e-10)
        # optimal squeezing leaves nu~_- unchanged, and F_max = 1/(1 + 2 nu~_-) here
        assert res.fidelity == pytest.approx(1 / (1 + 2 * res.nu_tilde_minus), rel=1e-9)


def test_bad_input_shape():
    with pytest.raises(InvalidInput):
        fidelity(np.eye(3), tmsv(0.1))
