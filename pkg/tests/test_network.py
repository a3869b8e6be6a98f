import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import block_diag

from cvnet.channels import cheap_three_mode, nmsv, squeezed_cm, tmsv
from cvnet.entanglement import pt_min_symplectic_eigenvalue
from cvnet.errors import GOutOfRange, InvalidInput
from cvnet.network import (
    Branch,
    SqueezedProjectorSpec,
    ThreeModeBlocks,
    condition_on_measurement,
    conditional_fidelity,
    m_matrix,
    optimal_xi,
    optimize_measurement,
    optimizer_vectors,
    pure_m_matrix,
    stationary_phases,
    traced_fidelity,
)
from cvnet.oracle import grid_search_measurement
from cvnet.symplectic import CovarianceMatrix, GaussianState, symplectic_form
from cvnet.teleport import fidelity

from conftest import VAC, random_net


def _uncorrelated(two_mode, c_block):
    v = block_diag(two_mode, c_block)
    return GaussianState(np.zeros(6), CovarianceMatrix(v))


def _random_spec(rng):
    return SqueezedProjectorSpec(np.exp(rng.uniform(-3, 3)), rng.uniform(0, np.pi), rng.normal(size=2))


def test_blocks_roundtrip(rng):
    st_ = random_net(rng, max_shift=1.0)
    net = ThreeModeBlocks.from_state(st_)
    assert np.array_equal(net.cm(), st_.cm.entries)
    assert np.array_equal(net.displacement(), st_.displacement)


# -- non-assisted ---------------------------------------------------------------


def test_traced_examples(rng):
    assert traced_fidelity(nmsv(3, 0), VAC) == pytest.approx(0.5)
    for r in np.linspace(0, 3, 31):
        assert traced_fidelity(nmsv(3, r), VAC) <= 2 / 3 + 1e-9
    net = _uncorrelated(tmsv(0.6).cm.entries, np.diag([0.7, 0.9]))
    assert traced_fidelity(net, VAC) == pytest.approx(fidelity(VAC, tmsv(0.6)).fidelity, abs=1e-14)


# -- M and g ---------------------------------------------------------------------


def test_m_matrix_examples(rng):
    m, g = m_matrix(np.eye(2) / 2, np.eye(2) / 2)
    assert g == pytest.approx(1.0) and np.allclose(m, np.eye(2))
    for _ in range(50):
        c = random_net(rng).cm.entries[4:, 4:]
        v0 = squeezed_cm(np.exp(rng.uniform(-2, 2)), rng.uniform(0, np.pi))
        m, g = m_matrix(c, v0)
        assert np.allclose(m, np.linalg.inv(c + v0), atol=1e-12)
        assert g > 0.5
        thermal = 1.7 * v0
        m, _ = m_matrix(c, thermal)
        assert np.allclose(m, m.T) and np.all(np.linalg.eigvalsh(m) > 0)


def test_m_matrix_rejects_unphysical():
    with pytest.raises(GOutOfRange):
        m_matrix(np.zeros((2, 2)), np.zeros((2, 2)))


def test_pure_m_limits(rng):
    c = random_net(rng).cm.entries[4:, 4:]
    for phi in rng.uniform(0, np.pi, 5):
        assert np.allclose(pure_m_matrix(c, np.inf, phi), pure_m_matrix(c, 1e8, phi), atol=1e-6)
        assert np.allclose(pure_m_matrix(c, 0.0, phi), pure_m_matrix(c, 1e-8, phi), atol=1e-6)
        xi = np.exp(rng.uniform(-2, 2))
        assert np.allclose(pure_m_matrix(c, xi, phi), np.linalg.inv(c + squeezed_cm(xi, phi)), atol=1e-12)


# -- conditioning ------------------------------------------------------------------


def test_uncorrelated_measurement_changes_nothing(rng):
    two = tmsv(0.4).cm.entries
    net = _uncorrelated(two, np.diag([0.8, 0.6]))
    spec = _random_spec(rng)
    cond = condition_on_measurement(net, spec)
    assert np.allclose(cond.cm.entries, two, atol=1e-15)
    assert np.allclose(cond.displacement, 0)
    assert conditional_fidelity(net, VAC, spec) == pytest.approx(traced_fidelity(net, VAC), abs=1e-14)


def test_heterodyne_on_nmsv():
    net = ThreeModeBlocks.from_state(nmsv(3, 0.7))
    cond = condition_on_measurement(net, SqueezedProjectorSpec(1.0, 0.0))
    top = np.vstack([net.E, net.D])
    expected = net.traced().cm.entries - top @ np.linalg.inv(net.C + np.eye(2) / 2) @ top.T
    assert np.allclose(cond.cm.entries, expected, atol=1e-12)


def test_homodyne_limit_matches_large_xi(rng):
    net = random_net(rng)
    for phi in (0.0, 0.7, 2.0):
        exact = condition_on_measurement(net, SqueezedProjectorSpec(np.inf, phi)).cm.entries
        approx = condition_on_measurement(net, SqueezedProjectorSpec(1e6, phi)).cm.entries
        assert np.allclose(exact, approx, atol=1e-4)


def test_general_gaussian_measurement(rng):
    net = random_net(rng)
    v0 = 1.5 * squeezed_cm(2.0, 0.3)
    cond = condition_on_measurement(net, (v0, np.zeros(2)))
    assert cond.probability is None
    pure = condition_on_measurement(net, (squeezed_cm(2.0, 0.3), np.zeros(2)))
    ref = condition_on_measurement(net, SqueezedProjectorSpec(2.0, 0.3))
    assert np.allclose(pure.cm.entries, ref.cm.entries, atol=1e-12)
    assert pure.probability == pytest.approx(ref.probability)


def test_outcome_independence(rng):
    net = random_net(rng, max_shift=1.0)
    base = condition_on_measurement(net, SqueezedProjectorSpec(1.3, 0.4)).cm.entries
    for _ in range(10):
        cond = condition_on_measurement(net, SqueezedProjectorSpec(1.3, 0.4, rng.normal(size=2) * 3))
        assert np.array_equal(cond.cm.entries, base)


def test_probabilities(rng):
    net = random_net(rng)
    p = condition_on_measurement(net, SqueezedProjectorSpec(0.7, 1.0, [0.3, -0.2])).probability
    assert 0 < p <= 1
    # the homodyne outcome density integrates to one
    xs = np.linspace(-15, 15, 3001)
    dens = [condition_on_measurement(net, SqueezedProjectorSpec(np.inf, 0.4, [x * np.cos(0.4), -x * np.sin(0.4)]),
                                     check=False).probability for x in xs]
    assert np.trapezoid(dens, xs) == pytest.approx(1.0, abs=1e-6)


def test_conditional_fidelity_matches_two_mode(rng):
    for _ in range(30):
        net = random_net(rng, max_shift=1.0)
        spec = _random_spec(rng)
        cond = condition_on_measurement(net, spec)
        assert conditional_fidelity(net, VAC, spec) == pytest.approx(
            fidelity(VAC, cond.state()).fidelity, abs=1e-12
        )


def test_monotonicity(rng):
    for _ in range(500):
        net = random_net(rng)
        f_tr = traced_fidelity(net, VAC)
        spec = _random_spec(rng)
        assert conditional_fidelity(net, VAC, spec) >= f_tr - 1e-12


def test_conditional_entanglement_witness(rng):
    for _ in range(300):
        net = random_net(rng, scale=0.8)
        spec = _random_spec(rng)
        if conditional_fidelity(net, VAC, spec) > 0.5:
            assert pt_min_symplectic_eigenvalue(condition_on_measurement(net, spec).cm) < 0.5


def test_cheap_state_assisted_beats_classical():
    for r in np.arange(1, 21) / 10:
        res = optimize_measurement(cheap_three_mode(r), VAC)
        spec = SqueezedProjectorSpec(res.xi_star, res.phi_star)
        assert conditional_fidelity(cheap_three_mode(r), VAC, spec) > 0.5


# -- optimizer vectors --------------------------------------------------------------


def test_vectors_with_no_correlation():
    net = _uncorrelated(tmsv(0.4).cm.entries, np.diag([0.8, 0.6]))
    vec = optimizer_vectors(net, VAC)
    assert np.allclose(vec.U, 0) and vec.u[1] == pytest.approx(0)
    phis = np.linspace(0, np.pi, 7)
    assert np.allclose(vec.k(phis)[0], 0)
    assert np.allclose(vec.gamma(phis), 0)
    f_tr = traced_fidelity(net, VAC)
    for phi in phis:
        xi = optimal_xi(phi, vec)
        assert xi in (0.0, np.inf)
        assert vec.fidelity(0.0, phi) == pytest.approx(f_tr) and vec.fidelity(np.inf, phi) == pytest.approx(f_tr)
    res = optimize_measurement(net, VAC)
    assert res.f_star == pytest.approx(f_tr, abs=1e-14)
    assert res.branch is Branch.BOUNDARY_HOMODYNE


def test_vectors_positive_and_match_direct(rng):
    for _ in range(50):
        net = random_net(rng)
        vec = optimizer_vectors(net, VAC)
        phis = rng.uniform(0, np.pi, 8)
        assert np.all(vec.k(phis)[1] > 0)
        for phi in phis[:3]:
            for xi in (1.0, np.exp(rng.uniform(-3, 3)), 0.0, np.inf):
                direct = conditional_fidelity(net, VAC, SqueezedProjectorSpec(xi, phi))
                assert vec.fidelity(xi, phi) == pytest.approx(direct, abs=1e-12)


def test_periodicity(rng):
    vec = optimizer_vectors(random_net(rng), VAC)
    for phi in rng.uniform(0, np.pi, 10):
        assert vec.fidelity(0.0, phi) == pytest.approx(vec.fidelity(np.inf, phi + np.pi / 2), abs=1e-13)


def test_interior_xi_dominates_grid(rng):
    xis = np.geomspace(1e-6, 1e6, 1000)
    checked = 0
    while checked < 25:
        vec = optimizer_vectors(random_net(rng), VAC)
        phi = rng.uniform(0, np.pi)
        if not vec.p(phi):
            continue
        checked += 1
        best = vec.fidelity(optimal_xi(phi, vec), phi)
        assert np.all(vec.fidelity(xis, np.full_like(xis, phi)) <= best + 1e-12)


def test_boundary_when_p_false(rng):
    xis = np.geomspace(1e-6, 1e6, 1000)
    checked = 0
    while checked < 25:
        vec = optimizer_vectors(random_net(rng), VAC)
        phi = rng.uniform(0, np.pi)
        if vec.p(phi):
            continue
        checked += 1
        xi = optimal_xi(phi, vec)
        assert xi in (0.0, np.inf)
        assert np.all(vec.fidelity(xis, np.full_like(xis, phi)) <= vec.fidelity(xi, phi) + 1e-12)


def test_stationary_phases(rng):
    for _ in range(30):
        vec = optimizer_vectors(random_net(rng), VAC)
        grid = np.linspace(0, np.pi, 2001)
        vals = vec.fidelity(np.zeros_like(grid), grid)
        phases = stationary_phases(vec)
        assert sorted(k for _, k in phases) == ["max", "min"]
        for phi, kind in phases:
            h = 1e-6
            slope = (vec.fidelity(0.0, phi + h) - vec.fidelity(0.0, phi - h)) / (2 * h)
            assert abs(slope) < 1e-7
            if kind == "max":
                assert vec.fidelity(0.0, phi) >= vals.max() - 1e-12
            else:
                assert vec.fidelity(0.0, phi) <= vals.min() + 1e-12


def test_phase_independent_case():
    # U and C proportional to the identity
    c = 0.9 * np.eye(2)
    two = tmsv(0.3).cm.entries
    e = 0.3 * np.eye(2)
    d = -0.3 * np.diag([1, -1])
    v = np.block([[two[:2, :2], two[:2, 2:], e], [two[2:, :2], two[2:, 2:], d], [e.T, d.T, c]])
    # isotropic noise just large enough for V + iJ/2 >= 0
    lam = max(0.0, -np.linalg.eigvalsh(v + 0.5j * symplectic_form(3))[0]) + 0.01
    v = v + lam * np.eye(6)
    net = GaussianState(np.zeros(6), CovarianceMatrix(v))
    vec = optimizer_vectors(net, VAC)
    assert np.allclose(vec.U, vec.U[0, 0] * np.eye(2))
    phis = np.linspace(0, np.pi, 9)
    gam = vec.gamma(phis)
    assert np.allclose(gam, gam[0])
    res = optimize_measurement(net, VAC)
    if gam[0] < 0:
        assert res.xi_star == pytest.approx(1.0, rel=1e-9)
        assert res.branch is Branch.INTERIOR
    else:
        assert res.branch is Branch.BOUNDARY_HOMODYNE


def test_optimizer_against_grid_search(rng):
    for _ in range(10):
        net = random_net(rng)
        res = optimize_measurement(net, VAC)
        ref = grid_search_measurement(net, VAC, 200, 200)
        assert res.f_star == pytest.approx(ref.fidelity, abs=1e-6)
        assert res.f_star >= res.f_traced - 1e-12


def test_optimizer_is_order_independent(rng):
    net = random_net(rng)
    a = optimize_measurement(net, VAC)
    b = optimize_measurement(net, VAC, jobs=4)
    assert (a.xi_star, a.phi_star, a.f_star) == (b.xi_star, b.phi_star, b.f_star)


def test_spec_validation():
    with pytest.raises(InvalidInput):
        SqueezedProjectorSpec(-1.0)
    with pytest.raises(InvalidInput):
        SqueezedProjectorSpec(np.inf).cm()


@given(st.floats(0.05, 2.0))
def test_assisted_never_below_traced(r):
    for state in (nmsv(3, r), cheap_three_mode(r)):
        res = optimize_measurement(state, VAC, n_grid=90)
        assert res.f_star >= res.f_traced - 1e-12
