import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metrosim.dynamics import (EvolutionProblem, IntegrationError, Propagator, StateError,
                               check_density_matrix, clamp_state, default_steps, evolve,
                               evolve_with_sensitivity, liouvillian, pure_state, unitary_evolve)
from metrosim.linalg import IDENTITY_4, dagger
from metrosim.model import (HamiltonianSpec, ProbeFamily, build_hamiltonian,
                            hamiltonian_derivative, probe_vectors)

OMEGA = 5 * math.pi
GHZ = np.array([1, 0, 0, 1]) / math.sqrt(2)
PLUS_PLUS = np.full(4, 0.5)


def spec(kind="H3", est="omega", omega=OMEGA, j=0.5, h=0.5):
    return HamiltonianSpec.for_kind(kind, est, omega=omega, coupling_j=j, field_h=h)


def assert_valid_state(rho, tol=1e-10):
    assert abs(np.trace(rho) - 1) <= tol
    assert np.max(np.abs(rho - dagger(rho))) <= tol
    assert np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))[0] >= -1e-10


def test_single_qubit_dephasing_coherence():
    plus = np.array([1, 1]) / math.sqrt(2)
    for t in (0.1, 0.5, 1.0, 2.0):
        rho = evolve(EvolutionProblem(np.zeros((2, 2)), 0.5, plus, t))
        assert abs(rho[0, 1] - 0.5 * math.exp(-0.5 * t)) < 1e-10
        assert rho[0, 0].real == pytest.approx(0.5, abs=1e-12)


def test_ghz_coherence_decays_at_twice_the_rate():
    s = spec("H1", j=0.5)
    for t in (0.25, 0.5, 1.0):
        rho = evolve(EvolutionProblem.from_spec(s, 0.5, GHZ, t))
        assert abs(abs(rho[0, 3]) - 0.5 * math.exp(-2 * 0.5 * t)) < 1e-9
        # relative phase accumulated by |11> under -omega(n1+n2)
        assert np.angle(rho[0, 3] * np.exp(2j * OMEGA * t)) == pytest.approx(0.0, abs=1e-7)


def test_noiseless_matches_unitary():
    rng = np.random.default_rng(0)
    for kind in ("ideal", "H1", "H2", "H3"):
        h = build_hamiltonian(spec(kind))
        psi = probe_vectors(ProbeFamily.MAX_ENTANGLED, rng.uniform(0, 2 * math.pi, 6))
        t = rng.uniform(0.2, 1.0)
        rho = evolve(EvolutionProblem(h, 0.0, psi, t))
        assert np.max(np.abs(rho - unitary_evolve(h, pure_state(psi), t))) <= 1e-8


@pytest.mark.parametrize("kind,est", [("H1", "omega"), ("H3", "h"), ("H4", "J")])
def test_sensitivity_matches_central_difference(kind, est):
    s = spec(kind, est)
    t = 0.7
    rho, drho = evolve_with_sensitivity(EvolutionProblem.from_spec(s, 0.5, PLUS_PLUS, t))
    delta = 1e-5
    up = evolve(EvolutionProblem.from_spec(s.shifted(delta), 0.5, PLUS_PLUS, t), verify=False)
    down = evolve(EvolutionProblem.from_spec(s.shifted(-delta), 0.5, PLUS_PLUS, t), verify=False)
    fd = (up - down) / (2 * delta)
    assert np.max(np.abs(drho - fd)) <= 1e-7
    assert abs(np.trace(drho)) < 1e-12
    assert np.max(np.abs(drho - dagger(drho))) < 1e-14


def test_step_doubling_at_default_steps():
    s = spec("H3")
    base = EvolutionProblem.from_spec(s, 0.5, GHZ, 2.0)
    fine = EvolutionProblem.from_spec(s, 0.5, GHZ, 2.0, steps=2 * base.steps)
    assert np.max(np.abs(evolve(base, verify=False) - evolve(fine, verify=False))) <= 1e-9


def test_too_few_steps_raises():
    with pytest.raises(IntegrationError, match="step-doubling"):
        evolve(EvolutionProblem.from_spec(spec("H3"), 0.5, GHZ, 2.0, steps=200))


def test_default_steps_scale_with_spectral_width():
    assert default_steps(np.zeros((4, 4)), 0.0, 2.0) == 2000
    assert default_steps(build_hamiltonian(spec("H1")), 0.5, 2.0) > 2000


def test_rk4_invariants_random_evolutions():
    rng = np.random.default_rng(1)
    for _ in range(12):
        kind = rng.choice(["ideal", "H1", "H2", "H3"])
        psi = probe_vectors(ProbeFamily.MAX_ENTANGLED, rng.uniform(0, 2 * math.pi, 6))
        rho = evolve(EvolutionProblem.from_spec(spec(kind), rng.uniform(0, 1), psi,
                                                rng.uniform(0.05, 0.6)))
        assert_valid_state(rho)


def test_invariants_1000_random_evolutions_exact():
    rng = np.random.default_rng(2)
    kinds = ["ideal", "H1", "H2", "H3", "H4"]
    for k in range(5):
        est = "J" if kinds[k] == "H4" else "omega"
        prop = Propagator.from_spec(spec(kinds[k], est), 0.5)
        psi = probe_vectors(ProbeFamily.MAX_ENTANGLED, rng.uniform(0, 2 * math.pi, (200, 6)))
        rho0 = psi[:, :, None] * psi[:, None, :].conj()
        t = rng.uniform(0.01, 2.0, 200)
        rho, drho = prop.evolve(rho0, t)
        tr = np.trace(rho, axis1=1, axis2=2)
        assert np.max(np.abs(tr - 1)) <= 1e-10
        assert np.max(np.abs(rho - np.conj(np.swapaxes(rho, 1, 2)))) <= 1e-10
        assert np.linalg.eigvalsh(rho).min() >= -1e-10
        assert np.max(np.abs(np.trace(drho, axis1=1, axis2=2))) <= 1e-10


def test_propagator_matches_rk4():
    for kind, est in (("H2", "h"), ("H3", "omega")):
        s = spec(kind, est)
        r1, d1 = evolve_with_sensitivity(EvolutionProblem.from_spec(s, 0.5, PLUS_PLUS, 0.8))
        r2, d2 = Propagator.from_spec(s, 0.5).evolve(pure_state(PLUS_PLUS), 0.8)
        assert np.max(np.abs(r1 - r2)) < 1e-9
        assert np.max(np.abs(d1 - d2)) < 1e-8


def test_propagator_block_fallback_agrees():
    s = spec("H1")
    exact = Propagator.from_spec(s, 0.5)
    block = Propagator(build_hamiltonian(s), 0.5, hamiltonian_derivative(s), cond_limit=0.0)
    for t in (0.3, 1.7):
        a, da = exact.evolve(pure_state(GHZ), t)
        b, db = block.evolve(pure_state(GHZ), t)
        assert np.max(np.abs(a - b)) < 1e-10
        assert np.max(np.abs(da - db)) < 1e-9


def test_liouvillian_matches_rhs():
    from metrosim.dynamics import lindblad_rhs

    rng = np.random.default_rng(3)
    h = build_hamiltonian(spec("H3"))
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ dagger(a)
    rho /= np.trace(rho)
    lhs = (liouvillian(h, 0.3) @ rho.reshape(-1)).reshape(4, 4)
    assert np.allclose(lhs, lindblad_rhs(h, 0.3, rho), atol=1e-12)


def test_t_zero_returns_initial_state():
    rho = evolve(EvolutionProblem.from_spec(spec("H1"), 0.5, GHZ, 0.0))
    assert np.allclose(rho, pure_state(GHZ))


def test_initial_state_validation():
    with pytest.raises(StateError, match="trace"):
        EvolutionProblem(np.zeros((4, 4)), 0.0, 2 * IDENTITY_4, 1.0)
    with pytest.raises(StateError, match="Hermitian"):
        check_density_matrix(np.array([[0.5, 1], [0, 0.5]]))
    with pytest.raises(StateError, match="negative eigenvalue"):
        check_density_matrix(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        EvolutionProblem(np.zeros((4, 4)), -0.1, GHZ, 1.0)


def test_clamp_state():
    rho = np.diag([0.6, 0.4 + 5e-9, -5e-9, 0.0]).astype(complex)
    out = clamp_state(rho)
    assert np.linalg.eigvalsh(out).min() >= 0
    assert abs(np.trace(out) - 1) < 1e-14
    with pytest.raises(StateError):
        clamp_state(np.diag([0.6, 0.4 + 1e-6, -1e-6, 0.0]).astype(complex))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.01, 2.0), st.lists(st.floats(0, 2 * math.pi),
                                                           min_size=4, max_size=4))
def test_product_probe_invariants_property(gamma, t, angles):
    psi = probe_vectors(ProbeFamily.PRODUCT, np.array(angles))
    rho, drho = Propagator.from_spec(spec("H3"), gamma).evolve(pure_state(psi), t)
    assert_valid_state(rho)
    assert abs(np.trace(drho)) < 1e-10
    # purity never increases under dephasing
    assert np.trace(rho @ rho).real <= 1 + 1e-10


def test_dephasing_conserves_populations_for_diagonal_hamiltonian():
    h = build_hamiltonian(spec("H1"))
    rho0 = pure_state(PLUS_PLUS)
    rho = evolve(EvolutionProblem(h, 1.0, rho0, 0.5))
    assert np.allclose(np.diag(rho).real, 0.25, atol=1e-12)
