import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from gqsp_power import oracle
from gqsp_power.block_encoding import build_encoding, build_explicit
from gqsp_power.errors import (
    CapitalizationError,
    IllConditionedError,
    InconsistentPairError,
    NeedsRescaleError,
    ZeroProbabilityError,
)
from gqsp_power.gqsp import (
    AngleSequence,
    assemble_and_run,
    auto_beta,
    capitalize,
    carve,
    complete,
    complete_fourier,
    complete_prony,
    find_angles,
    reconstruct_points,
    reconstruct_scalar,
    roundtrip_residual,
    run_with_capitalization,
)
from gqsp_power.pauli import parse_pauli_sum, random_pauli_sum
from gqsp_power.polynomials import UnitCirclePoly, chebyshev_to_circle, circle_max, partition_rescale
from gqsp_power.statevector import StateVector, fidelity

Z64 = np.exp(2j * np.pi * np.arange(64) / 64)


def random_bounded(rng, d, top=0.9):
    p = UnitCirclePoly(rng.normal(size=d + 1) + 1j * rng.normal(size=d + 1))
    return p.scaled(top / circle_max(p))


def degraded(seed=3):
    """Degree-16 polynomial whose extreme coefficients are ~1e-12."""
    rng = np.random.default_rng(seed)
    core = rng.normal(size=9) + 1j * rng.normal(size=9)
    c = np.r_[rng.normal(size=4) * 1e-12, core, rng.normal(size=4) * 1e-12]
    p = UnitCirclePoly(c)
    return p.scaled(0.8 / circle_max(p))


def identity_gap(p, q, m=4096):
    z = np.exp(2j * np.pi * np.arange(m) / m)
    return np.max(np.abs(np.abs(p(z)) ** 2 + np.abs(UnitCirclePoly(q.coefficients)(z)) ** 2 - 1))


def test_constant_complement():
    res = complete_prony(UnitCirclePoly([0, 0.6]))
    np.testing.assert_allclose(np.abs(res.q.coefficients), [0.8], atol=1e-12)


def test_half_one_plus_z_after_rescale():
    bounded, _ = partition_rescale(UnitCirclePoly([0.5, 0.5]))
    res = complete_prony(bounded)
    assert res.max_deviation <= 1e-12
    # Q is (1 - z) / 2 up to phase, perturbed by ~sqrt(margin)
    np.testing.assert_allclose(np.abs(res.q.padded(2)), [0.5, 0.5], atol=2e-3)


def test_prony_and_fourier_agree_up_to_phase():
    p = UnitCirclePoly([0.45, 0.45])
    qp = complete_prony(p).q.padded(2)
    qf = complete_fourier(p).q.padded(2)
    phase = np.vdot(qf, qp) / abs(np.vdot(qf, qp))
    np.testing.assert_allclose(qp, phase * qf, atol=1e-8)


def test_random_degree_8_prony(rng):
    p = random_bounded(rng, 8)
    res = complete_prony(p)
    assert res.max_deviation <= 1e-8
    assert identity_gap(p, res.q) <= 1e-8


def test_random_degree_12_fourier(rng):
    p = random_bounded(rng, 12)
    assert complete_fourier(p).max_deviation <= 1e-7


def test_unit_modulus_needs_rescale():
    with pytest.raises(NeedsRescaleError):
        complete(UnitCirclePoly([0, 1]))
    with pytest.raises(NeedsRescaleError):
        complete(UnitCirclePoly([1.0]))


def test_bare_prony_flags_degraded_polynomial():
    p = degraded()
    with pytest.raises(IllConditionedError, match="capitalization"):
        complete_prony(p, polish=False)
    # the polished default recovers a valid completion
    assert complete_prony(p).max_deviation <= 1e-8


def test_capitalize_construction():
    p = UnitCirclePoly([0, 0, 1e-9, 0, 0])
    pp, prime = capitalize(p, 0.4, 1.0)
    assert pp.coefficients[0] == pytest.approx(-0.4)
    assert pp.coefficients[4] == pytest.approx(-0.4)
    np.testing.assert_allclose(1.0 * (pp.coefficients + prime.coefficients), p.coefficients, atol=1e-15)
    assert complete_prony(pp, polish=False).max_deviation <= 1e-8


def test_capitalize_bound_violation_suggests_beta(rng):
    p = random_bounded(rng, 6, 0.9)
    with pytest.raises(CapitalizationError) as info:
        capitalize(p, 0.3, 1.0)
    beta = info.value.suggested_beta
    assert beta is not None and beta > 1
    capitalize(p, 0.3, beta * 1.01)
    with pytest.raises(CapitalizationError):
        capitalize(p, 0.6, 2.0)
    assert auto_beta(p, 0.25) >= 1


def test_carve_identity():
    seq = carve(UnitCirclePoly([1.0]), UnitCirclePoly([0.0]))
    assert seq.thetas[0] == 0
    assert np.exp(1j * (seq.phis[0] + seq.lambda0)) == pytest.approx(1.0)
    np.testing.assert_allclose(reconstruct_scalar(seq, 1j), [[1, 0], [0, -1]], atol=1e-15)


def test_carve_pure_z():
    seq = carve(UnitCirclePoly([0, 1]), UnitCirclePoly([0.0]))
    assert len(seq.thetas) == 2
    np.testing.assert_allclose(reconstruct_points(seq, Z64)[:, 0, 0], Z64, atol=1e-10)


def test_carve_half_one_plus_z_matches_p_and_q():
    p = UnitCirclePoly([0.45, 0.45])
    q = complete_prony(p).q
    seq = carve(p, q)
    m = reconstruct_points(seq, Z64)
    np.testing.assert_allclose(m[:, 0, 0], p(Z64), atol=1e-9)
    np.testing.assert_allclose(m[:, 1, 0], UnitCirclePoly(q.coefficients)(Z64), atol=1e-9)


def test_carve_rejects_invalid_pair():
    with pytest.raises(InconsistentPairError):
        carve(UnitCirclePoly([0.5, 0.5]), UnitCirclePoly([0.5, 0.1]))


def test_reconstruct_scalar_off_circle():
    seq = carve(UnitCirclePoly([1.0]), UnitCirclePoly([0.0]))
    with pytest.raises(ValueError):
        reconstruct_scalar(seq, 0.5)


def test_angle_json_roundtrip(rng):
    rep = find_angles(random_bounded(rng, 5))
    back = AngleSequence.from_json(rep.angles.to_json())
    np.testing.assert_array_equal(back.thetas, rep.angles.thetas)
    assert roundtrip_residual(back, random_bounded(np.random.default_rng(20240611), 5)) <= 1e-8
    with pytest.raises(ValueError):
        AngleSequence([0.0, np.nan], [0.0, 0.0], 0.0)


def test_run_pure_z_on_unitary_encoding():
    h = parse_pauli_sum("0.5 Z")
    plus = StateVector(np.array([1, 1]) / np.sqrt(2), 1)
    seq = carve(UnitCirclePoly([0, 1]), UnitCirclePoly([0.0]))
    run = assemble_and_run(seq, build_explicit(h), plus)
    assert fidelity(run.output_state, np.array([1, -1])) == pytest.approx(1.0, abs=1e-12)
    assert run.success_probability == pytest.approx(1.0, abs=1e-12)


def test_run_t2_on_random_hamiltonian(rng):
    h = random_pauli_sum(rng, 2, 5)
    psi = random_state(rng, 2)
    bounded, info = partition_rescale(UnitCirclePoly([0, 0, 1]))
    rep = find_angles(bounded, alpha=info.alpha)
    run = assemble_and_run(rep.angles, build_encoding(h), psi)
    target = oracle.apply_chebyshev_dense([0, 0, 1], h, psi)
    assert fidelity(run.output_state, target) >= 1 - 1e-9
    assert run.success_probability == pytest.approx(target.norm() ** 2 / info.alpha**2, abs=1e-9)


@pytest.mark.parametrize("flavor", ["lcu", "explicit"])
def test_run_random_degree_6(flavor, rng):
    h = random_pauli_sum(rng, 2, 6)
    psi = random_state(rng, 2)
    cheb = rng.normal(size=7) + 1j * rng.normal(size=7)
    bounded, info = partition_rescale(chebyshev_to_circle(cheb))
    rep = find_angles(bounded, alpha=info.alpha)
    run = assemble_and_run(rep.angles, build_encoding(h, flavor), psi)
    target = oracle.apply_chebyshev_dense(cheb, h, psi)
    assert fidelity(run.output_state, target) >= 1 - 1e-8


def test_destructive_combination_is_zero_probability(rng):
    h = random_pauli_sum(rng, 1, 2)
    psi = random_state(rng, 1)
    with pytest.raises(ZeroProbabilityError):
        run_with_capitalization(UnitCirclePoly(np.zeros(5)), build_encoding(h), psi, 0.25, 1.0)


def test_capitalized_run_matches_oracle(rng):
    h = random_pauli_sum(rng, 2, 4)
    psi = random_state(rng, 2)
    p = degraded()
    beta = auto_beta(p, 0.25)
    run = run_with_capitalization(p, build_encoding(h), psi, 0.25, beta, polish=False)
    target = oracle.apply_chebyshev_dense(p.coefficients, h, psi)
    assert fidelity(run.output_state, target) >= 1 - 1e-7
    assert run.success_probability == pytest.approx(target.norm() ** 2 / (2 * beta) ** 2, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1), st.sampled_from(["prony", "fourier"]))
def test_completion_and_roundtrip_property(d, seed, method):
    p = random_bounded(np.random.default_rng(seed), d)
    rep = find_angles(p, method)
    assert rep.completion.max_deviation <= (1e-8 if method == "prony" else 1e-7)
    assert rep.roundtrip <= 1e-8
