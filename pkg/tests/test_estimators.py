from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import rand_density, rand_pure, random_povm, rng
from telecert import estimators as est
from telecert import sepcone, states, teleport
from telecert.sdp import SolveStatus

BSM = states.bell_measurement(2)
PARTIAL_BSM = states.partial_bell_measurement(2)
PAULI6 = states.pauli_eigenstate_ensemble("xyz")
PAULI4 = states.pauli_eigenstate_ensemble("xz")


def bell_assemblage(rho, e=PAULI6, m=BSM):
    return teleport.generate_assemblage(rho, m, e)


def product_state(p=0.7, q=0.4):
    return states.DensityMatrix(
        np.kron(np.diag([p, 1 - p]), np.diag([q, 1 - q])), (2, 2))


def random_classical_channel(g, d_V, d_B, n_out, n_settings=3):
    """Mixture of measure-on-V, prepare-on-B strategies; classical by design."""
    povms = [random_povm(g, (d_V,), n_out) for _ in range(n_settings)]
    rhos = [rand_density(g, d_B) for _ in range(n_settings)]
    weights = g.random(n_settings)
    weights /= weights.sum()
    ops = tuple(
        sum(w * np.kron(m.elements[a], r) for w, m, r in zip(weights, povms, rhos))
        for a in range(n_out))
    return teleport.ChannelOperators(ops, d_V, d_B)


def flag_negativity(p):
    return (np.hypot(1 - p, p) - (1 - p)) / 2


# ----------------------------------------------------------- classicality

def test_product_state_data_admits_classical_model():
    asm = bell_assemblage(product_state())
    res = est.classicality(asm)
    assert res.is_classical
    assert res.witness is None
    assert res.channel is not None
    # the returned model must reproduce the observed data
    again = teleport.assemblage_from_channel(res.channel, PAULI6)
    for a in range(asm.n_outcomes):
        for x in range(len(PAULI6)):
            assert np.allclose(again.sigma[a][x], asm.sigma[a][x], atol=1e-6)


def test_max_entangled_data_is_nonclassical_with_matching_witness():
    asm = bell_assemblage(states.max_entangled(2))
    res = est.classicality(asm)
    assert not res.is_classical
    assert res.channel is None
    assert np.isclose(res.slack, 0.25, atol=1e-6)
    # the witness certifies exactly the slack that was minimized
    assert np.isclose(res.witness.value(asm), -res.slack, atol=1e-6)


def test_witness_nonnegative_on_sampled_classical_models():
    wit = est.classicality(bell_assemblage(states.max_entangled(2))).witness
    g = rng(77)
    for _ in range(5):
        ch = random_classical_channel(g, 2, 2, 4)
        asm = teleport.assemblage_from_channel(ch, PAULI6)
        assert wit.value(asm) >= -1e-8


def test_classicality_slack_grows_under_tighter_relaxation():
    asm = bell_assemblage(states.max_entangled(2))
    loose = est.classicality(asm)
    tight = est.classicality(asm, sepcone.SeparabilityRelaxation.symmetric_extension(2))
    assert loose.relaxation.name == "ppt"
    assert tight.relaxation.name == "sym2"
    assert not tight.is_classical
    assert tight.slack >= loose.slack - 1e-7


# ------------------------------------------------------------- negativity

def test_negativity_matches_flag_closed_form():
    for p in (0.3, 0.6, 0.9):
        rep = est.negativity(states.flag_state(p))
        assert rep.status is SolveStatus.OPTIMAL
        assert rep.bound_direction == est.EXACT_AT_RELAXATION
        assert np.isclose(rep.value, flag_negativity(p), atol=1e-7)


def test_negativity_isotropic_closed_form():
    for p in (0.2, 1 / 3, 0.6, 1.0):
        rep = est.negativity(states.isotropic_state(p))
        assert np.isclose(rep.value, max(0.0, (3 * p - 1) / 4), atol=1e-6)


def test_negativity_zero_for_separable():
    assert abs(est.negativity(product_state()).value) <= 1e-7


def test_data_negativity_tight_for_complete_scenario():
    rho = states.flag_state(0.7)
    rep = est.negativity_from_teleportation(bell_assemblage(rho))
    assert rep.bound_direction == est.EXACT_AT_RELAXATION
    assert np.isclose(rep.value, est.negativity(rho).value, atol=1e-5)


def test_data_negativity_lower_bounds_with_fewer_inputs():
    rho = states.flag_state(0.7)
    rep = est.negativity_from_teleportation(bell_assemblage(rho, PAULI4))
    assert rep.bound_direction == est.LOWER_BOUND
    assert rep.value <= est.negativity(rho).value + 1e-6


def test_data_negativity_vanishes_on_classical_data():
    rep = est.negativity_from_teleportation(bell_assemblage(product_state()))
    assert abs(rep.value) <= 1e-6


# ----------------------------------------------------- witness-based bound

def test_witness_bound_chain_on_random_instances():
    # bound from one number <= bound from all data <= true negativity
    for seed in (11, 12, 13):
        g = rng(seed)
        rho = states.DensityMatrix(rand_pure(g, 4), (2, 2))
        m = random_povm(g, (2, 2), 4)
        asm = teleport.generate_assemblage(rho, m, PAULI6)
        res = est.classicality(asm)
        assert not res.is_classical
        w = res.witness.value(asm)
        assert w < 0
        from_w = est.negativity_from_witness(res.witness, w, PAULI6).value
        from_data = est.negativity_from_teleportation(asm).value
        assert from_w <= from_data + 1e-6
        assert from_data <= est.negativity(rho).value + 2e-5


def test_witness_bound_for_ideal_violation():
    asm = bell_assemblage(states.max_entangled(2))
    res = est.classicality(asm)
    rep = est.negativity_from_witness(res.witness, res.witness.value(asm), PAULI6)
    assert rep.bound_direction == est.LOWER_BOUND
    assert np.isclose(rep.value, 0.5, atol=1e-5)


def test_witness_bound_is_zero_without_violation():
    wit = est.classicality(bell_assemblage(states.max_entangled(2))).witness
    classical = bell_assemblage(product_state())
    w = wit.value(classical)
    assert w >= 0
    assert abs(est.negativity_from_witness(wit, w, PAULI6).value) <= 1e-6


def test_witness_indexing_mismatch_rejected():
    wit = est.classicality(bell_assemblage(states.max_entangled(2))).witness
    with pytest.raises(ValueError, match="index"):
        wit.value(bell_assemblage(states.max_entangled(2), PAULI4))
    with pytest.raises(ValueError, match="index"):
        est.negativity_from_witness(wit, -0.1, PAULI4)


# ------------------------------------------------- entanglement robustness

def test_entanglement_robustness_of_max_entangled():
    phi = states.max_entangled(2)
    assert np.isclose(est.ent_robustness(phi, est.GENERALIZED).value, 1.0, atol=1e-6)
    assert np.isclose(est.ent_robustness(phi, est.SEPARABLE).value, 1.0, atol=1e-6)
    assert np.isclose(est.ent_robustness(phi, est.RANDOM).value, 2.0, atol=1e-6)


def test_random_robustness_isotropic_closed_form():
    for p in (0.2, 0.6, 0.9):
        rep = est.ent_robustness(states.isotropic_state(p), est.RANDOM)
        assert np.isclose(rep.value, max(0.0, 3 * p - 1), atol=1e-6)


def test_robustness_variants_are_ordered():
    # fewer allowed noise states can only cost more
    g = rng(23)
    for _ in range(3):
        rho = states.DensityMatrix(rand_density(g, 4), (2, 2))
        gen = est.ent_robustness(rho, est.GENERALIZED).value
        sep = est.ent_robustness(rho, est.SEPARABLE).value
        ran = est.ent_robustness(rho, est.RANDOM).value
        assert gen <= sep + 1e-6
        assert sep <= ran + 1e-6


def test_robustness_zero_for_separable():
    rho = product_state()
    for variant in (est.GENERALIZED, est.SEPARABLE, est.RANDOM):
        assert abs(est.ent_robustness(rho, variant).value) <= 1e-7


def test_unknown_robustness_variant_rejected():
    with pytest.raises(ValueError, match="variant"):
        est.ent_robustness(states.max_entangled(2), "thermal")
    with pytest.raises(ValueError, match="variant"):
        est.tel_robustness(bell_assemblage(states.max_entangled(2)), "thermal")


# ------------------------------------------------ teleportation robustness

def test_teleportation_robustness_tight_at_complete_scenario():
    rho = states.flag_state(0.7)
    asm = bell_assemblage(rho)
    pairs = ((est.GENERALIZED, est.GENERALIZED),
             (est.CLASSICAL, est.SEPARABLE),
             (est.RANDOM, est.RANDOM))
    for tel_variant, state_variant in pairs:
        tau = est.tel_robustness(asm, tel_variant).value
        eps = est.ent_robustness(rho, state_variant).value
        assert np.isclose(tau, eps, atol=1e-4)


def test_random_robustness_quarters_under_coarse_measurement():
    # only one of four outcomes survives the coarse Bell measurement
    asm = bell_assemblage(states.max_entangled(2), m=PARTIAL_BSM)
    assert np.isclose(est.tel_robustness(asm, est.RANDOM).value, 0.5, atol=1e-4)


def test_teleportation_robustness_vanishes_on_classical_data():
    asm = bell_assemblage(product_state())
    for variant in (est.GENERALIZED, est.CLASSICAL, est.RANDOM):
        assert abs(est.tel_robustness(asm, variant).value) <= 1e-6


def test_teleportation_robustness_lower_bounds_state_robustness():
    g = rng(31)
    for _ in range(2):
        rho = states.DensityMatrix(rand_density(g, 4), (2, 2))
        m = random_povm(g, (2, 2), 4)
        asm = teleport.generate_assemblage(rho, m, PAULI6)
        tau = est.tel_robustness(asm, est.GENERALIZED).value
        eps = est.ent_robustness(rho, est.GENERALIZED).value
        assert tau <= eps + 1e-5


# ----------------------------------------------------------------- weight

def test_weight_of_max_entangled_is_one():
    rep = est.teleportation_weight(bell_assemblage(states.max_entangled(2)))
    assert np.isclose(rep.value, 1.0, atol=1e-6)


def test_weight_matches_flag_mixing_parameter():
    # p·(max entangled) + (1-p)·(product) needs exactly p nonclassical mass
    for p in (0.5, 0.8):
        rep = est.teleportation_weight(bell_assemblage(states.flag_state(p)))
        assert rep.status is SolveStatus.OPTIMAL
        assert np.isclose(rep.value, p, atol=1e-5)


def test_weight_vanishes_on_classical_data():
    rep = est.teleportation_weight(bell_assemblage(product_state()))
    assert abs(rep.value) <= 1e-6


def test_weight_insensitive_to_measurement_coarse_graining():
    rho = states.isotropic_state(0.5)
    full = est.teleportation_weight(bell_assemblage(rho)).value
    coarse = est.teleportation_weight(bell_assemblage(rho, m=PARTIAL_BSM)).value
    assert full > 1e-3
    assert np.isclose(full, coarse, atol=1e-4)


def test_quantifiers_monotone_under_input_removal():
    rho = states.flag_state(0.8)
    fewer = states.InputEnsemble(PAULI6.states[:4], 2)
    full, sub = bell_assemblage(rho), bell_assemblage(rho, fewer)
    for fn in (est.negativity_from_teleportation, est.tel_robustness,
               est.teleportation_weight):
        assert fn(sub).value <= fn(full).value + 1e-6


# ------------------------------------------------------------ state split

def test_entangled_mass_of_max_entangled_is_one():
    rep = est.best_separable_approx(states.max_entangled(2))
    assert np.isclose(rep.value, 1.0, atol=1e-6)
    part = rep.certificate["entangled_part"]
    assert np.allclose(part, states.max_entangled(2).mat, atol=1e-4)


def test_entangled_mass_zero_for_separable():
    assert abs(est.best_separable_approx(product_state()).value) <= 1e-7


def test_entangled_mass_matches_flag_mixing_parameter():
    rep = est.best_separable_approx(states.flag_state(0.6))
    assert np.isclose(rep.value, 0.6, atol=1e-5)


def test_weight_lower_bounds_entangled_mass():
    g = rng(47)
    for _ in range(2):
        rho = states.DensityMatrix(rand_density(g, 4), (2, 2))
        m = random_povm(g, (2, 2), 4)
        asm = teleport.generate_assemblage(rho, m, PAULI6)
        tw = est.teleportation_weight(asm).value
        mass = est.best_separable_approx(rho).value
        assert tw <= mass + 1e-5


# ---------------------------------------------------------------- reports

def test_report_serialization_shape():
    rep = est.negativity(states.flag_state(0.6))
    plain = rep.to_json()
    assert set(plain) == {"quantifier", "value", "status", "relaxation",
                          "bound_direction", "parameters"}
    assert plain["status"] == "optimal"
    assert plain["relaxation"] is None
    json.dumps(plain)

    rep = est.teleportation_weight(bell_assemblage(states.isotropic_state(0.6)))
    full = rep.to_json(include_certificate=True)
    assert full["relaxation"] == "ppt"
    assert "certificate" in full
    assert "certificate" not in rep.to_json()
    json.dumps(full)


def test_report_hides_value_when_solver_fails():
    rep = est.QuantifierReport(
        quantifier="negativity", value=float("nan"),
        status=SolveStatus.NUMERICAL_FAILURE, relaxation=None,
        bound_direction=est.LOWER_BOUND)
    assert rep.to_json()["value"] is None
