import random
from fractions import Fraction

import numpy as np
import pytest

from swgen import (AssignmentAmbiguous, DegenerateSpectrum, HilbertSignature,
                   NotCoRotating, NumericContext, OperatorSum, OperatorTerm,
                   Polynomial, ScalarRational, ScalarSymbol, ShapeMismatch,
                   ValidationError, channels, commutator, decompose_matrix,
                   dispersive_shift_numeric, materialize, matrix_element_check,
                   residual_check, rotating_frame, solve_generator_static)

SIG = HilbertSignature((2,), 1)
N0 = Polynomial.number_op(0)


def sym(name):
    return Polynomial.symbol(ScalarSymbol(name))


def boson_on_both(coeff, delta, harmonic=0, imag=False):
    return OperatorSum(SIG, [
        OperatorTerm(ScalarRational(coeff), delta, (0,), (0,), harmonic, 0, imag),
        OperatorTerm(ScalarRational(coeff), delta, (1,), (1,), harmonic, 0, imag),
    ])


# ----------------------------------------------------------------------
# materialization
# ----------------------------------------------------------------------

def test_identity_materializes_to_identity():
    identity = boson_on_both(Polynomial.constant(1), (0,))
    ctx = NumericContext(truncation=5)
    assert np.abs(materialize(identity, ctx) - np.eye(12)).max() == 0.0


def test_lowering_matrix_elements():
    a = boson_on_both(Polynomial.constant(1), (1,))
    ctx = NumericContext(truncation=3)
    m = materialize(a, ctx)
    single = np.zeros((4, 4))
    for k in range(1, 4):
        single[k - 1, k] = np.sqrt(k)
    expected = np.kron(single, np.eye(2))
    assert np.abs(m - expected).max() < 1e-15


def test_commutator_homomorphism():
    number = boson_on_both(N0, (0,))
    a = boson_on_both(Polynomial.constant(1), (1,))
    ctx = NumericContext(truncation=9)
    lhs = materialize(commutator(number, a), ctx)
    n_m, a_m = materialize(number, ctx), materialize(a, ctx)
    assert np.abs(lhs - (n_m @ a_m - a_m @ n_m)).max() < 1e-14
    assert np.abs(lhs + a_m).max() < 1e-14


def test_harmonic_needs_time_and_fundamental(toy_spec):
    v = toy_spec.perturbation_sum()
    ctx = NumericContext(truncation=6, bindings={"g": 0.1, "Omega": 2.0})
    with pytest.raises(ValidationError):
        materialize(v, ctx, None)
    ctx_t = NumericContext(truncation=6, bindings={"g": 0.1, "Omega": 2.0}, time=0.2)
    m = materialize(v, ctx_t, toy_spec.fundamental)
    assert np.abs(m - m.conj().T).max() < 1e-14


# ----------------------------------------------------------------------
# residuals
# ----------------------------------------------------------------------

def test_zero_operators_zero_residual(rabi_spec, rabi_bindings):
    h0 = rabi_spec.h0_sum()
    zero = OperatorSum.zero(SIG)
    ctx = NumericContext(truncation=12, bindings=rabi_bindings)
    assert residual_check(h0, zero, zero, ctx) == 0.0


def test_exchange_model_first_order_residual(rabi_spec, rabi_bindings):
    h0, v = rabi_spec.h0_sum(), rabi_spec.perturbation_sum()
    s = solve_generator_static(h0, v)
    rng = random.Random(2)
    for _ in range(3):
        bind = {"hbar": 1.0, "Omega": rng.uniform(0.8, 1.6),
                "Omega_z": rng.uniform(0.2, 0.6), "g": rng.uniform(0.01, 0.05)}
        ctx = NumericContext(truncation=30, bindings=bind)
        assert residual_check(h0, s, v, ctx) < 1e-10


def test_miswired_channel_detected(rabi_spec, rabi_bindings):
    h0, v = rabi_spec.h0_sum(), rabi_spec.perturbation_sum()
    s = solve_generator_static(h0, v)
    key = next(iter(sorted(s.terms)))
    flipped = [OperatorTerm(-t.coeff, t.delta, t.bra, t.ket, t.harmonic, t.order,
                            t.imag) if t.key() == key else t
               for t in s.terms.values()]
    mutated = OperatorSum(SIG, flipped)
    ctx = NumericContext(truncation=30, bindings=rabi_bindings)
    assert residual_check(h0, mutated, v, ctx) > 1e-3


def test_truncation_must_dominate_margin(rabi_spec, rabi_bindings):
    h0, v = rabi_spec.h0_sum(), rabi_spec.perturbation_sum()
    s = solve_generator_static(h0, v)
    with pytest.raises(ValidationError):
        residual_check(h0, s, v, NumericContext(truncation=2, bindings=rabi_bindings))


# ----------------------------------------------------------------------
# rotating frame
# ----------------------------------------------------------------------

def test_rotating_frame_strips_cocorotating_drive(toy_spec):
    h = toy_spec.hamiltonian()
    static = rotating_frame(h, toy_spec.fundamental)
    assert all(t.harmonic == 0 for t in static.terms.values())
    # drive becomes a static transverse coupling
    v_channels = {c.key() for c in channels(static)
                  if any(d != 0 for d in c.delta)}
    assert v_channels == {((0,), (1,), (1,), 0), ((1,), (0,), (1,), 0),
                          ((0,), (1,), (-1,), 0), ((1,), (0,), (-1,), 0)}
    # diagonal picks up -hbar*Omega*N
    f0 = [c for c in channels(static) if c.key() == ((0,), (0,), (0,), 0)][0]
    expected = (sym("hbar") * sym("Omega_T") * N0 + sym("hbar") * sym("alpha") * N0 ** 2
                + sym("hbar") * sym("Omega_z") * Fraction(1, 2)
                - sym("hbar") * sym("Omega") * N0)
    assert f0.coefficient == ScalarRational(expected)


def test_rotating_frame_static_input_unchanged(rabi_spec):
    h = rabi_spec.hamiltonian()
    assert rotating_frame(h, ScalarSymbol("Omega_d")) == h


def test_rotating_frame_rejects_mismatched_harmonic():
    bad = OperatorSum(SIG, [OperatorTerm(ScalarRational(sym("g")), (1,), (0,), (1,), 2, 1)])
    with pytest.raises(NotCoRotating):
        rotating_frame(bad, ScalarSymbol("Omega"))


# ----------------------------------------------------------------------
# numeric dispersive shift
# ----------------------------------------------------------------------

def test_numeric_shift_agrees_with_closed_form(toy_spec):
    bind = {"hbar": 1.0, "Omega_T": 1.0, "Omega_z": 0.5, "alpha": 0.0,
            "g": 1e-3, "Omega": 2.0}
    ctx = NumericContext(truncation=40, bindings=bind)
    value = dispersive_shift_numeric(toy_spec.hamiltonian(), ctx, 2,
                                     toy_spec.fundamental)
    closed = 4 * 2 * bind["g"] ** 2 * bind["Omega_z"] / abs(
        bind["Omega_z"] ** 2 - (bind["Omega_T"] - bind["Omega"]) ** 2)
    assert value == pytest.approx(closed, rel=1e-4)


def test_numeric_shift_vanishes_without_coupling(toy_spec):
    bind = {"hbar": 1.0, "Omega_T": 1.0, "Omega_z": 0.5, "alpha": 0.0,
            "g": 0.0, "Omega": 2.0}
    ctx = NumericContext(truncation=20, bindings=bind)
    assert dispersive_shift_numeric(toy_spec.hamiltonian(), ctx, 2,
                                    toy_spec.fundamental) == pytest.approx(0.0, abs=1e-12)


def test_numeric_shift_ambiguous_on_resonance(toy_spec):
    # drive tuned onto the gap with coupling comparable to the detuning:
    # the resonant chain spreads every label's weight below one half
    bind = {"hbar": 1.0, "Omega_T": 1.0, "Omega_z": 0.5, "alpha": 0.0,
            "g": 0.3, "Omega": 0.5}
    ctx = NumericContext(truncation=30, bindings=bind)
    with pytest.raises(AssignmentAmbiguous):
        dispersive_shift_numeric(toy_spec.hamiltonian(), ctx, 2,
                                 toy_spec.fundamental)


# ----------------------------------------------------------------------
# matrix -> canonical terms
# ----------------------------------------------------------------------

def test_decompose_number_operator():
    number = boson_on_both(N0, (0,))
    ctx = NumericContext(truncation=6)
    rebuilt = decompose_matrix(materialize(number, ctx), SIG, 6)
    keys = {c.key() for c in channels(rebuilt)}
    assert keys == {((0,), (0,), (0,), 0), ((1,), (1,), (0,), 0)}
    for c in channels(rebuilt):
        assert c.coefficient == ScalarRational(N0)


def test_decompose_transverse_coupling():
    g = 0.37
    coupling = OperatorSum(SIG, [
        OperatorTerm(ScalarRational(Polynomial.constant(Fraction(37, 100))),
                     delta, bra, ket)
        for delta, bra, ket in (((1,), (0,), (1,)), ((1,), (1,), (0,)),
                                ((-1,), (0,), (1,)), ((-1,), (1,), (0,)))])
    ctx = NumericContext(truncation=6)
    source = materialize(coupling, ctx)
    rebuilt = decompose_matrix(source, SIG, 6)
    assert {c.key() for c in channels(rebuilt)} == {
        ((0,), (1,), (1,), 0), ((1,), (0,), (1,), 0),
        ((0,), (1,), (-1,), 0), ((1,), (0,), (-1,), 0)}
    assert np.abs(materialize(rebuilt, ctx) - source).max() < 1e-13


def test_decompose_random_hermitian_round_trip():
    rng = np.random.default_rng(4)
    ctx = NumericContext(truncation=6)
    dim = 14
    for _ in range(5):
        raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        m = (raw + raw.conj().T) / 2
        ops = decompose_matrix(m, SIG, 6)
        back = materialize(ops, ctx)
        assert np.abs(back - m).max() < 1e-12


def test_decompose_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        decompose_matrix(np.zeros((5, 5)), SIG, 6)


# ----------------------------------------------------------------------
# matrix-element identity
# ----------------------------------------------------------------------

def test_matrix_element_identity_static(rabi_spec, rabi_bindings):
    h0, v = rabi_spec.h0_sum(), rabi_spec.perturbation_sum()
    s = solve_generator_static(h0, v)
    ctx = NumericContext(truncation=30, bindings=rabi_bindings)
    assert matrix_element_check(h0, s, v, ctx) < 1e-10


def test_matrix_element_zero_operators(rabi_spec, rabi_bindings):
    h0 = rabi_spec.h0_sum()
    zero = OperatorSum.zero(SIG)
    ctx = NumericContext(truncation=20, bindings=rabi_bindings)
    assert matrix_element_check(h0, zero, zero, ctx) == 0.0


def test_matrix_element_degenerate_spectrum_detected(rabi_bindings):
    f = sym("Omega") * N0
    h0 = OperatorSum(SIG, [OperatorTerm(ScalarRational(f), (0,), (0,), (0,)),
                           OperatorTerm(ScalarRational(f), (0,), (1,), (1,))])
    zero = OperatorSum.zero(SIG)
    ctx = NumericContext(truncation=12, bindings=rabi_bindings)
    with pytest.raises(DegenerateSpectrum):
        matrix_element_check(h0, zero, zero, ctx)


def test_matrix_element_identity_periodic(toy_spec, toy_bindings):
    from swgen import solve_generator_periodic
    h0, v = toy_spec.h0_sum(), toy_spec.perturbation_sum()
    s = solve_generator_periodic(h0, v, toy_spec.fundamental)
    ctx = NumericContext(truncation=30, bindings=toy_bindings)
    assert matrix_element_check(h0, s, v, ctx, toy_spec.fundamental) < 1e-10
