import pytest

from swgen import (ParseError, Polynomial, ScalarRational, ScalarSymbol,
                   ValidationError, channels, effective_hamiltonian,
                   is_hermitian, parse_model_text, render_model)
from swgen.model import parse_model

TOY_TEXT = """
[hilbert]
finite_dims = [2]
bosonic_modes = 1

[symbols]
parameters = ["Omega_T", "Omega_z", "alpha", "g"]

[drive]
fundamental = "Omega"

[[h0]]
state = [0]
energy = "hbar*Omega_T*N0 + hbar*alpha*N0^2 + hbar*Omega_z/2"

[[h0]]
state = [1]
energy = "hbar*Omega_T*N0 + hbar*alpha*N0^2 - hbar*Omega_z/2"

[[perturbation]]
order = 1
coeff = "g"
delta = [1]
finite = "sigma_x"
harmonic = 1
hermitian_conjugate = true

[swt]
order = 2
hbar = 1.0
"""


def test_parse_toy_model_channels():
    spec = parse_model_text(TOY_TEXT)
    assert spec.signature.finite_dims == (2,)
    assert spec.fundamental == ScalarSymbol("Omega")
    assert spec.swt_order == 2
    v = spec.perturbation_sum()
    keys = {c.key() for c in channels(v)}
    assert keys == {((0,), (1,), (1,), 1), ((1,), (0,), (1,), 1),
                    ((0,), (1,), (-1,), -1), ((1,), (0,), (-1,), -1)}
    assert is_hermitian(v)
    assert all(t.order == 1 for t in v.terms.values())


def test_missing_h0_entries_default_to_zero():
    text = TOY_TEXT.replace('[[h0]]\nstate = [1]\nenergy = "hbar*Omega_T*N0 + hbar*alpha*N0^2 - hbar*Omega_z/2"\n\n', "")
    spec = parse_model_text(text)
    h0 = spec.h0_sum()
    assert {c.key() for c in channels(h0)} == {((0,), (0,), (0,), 0)}


def test_empty_perturbation_list_is_valid():
    text = "\n".join(line for line in TOY_TEXT.splitlines()
                     if True)
    text = text.split("[[perturbation]]")[0] + "[swt]\norder = 2\n"
    spec = parse_model_text(text)
    assert spec.perturbation_sum().is_zero()
    result = effective_hamiltonian(spec.hamiltonian(), spec.mask(), spec.swt_order,
                                   fundamental=spec.fundamental)
    assert result.effective == spec.h0_sum()
    assert result.generators == {}


def test_out_of_range_index_rejected():
    text = TOY_TEXT.replace("state = [1]", "state = [2]")
    with pytest.raises(ValidationError):
        parse_model_text(text)


def test_undeclared_symbol_rejected():
    text = TOY_TEXT.replace('coeff = "g"', 'coeff = "g_typo"')
    with pytest.raises(ParseError):
        parse_model_text(text)


def test_reserved_number_operator_name_rejected():
    text = TOY_TEXT.replace('"alpha"', '"N4"')
    with pytest.raises(ValidationError):
        parse_model_text(text)


def test_number_operator_mode_bounds():
    text = TOY_TEXT.replace("N0", "N1")
    with pytest.raises((ParseError, ValidationError)):
        parse_model_text(text)


def test_toml_syntax_error_is_parse_error():
    with pytest.raises(ParseError):
        parse_model_text("[hilbert\nfinite_dims = [2]")


def test_unknown_table_rejected():
    with pytest.raises(ValidationError):
        parse_model_text(TOY_TEXT + "\n[mystery]\nx = 1\n")


def test_unknown_finite_operator_rejected():
    text = TOY_TEXT.replace('finite = "sigma_x"', 'finite = "sigma_w"')
    with pytest.raises(ValidationError):
        parse_model_text(text)


def test_finite_and_bra_are_exclusive():
    text = TOY_TEXT.replace('finite = "sigma_x"', 'finite = "sigma_x"\nbra = [0]\nket = [1]')
    with pytest.raises(ValidationError):
        parse_model_text(text)


def test_duplicate_h0_state_rejected():
    text = TOY_TEXT.replace("state = [1]", "state = [0]")
    with pytest.raises(ValidationError):
        parse_model_text(text)


def test_nonpolynomial_h0_rejected():
    text = TOY_TEXT.replace('"hbar*Omega_T*N0 + hbar*alpha*N0^2 + hbar*Omega_z/2"',
                            '"1/(Omega_T - N0)"')
    with pytest.raises(ValidationError):
        parse_model_text(text)


def test_sigma_z_desugars_to_diagonal():
    text = TOY_TEXT.replace('finite = "sigma_x"', 'finite = "sigma_z"') \
                   .replace("harmonic = 1", "harmonic = 0") \
                   .replace("delta = [1]", "delta = [0]") \
                   .replace("hermitian_conjugate = true",
                            "hermitian_conjugate = false")
    spec = parse_model_text(text)
    v = spec.perturbation_sum()
    keys = {c.key() for c in channels(v)}
    assert keys == {((0,), (0,), (0,), 0), ((1,), (1,), (0,), 0)}
    coeffs = {c.key(): c.coefficient for c in channels(v)}
    g = ScalarRational(Polynomial.symbol(ScalarSymbol("g")))
    assert coeffs[((0,), (0,), (0,), 0)] == g
    assert coeffs[((1,), (1,), (0,), 0)] == -g


def test_sigma_y_carries_imaginary_flags():
    text = TOY_TEXT.replace('finite = "sigma_x"', 'finite = "sigma_y"')
    spec = parse_model_text(text)
    v = spec.perturbation_sum()
    assert all(t.imag for t in v.terms.values())
    assert is_hermitian(v)


def test_pauli_sugar_needs_two_level_subspace():
    text = TOY_TEXT.replace("finite_dims = [2]", "finite_dims = [3]") \
                   .replace("state = [2]", "state = [2]")
    with pytest.raises(ValidationError):
        parse_model_text(text).perturbation_sum()


def test_qubit_selector_on_multi_register(two_qubit_spec):
    v = two_qubit_spec.perturbation_sum()
    keys = {c.key() for c in channels(v)}
    assert ((0, 0), (1, 0), (1,), 0) in keys       # first qubit raised
    assert ((0, 0), (0, 1), (1,), 0) in keys       # second qubit raised
    assert is_hermitian(v)


def test_render_parse_fixpoint(toy_spec, rabi_spec, two_qubit_spec):
    for spec in (toy_spec, rabi_spec, two_qubit_spec):
        text = render_model(spec)
        again = parse_model_text(text)
        assert again == spec
        assert render_model(again) == text


def test_missing_file_is_validation_error(tmp_path):
    with pytest.raises(ValidationError):
        parse_model(tmp_path / "missing.toml")
