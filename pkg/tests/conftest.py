import pathlib

import pytest

from swgen import parse_model

MODELS = pathlib.Path(__file__).resolve().parent.parent / "models"


@pytest.fixture(scope="session")
def toy_spec():
    return parse_model(MODELS / "toy.toml")


@pytest.fixture(scope="session")
def rabi_spec():
    return parse_model(MODELS / "rabi.toml")


@pytest.fixture(scope="session")
def two_qubit_spec():
    return parse_model(MODELS / "two_qubit.toml")


TOY_BINDINGS = {"hbar": 1.0, "Omega_T": 1.0, "Omega_z": 0.5, "alpha": 0.4,
                "g": 0.02, "Omega": 2.77}
RABI_BINDINGS = {"hbar": 1.0, "Omega": 1.0, "Omega_z": 0.37, "g": 0.03}
TWO_QUBIT_BINDINGS = {"hbar": 1.0, "Omega_r": 1.0, "Omega_z1": 0.43,
                      "Omega_z2": 0.61, "g1": 0.02, "g2": 0.015}


@pytest.fixture(scope="session")
def toy_bindings():
    return dict(TOY_BINDINGS)


@pytest.fixture(scope="session")
def rabi_bindings():
    return dict(RABI_BINDINGS)


@pytest.fixture(scope="session")
def two_qubit_bindings():
    return dict(TWO_QUBIT_BINDINGS)
