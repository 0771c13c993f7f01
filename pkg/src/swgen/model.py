"""Declarative TOML model files and their validated in-memory form.

A model file declares the Hilbert signature, the scalar parameters, an
optional drive, the diagonal unperturbed energies per finite state, and the
perturbation terms (with optional Pauli sugar and automatic hermitian
conjugates).  Parsing is lossless: ``render_model(parse_model(path))`` parses
back to an equal model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml

from .errors import ParseError, ValidationError
from .operators import HilbertSignature, OperatorSum, OperatorTerm
from .scalars import ScalarRational, ScalarSymbol, parse_expression
from .swt import HBAR, EliminatorMask

_PAULI_NAMES = ("sigma_x", "sigma_y", "sigma_z", "sigma_plus", "sigma_minus")


@dataclass(frozen=True)
class PerturbationEntry:
    order: int
    coeff_text: str
    delta: tuple
    harmonic: int
    hermitian_conjugate: bool
    bra: Optional[tuple] = None
    ket: Optional[tuple] = None
    finite: Optional[str] = None
    qubit: int = 0


@dataclass(frozen=True)
class ModelSpec:
    """Validated model: signature, symbols, energies, perturbations, settings."""

    signature: HilbertSignature
    parameters: tuple
    fundamental: Optional[ScalarSymbol]
    h0_entries: tuple          # ((state, energy_text), ...)
    perturbations: tuple       # (PerturbationEntry, ...)
    swt_order: int
    hbar_binding: float
    mask_name: str

    # -- symbol resolution -------------------------------------------------
    def resolve(self, name: str) -> ScalarSymbol:
        if name == "hbar":
            return HBAR
        if name.startswith("N") and name[1:].isdigit():
            mode = int(name[1:])
            if mode >= self.signature.bosonic_modes:
                raise ValidationError(
                    f"number operator {name} exceeds the mode count "
                    f"{self.signature.bosonic_modes}")
            return ScalarSymbol.number(mode)
        if self.fundamental is not None and name == self.fundamental.name:
            return self.fundamental
        if name in self.parameters:
            return ScalarSymbol(name)
        raise KeyError(name)

    def _parse_coeff(self, text: str, context: str) -> ScalarRational:
        try:
            return parse_expression(text, self.resolve)
        except ParseError as exc:
            raise ParseError(f"{context}: {exc}") from None

    # -- operator assembly ---------------------------------------------------
    def h0_sum(self) -> OperatorSum:
        terms = []
        for state, text in self.h0_entries:
            coeff = self._parse_coeff(text, f"h0 entry for state {list(state)}")
            if not coeff.is_polynomial():
                raise ValidationError(
                    f"h0 entry for state {list(state)} must be polynomial in N")
            if coeff.is_zero():
                continue
            terms.append(OperatorTerm(coeff, (0,) * self.signature.bosonic_modes,
                                      state, state, 0, 0, False))
        return OperatorSum(self.signature, terms)

    def _finite_parts(self, entry: PerturbationEntry):
        """Expand one entry's finite content into (bra, ket, sign, imag) tuples."""
        if entry.finite is None:
            return [(entry.bra, entry.ket, 1, False)]
        k = entry.qubit
        dims = self.signature.finite_dims
        if k < 0 or k >= len(dims):
            raise ValidationError(f"qubit index {k} out of range")
        if dims[k] != 2:
            raise ValidationError(
                f"Pauli sugar needs a two-dimensional subspace, dim {dims[k]} given")
        others = [range(d) for i, d in enumerate(dims) if i != k]
        import itertools
        pairs = {
            "sigma_x": [((0, 1), 1, False), ((1, 0), 1, False)],
            "sigma_y": [((0, 1), -1, True), ((1, 0), 1, True)],
            "sigma_z": [((0, 0), 1, False), ((1, 1), -1, False)],
            "sigma_plus": [((0, 1), 1, False)],
            "sigma_minus": [((1, 0), 1, False)],
        }[entry.finite]
        out = []
        for rest in itertools.product(*others):
            def full(index):
                state = list(rest)
                state.insert(k, index)
                return tuple(state)
            for (b, kt), sign, imag in pairs:
                out.append((full(b), full(kt), sign, imag))
        return out

    def perturbation_sum(self) -> OperatorSum:
        terms = []
        for i, entry in enumerate(self.perturbations):
            coeff = self._parse_coeff(entry.coeff_text, f"perturbation {i}")
            if entry.harmonic != 0 and self.fundamental is None:
                raise ValidationError(
                    f"perturbation {i} has a harmonic but no fundamental is declared")
            for bra, ket, sign, imag in self._finite_parts(entry):
                term = OperatorTerm(coeff * sign, entry.delta, bra, ket,
                                    entry.harmonic, entry.order, imag)
                terms.append(term)
                if entry.hermitian_conjugate:
                    terms.append(term.dagger())
        return OperatorSum(self.signature, terms)

    def hamiltonian(self) -> OperatorSum:
        return self.h0_sum() + self.perturbation_sum()

    def mask(self) -> EliminatorMask:
        if self.mask_name == "cross-block":
            return EliminatorMask.cross_block(self.signature)
        raise ValidationError(f"unknown mask {self.mask_name!r}")

    def default_bindings(self) -> Dict[str, float]:
        return {"hbar": self.hbar_binding}


def _expect(table: dict, key: str, types, context: str, default=None, required=False):
    if key not in table:
        if required:
            raise ValidationError(f"{context}: missing required key {key!r}")
        return default
    value = table[key]
    if not isinstance(value, types):
        raise ValidationError(f"{context}: key {key!r} has the wrong type")
    return value


def _int_list(values, context: str) -> tuple:
    if not isinstance(values, list) or not all(isinstance(v, int) for v in values):
        raise ValidationError(f"{context}: expected a list of integers")
    return tuple(values)


def parse_model_text(text: str, source: str = "<string>") -> ModelSpec:
    try:
        data = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ParseError(f"{source}: {exc}") from None

    known = {"hilbert", "symbols", "drive", "h0", "perturbation", "swt"}
    for key in data:
        if key not in known:
            raise ValidationError(f"{source}: unknown table {key!r}")

    hilbert = _expect(data, "hilbert", dict, source, required=True)
    finite_dims = _int_list(_expect(hilbert, "finite_dims", list, "[hilbert]",
                                    required=True), "[hilbert].finite_dims")
    modes = _expect(hilbert, "bosonic_modes", int, "[hilbert]", required=True)
    blocks_raw = _expect(hilbert, "blocks", list, "[hilbert]")
    blocks = None
    if blocks_raw is not None:
        blocks = tuple(_int_list(b, "[hilbert].blocks") for b in blocks_raw)
    signature = HilbertSignature(finite_dims, modes, blocks)

    symbols = _expect(data, "symbols", dict, source, default={})
    parameters = tuple(_expect(symbols, "parameters", list, "[symbols]", default=[]))
    for name in parameters:
        if not isinstance(name, str):
            raise ValidationError("[symbols].parameters must be strings")
        ScalarSymbol(name)  # validates the name is not reserved

    fundamental = None
    drive = _expect(data, "drive", dict, source)
    if drive is not None:
        fname = _expect(drive, "fundamental", str, "[drive]", required=True)
        if fname in parameters:
            raise ValidationError(
                f"fundamental {fname!r} must not repeat in [symbols].parameters")
        fundamental = ScalarSymbol(fname)

    h0_entries = []
    seen_states = set()
    for i, entry in enumerate(data.get("h0", [])):
        ctx = f"[[h0]] entry {i}"
        state = _int_list(_expect(entry, "state", list, ctx, required=True), ctx)
        if state in seen_states:
            raise ValidationError(f"{ctx}: duplicate state {list(state)}")
        seen_states.add(state)
        energy = _expect(entry, "energy", str, ctx, required=True)
        h0_entries.append((state, energy))

    perturbations = []
    for i, entry in enumerate(data.get("perturbation", [])):
        ctx = f"[[perturbation]] entry {i}"
        delta = _int_list(_expect(entry, "delta", list, ctx,
                                  default=[0] * modes), ctx)
        finite = _expect(entry, "finite", str, ctx)
        bra = ket = None
        if finite is None:
            bra = _int_list(_expect(entry, "bra", list, ctx, required=True), ctx)
            ket = _int_list(_expect(entry, "ket", list, ctx, required=True), ctx)
        elif finite not in _PAULI_NAMES:
            raise ValidationError(f"{ctx}: unknown finite operator {finite!r}")
        elif "bra" in entry or "ket" in entry:
            raise ValidationError(f"{ctx}: give either finite= or bra=/ket=, not both")
        perturbations.append(PerturbationEntry(
            order=_expect(entry, "order", int, ctx, default=1),
            coeff_text=_expect(entry, "coeff", str, ctx, required=True),
            delta=delta,
            harmonic=_expect(entry, "harmonic", int, ctx, default=0),
            hermitian_conjugate=_expect(entry, "hermitian_conjugate", bool, ctx,
                                        default=False),
            bra=bra, ket=ket, finite=finite,
            qubit=_expect(entry, "qubit", int, ctx, default=0),
        ))

    swt = _expect(data, "swt", dict, source, default={})
    spec = ModelSpec(
        signature=signature,
        parameters=parameters,
        fundamental=fundamental,
        h0_entries=tuple(h0_entries),
        perturbations=tuple(perturbations),
        swt_order=_expect(swt, "order", int, "[swt]", default=2),
        hbar_binding=float(_expect(swt, "hbar", (int, float), "[swt]", default=1.0)),
        mask_name=_expect(swt, "mask", str, "[swt]", default="cross-block"),
    )
    # building the operators runs every remaining validation (indices, symbols)
    spec.hamiltonian()
    if spec.swt_order < 0:
        raise ValidationError("[swt].order must be >= 0")
    return spec


def parse_model(path) -> ModelSpec:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ValidationError(f"cannot read model file: {exc}") from None
    return parse_model_text(text, source=str(path))


def render_model(spec: ModelSpec) -> str:
    """Deterministic TOML serialization; parses back to an equal ModelSpec."""
    lines = ["[hilbert]",
             f"finite_dims = {list(spec.signature.finite_dims)}",
             f"bosonic_modes = {spec.signature.bosonic_modes}"]
    if spec.signature.blocks is not None:
        lines.append(f"blocks = {[list(b) for b in spec.signature.blocks]}")
    lines += ["", "[symbols]",
              "parameters = [" + ", ".join(f'"{p}"' for p in spec.parameters) + "]"]
    if spec.fundamental is not None:
        lines += ["", "[drive]", f'fundamental = "{spec.fundamental.name}"']
    for state, energy in spec.h0_entries:
        lines += ["", "[[h0]]",
                  f"state = {list(state)}",
                  f'energy = "{energy}"']
    for entry in spec.perturbations:
        lines += ["", "[[perturbation]]",
                  f"order = {entry.order}",
                  f'coeff = "{entry.coeff_text}"',
                  f"delta = {list(entry.delta)}"]
        if entry.finite is not None:
            lines.append(f'finite = "{entry.finite}"')
            if entry.qubit:
                lines.append(f"qubit = {entry.qubit}")
        else:
            lines.append(f"bra = {list(entry.bra)}")
            lines.append(f"ket = {list(entry.ket)}")
        if entry.harmonic:
            lines.append(f"harmonic = {entry.harmonic}")
        if entry.hermitian_conjugate:
            lines.append("hermitian_conjugate = true")
    lines += ["", "[swt]",
              f"order = {spec.swt_order}",
              f"hbar = {spec.hbar_binding}",
              f'mask = "{spec.mask_name}"', ""]
    return "\n".join(lines)
