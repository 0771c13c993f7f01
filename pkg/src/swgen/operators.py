"""Canonical operator algebra on finite (x) bosonic Hilbert spaces.

Every operator is a sum of terms  c(N) * i^phi * a^Delta * |mu><nu| * e^{i n W t}
with the coefficient function written to the left of the ladder factors, one
signed ladder power per mode (positive = annihilation, negative = creation),
and an explicit imaginary-unit flag so coefficients stay real-rational.
Products, commutators and adjoints are exact rewrites grounded in
a a^dag = N + 1 and a^dag a = N applied one ladder letter at a time.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import ValidationError
from .scalars import Polynomial, ScalarRational, ScalarSymbol


@dataclass(frozen=True)
class HilbertSignature:
    """Shape of the composite space: finite subspace dims, bosonic mode count.

    ``blocks`` optionally partitions the flattened finite basis states into
    energy blocks; by default every finite multi-index is its own block.
    """

    finite_dims: tuple
    bosonic_modes: int
    blocks: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "finite_dims", tuple(int(d) for d in self.finite_dims))
        if any(d < 2 for d in self.finite_dims):
            raise ValidationError("finite subspace dimensions must be >= 2")
        if self.bosonic_modes < 0:
            raise ValidationError("bosonic mode count must be >= 0")
        if self.blocks is not None:
            blocks = tuple(tuple(int(i) for i in b) for b in self.blocks)
            seen = sorted(i for b in blocks for i in b)
            if seen != list(range(self.finite_dim())):
                raise ValidationError("blocks must partition the flattened finite states")
            object.__setattr__(self, "blocks", blocks)

    def finite_dim(self) -> int:
        total = 1
        for d in self.finite_dims:
            total *= d
        return total

    def finite_states(self):
        return itertools.product(*(range(d) for d in self.finite_dims))

    def flat_finite(self, mu: Sequence[int]) -> int:
        idx = 0
        for k, d in zip(mu, self.finite_dims):
            idx = idx * d + k
        return idx

    def block_label(self, mu: Sequence[int]) -> int:
        flat = self.flat_finite(mu)
        if self.blocks is None:
            return flat
        for label, members in enumerate(self.blocks):
            if flat in members:
                return label
        raise ValidationError(f"finite state {tuple(mu)} missing from the block partition")

    def validate_indices(self, bra, ket, delta):
        if len(bra) != len(self.finite_dims) or len(ket) != len(self.finite_dims):
            raise ValidationError("finite multi-index length mismatch")
        for k, (b, kk, d) in enumerate(zip(bra, ket, self.finite_dims)):
            if not (0 <= b < d and 0 <= kk < d):
                raise ValidationError(
                    f"finite index out of range in subspace {k}: ({b},{kk}) with dim {d}")
        if len(delta) != self.bosonic_modes:
            raise ValidationError("ladder power tuple length must equal the mode count")


@dataclass(frozen=True)
class OperatorTerm:
    """One canonical summand; see module docstring for the normal form."""

    coeff: ScalarRational
    delta: tuple
    bra: tuple
    ket: tuple
    harmonic: int = 0
    order: int = 0
    imag: bool = False

    def __post_init__(self):
        object.__setattr__(self, "delta", tuple(int(d) for d in self.delta))
        object.__setattr__(self, "bra", tuple(int(i) for i in self.bra))
        object.__setattr__(self, "ket", tuple(int(i) for i in self.ket))
        if self.order < 0:
            raise ValidationError("perturbation order must be >= 0")

    def key(self):
        return (self.delta, self.bra, self.ket, self.harmonic, self.order, self.imag)

    def channel_key(self):
        return (self.bra, self.ket, self.delta, self.harmonic)

    def dagger(self) -> "OperatorTerm":
        coeff = self.coeff.shift_all(-d for d in self.delta)
        if self.imag:
            coeff = -coeff
        return OperatorTerm(coeff=coeff,
                            delta=tuple(-d for d in self.delta),
                            bra=self.ket, ket=self.bra,
                            harmonic=-self.harmonic,
                            order=self.order, imag=self.imag)


def _ladder_product(d_left: int, d_right: int, mode: int):
    """Reduce a^{d_left} a^{d_right} (signed powers) to (poly(N_mode), d_left+d_right).

    Absorbs the right factor one elementary ladder letter at a time using
    a a^dag = N + 1 and a^dag a = N; never produces more than one term.
    """
    poly = Polynomial.constant(1)
    d = d_left
    letters = abs(d_right)
    lowering = d_right > 0
    n_sym = Polynomial.number_op(mode)
    for _ in range(letters):
        if lowering:
            if d < 0:
                poly = poly * (n_sym + Polynomial.constant(d + 1))
            d += 1
        else:
            if d > 0:
                poly = poly * (n_sym + Polynomial.constant(d))
            d -= 1
    return poly, d


def _term_product(a: OperatorTerm, b: OperatorTerm) -> Optional[OperatorTerm]:
    if a.ket != b.bra:
        return None
    coeff = a.coeff * b.coeff.shift_all(a.delta)
    delta = []
    for mode, (da, db) in enumerate(zip(a.delta, b.delta)):
        poly, d = _ladder_product(da, db, mode)
        if not poly.is_constant() or poly.constant_value() != 1:
            coeff = coeff * poly
        delta.append(d)
    imag = a.imag != b.imag
    if a.imag and b.imag:
        coeff = -coeff
    if coeff.is_zero():
        return None
    return OperatorTerm(coeff=coeff, delta=tuple(delta), bra=a.bra, ket=b.ket,
                        harmonic=a.harmonic + b.harmonic,
                        order=a.order + b.order, imag=imag)


class OperatorSum:
    """Canonical multiset of terms keyed by (delta, bra, ket, harmonic, order, imag)."""

    __slots__ = ("signature", "terms")

    def __init__(self, signature: HilbertSignature, terms: Iterable[OperatorTerm] = ()):
        merged = {}
        for term in terms:
            signature.validate_indices(term.bra, term.ket, term.delta)
            key = term.key()
            if key in merged:
                coeff = merged[key].coeff + term.coeff
                if coeff.is_zero():
                    del merged[key]
                else:
                    merged[key] = OperatorTerm(coeff, term.delta, term.bra, term.ket,
                                               term.harmonic, term.order, term.imag)
            elif not term.coeff.is_zero():
                merged[key] = term
        object.__setattr__(self, "signature", signature)
        object.__setattr__(self, "terms", merged)

    def __setattr__(self, *_):
        raise AttributeError("OperatorSum is immutable")

    @staticmethod
    def zero(signature: HilbertSignature) -> "OperatorSum":
        return OperatorSum(signature, ())

    def sorted_terms(self):
        return [self.terms[k] for k in sorted(self.terms)]

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self):
        return len(self.terms)

    def _check_same_space(self, other: "OperatorSum"):
        if self.signature != other.signature:
            raise ValidationError("operands live on different Hilbert signatures")

    # -- linear structure ------------------------------------------------
    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        self._check_same_space(other)
        return OperatorSum(self.signature,
                           list(self.terms.values()) + list(other.terms.values()))

    def __sub__(self, other: "OperatorSum") -> "OperatorSum":
        return self + (-other)

    def __neg__(self) -> "OperatorSum":
        return self.map_coeffs(lambda t: -t.coeff)

    def map_coeffs(self, fn) -> "OperatorSum":
        return OperatorSum(self.signature,
                           (OperatorTerm(fn(t), t.delta, t.bra, t.ket, t.harmonic,
                                         t.order, t.imag)
                            for t in self.terms.values()))

    def scale(self, factor) -> "OperatorSum":
        """Multiply every coefficient by a Fraction/Polynomial/ScalarRational."""
        return self.map_coeffs(lambda t: t.coeff * factor)

    def scale_imag(self) -> "OperatorSum":
        """Multiply by the imaginary unit (structural: flips flags, signs)."""
        out = []
        for t in self.terms.values():
            if t.imag:
                out.append(OperatorTerm(-t.coeff, t.delta, t.bra, t.ket, t.harmonic,
                                        t.order, False))
            else:
                out.append(OperatorTerm(t.coeff, t.delta, t.bra, t.ket, t.harmonic,
                                        t.order, True))
        return OperatorSum(self.signature, out)

    # -- multiplicative structure ----------------------------------------
    def __matmul__(self, other: "OperatorSum") -> "OperatorSum":
        self._check_same_space(other)
        out = []
        for ta in self.terms.values():
            for tb in other.terms.values():
                prod = _term_product(ta, tb)
                if prod is not None:
                    out.append(prod)
        return OperatorSum(self.signature, out)

    def dagger(self) -> "OperatorSum":
        return OperatorSum(self.signature, (t.dagger() for t in self.terms.values()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorSum):
            return NotImplemented
        if self.signature != other.signature:
            return False
        return (self - other).is_zero()

    def __hash__(self):
        return hash((self.signature, frozenset(self.terms)))

    # -- structure queries -------------------------------------------------
    def filter(self, predicate) -> "OperatorSum":
        return OperatorSum(self.signature,
                           (t for t in self.terms.values() if predicate(t)))

    def order_part(self, order: int) -> "OperatorSum":
        return self.filter(lambda t: t.order == order)

    def max_order(self) -> int:
        return max((t.order for t in self.terms.values()), default=0)

    def max_abs_delta(self) -> int:
        best = 0
        for t in self.terms.values():
            for d in t.delta:
                best = max(best, abs(d))
        return best

    def harmonics(self) -> set:
        return {t.harmonic for t in self.terms.values()}

    def symbols(self) -> set:
        out = set()
        for t in self.terms.values():
            out |= t.coeff.symbols()
        return out

    def is_diagonal(self) -> bool:
        return all(t.bra == t.ket and t.harmonic == 0 and all(d == 0 for d in t.delta)
                   for t in self.terms.values())

    def __str__(self):
        return render_text(self)

    def __repr__(self):
        return f"OperatorSum({render_text(self)})"


def normal_order_product(a: OperatorTerm, b: OperatorTerm,
                         signature: HilbertSignature) -> OperatorSum:
    """Product of two canonical terms, rewritten to canonical form."""
    prod = _term_product(a, b)
    return OperatorSum(signature, [prod] if prod is not None else [])


def commutator(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    return a @ b - b @ a


def dagger(a: OperatorSum) -> OperatorSum:
    return a.dagger()


def is_hermitian(a: OperatorSum) -> bool:
    return (a - a.dagger()).is_zero()


def is_antihermitian(a: OperatorSum) -> bool:
    return (a + a.dagger()).is_zero()


def time_derivative(a: OperatorSum, fundamental: ScalarSymbol) -> OperatorSum:
    """d/dt applied to the harmonic factors: each term picks up i * n * W.

    The imaginary unit is tracked structurally (flag flip), keeping the
    coefficient field real.
    """
    omega = Polynomial.symbol(fundamental)
    out = []
    for t in a.terms.values():
        if t.harmonic == 0:
            continue
        coeff = t.coeff * omega * Fraction(t.harmonic)
        if t.imag:
            out.append(OperatorTerm(-coeff, t.delta, t.bra, t.ket, t.harmonic,
                                    t.order, False))
        else:
            out.append(OperatorTerm(coeff, t.delta, t.bra, t.ket, t.harmonic,
                                    t.order, True))
    return OperatorSum(a.signature, out)


@dataclass(frozen=True)
class Channel:
    """All terms sharing one (bra, ket, delta, harmonic) key."""

    bra: tuple
    ket: tuple
    delta: tuple
    harmonic: int
    terms: tuple

    def key(self):
        return (self.bra, self.ket, self.delta, self.harmonic)

    @property
    def coefficient(self) -> ScalarRational:
        """Summed coefficient; only defined when no imaginary parts mix in."""
        if any(t.imag for t in self.terms):
            raise ValidationError("channel carries an imaginary component")
        total = ScalarRational.zero()
        for t in self.terms:
            total = total + t.coeff
        return total


def channels(a: OperatorSum):
    """Lossless decomposition by (bra, ket, delta, harmonic); concatenation
    of the channel terms reconstructs the operator."""
    groups = {}
    for t in a.sorted_terms():
        groups.setdefault(t.channel_key(), []).append(t)
    return [Channel(bra=k[0], ket=k[1], delta=k[2], harmonic=k[3], terms=tuple(v))
            for k, v in sorted(groups.items())]


# ----------------------------------------------------------------------
# rendering (deterministic term order everywhere)
# ----------------------------------------------------------------------

def _ladder_text(delta):
    parts = []
    for mode, d in enumerate(delta):
        if d > 0:
            parts.append(f"a{mode}" + (f"^{d}" if d > 1 else ""))
        elif d < 0:
            parts.append(f"ad{mode}" + (f"^{-d}" if d < -1 else ""))
    return "*".join(parts)


def render_text(a: OperatorSum) -> str:
    if a.is_zero():
        return "0"
    pieces = []
    for t in a.sorted_terms():
        factors = []
        if t.imag:
            factors.append("i")
        factors.append(f"({t.coeff})")
        ladder = _ladder_text(t.delta)
        if ladder:
            factors.append(ladder)
        mu = ",".join(str(i) for i in t.bra)
        nu = ",".join(str(i) for i in t.ket)
        factors.append(f"sigma[{mu}|{nu}]")
        if t.harmonic:
            sign = "+" if t.harmonic > 0 else "-"
            n = abs(t.harmonic)
            factors.append(f"e^({sign}{n if n > 1 else ''}iWt)")
        pieces.append("*".join(factors))
    return "  +  ".join(pieces)


_LATEX_NAMES = {
    "alpha": r"\alpha", "beta": r"\beta", "gamma": r"\gamma", "delta": r"\delta",
    "epsilon": r"\epsilon", "eta": r"\eta", "theta": r"\theta", "kappa": r"\kappa",
    "lambda": r"\lambda", "mu": r"\mu", "nu": r"\nu", "xi": r"\xi", "pi": r"\pi",
    "rho": r"\rho", "sigma": r"\sigma", "tau": r"\tau", "phi": r"\phi",
    "chi": r"\chi", "psi": r"\psi", "omega": r"\omega", "Gamma": r"\Gamma",
    "Delta": r"\Delta", "Theta": r"\Theta", "Lambda": r"\Lambda", "Xi": r"\Xi",
    "Pi": r"\Pi", "Sigma": r"\Sigma", "Phi": r"\Phi", "Psi": r"\Psi",
    "Omega": r"\Omega", "hbar": r"\hbar",
}


def latex_symbol(name: str) -> str:
    if name.startswith("N") and name[1:].isdigit():
        return f"N_{{{name[1:]}}}"
    head, _, sub = name.partition("_")
    out = _LATEX_NAMES.get(head, head)
    if sub:
        out += f"_{{{sub}}}"
    return out


def _poly_latex(p: Polynomial) -> str:
    from .scalars import _monomial_key  # deterministic order shared with __str__
    if p.is_zero():
        return "0"
    parts = []
    for mono in sorted(p.terms, key=_monomial_key, reverse=True):
        coeff = p.terms[mono]
        factors = []
        for sym, e in mono:
            s = latex_symbol(sym.name)
            factors.append(f"{s}^{{{e}}}" if e > 1 else s)
        body = " ".join(factors)
        if not factors:
            parts.append(_frac_latex(coeff))
        elif coeff == 1:
            parts.append(body)
        elif coeff == -1:
            parts.append("-" + body)
        else:
            parts.append(_frac_latex(coeff) + " " + body)
    return " + ".join(parts).replace("+ -", "- ")


def _frac_latex(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    sign = "-" if q < 0 else ""
    return rf"{sign}\tfrac{{{abs(q.numerator)}}}{{{q.denominator}}}"


def _coeff_latex(c: ScalarRational) -> str:
    num = _poly_latex(c.num)
    if not c.den:
        return num if len(c.num.terms) == 1 else rf"\left({num}\right)"
    den = " ".join(rf"\left({_poly_latex(f)}\right)" + (f"^{{{p}}}" if p > 1 else "")
                   for f, p in c.den)
    return rf"\frac{{{num}}}{{{den}}}"


def render_latex(a: OperatorSum) -> str:
    if a.is_zero():
        return "0"
    pieces = []
    for t in a.sorted_terms():
        factors = []
        if t.imag:
            factors.append("i")
        factors.append(_coeff_latex(t.coeff))
        for mode, d in enumerate(t.delta):
            if d > 0:
                factors.append(f"a_{{{mode}}}" + (f"^{{{d}}}" if d > 1 else ""))
            elif d < 0:
                factors.append(rf"a_{{{mode}}}^{{\dagger {-d if d < -1 else ''}}}".replace(" }", "}"))
        mu = "".join(str(i) for i in t.bra)
        nu = "".join(str(i) for i in t.ket)
        factors.append(rf"\sigma_{{{mu},{nu}}}")
        if t.harmonic:
            n = t.harmonic
            coeff = {1: "", -1: "-"}.get(n, str(n))
            factors.append(rf"e^{{{coeff}i\Omega t}}")
        pieces.append(" ".join(factors))
    return " + ".join(pieces)


def to_json_terms(a: OperatorSum) -> list:
    """JSON-serializable term list (deterministic order)."""
    out = []
    for t in a.sorted_terms():
        out.append({
            "coeff": str(t.coeff),
            "delta": list(t.delta),
            "bra": list(t.bra),
            "ket": list(t.ket),
            "harmonic": t.harmonic,
            "order": t.order,
            "imag": t.imag,
        })
    return out


def render_json(a: OperatorSum) -> str:
    return json.dumps(to_json_terms(a), indent=2, sort_keys=True)
