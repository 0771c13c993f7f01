"""Exact scalar coefficients: multivariate polynomials over Q and factored rationals.

Symbols are either real parameters (g, Omega_T, hbar, ...) or number operators
N_j attached to a bosonic mode.  Polynomials are dictionaries from monomials to
``Fraction`` coefficients; rationals keep their denominator as an explicit
multiset of polynomial factors so pole structure stays readable and exact.
All values are immutable and all operations are pure.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional

from .errors import EvalSingular, ParseError, ValidationError, ZeroDenominator

REAL_PARAMETER = "real-parameter"
NUMBER_OPERATOR = "number-operator"

_NUMBER_OP_RE = re.compile(r"^N(\d+)$")


@dataclass(frozen=True)
class ScalarSymbol:
    """A named real scalar: either a model parameter or a number operator N_j."""

    name: str
    kind: str = REAL_PARAMETER
    mode: Optional[int] = None

    def __post_init__(self):
        if self.kind not in (REAL_PARAMETER, NUMBER_OPERATOR):
            raise ValidationError(f"unknown symbol kind {self.kind!r}")
        if self.kind == NUMBER_OPERATOR:
            if self.mode is None or self.mode < 0:
                raise ValidationError("number-operator symbols need a mode index >= 0")
        elif self.mode is not None:
            raise ValidationError("only number-operator symbols carry a mode index")
        if self.kind == REAL_PARAMETER and _NUMBER_OP_RE.match(self.name):
            raise ValidationError(f"{self.name!r} is reserved for number operators")

    @staticmethod
    def number(mode: int) -> "ScalarSymbol":
        return ScalarSymbol(f"N{mode}", NUMBER_OPERATOR, mode)


# A monomial is a tuple of (symbol, positive exponent) pairs sorted by name.
Monomial = tuple

_ONE_MONOMIAL: Monomial = ()


def _monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = {}
    for sym, e in a:
        exps[sym] = exps.get(sym, 0) + e
    for sym, e in b:
        exps[sym] = exps.get(sym, 0) + e
    return tuple(sorted(exps.items(), key=lambda it: it[0].name))


def _inv_name(name: str):
    # encodes a name so tuple comparison inverts string order (sentinel keeps
    # prefixes ordered); needed for a standalone graded-lex monomial key
    return tuple(-ord(c) for c in name) + (1,)


def _monomial_key(m: Monomial):
    """Graded lexicographic key (earlier-named symbols more significant).

    A proper monomial order (total, multiplicative, 1 minimal), so leading
    terms behave under products and exact division is sound.
    """
    return (sum(e for _, e in m), tuple((_inv_name(s.name), e) for s, e in m))


def _monomial_divides(a: Monomial, b: Monomial) -> bool:
    """True when monomial a divides monomial b."""
    need = dict((s, e) for s, e in a)
    for sym, e in b:
        if sym in need:
            need[sym] = need[sym] - min(need[sym], e)
    return all(v == 0 for v in need.values())


def _monomial_div(b: Monomial, a: Monomial) -> Monomial:
    exps = dict((s, e) for s, e in b)
    for sym, e in a:
        exps[sym] -= e
    return tuple(sorted(((s, e) for s, e in exps.items() if e), key=lambda it: it[0].name))


class Polynomial:
    """Multivariate polynomial with exact rational coefficients.

    ``terms`` maps monomials to nonzero ``Fraction`` values; the empty monomial
    is the constant term.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Monomial, Fraction]] = None):
        clean = {}
        if terms:
            for mono, coeff in terms.items():
                coeff = Fraction(coeff)
                if coeff:
                    clean[mono] = coeff
        object.__setattr__(self, "terms", clean)

    # -- constructors -------------------------------------------------
    @staticmethod
    def zero() -> "Polynomial":
        return Polynomial()

    @staticmethod
    def constant(value) -> "Polynomial":
        return Polynomial({_ONE_MONOMIAL: Fraction(value)})

    @staticmethod
    def symbol(sym: ScalarSymbol) -> "Polynomial":
        return Polynomial({((sym, 1),): Fraction(1)})

    @staticmethod
    def number_op(mode: int) -> "Polynomial":
        return Polynomial.symbol(ScalarSymbol.number(mode))

    # -- predicates ---------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(m == _ONE_MONOMIAL for m in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValidationError("polynomial is not constant")
        return self.terms.get(_ONE_MONOMIAL, Fraction(0))

    def symbols(self) -> set:
        out = set()
        for mono in self.terms:
            for sym, _ in mono:
                out.add(sym)
        return out

    # -- ring operations ----------------------------------------------
    def __add__(self, other) -> "Polynomial":
        other = _as_poly(other)
        terms = dict(self.terms)
        for mono, coeff in other.terms.items():
            new = terms.get(mono, Fraction(0)) + coeff
            if new:
                terms[mono] = new
            else:
                terms.pop(mono, None)
        return Polynomial(terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-_as_poly(other))

    def __rsub__(self, other) -> "Polynomial":
        return _as_poly(other) - self

    def __mul__(self, other) -> "Polynomial":
        other = _as_poly(other)
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = _monomial_mul(m1, m2)
                new = out.get(mono, Fraction(0)) + c1 * c2
                if new:
                    out[mono] = new
                else:
                    out.pop(mono, None)
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "Polynomial":
        if exponent < 0:
            raise ValidationError("negative polynomial power")
        result = Polynomial.constant(1)
        base = self
        e = exponent
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- structure ----------------------------------------------------
    def sort_key(self):
        return tuple(sorted(((_monomial_key(m), c) for m, c in self.terms.items()),
                            reverse=True))

    def leading(self):
        """(monomial, coefficient) maximal in graded-lex order."""
        if self.is_zero():
            raise ValidationError("zero polynomial has no leading term")
        mono = max(self.terms, key=_monomial_key)
        return mono, self.terms[mono]

    def content_and_primitive(self):
        """Split into (content, primitive) with positive leading coefficient.

        content * primitive == self; primitive has coprime integer
        coefficients and positive leading term.
        """
        if self.is_zero():
            return Fraction(0), Polynomial.zero()
        nums = [c.numerator for c in self.terms.values()]
        dens = [c.denominator for c in self.terms.values()]
        g = 0
        for n in nums:
            g = math.gcd(g, abs(n))
        l = 1
        for d in dens:
            l = l * d // math.gcd(l, d)
        content = Fraction(g, l)
        _, lead = self.leading()
        if lead < 0:
            content = -content
        prim = Polynomial({m: c / content for m, c in self.terms.items()})
        return content, prim

    def div_exact(self, divisor: "Polynomial") -> Optional["Polynomial"]:
        """Exact quotient self/divisor, or None when division is not exact."""
        if divisor.is_zero():
            raise ZeroDenominator("division by the zero polynomial")
        lead_m, lead_c = divisor.leading()
        remainder = self
        quotient = {}
        while not remainder.is_zero():
            r_m, r_c = remainder.leading()
            if not _monomial_divides(lead_m, r_m):
                return None
            q_m = _monomial_div(r_m, lead_m)
            q_c = r_c / lead_c
            quotient[q_m] = quotient.get(q_m, Fraction(0)) + q_c
            remainder = remainder - divisor * Polynomial({q_m: q_c})
        return Polynomial(quotient)

    # -- substitution ---------------------------------------------------
    def substitute(self, sym: ScalarSymbol, replacement: "Polynomial") -> "Polynomial":
        out = Polynomial.zero()
        for mono, coeff in self.terms.items():
            piece = Polynomial({_ONE_MONOMIAL: coeff})
            for s, e in mono:
                if s == sym:
                    piece = piece * replacement ** e
                else:
                    piece = piece * Polynomial({((s, e),): Fraction(1)})
            out = out + piece
        return out

    def shift(self, mode: int, delta: int) -> "Polynomial":
        """Replace N_mode by N_mode + delta, expanded."""
        if delta == 0:
            return self
        sym = ScalarSymbol.number(mode)
        return self.substitute(sym, Polynomial.symbol(sym) + Polynomial.constant(delta))

    def shift_all(self, deltas: Iterable[int]) -> "Polynomial":
        out = self
        for mode, d in enumerate(deltas):
            if d:
                out = out.shift(mode, d)
        return out

    def degree_in(self, sym: ScalarSymbol) -> int:
        deg = 0
        for mono in self.terms:
            for s, e in mono:
                if s == sym:
                    deg = max(deg, e)
        return deg

    def coefficients_in(self, sym: ScalarSymbol) -> dict:
        """View as univariate in ``sym``: power -> Polynomial in the rest."""
        out = {}
        for mono, coeff in self.terms.items():
            power = 0
            rest = []
            for s, e in mono:
                if s == sym:
                    power = e
                else:
                    rest.append((s, e))
            part = out.setdefault(power, {})
            key = tuple(rest)
            part[key] = part.get(key, Fraction(0)) + coeff
        return {p: Polynomial(t) for p, t in out.items()}

    # -- evaluation -----------------------------------------------------
    def evaluate(self, valuation: Callable[[ScalarSymbol], float]):
        """Numeric value under the symbol valuation.

        Monomials whose symbols evaluate to exact integers or Fractions are
        accumulated exactly and rounded once at the end, so high-degree
        interpolants in N do not suffer cancellation; float-valued symbols
        go through a compensated sum.
        """
        exact = Fraction(0)
        approx = []
        for mono, coeff in self.terms.items():
            exact_part = coeff
            float_part = None
            for sym, e in mono:
                v = valuation(sym)
                if isinstance(v, (int, Fraction)) and not isinstance(v, bool):
                    exact_part = exact_part * Fraction(v) ** e
                else:
                    scale = v ** e
                    float_part = scale if float_part is None else float_part * scale
            if float_part is None:
                exact = exact + exact_part
            else:
                approx.append(float(exact_part) * float_part)
        if not approx:
            return float(exact)
        try:
            return float(exact) + math.fsum(approx)
        except TypeError:  # array-valued bindings
            total = float(exact)
            for piece in approx:
                total = total + piece
            return total

    # -- rendering ------------------------------------------------------
    def __str__(self):
        if self.is_zero():
            return "0"
        parts = []
        for mono in sorted(self.terms, key=_monomial_key, reverse=True):
            coeff = self.terms[mono]
            factors = [f"{s.name}^{e}" if e > 1 else s.name for s, e in mono]
            if not factors:
                parts.append(str(coeff))
            elif coeff == 1:
                parts.append("*".join(factors))
            elif coeff == -1:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(str(coeff) + "*" + "*".join(factors))
        text = " + ".join(parts)
        return text.replace("+ -", "- ")

    def __repr__(self):
        return f"Polynomial({self})"


def _as_poly(value) -> Polynomial:
    if isinstance(value, Polynomial):
        return value
    if isinstance(value, ScalarSymbol):
        return Polynomial.symbol(value)
    if isinstance(value, (int, Fraction)):
        return Polynomial.constant(value)
    raise TypeError(f"cannot coerce {type(value).__name__} to Polynomial")


class ScalarRational:
    """Quotient of a polynomial by a multiset of polynomial factors.

    The denominator stays factored; each factor is primitive with positive
    leading coefficient (rational content carried by the numerator) and exact
    single-factor divisions of the numerator are cancelled.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Polynomial, den: Iterable = ()):
        factors = {}
        scale = Fraction(1)
        for factor, power in den:
            if power <= 0:
                raise ValidationError("denominator powers must be positive")
            if factor.is_zero():
                raise ZeroDenominator("zero polynomial in a denominator")
            content, prim = factor.content_and_primitive()
            if prim.is_constant():
                scale = scale * (content * prim.constant_value()) ** power
                continue
            scale = scale * content ** power
            key = prim.sort_key()
            if key in factors:
                factors[key] = (prim, factors[key][1] + power)
            else:
                factors[key] = (prim, power)
        if scale != 1:
            num = num * Polynomial.constant(Fraction(1, 1) / scale)
        if num.is_zero():
            factors = {}
        else:
            # cancel exact matches of denominator factors against the numerator
            for key in sorted(factors):
                prim, power = factors[key]
                while power > 0:
                    quotient = num.div_exact(prim)
                    if quotient is None:
                        break
                    num = quotient
                    power -= 1
                if power:
                    factors[key] = (prim, power)
                else:
                    del factors[key]
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", tuple(factors[k] for k in sorted(factors)))

    def __setattr__(self, *_):
        raise AttributeError("ScalarRational is immutable")

    # -- constructors ---------------------------------------------------
    @staticmethod
    def zero() -> "ScalarRational":
        return ScalarRational(Polynomial.zero())

    @staticmethod
    def one() -> "ScalarRational":
        return ScalarRational(Polynomial.constant(1))

    @staticmethod
    def from_polynomial(p: Polynomial) -> "ScalarRational":
        return ScalarRational(p)

    @staticmethod
    def constant(value) -> "ScalarRational":
        return ScalarRational(Polynomial.constant(value))

    @staticmethod
    def inverse_of(p: Polynomial) -> "ScalarRational":
        """1/p with p as a single denominator factor (p must not be zero)."""
        if p.is_zero():
            raise ZeroDenominator("cannot invert the zero polynomial")
        return ScalarRational(Polynomial.constant(1), ((p, 1),))

    # -- predicates -------------------------------------------------------
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return not self.den

    def as_polynomial(self) -> Polynomial:
        if self.den:
            raise ValidationError("rational has nontrivial denominator")
        return self.num

    def symbols(self) -> set:
        out = self.num.symbols()
        for factor, _ in self.den:
            out |= factor.symbols()
        return out

    # -- field operations ---------------------------------------------
    def _den_dict(self):
        return {f.sort_key(): (f, p) for f, p in self.den}

    def __add__(self, other) -> "ScalarRational":
        other = _as_rational(other)
        mine, theirs = self._den_dict(), other._den_dict()
        lcm = dict(mine)
        for key, (f, p) in theirs.items():
            if key in lcm:
                lcm[key] = (f, max(lcm[key][1], p))
            else:
                lcm[key] = (f, p)
        num_a = self.num
        for key, (f, p) in lcm.items():
            extra = p - mine.get(key, (f, 0))[1]
            if extra:
                num_a = num_a * f ** extra
        num_b = other.num
        for key, (f, p) in lcm.items():
            extra = p - theirs.get(key, (f, 0))[1]
            if extra:
                num_b = num_b * f ** extra
        return ScalarRational(num_a + num_b, tuple(lcm.values()))

    __radd__ = __add__

    def __neg__(self) -> "ScalarRational":
        return ScalarRational(-self.num, self.den)

    def __sub__(self, other) -> "ScalarRational":
        return self + (-_as_rational(other))

    def __rsub__(self, other) -> "ScalarRational":
        return _as_rational(other) - self

    def __mul__(self, other) -> "ScalarRational":
        other = _as_rational(other)
        merged = self._den_dict()
        for key, (f, p) in other._den_dict().items():
            if key in merged:
                merged[key] = (f, merged[key][1] + p)
            else:
                merged[key] = (f, p)
        return ScalarRational(self.num * other.num, tuple(merged.values()))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ScalarRational":
        other = _as_rational(other)
        return self * other.reciprocal()

    def reciprocal(self) -> "ScalarRational":
        if self.is_zero():
            raise ZeroDenominator("cannot invert zero")
        num = Polynomial.constant(1)
        for factor, power in self.den:
            num = num * factor ** power
        return ScalarRational(num, ((self.num, 1),))

    def __eq__(self, other) -> bool:
        if not isinstance(other, (ScalarRational, Polynomial, int, Fraction)):
            return NotImplemented
        return (self - _as_rational(other)).is_zero()

    def __hash__(self):
        return hash((self.num, self.den))

    # -- substitution -----------------------------------------------------
    def shift(self, mode: int, delta: int) -> "ScalarRational":
        if delta == 0:
            return self
        return ScalarRational(self.num.shift(mode, delta),
                              tuple((f.shift(mode, delta), p) for f, p in self.den))

    def shift_all(self, deltas: Iterable[int]) -> "ScalarRational":
        out = self
        for mode, d in enumerate(deltas):
            if d:
                out = out.shift(mode, d)
        return out

    def substitute(self, sym: ScalarSymbol, replacement: Polynomial) -> "ScalarRational":
        return ScalarRational(self.num.substitute(sym, replacement),
                              tuple((f.substitute(sym, replacement), p) for f, p in self.den))

    # -- evaluation -------------------------------------------------------
    def evaluate(self, valuation: Callable[[ScalarSymbol], float], eps: float = 1e-12):
        value = self.num.evaluate(valuation)
        for factor, power in self.den:
            d = factor.evaluate(valuation)
            if _near_zero(d, eps):
                raise EvalSingular(f"denominator factor ({factor}) ~ 0")
            value = value / d ** power
        return value

    def __str__(self):
        if not self.den:
            return str(self.num)
        den = "*".join(f"({f})^{p}" if p > 1 else f"({f})" for f, p in self.den)
        return f"({self.num})/[{den}]"

    def __repr__(self):
        return f"ScalarRational({self})"


def _near_zero(value, eps) -> bool:
    try:
        return abs(value) < eps
    except TypeError:  # array-valued evaluation guards poles itself
        return bool((abs(value) < eps).any())


def _as_rational(value) -> ScalarRational:
    if isinstance(value, ScalarRational):
        return value
    if isinstance(value, (Polynomial, ScalarSymbol, int, Fraction)):
        return ScalarRational(_as_poly(value))
    raise TypeError(f"cannot coerce {type(value).__name__} to ScalarRational")


def make_valuation(bindings: Mapping[str, float], fock: tuple = ()):
    """Build a symbol valuation from name bindings plus Fock occupation numbers."""

    def valuation(sym: ScalarSymbol):
        if sym.kind == NUMBER_OPERATOR:
            if sym.mode >= len(fock):
                raise ValidationError(f"no Fock level supplied for {sym.name}")
            return fock[sym.mode]
        if sym.name not in bindings:
            raise ValidationError(f"unbound symbol {sym.name!r}")
        return bindings[sym.name]

    return valuation


def rat_eval(value: ScalarRational, bindings: Mapping[str, float], fock: tuple = (),
             eps: float = 1e-12):
    """Evaluate a rational at floating bindings; Fock levels bind N_j symbols."""
    return value.evaluate(make_valuation(bindings, fock), eps=eps)


# ----------------------------------------------------------------------
# expression parsing:  + - * / ^ ( ) identifiers, integer/decimal literals
# ----------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
                       r"|(?P<op>[-+*/^()]))")


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        line, col = 1, 1
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m or m.end() == pos:
                bad = text[pos]
                if bad.isspace():
                    pos += 1
                    if bad == "\n":
                        line, col = line + 1, 1
                    else:
                        col += 1
                    continue
                raise ParseError(f"unexpected character {bad!r}", line, col)
            skipped = text[pos:m.start(m.lastgroup)]
            for ch in skipped:
                if ch == "\n":
                    line, col = line + 1, 1
                else:
                    col += 1
            tok_text = m.group(m.lastgroup)
            self.tokens.append((m.lastgroup, tok_text, line, col))
            col += len(tok_text)
            pos = m.end()
        self.index = 0

    def peek(self):
        if self.index < len(self.tokens):
            return self.tokens[self.index]
        return (None, None, None, None)

    def next(self):
        tok = self.peek()
        self.index += 1
        return tok


def parse_expression(text: str, resolve: Callable[[str], ScalarSymbol]) -> ScalarRational:
    """Parse an expression into a ScalarRational.

    ``resolve`` maps an identifier to its declared symbol and should raise
    ``ParseError``/``ValidationError`` for unknown names; ``N0, N1, ...`` are
    reserved for number operators and also go through ``resolve`` so the model
    can bounds-check the mode index.
    """
    toks = _Tokens(text)
    value = _parse_sum(toks, resolve)
    kind, tok, line, col = toks.peek()
    if kind is not None:
        raise ParseError(f"unexpected token {tok!r}", line, col)
    return value


def _parse_sum(toks, resolve):
    value = _parse_product(toks, resolve)
    while True:
        kind, tok, _, _ = toks.peek()
        if kind == "op" and tok in "+-":
            toks.next()
            rhs = _parse_product(toks, resolve)
            value = value + rhs if tok == "+" else value - rhs
        else:
            return value


def _parse_product(toks, resolve):
    value = _parse_factor(toks, resolve)
    while True:
        kind, tok, line, col = toks.peek()
        if kind == "op" and tok in "*/":
            toks.next()
            rhs = _parse_factor(toks, resolve)
            if tok == "*":
                value = value * rhs
            else:
                if rhs.is_zero():
                    raise ParseError("division by zero", line, col)
                value = value / rhs
        else:
            return value


def _parse_factor(toks, resolve):
    sign = 1
    while True:
        kind, tok, _, _ = toks.peek()
        if kind == "op" and tok in "+-":
            toks.next()
            if tok == "-":
                sign = -sign
        else:
            break
    value = _parse_atom(toks, resolve)
    kind, tok, line, col = toks.peek()
    if kind == "op" and tok == "^":
        toks.next()
        nkind, ntok, nline, ncol = toks.next()
        if nkind != "num" or "." in ntok:
            raise ParseError("exponent must be a nonnegative integer", nline, ncol)
        exponent = int(ntok)
        if value.is_polynomial():
            value = ScalarRational(value.as_polynomial() ** exponent)
        else:
            out = ScalarRational.one()
            for _ in range(exponent):
                out = out * value
            value = out
    if sign < 0:
        value = -value
    return value


def _parse_atom(toks, resolve):
    kind, tok, line, col = toks.next()
    if kind == "num":
        if "." in tok:
            return ScalarRational.constant(Fraction(tok))
        return ScalarRational.constant(int(tok))
    if kind == "name":
        try:
            sym = resolve(tok)
        except KeyError:
            raise ParseError(f"unknown symbol {tok!r}", line, col) from None
        return ScalarRational(Polynomial.symbol(sym))
    if kind == "op" and tok == "(":
        value = _parse_sum(toks, resolve)
        kind2, tok2, line2, col2 = toks.next()
        if tok2 != ")":
            raise ParseError("expected ')'", line2, col2)
        return value
    raise ParseError(f"unexpected token {tok!r}" if tok else "unexpected end of input",
                     line, col)
