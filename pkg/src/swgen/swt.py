"""Generator solvers and order-by-order assembly of effective Hamiltonians.

The closed-form channel solution divides each eliminated channel's coefficient
by the operator-valued gap  w(N) = f_ket(N + Delta) - f_bra(N)  (minus n*hbar*W
for harmonic n), so no Fock-space truncation ever enters.  Resonances and
integer roots of the gap are hard errors carrying the offending channel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Union

from .errors import (FockSingular, NotDiagonal, NotTwoLevel, Resonance,
                     StaticComponent, ValidationError)
from .operators import (HilbertSignature, OperatorSum, OperatorTerm,
                        commutator, is_hermitian, time_derivative)
from .scalars import (NUMBER_OPERATOR, Polynomial, ScalarRational, ScalarSymbol,
                      make_valuation)

HBAR = ScalarSymbol("hbar")


@dataclass(frozen=True)
class EliminatorMask:
    """Predicate choosing which channels the transformation eliminates.

    Must be conjugation-closed: a channel and its hermitian conjugate are
    selected together (checked on every channel actually encountered).
    """

    predicate: Callable
    description: str = "custom"

    def selects(self, bra, ket, delta, harmonic) -> bool:
        return bool(self.predicate(bra, ket, delta, harmonic))

    @staticmethod
    def cross_block(signature: HilbertSignature) -> "EliminatorMask":
        """Default mask: channels connecting different finite-state blocks."""

        def pred(bra, ket, delta, harmonic):
            return signature.block_label(bra) != signature.block_label(ket)

        return EliminatorMask(pred, "cross-block")

    def split(self, a: OperatorSum):
        """(selected, rest); raises if the selection is not conjugation-closed."""
        sel, rest = [], []
        for t in a.terms.values():
            mine = self.selects(t.bra, t.ket, t.delta, t.harmonic)
            conj = self.selects(t.ket, t.bra, tuple(-d for d in t.delta), -t.harmonic)
            if mine != conj:
                raise ValidationError(
                    f"mask {self.description!r} is not conjugation-closed on channel "
                    f"{(t.bra, t.ket, t.delta, t.harmonic)}")
            (sel if mine else rest).append(t)
        return OperatorSum(a.signature, sel), OperatorSum(a.signature, rest)


@dataclass(frozen=True)
class FrequencyOperator:
    """Operator-valued transition gap of one channel of a diagonal Hamiltonian."""

    bra: tuple
    ket: tuple
    delta: tuple
    value: Polynomial


def _diagonal_functions(h0: OperatorSum) -> Dict[tuple, Polynomial]:
    """Extract mu -> f_mu(N) from a diagonal static Hamiltonian."""
    f = {}
    for t in h0.terms.values():
        if t.bra != t.ket or t.harmonic != 0 or any(d != 0 for d in t.delta):
            raise NotDiagonal(
                f"term on channel {(t.bra, t.ket, t.delta, t.harmonic)} is not diagonal")
        if t.imag:
            raise NotDiagonal("diagonal Hamiltonian carries an imaginary term")
        if not t.coeff.is_polynomial():
            raise NotDiagonal("diagonal coefficients must be polynomial in N")
        f[t.bra] = f.get(t.bra, Polynomial.zero()) + t.coeff.as_polynomial()
    return f


def frequency(h0: OperatorSum, bra, ket, delta) -> FrequencyOperator:
    """Gap polynomial f_ket(N + Delta) - f_bra(N) for one channel."""
    bra, ket, delta = tuple(bra), tuple(ket), tuple(delta)
    h0.signature.validate_indices(bra, ket, delta)
    f = _diagonal_functions(h0)
    f_ket = f.get(ket, Polynomial.zero())
    f_bra = f.get(bra, Polynomial.zero())
    return FrequencyOperator(bra, ket, delta, f_ket.shift_all(delta) - f_bra)


def _fock_roots(poly: Polynomial, modes: int, grid_limit: int = 32) -> list:
    """Nonnegative integer points of N-space where ``poly`` vanishes identically.

    Exact: a candidate level counts only if substituting it yields the zero
    polynomial in the remaining parameters.  Single-mode denominators are
    resolved completely via a random specialization of the parameters; with
    several modes a 0..grid_limit grid per mode is checked.
    """
    n_syms = [s for s in poly.symbols() if s.kind == NUMBER_OPERATOR]
    if not n_syms:
        return []

    def vanishes_at(levels: dict) -> bool:
        out = poly
        for sym, value in levels.items():
            out = out.substitute(sym, Polynomial.constant(value))
        return out.is_zero()

    if len(n_syms) == 1:
        sym = n_syms[0]
        # specialize every other symbol at fixed rationals; integer roots of
        # the true polynomial must be integer roots of the specialization
        others = sorted((s for s in poly.symbols() if s != sym), key=lambda s: s.name)
        spec = None
        for salt in (3, 11):
            candidate = poly
            for i, s in enumerate(others):
                candidate = candidate.substitute(
                    s, Polynomial.constant(Fraction(2 * i + salt, 7)))
            if not candidate.is_zero():
                spec = candidate
                break
        if spec is None:
            candidates = range(grid_limit + 1)
        else:
            consts = {p: c.constant_value() for p, c in spec.coefficients_in(sym).items()}
            if set(consts) == {0}:
                return []
            # Cauchy bound on root magnitude, 0 always checked explicitly
            lead = consts[max(consts)]
            bound = 1 + max(abs(c / lead) for c in consts.values())
            candidates = range(0, int(bound) + 2)
        return [(int(m),) for m in candidates if vanishes_at({sym: m})]

    roots = []
    import itertools
    for levels in itertools.product(range(grid_limit + 1), repeat=len(n_syms)):
        if vanishes_at(dict(zip(n_syms, levels))):
            roots.append(levels)
    return roots


def _solve_channels(h0: OperatorSum, p: OperatorSum,
                    fundamental: Optional[ScalarSymbol], hbar: ScalarSymbol,
                    order: Optional[int] = None, diagnostics: Optional[list] = None):
    """Channelwise closed-form generator for [h0, S] = P (+ i hbar dS/dt)."""
    f = _diagonal_functions(h0)
    if not is_hermitian(p):
        raise ValidationError("eliminated part must be hermitian")
    out = []
    for t in p.sorted_terms():
        if t.harmonic != 0 and fundamental is None:
            raise ValidationError("harmonic channel requires a fundamental frequency")
        f_ket = f.get(t.ket, Polynomial.zero())
        f_bra = f.get(t.bra, Polynomial.zero())
        omega = f_ket.shift_all(t.delta) - f_bra
        denom = omega
        if t.harmonic:
            denom = denom - (Polynomial.symbol(hbar) * Polynomial.symbol(fundamental)
                             * Fraction(t.harmonic))
        channel = (t.bra, t.ket, t.delta, t.harmonic)
        entry = {
            "bra": list(t.bra), "ket": list(t.ket), "delta": list(t.delta),
            "harmonic": t.harmonic, "omega": str(omega), "denominator": str(denom),
            "status": "ok",
        }
        if order is not None:
            entry["order"] = order
        if denom.is_zero():
            entry["status"] = "resonant"
            if diagnostics is not None:
                diagnostics.append(entry)
            raise Resonance(channel, str(denom), order)
        roots = _fock_roots(denom, h0.signature.bosonic_modes)
        if roots:
            levels = [r[0] if len(r) == 1 else r for r in roots]
            entry["status"] = "fock-singular"
            entry["fock_levels"] = levels
            if diagnostics is not None:
                diagnostics.append(entry)
            raise FockSingular(channel, str(denom), levels, order)
        if diagnostics is not None:
            diagnostics.append(entry)
        coeff = (-t.coeff) * ScalarRational.inverse_of(denom)
        out.append(OperatorTerm(coeff, t.delta, t.bra, t.ket, t.harmonic,
                                t.order, t.imag))
    return OperatorSum(p.signature, out)


def solve_generator_static(h0: OperatorSum, p: OperatorSum,
                           hbar: ScalarSymbol = HBAR) -> OperatorSum:
    """Antihermitian S with [h0, S] = P for a static hermitian P."""
    if any(t.harmonic != 0 for t in p.terms.values()):
        raise ValidationError("static solver requires all channels at harmonic 0")
    return _solve_channels(h0, p, None, hbar)


def solve_generator_periodic(h0: OperatorSum, p: OperatorSum,
                             fundamental: ScalarSymbol,
                             hbar: ScalarSymbol = HBAR) -> OperatorSum:
    """Antihermitian S(t) with [h0, S] = P + i hbar dS/dt, periodic drive."""
    return _solve_channels(h0, p, fundamental, hbar)


def fast_drive_generator(p: OperatorSum, fundamental: ScalarSymbol,
                         hbar: ScalarSymbol = HBAR) -> OperatorSum:
    """Purely oscillating drive limit: termwise zero-mean antiderivative.

    Each channel becomes p_n/(n*hbar*W); the exact periodic solution reduces
    to this when |n*hbar*W| dominates every gap.
    """
    out = []
    for t in p.sorted_terms():
        if t.harmonic == 0:
            raise StaticComponent(
                f"channel {(t.bra, t.ket, t.delta)} has no harmonic factor")
        denom = (Polynomial.symbol(hbar) * Polynomial.symbol(fundamental)
                 * Fraction(t.harmonic))
        coeff = t.coeff * ScalarRational.inverse_of(denom)
        out.append(OperatorTerm(coeff, t.delta, t.bra, t.ket, t.harmonic,
                                t.order, t.imag))
    return OperatorSum(p.signature, out)


@dataclass
class SwtResult:
    """Generators per order, the effective Hamiltonian, and channel diagnostics."""

    signature: HilbertSignature
    h0: OperatorSum
    generators: Dict[int, OperatorSum]
    effective: OperatorSum
    diagnostics: List[dict]
    order: int
    fundamental: Optional[ScalarSymbol] = None
    hbar: ScalarSymbol = HBAR
    eliminated: Dict[int, OperatorSum] = field(default_factory=dict)

    def generator_total(self) -> OperatorSum:
        total = OperatorSum.zero(self.signature)
        for j in sorted(self.generators):
            total = total + self.generators[j]
        return total

    def diagnostics_json(self) -> str:
        return json.dumps(self.diagnostics, indent=2, sort_keys=True)


def _prune(a: OperatorSum, max_order: int) -> OperatorSum:
    return a.filter(lambda t: t.order <= max_order)


def _transformed(h: OperatorSum, s_total: OperatorSum, max_order: int,
                 fundamental: Optional[ScalarSymbol], hbar: ScalarSymbol) -> OperatorSum:
    """e^{-S} H e^{S} + i hbar (d/dt e^{-S}) e^{S}, truncated beyond max_order."""
    acc = _prune(h, max_order)
    nested = acc
    for m in range(1, max_order + 1):
        nested = _prune(commutator(nested, s_total), max_order)
        if nested.is_zero():
            break
        acc = acc + nested.scale(Fraction(1, math.factorial(m)))
    if fundamental is not None:
        ds = time_derivative(s_total, fundamental)
        if not ds.is_zero():
            nested = _prune(ds, max_order)
            level = 0
            while not nested.is_zero():
                contrib = nested.scale(Fraction(-1, math.factorial(level + 1)))
                acc = acc + contrib.scale(Polynomial.symbol(hbar)).scale_imag()
                level += 1
                nested = _prune(commutator(nested, s_total), max_order)
    return acc


def effective_hamiltonian(h: OperatorSum, mask: EliminatorMask, order: int,
                          fundamental: Optional[ScalarSymbol] = None,
                          hbar: ScalarSymbol = HBAR) -> SwtResult:
    """Block-diagonalize ``h`` to the given order.

    ``h`` carries its perturbative split in the terms' order tags: order 0 is
    the diagonal unperturbed part, higher orders are corrections and
    perturbations.  Per order j the mask-selected part of the transformed
    Hamiltonian defines P^(j) (sign included), the channel solver yields
    S^(j), and the selected part of the result cancels identically.
    """
    if order < 0:
        raise ValidationError("order must be >= 0")
    h0 = h.order_part(0)
    _diagonal_functions(h0)  # raises NotDiagonal on a bad unperturbed part
    if fundamental is None and any(t.harmonic != 0 for t in h.terms.values()):
        raise ValidationError("time-periodic terms require a fundamental frequency")

    generators: Dict[int, OperatorSum] = {}
    eliminated: Dict[int, OperatorSum] = {}
    diagnostics: List[dict] = []
    s_total = OperatorSum.zero(h.signature)
    for j in range(1, order + 1):
        transformed = _transformed(h, s_total, j, fundamental, hbar)
        selected, _ = mask.split(transformed.order_part(j))
        if selected.is_zero():
            continue
        p_j = -selected
        s_j = _solve_channels(h0, p_j, fundamental, hbar, order=j,
                              diagnostics=diagnostics)
        generators[j] = s_j
        eliminated[j] = p_j
        s_total = s_total + s_j

    effective = _transformed(h, s_total, order, fundamental, hbar)
    leftover, _ = mask.split(effective)
    if not leftover.is_zero():
        raise ValidationError("internal: mask-selected channels survived the solve")
    return SwtResult(signature=h.signature, h0=h0, generators=generators,
                     effective=effective, diagnostics=diagnostics, order=order,
                     fundamental=fundamental, hbar=hbar, eliminated=eliminated)


@dataclass(frozen=True)
class ShiftExpression:
    """Signed dispersive-shift expression; the physical value is its absolute value."""

    signed: ScalarRational
    occupation: Union[int, ScalarSymbol]

    def evaluate(self, bindings, eps: float = 1e-12) -> float:
        return abs(self.signed.evaluate(make_valuation(bindings), eps=eps))

    def evaluate_signed(self, bindings, eps: float = 1e-12) -> float:
        return self.signed.evaluate(make_valuation(bindings), eps=eps)

    def denominator_factors(self) -> list:
        return [f for f, _ in self.signed.den]

    def poles(self, param: str, bindings, lo=None, hi=None,
              merge_tol: float = 1e-9) -> list:
        """Real roots of the denominator factors in one swept parameter.

        Every other symbol must be bound; nearby roots are merged.  ``lo``/
        ``hi`` clip the result when given.
        """
        sym = ScalarSymbol(param)
        valuation = make_valuation(bindings)
        roots = []
        for factor in self.denominator_factors():
            by_power = factor.coefficients_in(sym)
            degree = max(by_power)
            if degree == 0:
                continue
            coeffs = [by_power.get(p, Polynomial.zero()).evaluate(valuation)
                      for p in range(degree, -1, -1)]
            import numpy as np
            for root in np.roots(coeffs):
                if abs(root.imag) > merge_tol:
                    continue
                x = float(root.real)
                if lo is not None and x < lo - merge_tol:
                    continue
                if hi is not None and x > hi + merge_tol:
                    continue
                roots.append(x)
        merged = []
        for r in sorted(roots):
            if not merged or abs(r - merged[-1]) > merge_tol * max(1.0, abs(r)):
                merged.append(r)
        return merged

    def __str__(self):
        return f"|{self.signed}|"


def dispersive_shift(result: SwtResult, n: Union[int, ScalarSymbol]) -> ShiftExpression:
    """Resolution of the 0 -> n bosonic gap conditioned on a two-level subspace.

    Built from the diagonal static channels of the effective Hamiltonian:
    |(eps_{n,0} - eps_{0,0}) - (eps_{n,1} - eps_{0,1})| with the absolute
    value deferred to evaluation.
    """
    sig = result.signature
    if sig.finite_dims != (2,):
        raise NotTwoLevel(f"finite subspace dims {sig.finite_dims}, expected (2,)")
    if sig.bosonic_modes != 1:
        raise ValidationError("dispersive shift needs exactly one bosonic mode")
    n_sym = ScalarSymbol.number(0)
    diag = {}
    for t in result.effective.terms.values():
        if t.bra == t.ket and t.harmonic == 0 and all(d == 0 for d in t.delta):
            if t.imag:
                raise ValidationError("diagonal channel carries an imaginary part")
            mu = t.bra[0]
            diag[mu] = diag.get(mu, ScalarRational.zero()) + t.coeff
    d0 = diag.get(0, ScalarRational.zero())
    d1 = diag.get(1, ScalarRational.zero())
    if isinstance(n, ScalarSymbol):
        n_poly = Polynomial.symbol(n)
    else:
        if n < 0:
            raise ValidationError("occupation must be >= 0")
        n_poly = Polynomial.constant(int(n))
    zero = Polynomial.constant(0)
    signed = ((d0.substitute(n_sym, n_poly) - d0.substitute(n_sym, zero))
              - (d1.substitute(n_sym, n_poly) - d1.substitute(n_sym, zero)))
    return ShiftExpression(signed=signed, occupation=n)
