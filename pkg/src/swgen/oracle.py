"""Truncated-Fock materialization and the numeric checks certifying the symbolic path.

Everything here is deliberately independent of the closed-form solvers: matrices
are built entry by entry from textbook ladder elements, commutators are taken
numerically, and spectra come from dense exact diagonalization.  Truncation
artifacts are kept away from every norm by restricting to an interior block of
Fock levels.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence, Union

import numpy as np

from .errors import (AssignmentAmbiguous, DegenerateSpectrum, NotCoRotating,
                     ShapeMismatch, ValidationError)
from .operators import HilbertSignature, OperatorSum, OperatorTerm
from .scalars import Polynomial, ScalarRational, ScalarSymbol, make_valuation
from .swt import HBAR


@dataclass
class NumericContext:
    """Truncation levels, symbol bindings and evaluation options for the oracle.

    ``truncation`` is the highest kept Fock level (per mode), so a single mode
    with truncation n has dimension n + 1.
    """

    truncation: Union[int, Sequence[int]]
    bindings: Dict[str, float] = field(default_factory=dict)
    time: Optional[float] = None
    eps: float = 1e-12
    interior_margin: Optional[int] = None

    def levels(self, signature: HilbertSignature) -> tuple:
        if isinstance(self.truncation, int):
            out = (self.truncation,) * signature.bosonic_modes
        else:
            out = tuple(int(t) for t in self.truncation)
        if len(out) != signature.bosonic_modes:
            raise ValidationError("one truncation level per bosonic mode required")
        if any(t < 1 for t in out):
            raise ValidationError("truncation must keep at least levels 0 and 1")
        return out

    def hbar_value(self) -> float:
        return float(self.bindings.get("hbar", 1.0))


def basis_dimension(signature: HilbertSignature, levels: tuple) -> int:
    dim = signature.finite_dim()
    for n in levels:
        dim *= n + 1
    return dim


def basis_index(signature: HilbertSignature, levels: tuple, fock: tuple,
                finite_flat: int) -> int:
    """Lexicographic basis: Fock indices are the major axes, finite states minor."""
    idx = 0
    for n, cap in zip(fock, levels):
        idx = idx * (cap + 1) + n
    return idx * signature.finite_dim() + finite_flat


def _ladder_amplitude(m: int, d: int) -> float:
    """<m - d| ladder(d) |m> for signed power d (positive lowers)."""
    amp = 1.0
    if d > 0:
        for i in range(d):
            amp *= m - i
    else:
        for i in range(1, -d + 1):
            amp *= m + i
    return math.sqrt(amp)


def _term_matrix(term: OperatorTerm, signature: HilbertSignature, levels: tuple,
                 bindings, time, fundamental, eps) -> np.ndarray:
    dim = basis_dimension(signature, levels)
    out = np.zeros((dim, dim), dtype=complex)
    phase = 1j if term.imag else 1.0
    if term.harmonic:
        if fundamental is None or time is None:
            raise ValidationError(
                "materializing a harmonic term needs the fundamental symbol and ctx.time")
        omega = bindings[fundamental.name]
        phase = phase * np.exp(1j * term.harmonic * omega * time)
    col_finite = signature.flat_finite(term.ket)
    row_finite = signature.flat_finite(term.bra)
    ranges = []
    for cap, d in zip(levels, term.delta):
        lo, hi = max(0, d), min(cap, cap + d)
        if lo > hi:
            return out
        ranges.append(range(lo, hi + 1))
    for fock in itertools.product(*ranges):
        target = tuple(m - d for m, d in zip(fock, term.delta))
        amp = 1.0
        for m, d in zip(fock, term.delta):
            amp *= _ladder_amplitude(m, d)
        coeff = term.coeff.evaluate(make_valuation(bindings, target), eps=eps)
        row = basis_index(signature, levels, target, row_finite)
        col = basis_index(signature, levels, fock, col_finite)
        out[row, col] += phase * amp * coeff
    return out


def materialize(a: OperatorSum, ctx: NumericContext,
                fundamental: Optional[ScalarSymbol] = None) -> np.ndarray:
    """Dense complex matrix of ``a`` on the truncated lexicographic basis."""
    levels = ctx.levels(a.signature)
    dim = basis_dimension(a.signature, levels)
    out = np.zeros((dim, dim), dtype=complex)
    for term in a.sorted_terms():
        out += _term_matrix(term, a.signature, levels, ctx.bindings, ctx.time,
                            fundamental, ctx.eps)
    return out


def materialize_time_derivative(a: OperatorSum, ctx: NumericContext,
                                fundamental: ScalarSymbol) -> np.ndarray:
    """Analytic d/dt of the materialization: each harmonic term scaled by i n W."""
    levels = ctx.levels(a.signature)
    dim = basis_dimension(a.signature, levels)
    out = np.zeros((dim, dim), dtype=complex)
    omega = ctx.bindings[fundamental.name]
    for term in a.sorted_terms():
        if term.harmonic == 0:
            continue
        mat = _term_matrix(term, a.signature, levels, ctx.bindings, ctx.time,
                           fundamental, ctx.eps)
        out += 1j * term.harmonic * omega * mat
    return out


def interior_indices(signature: HilbertSignature, levels: tuple, margin: int) -> np.ndarray:
    keep = []
    idx = 0
    for fock in itertools.product(*(range(n + 1) for n in levels)):
        inside = all(n <= cap - margin for n, cap in zip(fock, levels))
        for _ in range(signature.finite_dim()):
            if inside:
                keep.append(idx)
            idx += 1
    return np.array(keep, dtype=int)


def _margin(ctx: NumericContext, *operators: OperatorSum) -> int:
    if ctx.interior_margin is not None:
        return ctx.interior_margin
    return max((op.max_abs_delta() for op in operators), default=0)


def residual_check(h0: OperatorSum, s: OperatorSum, p: OperatorSum,
                   ctx: NumericContext,
                   fundamental: Optional[ScalarSymbol] = None) -> float:
    """Operator norm of [H0, S] - P - i hbar dS/dt on the interior block."""
    levels = ctx.levels(h0.signature)
    margin = _margin(ctx, s, p)
    if any(cap < margin + 2 for cap in levels):
        raise ValidationError("truncation must exceed the interior margin by 2")
    needs_time = any(n != 0 for n in (s.harmonics() | p.harmonics()))
    if ctx.time is None and needs_time:
        ctx = NumericContext(ctx.truncation, ctx.bindings, 0.0, ctx.eps,
                             ctx.interior_margin)
    h0_m = materialize(h0, ctx, fundamental)
    s_m = materialize(s, ctx, fundamental)
    p_m = materialize(p, ctx, fundamental)
    residual = h0_m @ s_m - s_m @ h0_m - p_m
    if fundamental is not None and any(n != 0 for n in s.harmonics()):
        residual = residual - 1j * ctx.hbar_value() * materialize_time_derivative(
            s, ctx, fundamental)
    keep = interior_indices(h0.signature, levels, margin)
    return float(np.linalg.norm(residual[np.ix_(keep, keep)], 2))


def matrix_element_check(h0: OperatorSum, s: OperatorSum, p: OperatorSum,
                         ctx: NumericContext,
                         fundamental: Optional[ScalarSymbol] = None,
                         gap_floor: float = 1e-9) -> float:
    """Max deviation of the matrix-element identity S_ab (E_a - E_b + n hbar W) = P_ab.

    Checked per harmonic component on interior, nondegenerate level pairs;
    the static component reproduces the textbook inverse-gap relation.
    """
    levels = ctx.levels(h0.signature)
    margin = _margin(ctx, s, p)
    if any(cap < margin + 2 for cap in levels):
        raise ValidationError("truncation must exceed the interior margin by 2")
    energies = np.real(np.diag(materialize(h0, ctx)))
    keep = interior_indices(h0.signature, levels, margin)
    e = energies[keep]
    plain_gap = e[:, None] - e[None, :]
    np.fill_diagonal(plain_gap, np.inf)
    colliding = np.argwhere(np.abs(plain_gap) < gap_floor)
    if colliding.size:
        raise DegenerateSpectrum([(int(a), int(b)) for a, b in colliding[:16]])
    harmonic_set = sorted(s.harmonics() | p.harmonics())
    hbar_val = ctx.hbar_value()
    worst = 0.0
    for n in harmonic_set:
        s_n = _static_snapshot(s, n)
        p_n = _static_snapshot(p, n)
        if s_n.is_zero() and p_n.is_zero():
            continue
        shift = 0.0
        if n != 0:
            if fundamental is None:
                raise ValidationError("harmonic channels need the fundamental symbol")
            shift = n * hbar_val * ctx.bindings[fundamental.name]
        s_m = materialize(s_n, ctx)[np.ix_(keep, keep)]
        p_m = materialize(p_n, ctx)[np.ix_(keep, keep)]
        gap = e[:, None] - e[None, :] + shift
        np.fill_diagonal(gap, np.inf)
        # a shifted collision only matters on pairs the operators touch
        weight = np.abs(s_m) + np.abs(p_m)
        bad = np.argwhere((np.abs(gap) < gap_floor) & (weight > 1e-13))
        if bad.size:
            raise DegenerateSpectrum([(int(a), int(b)) for a, b in bad[:16]])
        finite_gap = np.where(np.isinf(gap), 0.0, gap)
        deviation = np.abs(s_m * finite_gap - p_m)
        np.fill_diagonal(deviation, 0.0)
        worst = max(worst, float(deviation.max()))
    return worst


def _static_snapshot(a: OperatorSum, harmonic: int) -> OperatorSum:
    """Terms at one harmonic with the oscillating factor stripped."""
    picked = [OperatorTerm(t.coeff, t.delta, t.bra, t.ket, 0, t.order, t.imag)
              for t in a.terms.values() if t.harmonic == harmonic]
    return OperatorSum(a.signature, picked)


def rotating_frame(h: OperatorSum, fundamental: ScalarSymbol,
                   hbar: ScalarSymbol = HBAR) -> OperatorSum:
    """Strip e^{i n W t} factors from a co-rotating single-mode Hamiltonian.

    Valid when each term's harmonic equals its total signed ladder power; the
    frame change shifts every diagonal function by -hbar W N, which cancels in
    gap differences.
    """
    if h.signature.bosonic_modes != 1:
        raise ValidationError("rotating frame reduction supports one bosonic mode")
    if all(t.harmonic == 0 for t in h.terms.values()):
        return h  # no drive, identity frame
    out = []
    for t in h.terms.values():
        if t.harmonic != sum(t.delta):
            raise NotCoRotating(
                f"term with harmonic {t.harmonic} and ladder powers {t.delta}")
        out.append(OperatorTerm(t.coeff, t.delta, t.bra, t.ket, 0, t.order, t.imag))
    shift = ScalarRational(-(Polynomial.symbol(hbar)
                             * Polynomial.symbol(fundamental)
                             * Polynomial.number_op(0)))
    for mu in h.signature.finite_states():
        out.append(OperatorTerm(shift, (0,), mu, mu, 0, 0, False))
    return OperatorSum(h.signature, out)


@dataclass(frozen=True)
class SpectrumAssignment:
    """Max-overlap labelling of exact eigenpairs by unperturbed basis states."""

    energies: Dict[tuple, float]
    overlaps: Dict[tuple, float]

    @staticmethod
    def build(matrix: np.ndarray, signature: HilbertSignature, levels: tuple,
              labels: Iterable[tuple]) -> "SpectrumAssignment":
        """Labels are (fock_tuple, finite_flat) pairs; overlap^2 must exceed 0.5."""
        herm_defect = np.abs(matrix - matrix.conj().T).max()
        if herm_defect > 1e-9 * max(1.0, np.abs(matrix).max()):
            raise ValidationError("matrix is not hermitian; cannot assign a spectrum")
        evals, evecs = np.linalg.eigh(matrix)
        energies, overlaps, used = {}, {}, {}
        for label in labels:
            fock, finite_flat = label
            idx = basis_index(signature, levels, fock, finite_flat)
            weight = np.abs(evecs[idx, :]) ** 2
            k = int(np.argmax(weight))
            if weight[k] <= 0.5:
                raise AssignmentAmbiguous(label, float(weight[k]))
            if k in used:
                raise AssignmentAmbiguous(label, float(weight[k]))
            used[k] = label
            energies[label] = float(evals[k])
            overlaps[label] = float(weight[k])
        return SpectrumAssignment(energies, overlaps)


def dispersive_shift_numeric(h: OperatorSum, ctx: NumericContext, n: int,
                             fundamental: ScalarSymbol,
                             hbar: ScalarSymbol = HBAR) -> float:
    """Exact-diagonalization value of the 0 -> n gap resolution.

    The co-rotating reduction makes the problem static; eigenstates are
    labelled by max overlap with the unperturbed basis.
    """
    if h.signature.finite_dims != (2,):
        raise ValidationError("dispersive shift needs a single two-level subspace")
    static = rotating_frame(h, fundamental, hbar)
    matrix = materialize(static, ctx)
    levels = ctx.levels(h.signature)
    if n > levels[0] - 2:
        raise ValidationError("occupation too close to the truncation edge")
    labels = [((0,), 0), ((0,), 1), ((n,), 0), ((n,), 1)]
    assignment = SpectrumAssignment.build(matrix, h.signature, levels, labels)
    e = assignment.energies
    return abs((e[((n,), 0)] - e[((0,), 0)]) - (e[((n,), 1)] - e[((0,), 1)]))


# ----------------------------------------------------------------------
# matrix -> canonical terms (exact interpolation of the per-level tables)
# ----------------------------------------------------------------------

def _newton_interpolate(values: list, mode: int) -> Polynomial:
    """Exact interpolating polynomial in N_mode through (k, values[k])."""
    diffs = [v if isinstance(v, Polynomial) else Polynomial.constant(v)
             for v in values]
    table = [diffs]
    for level in range(1, len(values)):
        prev = table[-1]
        table.append([(prev[i + 1] - prev[i]) * Fraction(1, level)
                      for i in range(len(prev) - 1)])
    n_sym = Polynomial.number_op(mode)
    result = Polynomial.zero()
    basis = Polynomial.constant(1)
    for k, row in enumerate(table):
        result = result + row[0] * basis
        basis = basis * (n_sym - Polynomial.constant(k))
    return result


def _interpolate_grid(values, modes: Sequence[int]) -> Polynomial:
    """Tensor Newton interpolation; ``values`` nested per mode in order."""
    if not modes:
        return values if isinstance(values, Polynomial) else Polynomial.constant(values)
    inner = [_interpolate_grid(v, modes[1:]) for v in values]
    return _newton_interpolate(inner, modes[0])


def decompose_matrix(matrix: np.ndarray, signature: HilbertSignature,
                     truncation: Union[int, Sequence[int]]) -> OperatorSum:
    """Rebuild canonical terms from a dense matrix on the materialize basis.

    Per finite pair and ladder offset the banded entries divided by the ladder
    amplitudes tabulate the coefficient function on the kept levels; an exact
    interpolating polynomial (degree < number of levels) reproduces them.
    """
    ctx = NumericContext(truncation)
    levels = ctx.levels(signature)
    dim = basis_dimension(signature, levels)
    if matrix.shape != (dim, dim):
        raise ShapeMismatch(f"expected {(dim, dim)}, got {matrix.shape}")
    matrix = np.asarray(matrix, dtype=complex)
    modes = list(range(signature.bosonic_modes))
    terms = []
    finite_pairs = [(bra, ket) for bra in signature.finite_states()
                    for ket in signature.finite_states()]
    delta_ranges = [range(-cap, cap + 1) for cap in levels]
    for delta in itertools.product(*delta_ranges):
        target_ranges = []
        for cap, d in zip(levels, delta):
            lo, hi = max(0, -d), cap - max(0, d)
            if lo > hi:
                target_ranges = None
                break
            target_ranges.append(range(lo, hi + 1))
        if target_ranges is None:
            continue
        offsets = [r[0] for r in target_ranges]
        for bra, ket in finite_pairs:
            row_f, col_f = signature.flat_finite(bra), signature.flat_finite(ket)
            table = np.zeros([len(r) for r in target_ranges], dtype=complex)
            for target in itertools.product(*target_ranges):
                source = tuple(r + d for r, d in zip(target, delta))
                amp = 1.0
                for m, d in zip(source, delta):
                    amp *= _ladder_amplitude(m, d)
                row = basis_index(signature, levels, target, row_f)
                col = basis_index(signature, levels, source, col_f)
                entry = matrix[row, col]
                table[tuple(t - o for t, o in zip(target, offsets))] = entry / amp
            if not table.any():
                continue
            for is_imag, part in ((False, table.real), (True, table.imag)):
                if not part.any():
                    continue
                nested = _nested_fractions(part, offsets)
                poly = _interpolate_grid(nested, modes)
                # tables start at the first valid level; re-center the fit
                for mode, off in zip(modes, offsets):
                    if off:
                        poly = poly.shift(mode, -off)
                coeff = ScalarRational(poly)
                if not coeff.is_zero():
                    terms.append(OperatorTerm(coeff, delta, bra, ket, 0, 0, is_imag))
    return OperatorSum(signature, terms)


def _nested_fractions(array: np.ndarray, offsets) -> list:
    if array.ndim == 1:
        return [Fraction(float(v)) for v in array]
    return [_nested_fractions(sub, offsets[1:]) for sub in array]
