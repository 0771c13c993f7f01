"""Closed-form block-diagonalizing transformations on finite (x) bosonic spaces.

Symbolic engine plus a numeric certification oracle: exact channel-wise
generator solutions (static, time-periodic, fast-drive), order-by-order
effective Hamiltonians, and truncated-Fock cross checks.
"""

from .errors import (AssignmentAmbiguous, DegenerateSpectrum, EvalSingular,
                     FockSingular, NotCoRotating, NotDiagonal, NotTwoLevel,
                     ParseError, Resonance, ShapeMismatch, StaticComponent,
                     SwgenError, ValidationError, ZeroDenominator)
from .model import ModelSpec, parse_model, parse_model_text, render_model
from .operators import (Channel, HilbertSignature, OperatorSum, OperatorTerm,
                        channels, commutator, dagger, is_antihermitian,
                        is_hermitian, normal_order_product, render_json,
                        render_latex, render_text, time_derivative, to_json_terms)
from .oracle import (NumericContext, SpectrumAssignment, decompose_matrix,
                     dispersive_shift_numeric, materialize,
                     materialize_time_derivative, matrix_element_check,
                     residual_check, rotating_frame)
from .scalars import (Polynomial, ScalarRational, ScalarSymbol, parse_expression,
                      rat_eval)
from .swt import (HBAR, EliminatorMask, FrequencyOperator, ShiftExpression,
                  SwtResult, dispersive_shift, effective_hamiltonian,
                  fast_drive_generator, frequency, solve_generator_periodic,
                  solve_generator_static)

__version__ = "0.1.0"

__all__ = [
    "AssignmentAmbiguous", "Channel", "DegenerateSpectrum", "EliminatorMask",
    "EvalSingular", "FockSingular", "FrequencyOperator", "HBAR",
    "HilbertSignature", "ModelSpec", "NotCoRotating", "NotDiagonal",
    "NotTwoLevel", "NumericContext", "OperatorSum", "OperatorTerm",
    "ParseError", "Polynomial", "Resonance", "ScalarRational", "ScalarSymbol",
    "ShapeMismatch", "ShiftExpression", "SpectrumAssignment", "StaticComponent",
    "SwgenError", "SwtResult", "ValidationError", "ZeroDenominator",
    "channels", "commutator", "dagger", "decompose_matrix", "dispersive_shift",
    "dispersive_shift_numeric", "effective_hamiltonian", "fast_drive_generator",
    "frequency", "is_antihermitian", "is_hermitian", "materialize",
    "materialize_time_derivative", "matrix_element_check",
    "normal_order_product", "parse_expression", "parse_model",
    "parse_model_text", "rat_eval", "render_json", "render_latex",
    "render_model", "render_text", "residual_check", "rotating_frame",
    "solve_generator_periodic", "solve_generator_static", "time_derivative",
    "to_json_terms",
]
