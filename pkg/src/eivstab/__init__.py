"""Superstabilizing output-feedback synthesis for ARX plants identified from
records with bounded errors in variables.

The pipeline: simulate or load input/output records (``data``), describe every
plant consistent with the record and its noise bounds as a semialgebraic set,
certify closed-loop coefficient bounds over that set by sum-of-squares
programming (``certify``), minimize the certified l1 margin over compensator
coefficients (``synth``), and validate the winner by sampling and simulation
(``verify``).
"""

from .arx import (ArxModel, ClosedLoopCoeffs, Compensator, closed_loop_coefficients,
                  decay_envelope, plant_symbols, simulate, superstable_margin)
from .benchmarks import (demo_compensator, demo_dataset, demo_plant, derive_seeds,
                         monotone, sweep_gamma_vs_eps, sweep_gamma_vs_eps_w,
                         sweep_gamma_vs_order, sweep_gamma_vs_T, sweep_plant,
                         trend_dataset)
from .certify import (AlternativesCertificate, PutinarCertificate,
                      alternatives_constraints, alternatives_constraints_w,
                      archimedean_augment, box_set, pi_box, putinar_constraints,
                      wsos_membership)
from .conic import ConicProgram, ConicSolution, LinExpr, available_solvers, default_solver
from .data import (BsaSet, Dataset, MembershipResult, SamplerExhausted, consistency_set,
                   corrupt, generate, load_dataset, membership, residual_h,
                   sample_consistent_plants, save_dataset)
from .poly import CoeffSequence, Polynomial, basis_size, cross_correlate, monomial_basis
from .synth import (ModelBasedResult, SizeGuardError, SizeReport, SynthesisResult,
                    hierarchy, model_based_superstab, psatz_sizes, synth_alternatives,
                    synth_full)
from .verify import (EnvelopeReport, VerificationReport, brute_force_gamma,
                     closed_loop_check, verify_controller)

__version__ = "0.1.0"

__all__ = [
    "ArxModel", "ClosedLoopCoeffs", "Compensator", "closed_loop_coefficients",
    "decay_envelope", "plant_symbols", "simulate", "superstable_margin",
    "demo_compensator", "demo_dataset", "demo_plant", "derive_seeds", "monotone",
    "sweep_gamma_vs_eps", "sweep_gamma_vs_eps_w", "sweep_gamma_vs_order",
    "sweep_gamma_vs_T", "sweep_plant", "trend_dataset",
    "AlternativesCertificate", "PutinarCertificate", "alternatives_constraints",
    "alternatives_constraints_w", "archimedean_augment", "box_set", "pi_box",
    "putinar_constraints", "wsos_membership",
    "ConicProgram", "ConicSolution", "LinExpr", "available_solvers", "default_solver",
    "BsaSet", "Dataset", "MembershipResult", "SamplerExhausted", "consistency_set",
    "corrupt", "generate", "load_dataset", "membership", "residual_h",
    "sample_consistent_plants", "save_dataset",
    "CoeffSequence", "Polynomial", "basis_size", "cross_correlate", "monomial_basis",
    "ModelBasedResult", "SizeGuardError", "SizeReport", "SynthesisResult", "hierarchy",
    "model_based_superstab", "psatz_sizes", "synth_alternatives", "synth_full",
    "EnvelopeReport", "VerificationReport", "brute_force_gamma", "closed_loop_check",
    "verify_controller",
    "__version__",
]
