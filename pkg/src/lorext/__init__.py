"""Lorentz and Hardy-Lorentz spaces on uniform grids: rearrangements, norms,
extreme-point probes and inner-outer factorization."""

from .errors import (GeneratorFlagError, GridMismatchError, LemmaViolation, LorextError,
                     NotNormalizedError, PreconditionError)
from .extremal import (ExtremalityVerdict, Verdict, alignment_factor, brute_force_vertices,
                       feasibility_probe, l1_witness, norm_subgradient, theorem_t0_form_check)
from .hardy import (BoundarySamples, DiskFunction, boundary_modulus, boundary_trace,
                    construct_arc_constant_example, evaluate, factorize, fourier_coefficients,
                    hardy_lorentz_norm, inner_check, inner_extreme_check, outerness_check,
                    th2a_probe)
from .lorentz import (ConcaveGenerator, aligned_family_check, generator_weights, lorentz_norm,
                      norm_strict_compare, parse_generator, plus_minus_decomposition_norm,
                      rearrangement_additivity_check, skewed_norm_pair)
from .rearrange import (LevelSetFamily, RearrangedProfile, SampledFunction,
                        decreasing_rearrangement, distribution_function, equimeasurable,
                        level_set_family)

__version__ = "0.1.0"
