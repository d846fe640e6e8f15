"""Assouad-type dimensions and spectra of homogeneous Moran and Cantor-like sets.

Closed-form values come from prefix tables of the defining sequences
(``formulas``); independent estimates come from exact covering numbers on
finite realizations (``construct``, ``estimate``).
"""
from .catalog import catalog_names, load_catalog, resolve_spec
from .construct import (LevelStructure, build_levels, export_csv, intervals_at_level, locate,
                        natural_measure_ball, verify_structure)
from .errors import (BudgetError, ConstructionError, DepthError, MoranError, SequenceError,
                     SpecFormatError)
from .estimate import (EmpiricalReport, ScalePair, check_counting_lemmas,
                       check_measure_properties, covering_number, empirical_assouad,
                       empirical_lower, empirical_spectrum_point, spectrum_sweep,
                       sweep_to_csv, two_scale_exponent)
from .estimators import EmpiricalDimension, EmpiricalSpectrum, FormulaDimension, FormulaSpectrum
from .formulas import (DimensionEstimate, SpectrumCurve, assouad_dim_formula,
                       assouad_spectrum_formula, level_index, lower_dim_bound_formula,
                       lower_spectrum_formula, scale_function, spectrum_curve,
                       spectrum_via_scale_function)
from .sequences import (PrefixTables, SequenceSpec, ValidationReport, build_prefix_tables,
                        eval_sequence, validate)

__version__ = "0.1.0"

__all__ = [
    "BudgetError", "ConstructionError", "DepthError", "DimensionEstimate", "EmpiricalDimension",
    "EmpiricalReport", "EmpiricalSpectrum", "FormulaDimension", "FormulaSpectrum",
    "LevelStructure", "MoranError", "PrefixTables", "ScalePair", "SequenceError",
    "SequenceSpec", "SpecFormatError", "SpectrumCurve", "ValidationReport",
    "assouad_dim_formula", "assouad_spectrum_formula", "build_levels", "build_prefix_tables",
    "catalog_names", "check_counting_lemmas", "check_measure_properties", "covering_number",
    "empirical_assouad", "empirical_lower", "empirical_spectrum_point", "eval_sequence",
    "export_csv", "intervals_at_level", "level_index", "load_catalog", "locate",
    "lower_dim_bound_formula", "lower_spectrum_formula", "natural_measure_ball",
    "resolve_spec", "scale_function", "spectrum_curve", "spectrum_sweep", "spectrum_via_scale_function",
    "sweep_to_csv",
    "two_scale_exponent", "validate", "verify_structure",
]
