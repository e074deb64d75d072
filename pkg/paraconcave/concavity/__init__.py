"""Certification and refutation of alpha-parabolic p-concavity."""
from .checks import (
    ConcavityQuery,
    ConcavityReport,
    SampledValues,
    Verdict,
    WorstTriple,
    certification_tolerance,
    check_parabolic_concavity,
    check_spatial_concavity,
    estimate_max_exponent,
    evaluate_triples,
    transformed_defects,
)
from .envelope import EnvelopeResult, compare_envelopes, full_envelope, lambda_envelope
from .properties import PropertyVerdict, extend_in_time, property_suite
from .structure import StructureRegion, check_structure_condition

__all__ = [
    "ConcavityQuery",
    "ConcavityReport",
    "SampledValues",
    "Verdict",
    "WorstTriple",
    "certification_tolerance",
    "check_parabolic_concavity",
    "check_spatial_concavity",
    "estimate_max_exponent",
    "evaluate_triples",
    "transformed_defects",
    "EnvelopeResult",
    "compare_envelopes",
    "full_envelope",
    "lambda_envelope",
    "PropertyVerdict",
    "extend_in_time",
    "property_suite",
    "StructureRegion",
    "check_structure_condition",
]
