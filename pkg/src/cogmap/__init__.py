"""Cognitive models of sustainable development built from indicator tables.

Pipeline: load an indicator table, standardize it, keep strongly and
reliably correlated pairs whose direction the analyst allows, build a signed
weighted digraph from the regression slopes, then study how unit impulses
spread through it (system weights, forecasts, edge efficiency).
"""

from .data import (
    FAMILY_TO_REGION,
    WORLD_MODEL_INDICATORS,
    Indicator,
    IndicatorSchema,
    IndicatorTable,
    Level,
    LevelMapping,
    ValidationReport,
    load_indicator_table,
    load_level_mapping,
    load_schema,
    map_level,
    validate_table,
    write_indicator_table,
)
from .errors import *  # noqa: F401,F403
from .impulse import (
    ImpulseTrajectory,
    SystemWeightReport,
    WeightMethod,
    edge_efficiencies,
    edge_efficiency,
    forecast,
    propagate,
    report_from_weights,
    system_weight,
    system_weights,
    truncated_series_weights,
    unit_impulse,
)
from .model import (
    CognitiveModel,
    ExternalEdge,
    SpectralReport,
    augment,
    build_model,
    contraction_check,
    load_model,
    save_model,
    transfer_edge,
)
from .report import render_report
from .stats import (
    DirectionMask,
    EdgeCandidate,
    StandardizedMatrix,
    StatMatrices,
    compute_stat_matrices,
    filter_edges,
    load_mask,
    standardize,
)
from .fixtures import fixture_path

__version__ = "0.1.0"
