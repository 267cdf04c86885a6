"""
From an indicator table to system weights
=========================================

Walks the bundled synthetic territory table through every stage: load,
validate, standardize, correlate, filter by the analyst's direction mask,
build the signed digraph, check that it contracts, and rank indicators by
system weight.
"""

import numpy as np

from cogmap import (
    DirectionMask,
    build_model,
    compute_stat_matrices,
    contraction_check,
    filter_edges,
    fixture_path,
    load_indicator_table,
    load_mask,
    load_schema,
    standardize,
    system_weights,
    validate_table,
)

np.set_printoptions(precision=3, suppress=True)

# %% Load and validate. The soil column has no statistics at all and is dropped.
schema = load_schema(fixture_path("synthetic_schema.csv"))
table = load_indicator_table(fixture_path("synthetic_table.csv"), schema)
report = validate_table(table, min_pairwise_n=4)
print(report.summary().splitlines()[:3])
table = report.apply(table)
print("table shape", table.shape)

# %% Standardize and compute the pairwise matrices.
z = standardize(table)
sm = compute_stat_matrices(z)
print("correlation matrix\n", sm.corr)

# %% Keep strong (|r| >= 0.9), reliable (err <= 0.1) pairs in admissible directions.
mask = load_mask(fixture_path("synthetic_mask.csv"))
edges = filter_edges(sm, mask)
for e in edges:
    print(f"{e.source:>18} -> {e.target:<14} w={e.weight:+.3f}  r={e.r:+.3f}  err={e.r_err:.3f}  n={e.n}")

# Without a mask every strong pair would appear in both directions:
print("unmasked candidates:", len(filter_edges(sm, DirectionMask.full(sm.names))))

# %% Build the model and check that impulses die out.
model = build_model(mask.restrict(table.names).names, edges)
spectral = contraction_check(model)
print("spectral radius", round(spectral.spectral_radius, 6), "contraction:", spectral.is_contraction)

# %% System weights: total signal reaching the graph after a unit impulse.
weights = system_weights(model)
for rank, name in enumerate(weights.ranking, start=1):
    print(f"{rank:2d}  {name:<20} {weights.weight(name):+.4f}")
