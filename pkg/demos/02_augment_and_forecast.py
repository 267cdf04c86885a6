"""
Borrowing an edge from another model, then forecasting
======================================================

A "world" model lacks data on birth pathologies. We borrow the
contamination -> pathologies regression from a regional model, compare the
system weights before and after, find the most efficient connection, and
run a step-by-step forecast of a two-impulse scenario.
"""

import numpy as np

from cogmap import (
    CognitiveModel,
    augment,
    edge_efficiencies,
    forecast,
    system_weights,
    transfer_edge,
    unit_impulse,
)

names = ["Education", "Working potential", "GDP", "Investment", "Poverty", "Contamination", "Pathologies"]
world = np.zeros((7, 7))
world[0, 1] = 0.93  # Education -> Working potential
world[1, 2] = 0.95  # Working potential -> GDP
world[2, 3] = 0.91  # GDP -> Investment
world[2, 4] = -0.92  # GDP -> Poverty
world[3, 5] = 0.90  # Investment -> Contamination
world[5, 2] = -0.35  # Contamination -> GDP
world = CognitiveModel.from_matrix(names, world)

regional = np.zeros((2, 2))
regional[0, 1] = 0.94
regional = CognitiveModel.from_matrix(["Contamination", "Pathologies"], regional)

# %% Weights before and after injecting the borrowed edge.
before = system_weights(world)
edge = transfer_edge(regional, "Contamination", "Pathologies", "regional model")
augmented = augment(world, edge)
after = system_weights(augmented)
print(f"{'indicator':<20}{'before':>10}{'after':>10}")
for name in after.ranking:
    print(f"{name:<20}{before.weight(name):>10.4f}{after.weight(name):>10.4f}")
print("injected:", augmented.provenance[("Contamination", "Pathologies")])

# %% Which single connection carries the most total influence?
for src, dst, eff in edge_efficiencies(augmented)[:3]:
    print(f"efficiency {src} -> {dst}: {eff:+.4f}")

# %% Forecast: an education push now and a contamination cut at step 3.
scenario = [
    (0, unit_impulse(augmented, "Education")),
    (3, unit_impulse(augmented, "Contamination", -0.5)),
]
traj = forecast(augmented, scenario, horizon=10)
print("state of GDP over time:", np.round(traj.states()[:, augmented.index("GDP")], 3))
print("cumulative:", {n: round(float(v), 3) for n, v in zip(augmented.indicators, traj.cumulative)})
