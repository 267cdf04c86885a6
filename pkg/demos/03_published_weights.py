"""
Rendering published weight vectors and mapping family indicators
================================================================

The bundled fixtures hold published system-weight vectors for the world
(2000), Russia (2003) and the world with an environmental component. Their
source databases are not shipped, so here they are only rendered: ranked
CSV and a signed SVG bar chart per vector. The second half maps a small
family-level table onto regional indicator names.
"""

import sys
from pathlib import Path

import numpy as np

from cogmap import FAMILY_TO_REGION, IndicatorSchema, IndicatorTable, Level, LevelMapping, fixture_path, map_level
from cogmap.report import load_weights, render_report, render_svg

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_output")
out.mkdir(exist_ok=True)

# %% Published vectors
for name in ("world_2000_weights", "russia_2003_weights", "world_2000_env_weights"):
    rep = load_weights(fixture_path(f"{name}.csv"))
    print(name, "top:", rep.ranking[0], "bottom:", rep.ranking[-1])
    (out / f"{name}.svg").write_bytes(render_svg(rep, title=name.replace("_", " ")))
    (out / f"{name}.csv").write_bytes(render_report(rep, "csv"))
print("charts written to", out.resolve())

# %% Family -> region
family = ["Total family income", "Number of family members", "Family safety level"]
table = IndicatorTable(
    IndicatorSchema.from_names(family, level=Level.FAMILY),
    ["household 1", "household 2", "household 3"],
    np.array([[42.0, 4, 0.7], [31.5, 3, 0.9], [55.2, 5, np.nan]]),
)
mapping = LevelMapping(tuple(p for p in FAMILY_TO_REGION.pairs if p[0] in family), Level.FAMILY, Level.REGION)
regional, dropped = map_level(table, mapping)
print("regional columns:", regional.names)
print("dropped (no regional counterpart):", dropped)
