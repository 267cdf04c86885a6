"""Regenerate the bundled synthetic territory table.

The table has 40 territories and a planted causal chain

    Education -> Working potential -> GDP <-> Investment -> Contamination -> Pathologies
                                      GDP -> Poverty (negative)

plus an unrelated Budget column, a column with no statistics at all (the
"no statistical data found" situation) and a few blank cells. Run from the
repository root:

    python demos/00_make_fixture.py
"""

from pathlib import Path

import numpy as np

from cogmap import DirectionMask, IndicatorSchema, IndicatorTable, Indicator, Level
from cogmap.data import write_indicator_table, write_schema
from cogmap.stats import write_mask

OUT = Path(__file__).resolve().parent.parent / "src" / "cogmap" / "fixtures"
N = 40

rng = np.random.default_rng(2000)


def child(parent, r):
    """Unit-variance column whose population correlation with `parent` is `r`."""
    return r * parent + np.sqrt(1 - r * r) * rng.standard_normal(N)


edu = rng.standard_normal(N)
work = child(edu, 0.97)
gdp = child(work, 0.97)
inv = child(gdp, 0.96)
pov = child(gdp, -0.95)
cont = child(inv, 0.97)
path = child(cont, 0.96)
budget = rng.standard_normal(N)
soil = np.full(N, np.nan)

columns = {
    "Education": (edu * 0.1 + 0.7, "index", edu),
    "Working potential": (work * 2.0e6 + 9.0e6, "people", work),
    "GDP": (gdp * 40.0 + 180.0, "bn USD", gdp),
    "Investment": (inv * 8.0 + 30.0, "bn USD", inv),
    "Poverty": (pov * 0.05 + 0.38, "Gini", pov),
    "Contamination": (cont * 1.5 + 6.0, "t/km2", cont),
    "Pathologies": (path * 3.0 + 20.0, "per 1000 births", path),
    "Budget": (budget * 5.0 + 25.0, "bn USD", budget),
    "Soil contamination level": (soil, "index", soil),
}
values = np.column_stack([np.round(v, 6) for v, _, _ in columns.values()])
values[3, 1] = np.nan
values[17, 4] = np.nan
values[29, 7] = np.nan

schema = IndicatorSchema(tuple(Indicator(name, unit, Level.REGION) for name, (_, unit, _) in columns.items()))
table = IndicatorTable(schema, tuple(f"T{k:02d}" for k in range(1, N + 1)), values)

mask = DirectionMask.from_pairs(
    schema.names,
    [
        ("Education", "Working potential"),
        ("Working potential", "GDP"),
        ("GDP", "Investment"),
        ("Investment", "GDP"),
        ("GDP", "Poverty"),
        ("Investment", "Contamination"),
        ("Contamination", "Pathologies"),
        ("Budget", "Poverty"),
    ],
)

with open(OUT / "synthetic_table.csv", "w", encoding="utf-8", newline="") as fh:
    write_indicator_table(table, fh)
with open(OUT / "synthetic_schema.csv", "w", encoding="utf-8", newline="") as fh:
    write_schema(schema, fh)
with open(OUT / "synthetic_mask.csv", "w", encoding="utf-8", newline="") as fh:
    write_mask(mask, fh)
with open(OUT / "synthetic_scenario.csv", "w", encoding="utf-8", newline="") as fh:
    fh.write("step,indicator,magnitude\n0,Education,1\n3,Contamination,-0.5\n")
print("wrote fixtures to", OUT)
