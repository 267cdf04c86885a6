"""Bundled data files.

``synthetic_*.csv``  a small synthetic territory table with schema, direction
                     mask and forecast scenario, used by the CLI demo and tests.
``world_2000_weights.csv``, ``russia_2003_weights.csv``,
``world_2000_env_weights.csv``  published system-weight vectors, used only as
                     report fixtures (the source databases are not shipped).
"""

from importlib import resources
from pathlib import Path


def fixture_path(name: str) -> Path:
    path = Path(str(resources.files(__name__) / name))
    if not path.exists():
        raise FileNotFoundError(f"no bundled fixture {name!r}")
    return path
