"""Scenario files shipped with the package."""
from pathlib import Path
from typing import List, Union

from paraconcave.errors import ScenarioConfigError

SCENARIO_DIR = Path(__file__).resolve().parent


def bundled_scenarios() -> List[Path]:
    return sorted(SCENARIO_DIR.glob("*.json"))


def resolve_scenario(name_or_path: Union[str, Path]) -> Path:
    """An existing file path, or the name of a bundled scenario."""
    path = Path(name_or_path)
    if path.is_file():
        return path
    bundled = SCENARIO_DIR / f"{path.stem}.json"
    if bundled.is_file():
        return bundled
    names = ", ".join(p.stem for p in bundled_scenarios())
    raise ScenarioConfigError(f"no scenario file or bundled scenario named {name_or_path!r} (bundled: {names})")
