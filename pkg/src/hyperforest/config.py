"""Pipeline configuration: a strict YAML file.

Unknown keys anywhere in the document are errors, the seed is mandatory
(nothing falls back to wall-clock), and every path is resolved relative
to the config file so a config directory is self-contained.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .forest import ForestParams
from .splitting import SplitSpec

_TOP_KEYS = {
    "seed",
    "output_dir",
    "dataset",
    "contracts",
    "schema_map",
    "registries",
    "ppp_table",
    "split",
    "forest",
    "plots",
    "max_reject_fraction",
}
_SPLIT_KEYS = {"train", "calibration", "test"}
_FOREST_KEYS = {"trees", "features_per_split", "min_node_size", "exhaustive_categorical"}
_REGISTRY_KEYS = {"path", "source", "name_column"}


@dataclass(frozen=True)
class RegistryEntry:
    path: Path
    source: str
    name_column: str | None = None


@dataclass
class PipelineConfig:
    """Everything a command run needs, with paths already resolved."""

    seed: int
    output_dir: Path
    dataset: Path | None = None
    contracts: Path | None = None
    schema_map: dict[str, str] | None = None
    registries: list[RegistryEntry] = field(default_factory=list)
    ppp_table: dict[int, float] = field(default_factory=dict)
    split: SplitSpec = field(default_factory=SplitSpec)
    forest: ForestParams = field(default_factory=ForestParams)
    plots: bool = True
    max_reject_fraction: float = 0.25

    def require(self, name: str) -> object:
        value = getattr(self, name)
        if value is None or (isinstance(value, (list, dict)) and not value):
            raise ConfigError(f"config is missing {name!r}, required by this command")
        return value


def _reject_unknown(mapping: dict, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(sorted(unknown))}")


def _int_field(raw, name: str, minimum: int | None = None) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(f"{name} must be an integer, got {raw!r}")
    if minimum is not None and raw < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {raw}")
    return raw


def load_config(path, seed_override: int | None = None,
                out_override=None) -> PipelineConfig:
    """Parse and validate a config file.

    ``seed_override`` and ``out_override`` implement the CLI's --seed
    and --out flags without mutating the file.
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    _reject_unknown(raw, _TOP_KEYS, "config")

    base = path.parent

    def resolve(p) -> Path:
        p = Path(str(p))
        return p if p.is_absolute() else base / p

    if seed_override is not None:
        seed = seed_override
    elif "seed" in raw:
        seed = raw["seed"]
    else:
        raise ConfigError("config must set a seed; there is no wall-clock default")
    seed = _int_field(seed, "seed", minimum=0)

    if out_override is not None:
        output_dir = Path(out_override)
    else:
        output_dir = resolve(raw.get("output_dir", "out"))

    dataset = resolve(raw["dataset"]) if "dataset" in raw else None
    contracts = resolve(raw["contracts"]) if "contracts" in raw else None

    schema_map = raw.get("schema_map")
    if schema_map is not None:
        if not isinstance(schema_map, dict):
            raise ConfigError("schema_map must be a mapping")
        schema_map = {str(k): str(v) for k, v in schema_map.items()}

    registries: list[RegistryEntry] = []
    for i, entry in enumerate(raw.get("registries") or []):
        if not isinstance(entry, dict):
            raise ConfigError(f"registries[{i}] must be a mapping")
        _reject_unknown(entry, _REGISTRY_KEYS, f"registries[{i}]")
        if "path" not in entry or "source" not in entry:
            raise ConfigError(f"registries[{i}] needs 'path' and 'source'")
        registries.append(
            RegistryEntry(
                path=resolve(entry["path"]),
                source=str(entry["source"]),
                name_column=(
                    str(entry["name_column"]) if entry.get("name_column") is not None else None
                ),
            )
        )

    ppp_table: dict[int, float] = {}
    for year, factor in (raw.get("ppp_table") or {}).items():
        try:
            ppp_table[int(year)] = float(factor)
        except (TypeError, ValueError):
            raise ConfigError(f"ppp_table entry {year!r}: {factor!r} is not numeric") from None

    split_raw = raw.get("split") or {}
    if not isinstance(split_raw, dict):
        raise ConfigError("split must be a mapping")
    _reject_unknown(split_raw, _SPLIT_KEYS, "split")
    split = SplitSpec(
        train=float(split_raw.get("train", 0.5)),
        calibration=float(split_raw.get("calibration", 0.2)),
        test=float(split_raw.get("test", 0.3)),
        seed=seed,
    )

    forest_raw = raw.get("forest") or {}
    if not isinstance(forest_raw, dict):
        raise ConfigError("forest must be a mapping")
    _reject_unknown(forest_raw, _FOREST_KEYS, "forest")
    fps = forest_raw.get("features_per_split")
    forest = ForestParams(
        trees=_int_field(forest_raw.get("trees", 500), "forest.trees", minimum=1),
        features_per_split=None if fps is None else _int_field(fps, "forest.features_per_split", 1),
        min_node_size=_int_field(forest_raw.get("min_node_size", 1), "forest.min_node_size", 1),
        exhaustive_categorical=bool(forest_raw.get("exhaustive_categorical", False)),
    )

    plots = raw.get("plots", True)
    if not isinstance(plots, bool):
        raise ConfigError("plots must be true or false")

    max_reject = raw.get("max_reject_fraction", 0.25)
    try:
        max_reject = float(max_reject)
    except (TypeError, ValueError):
        raise ConfigError("max_reject_fraction must be a number") from None
    if not 0.0 <= max_reject <= 1.0:
        raise ConfigError("max_reject_fraction must lie in [0, 1]")

    return PipelineConfig(
        seed=seed,
        output_dir=output_dir,
        dataset=dataset,
        contracts=contracts,
        schema_map=schema_map,
        registries=registries,
        ppp_table=ppp_table,
        split=split,
        forest=forest,
        plots=plots,
        max_reject_fraction=max_reject,
    )
