"""Configuration loader utilities with validation."""

import json
import os
from typing import Any, Dict, List, Sequence

from src.utils.errors import ConfigError

SCHEMA_VERSION = 1
SCENARIO_TARGETS = ("hierarchy", "charges", "soliton", "glm", "airy", "burgers")

# Block each target needs besides name/target/parameters
TARGET_BLOCKS = {
    "hierarchy": ["hierarchy"],
    "charges": ["charges"],
    "soliton": ["soliton", "grid"],
    "glm": ["glm", "kernel"],
    "airy": ["kernel", "grid"],
    "burgers": ["burgers", "grid"],
}


def project_root() -> str:
    """Repository root (three levels up from this file)."""
    return os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def resolve_path(path: str) -> str:
    """
    Resolve a relative path against the working directory, falling back to
    the project root when nothing exists there (bundled data and config).
    """
    if os.path.isabs(path):
        return path
    local = os.path.abspath(path)
    if os.path.exists(local):
        return local
    return os.path.join(project_root(), path)


def _read_json(path: str, what: str, help_line: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise FileNotFoundError(
            f"{what} not found: {path}\n"
            f"{help_line}"
        )
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise json.JSONDecodeError(
            f"Invalid JSON in {path}: {e.msg}",
            e.doc,
            e.pos
        )
    if not isinstance(data, dict):
        raise ConfigError("<root>", f"{path} must contain a JSON object")
    return data


def require_keys(block: Dict[str, Any], required: Sequence[str], path: str, prefix: str = "") -> None:
    """
    Raises:
        ConfigError: Naming the first missing key as a dotted path
    """
    missing = [key for key in required if key not in block]
    if missing:
        field_path = f"{prefix}.{missing[0]}" if prefix else missing[0]
        raise ConfigError(
            field_path,
            f"Missing required keys in {path}: {missing}\n"
            f"Required keys: {list(required)}"
        )


def require_number(block: Dict[str, Any], key: str, field_path: str, positive: bool = False,
                   integer: bool = False) -> float:
    """Read a real number (optionally a positive one or an integer) from ``block``."""
    value = block.get(key)
    kinds = (int,) if integer else (int, float)
    if isinstance(value, bool) or not isinstance(value, kinds):
        expected = "an integer" if integer else "a real number"
        raise ConfigError(field_path, f"expected {expected}, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(field_path, f"must be positive, got {value}")
    return value


def load_app_config(config_path: str = "data/config.json") -> Dict[str, Any]:
    """
    Load and validate application configuration.

    Args:
        config_path: Path to config.json file

    Returns:
        Dictionary containing app configuration

    Raises:
        FileNotFoundError: If config file doesn't exist
        ConfigError: If config is malformed or missing required keys
        json.JSONDecodeError: If file contains invalid JSON
    """
    config_path = resolve_path(config_path)
    config = _read_json(
        config_path,
        "Application configuration file",
        "Please create data/config.json with app settings.",
    )

    required_keys = [
        'schema_version',
        'output_directory',
        'default_fd_order',
        'default_boundary_policy',
        'hierarchy_max_depth',
        'tolerances',
        'glm_decay_gate',
    ]
    require_keys(config, required_keys, config_path)

    if config['schema_version'] != SCHEMA_VERSION:
        raise ConfigError('schema_version', f"unsupported version {config['schema_version']}, expected {SCHEMA_VERSION}")

    if config['default_fd_order'] not in (2, 4):
        raise ConfigError('default_fd_order', f"must be 2 or 4, got {config['default_fd_order']}")

    if config['default_boundary_policy'] not in ('shrink-domain', 'one-sided'):
        raise ConfigError(
            'default_boundary_policy',
            f"must be 'shrink-domain' or 'one-sided', got {config['default_boundary_policy']!r}"
        )

    require_number(config, 'hierarchy_max_depth', 'hierarchy_max_depth', positive=True, integer=True)
    require_number(config, 'glm_decay_gate', 'glm_decay_gate', positive=True)

    if not isinstance(config['output_directory'], str) or not config['output_directory']:
        raise ConfigError('output_directory', "must be a non-empty string")

    if not isinstance(config['tolerances'], dict):
        raise ConfigError('tolerances', "expected a map of equation id to tolerance")
    for key in config['tolerances']:
        require_number(config['tolerances'], key, f"tolerances.{key}", positive=True)

    return config


def load_scenario(scenario_path: str) -> Dict[str, Any]:
    """
    Load and validate a scenario file.

    Args:
        scenario_path: Path to a scenario JSON file

    Returns:
        Scenario dictionary with its resolved path under "_path"

    Raises:
        FileNotFoundError: If the file doesn't exist
        ConfigError: If a field is missing or invalid (message names the dotted path)
        json.JSONDecodeError: If file contains invalid JSON
    """
    scenario_path = resolve_path(scenario_path)
    scenario = _read_json(
        scenario_path,
        "Scenario file",
        "Run 'akns list' to see the bundled scenarios under data/scenarios/.",
    )

    require_keys(scenario, ['name', 'target', 'parameters'], scenario_path)
    version = scenario.get('schema_version', SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError('schema_version', f"unsupported version {version}, expected {SCHEMA_VERSION}")

    if not isinstance(scenario['name'], str) or not scenario['name']:
        raise ConfigError('name', "must be a non-empty string")
    target = scenario['target']
    if target not in SCENARIO_TARGETS:
        raise ConfigError('target', f"unknown target {target!r}; expected one of {list(SCENARIO_TARGETS)}")
    if not isinstance(scenario['parameters'], dict):
        raise ConfigError('parameters', "expected an object")

    for block in TARGET_BLOCKS[target]:
        if block not in scenario:
            raise ConfigError(
                block,
                f"Missing required keys in {scenario_path}: ['{block}']\n"
                f"Required keys for target '{target}': {TARGET_BLOCKS[target]}"
            )
        if not isinstance(scenario[block], dict):
            raise ConfigError(block, "expected an object")

    if 'seed' in scenario:
        require_number(scenario, 'seed', 'seed', integer=True)
    if 'checks' in scenario and not isinstance(scenario['checks'], list):
        raise ConfigError('checks', "expected a list of check names")
    if 'outputs' in scenario and not isinstance(scenario['outputs'], dict):
        raise ConfigError('outputs', "expected an object")

    scenario['_path'] = scenario_path
    return scenario


def scenario_files(directory: str = "data/scenarios") -> List[str]:
    """Sorted scenario JSON paths in ``directory``."""
    directory = resolve_path(directory)
    if not os.path.isdir(directory):
        raise FileNotFoundError(
            f"Scenario directory not found: {directory}\n"
            f"Please create data/scenarios/ with scenario JSON files."
        )
    return sorted(
        os.path.join(directory, name) for name in os.listdir(directory) if name.endswith(".json")
    )


def load_parameter_file(path: str) -> Dict[str, Any]:
    """
    Load a standalone parameter file for the direct subcommands.

    The file holds a "parameters" block plus whatever target blocks the
    subcommand reads (e.g. "soliton" or "kernel").

    Raises:
        FileNotFoundError: If the file doesn't exist
        ConfigError: If the "parameters" block is missing
        json.JSONDecodeError: If file contains invalid JSON
    """
    path = resolve_path(path)
    data = _read_json(path, "Parameter file", "Pass --config with a JSON file holding a 'parameters' block.")
    require_keys(data, ['parameters'], path)
    if not isinstance(data['parameters'], dict):
        raise ConfigError('parameters', "expected an object")
    return data
