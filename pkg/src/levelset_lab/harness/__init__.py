from .config import PRESETS, RunConfig, SCHEMA, list_presets, parse_config, preset_config
from .runner import CheckResult, OutputManifest, build_setup, check_manifest, execute, run_experiment, run_grid

__all__ = [
    "CheckResult",
    "OutputManifest",
    "PRESETS",
    "RunConfig",
    "SCHEMA",
    "build_setup",
    "check_manifest",
    "execute",
    "list_presets",
    "parse_config",
    "preset_config",
    "run_experiment",
    "run_grid",
]
