import os
from pathlib import Path
from typing import Dict, Optional

from dotenv import dotenv_values

LOG_LEVEL_ENV_VAR = "WSNSIM_LOG_LEVEL"
DEFAULT_LOG_LEVEL = "WARNING"


def read_cwd_dot_env() -> Dict[str, Optional[str]]:
    """Read the `.env` file in the current working directory, if any."""
    cwd_dot_env_path = Path(os.getcwd()) / ".env"
    if not cwd_dot_env_path.exists():
        return {}
    try:
        return dotenv_values(cwd_dot_env_path)
    except Exception:
        # a broken .env must never stop a simulation; treated as absent
        return {}


def get_setting(
    env_var_name: str,
    cli_option_value: Optional[str] = None,
    scenario_value: Optional[str] = None,
) -> Optional[str]:
    """Get a run-time setting from various sources in order of priority:
    1. CLI option
    2. Environment variable
    3. CWD .env file
    4. Scenario file value
    """
    # Priority 1: CLI option
    if cli_option_value:
        return cli_option_value

    # Priority 2: Environment variable
    env_value = os.environ.get(env_var_name)
    if env_value:
        return env_value

    # Priority 3: CWD .env file
    cwd_env_vars = read_cwd_dot_env()
    if cwd_env_vars.get(env_var_name):
        return cwd_env_vars[env_var_name]

    # Priority 4: Scenario file
    return scenario_value


def get_log_level(cli_option_value: Optional[str] = None) -> str:
    """Resolve the log verbosity (the only environment-driven knob)."""
    level = get_setting(LOG_LEVEL_ENV_VAR, cli_option_value) or DEFAULT_LOG_LEVEL
    return level.upper()
