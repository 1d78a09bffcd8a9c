"""Sensor network data dissemination simulator and benchmark harness"""

import subprocess
from pathlib import Path
from typing import Optional

import toml

# pyproject.toml sits next to the package in wheels (force-include) and one
# level up in a source checkout
_PACKAGE_DIR = Path(__file__).resolve().parent
_PYPROJECT_CANDIDATES = (
    _PACKAGE_DIR / "pyproject.toml",
    _PACKAGE_DIR.parent / "pyproject.toml",
)


def _read_version() -> str:
    for pyproject_path in _PYPROJECT_CANDIDATES:
        if pyproject_path.exists():
            with open(pyproject_path, "r") as f:
                pyproject = toml.load(f)
            return pyproject["project"]["version"]
    return "0.0.0"


__version__ = _read_version()


def get_git_commit() -> Optional[str]:
    """Get the current git commit hash (short version), if running from a checkout."""
    try:
        result = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True,
            text=True,
            cwd=_PACKAGE_DIR.parent,
            timeout=1,
        )
        if result.returncode == 0:
            return result.stdout.strip()
    except (subprocess.SubprocessError, FileNotFoundError):
        pass

    return None


def get_version_string() -> str:
    """Get the full version string including git commit if available."""
    version = __version__

    # If __file__ is in site-packages, we're likely pip-installed
    if "site-packages" in str(_PACKAGE_DIR):
        return f"{version} (pip)"

    commit = get_git_commit()
    if commit:
        return f"{version} (commit: {commit})"

    return version
