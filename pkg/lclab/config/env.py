import os
from pathlib import Path
from typing import Dict, List

import typer
from dotenv import load_dotenv

APP_NAME = "lclab"

CONFIG_DEFINITIONS: List[Dict[str, str]] = [
    {"key": "LCLAB_THREADS", "default": "1", "help": "default worker count"},
    {"key": "LCLAB_CALIBRATION_CACHE", "default": "", "help": "calibration cache file"},
    {"key": "LCLAB_TW_TABLE", "default": "", "help": "TW1 table overriding the packaged one"},
]


def get_app_dir() -> Path:
    """Per-user directory holding the global .env, the TW1 table cache and calibrations."""
    app_dir = Path(typer.get_app_dir(APP_NAME))
    app_dir.mkdir(parents=True, exist_ok=True)
    return app_dir


def get_global_config_path() -> Path:
    """Get the path to the global configuration file."""
    return get_app_dir() / ".env"


def load_project_env() -> None:
    """
    Load environment variables.

    Priority (highest to lowest):
    1. System environment variables (already set)
    2. Global configuration (~/.config/lclab/.env)
    3. Project .env file
    """
    global_env = get_global_config_path()
    if global_env.exists():
        load_dotenv(dotenv_path=global_env)

    project_env = Path.cwd() / ".env"
    if project_env.exists():
        load_dotenv(dotenv_path=project_env)
    else:
        load_dotenv()


def default_threads() -> int:
    """Worker count from LCLAB_THREADS; malformed or non-positive values fall back to 1."""
    raw = os.environ.get("LCLAB_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        return 1
    return value if value >= 1 else 1


def read_env_file(path: Path) -> Dict[str, str]:
    values: Dict[str, str] = {}
    if not path.exists():
        return values
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if "=" in line and not line.startswith("#"):
                key, value = line.split("=", 1)
                values[key] = value
    return values


def write_env_file(path: Path, values: Dict[str, str]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for key, value in values.items():
            handle.write(f"{key}={value}\n")


def configure_global_env(force: bool = False) -> None:
    """
    Interactively configure global environment variables.

    Args:
        force: If True, prompt even if the file exists.
    """
    import questionary
    from rich.console import Console
    from rich.panel import Panel

    console = Console()
    config_path = get_global_config_path()

    console.print(Panel(f"Global configuration file: [bold]{config_path}[/bold]", title="Configuration", border_style="cyan"))

    current_vars = read_env_file(config_path)
    if current_vars:
        console.print("\n[bold]Current Global Variables:[/bold]")
        for k, v in current_vars.items():
            console.print(f"  {k} = {v}")

    if config_path.exists() and not force:
        if not questionary.confirm("Do you want to update the lab settings?").ask():
            return

    new_vars = current_vars.copy()
    for item in CONFIG_DEFINITIONS:
        key = item["key"]
        current_val = new_vars.get(key, item["default"])
        val = questionary.text(f"{key} ({item['help']}):", default=current_val).ask()
        if val is None:
            continue
        if val:
            new_vars[key] = val
        else:
            new_vars.pop(key, None)

    write_env_file(config_path, new_vars)
    console.print(f"\n[green]Configuration saved to {config_path}[/green]")
    load_dotenv(dotenv_path=config_path, override=True)
