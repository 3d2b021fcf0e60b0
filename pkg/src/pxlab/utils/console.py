"""
Console output and logging setup.

Library modules log through the standard ``logging`` tree under ``pxlab``;
the command line front end installs a rich handler on it and uses the
``log_*`` helpers below for user-facing progress lines.
"""

import logging

from rich.console import Console
from rich.logging import RichHandler
from rich.theme import Theme

UI_THEME = Theme({
    "primary": "white",
    "secondary": "bright_black",
    "accent": "cyan",
    "warning": "bold yellow",
    "error": "bold red",
})

console = Console(theme=UI_THEME)
err_console = Console(theme=UI_THEME, stderr=True)

DISABLE_LOGS = False

title = ""


def log_title(new_title: str) -> None:
    """
    Start a new titled section of console output.
    """
    global title
    if DISABLE_LOGS:
        return
    title = new_title
    console.print(f"\n[bold accent]{title}[/bold accent]")


def log_subtitle(new_message: str) -> None:
    """
    Print a subtitle under the current section.
    """
    if DISABLE_LOGS:
        return
    console.print(f"  [secondary]↳[/secondary] {new_message}")


def log_message(message: str) -> None:
    """
    Print a progress message.
    """
    if DISABLE_LOGS:
        return
    console.print(f"    • {message}")


def log_warning(message: str) -> None:
    """
    Print a warning to stderr. Warnings are never silenced.
    """
    err_console.print(f"[warning]warning:[/warning] {message}")


def log_error(message: str) -> None:
    """
    Print an error to stderr.
    """
    err_console.print(f"[error]error:[/error] {message}")


def configure_logging(verbose: int = 0) -> logging.Logger:
    """
    Install a rich handler on the ``pxlab`` logger.

    Args:
        verbose: 0 for WARNING, 1 for INFO, 2 or more for DEBUG

    Returns:
        The configured ``pxlab`` logger
    """
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose >= 2:
        level = logging.DEBUG

    logger = logging.getLogger("pxlab")
    logger.setLevel(level)
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        handler = RichHandler(console=err_console, show_path=False, rich_tracebacks=True)
        handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        logger.addHandler(handler)
    logger.propagate = False
    return logger
