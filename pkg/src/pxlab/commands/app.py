"""
Console application interface for pxlab.
This module provides a form-based terminal interface over the experiments.
"""

import os
import sys
from argparse import Namespace
from typing import Any, Dict

import questionary
from pyfiglet import Figlet
from rich import box
from rich.align import Align
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table
from rich.text import Text

from ..errors import InvariantViolation, PxLabError
from ..utils import console as console_utils
from ..utils.console import console
from . import experiments
from .settings import DEFAULTS, Settings

QUESTIONARY_STYLE = questionary.Style([
    ("qmark", "fg:#55FFFF bold"),
    ("question", "fg:#FFFFFF"),
    ("answer", "fg:#AAAAAA"),
    ("pointer", "fg:#666666 bold"),
    ("highlighted", "fg:#55FFFF bold"),
    ("selected", "fg:#AAAAAA"),
    ("separator", "fg:#AAAAAA"),
    ("instruction", "fg:#AAAAAA"),
    ("text", "fg:#AAAAAA"),
])

COMMAND_CHOICES = [
    {"name": "Luxemburg norm and sandwich (norm)", "value": "norm"},
    {"name": "First eigenpair (eig)", "value": "eig"},
    {"name": "Nodal spectrum, 1D (spectrum)", "value": "spectrum"},
    {"name": "Counting function vs theorem curves (count)", "value": "count"},
    {"name": "Randomized inequality suite (verify)", "value": "verify"},
    {"name": "Plateau-bump quotients (lambda-star)", "value": "lambda-star"},
]


def clear_screen() -> None:
    os.system('cls' if os.name == 'nt' else 'clear')


def display_title() -> None:
    """Display the application title using figlet."""
    clear_screen()

    f = Figlet(font='chunky')
    console.print(Align.center(Text(f.renderText('pxlab'), style="bold cyan")))
    console.print(Align.center(Text("Eigenvalue experiments for the normalized p(x)-Laplacian", style="italic")))
    console.print()


def _ask(question) -> Any:
    answer = question.ask()
    if answer is None:  # This occurs when user presses Ctrl+C
        sys.exit(0)
    return answer


def _is_int(text: str) -> bool:
    try:
        int(text)
    except ValueError:
        return False
    return True


def get_user_input() -> Dict[str, Any]:
    """Collect experiment settings through a form interface."""
    try:
        command = _ask(questionary.select(
            "Experiment:",
            choices=COMMAND_CHOICES,
            instruction="(Use ↑↓ and Enter)",
            style=QUESTIONARY_STYLE,
            use_jk_keys=False,
        ))

        domain = _ask(questionary.text(
            "Domain ('a,b' or 'a1,b1 x a2,b2'):",
            default=DEFAULTS["domain"],
            style=QUESTIONARY_STYLE,
        ))

        exponent = _ask(questionary.text(
            "Exponent p(x) (number, expression or CSV path):",
            default=DEFAULTS["exponent"],
            style=QUESTIONARY_STYLE,
        ))

        nodes = _ask(questionary.text(
            "Grid nodes per axis:",
            default=str(DEFAULTS["nodes"]),
            validate=lambda text: _is_int(text) or "Enter an integer",
            style=QUESTIONARY_STYLE,
        ))

        boundary = _ask(questionary.select(
            "Boundary condition:",
            choices=[
                {"name": "Dirichlet (zero trace)", "value": "dirichlet"},
                {"name": "Free (Neumann)", "value": "free"},
            ],
            instruction="(Use ↑↓ and Enter)",
            style=QUESTIONARY_STYLE,
            use_jk_keys=False,
        ))

        out = _ask(questionary.text(
            "Output folder:",
            default=os.path.join(os.getcwd(), DEFAULTS["out"]),
            style=QUESTIONARY_STYLE,
        ))

        clear_screen()

        # Confirm user choices with rich formatting
        console.print("\n[bold]Please confirm your choices:[/bold]")

        confirmation_table = Table(show_header=False, box=box.SIMPLE)
        confirmation_table.add_column("Parameter", style="secondary")
        confirmation_table.add_column("Value", style="primary")

        confirmation_table.add_row("Experiment", command)
        confirmation_table.add_row("Domain", domain)
        confirmation_table.add_row("Exponent", exponent)
        confirmation_table.add_row("Nodes", nodes)
        confirmation_table.add_row("Boundary", boundary)
        confirmation_table.add_row("Output folder", out)

        console.print(confirmation_table)
        console.print()

        confirmed = questionary.confirm(
            "Continue with these settings?",
            default=True,
            style=QUESTIONARY_STYLE,
        ).ask()

        if not confirmed:
            sys.exit(0)

        clear_screen()

        return {
            "command": command,
            "domain": domain,
            "exponent": exponent,
            "nodes": int(nodes),
            "boundary": boundary,
            "out": out,
        }
    except KeyboardInterrupt:
        sys.exit(0)


def _panel(message: str, title: str) -> Panel:
    return Panel(message, title=title, border_style="cyan", title_align="center", box=box.DOUBLE)


def run_experiment(params: Dict[str, Any]) -> None:
    """Run one experiment with the given parameters behind a progress display."""
    command = params["command"]
    try:
        settings = Settings(cli_args=Namespace(**params)).validate()

        console_utils.DISABLE_LOGS = True
        with Progress(
            SpinnerColumn(style="cyan"),
            TextColumn("[bold cyan]{task.description}"),
            console=console,
        ) as progress:
            task = progress.add_task(f"Running {command}...", total=None)

            def custom_log_title(message):
                progress.update(task, description=message)

            def custom_log_subtitle(message):
                progress.console.print(f"  ↳ {message}")

            def custom_log_message(message):
                progress.console.print(f"    • {message}")

            # Route the experiment's progress lines into the display
            experiments.log_title = custom_log_title
            experiments.log_subtitle = custom_log_subtitle
            experiments.log_message = custom_log_message

            experiments.run(settings, command)

        console.print(_panel(
            f"[bold]{command} completed successfully![/bold]\n"
            f"Reports can be found at: [white]{settings.out}[/white]",
            "Success",
        ))
    except InvariantViolation as e:
        console.print(_panel(f"[bold]{e.inequality}[/bold]\n{e.detail or ''}".rstrip(), "Inequality violated"))
    except PxLabError as e:
        console.print(_panel(f"[bold]{e}[/bold]", "Error"))
    finally:
        console_utils.DISABLE_LOGS = False


def main() -> None:
    """Main entry point for the console app."""
    try:
        display_title()
        params = get_user_input()
        run_experiment(params)

        console.print()
        input("Press Enter to exit...")

    except KeyboardInterrupt:
        sys.exit(0)
    except Exception as e:
        console.print(_panel(f"[bold]{str(e)}[/bold]", "Error"))
        console.print_exception()

        console.print()
        input("Press Enter to exit...")


if __name__ == "__main__":
    main()
