"""
Experiment settings.

Values are resolved from the built-in defaults, then a flat ``key = value``
config file, then ``PXLAB_<KEY>`` environment variables, then command-line
flags.
"""

import argparse
import os
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

import numpy as np
from dotenv import dotenv_values
from rich import box
from rich.table import Table

from ..domain import Domain, ExponentField, Grid, build_exponent_field
from ..eigensolver import MIN_SOLVER_NODES, SolverOptions
from ..errors import ConfigError, PxLabError
from ..modular import BOUNDARY_CONDITIONS

ENV_PREFIX = "PXLAB_"
OUTPUT_FORMATS = ("csv", "json", "both")
SPECTRUM_SOURCES = ("auto", "exact", "nodal")


def _optional_float(text: str) -> Optional[float]:
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return float(text)


DEFAULTS: Dict[str, Any] = {
    "domain": "0,1",
    "nodes": 257,
    "exponent": "2",
    "function": "sin(pi*x)",
    "boundary": "dirichlet",
    "max_iter": 500,
    "tol": 1e-8,
    "seed": 0,
    "restarts": 5,
    "j_max": 8,
    "source": "auto",
    "lambda_min": 10.0,
    "lambda_max": 1000.0,
    "lambda_count": 50,
    "lambda_anchor": None,
    "t_min_exp": -6,
    "t_max_exp": -1,
    "samples": 100,
    "out": "results",
    "format": "both",
}

CONVERTERS: Dict[str, Callable[[str], Any]] = {
    "domain": str,
    "nodes": int,
    "exponent": str,
    "function": str,
    "boundary": str,
    "max_iter": int,
    "tol": float,
    "seed": int,
    "restarts": int,
    "j_max": int,
    "source": str,
    "lambda_min": float,
    "lambda_max": float,
    "lambda_count": int,
    "lambda_anchor": _optional_float,
    "t_min_exp": int,
    "t_max_exp": int,
    "samples": int,
    "out": str,
    "format": str,
}


def parse_domain(text: str) -> Domain:
    """
    Parse ``a,b`` (an interval) or ``a1,b1 x a2,b2`` (a box).
    """
    axes = []
    for part in text.lower().split("x"):
        bounds = [v.strip() for v in part.split(",")]
        if len(bounds) != 2:
            raise ConfigError(f"cannot parse domain {text!r}: expected 'a,b' or 'a1,b1 x a2,b2'")
        try:
            axes.append((float(bounds[0]), float(bounds[1])))
        except ValueError as e:
            raise ConfigError(f"cannot parse domain {text!r}: {e}") from e
    try:
        return Domain.interval(*axes[0]) if len(axes) == 1 else Domain.box(*axes)
    except PxLabError as e:
        raise ConfigError(f"invalid domain {text!r}: {e}") from e


class Settings:
    """
    The Settings class holds every experiment parameter of a pxlab run.
    """

    def __init__(
        self,
        cli_args: argparse.Namespace = None,
        environ: Optional[Mapping[str, str]] = None,
    ):
        self.sources: Dict[str, str] = {}
        for key, value in DEFAULTS.items():
            setattr(self, key, value)
            self.sources[key] = "default"

        config_path = getattr(cli_args, "config", None) if cli_args else None
        if config_path:
            path = Path(config_path)
            if not path.is_file():
                raise ConfigError(f"config file not found: {path}")
            self._apply(dotenv_values(path), f"file {path.name}")

        environ = os.environ if environ is None else environ
        prefixed = {
            name[len(ENV_PREFIX):].lower(): value
            for name, value in environ.items()
            if name.startswith(ENV_PREFIX)
        }
        self._apply(prefixed, "environment")

        # Override with CLI arguments if provided
        if cli_args:
            for key in DEFAULTS:
                if hasattr(cli_args, key) and getattr(cli_args, key) is not None:
                    setattr(self, key, getattr(cli_args, key))
                    self.sources[key] = "command line"

    def _apply(self, values: Mapping[str, Optional[str]], source: str) -> None:
        for raw_key, raw_value in values.items():
            key = raw_key.strip().lower().replace("-", "_")
            if key not in DEFAULTS:
                raise ConfigError(f"unknown setting {raw_key!r} in {source}")
            if raw_value is None:
                continue
            try:
                setattr(self, key, CONVERTERS[key](raw_value.strip()))
            except ValueError as e:
                raise ConfigError(f"bad value for {key} in {source}: {raw_value!r}") from e
            self.sources[key] = source

    def validate(self) -> "Settings":
        """
        Check value ranges and referenced files.

        Raises:
            ConfigError: on the first invalid setting
        """
        self.get_domain()
        if self.nodes < MIN_SOLVER_NODES:
            raise ConfigError(f"nodes must be >= {MIN_SOLVER_NODES}, got {self.nodes}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 0 or self.restarts < 1:
            raise ConfigError("max_iter must be >= 0 and restarts >= 1")
        if self.boundary not in BOUNDARY_CONDITIONS:
            raise ConfigError(f"boundary must be one of {', '.join(BOUNDARY_CONDITIONS)}, got {self.boundary!r}")
        if self.format not in OUTPUT_FORMATS:
            raise ConfigError(f"format must be one of {', '.join(OUTPUT_FORMATS)}, got {self.format!r}")
        if self.source not in SPECTRUM_SOURCES:
            raise ConfigError(f"source must be one of {', '.join(SPECTRUM_SOURCES)}, got {self.source!r}")
        if self.exponent.strip().lower().endswith(".csv") and not Path(self.exponent).is_file():
            raise ConfigError(f"exponent samples file not found: {self.exponent}")
        if self.j_max < 1 or self.samples < 1:
            raise ConfigError("j_max and samples must be >= 1")
        if not 0 < self.lambda_min <= self.lambda_max or self.lambda_count < 0:
            raise ConfigError(
                f"lambda grid needs 0 < lambda_min <= lambda_max and lambda_count >= 0, "
                f"got [{self.lambda_min}, {self.lambda_max}] x {self.lambda_count}"
            )
        if self.t_min_exp > self.t_max_exp:
            raise ConfigError(f"t_min_exp must not exceed t_max_exp, got {self.t_min_exp} > {self.t_max_exp}")
        return self

    def get_domain(self) -> Domain:
        return parse_domain(self.domain)

    def get_grid(self) -> Grid:
        return Grid.for_domain(self.get_domain(), self.nodes)

    def get_exponent_field(self) -> ExponentField:
        domain = self.get_domain()
        spec: Any = self.exponent
        try:
            spec = float(self.exponent)
        except ValueError:
            if self.exponent.strip().lower().endswith(".csv"):
                spec = Path(self.exponent)
        return build_exponent_field(domain, Grid.for_domain(domain, self.nodes), spec)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(max_iter=self.max_iter, tol=self.tol, seed=self.seed, restarts=self.restarts)

    def lambda_grid(self) -> np.ndarray:
        """``lambda_count`` log-spaced levels from lambda_min to lambda_max."""
        return np.geomspace(self.lambda_min, self.lambda_max, self.lambda_count)

    def anchor(self) -> float:
        return self.lambda_min if self.lambda_anchor is None else self.lambda_anchor

    def t_grid(self) -> np.ndarray:
        """Amplitudes 10^k for k from t_max_exp down to t_min_exp."""
        return 10.0 ** np.arange(self.t_max_exp, self.t_min_exp - 1, -1, dtype=float)

    def as_dict(self) -> Dict[str, Any]:
        return {key: getattr(self, key) for key in DEFAULTS}

    def rows(self) -> Tuple[Tuple[str, str, str], ...]:
        return tuple((key, repr(getattr(self, key)), self.sources[key]) for key in DEFAULTS)

    def to_table(self) -> Table:
        table = Table(title="pxlab settings", box=box.SIMPLE)
        table.add_column("Setting", style="secondary")
        table.add_column("Value", style="primary")
        table.add_column("Source", style="secondary")
        for row in self.rows():
            table.add_row(*row)
        return table
