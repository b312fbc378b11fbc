import sys
from pathlib import Path
from typing import Any, Callable, Dict, NamedTuple, NoReturn, Optional

import click

from windowsketch.bench import run_stream
from windowsketch.configuration import (
    ALGORITHMS,
    FORMATS,
    RunConfig,
    load_configuration,
    parse_synthetic,
)
from windowsketch.errors import (
    ConfigurationError,
    InputError,
    ShapeError,
    SketchError,
)
from windowsketch.report import emit_report
from windowsketch.ui import UI

_EntryPoint = Callable[..., None]
_Param = Callable[[_EntryPoint], _EntryPoint]

EXIT_FAILURE = 1
EXIT_CONFIGURATION = 2
EXIT_INPUT = 3


class _Template(NamedTuple):
    verbose: _Param
    config: _Param


template = _Template(
    verbose=click.option("-v", "--verbose", is_flag=True),
    config=click.option(
        "--config",
        "config_file",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        help="TOML file with a [tool.windowsketch] table of defaults",
    ),
)


def _fail(e: SketchError) -> NoReturn:
    UI.show_error(e)
    if isinstance(e, ConfigurationError):
        sys.exit(EXIT_CONFIGURATION)
    if isinstance(e, (InputError, ShapeError)):
        sys.exit(EXIT_INPUT)
    sys.exit(EXIT_FAILURE)


def _source_from_options(
    synthetic: Optional[str],
    csv_path: Optional[Path],
    ts_col: Optional[int],
    adversarial: bool,
    dim: int,
) -> Optional[Dict[str, Any]]:
    chosen = [synthetic is not None, csv_path is not None, adversarial]
    if sum(chosen) > 1:
        raise ConfigurationError(
            "--synthetic, --csv and --adversarial are mutually exclusive"
        )
    if ts_col is not None and csv_path is None:
        raise ConfigurationError("--ts-col only applies to --csv")

    if synthetic is not None:
        return parse_synthetic(synthetic)
    if csv_path is not None:
        source: Dict[str, Any] = {"kind": "csv", "path": str(csv_path)}
        if ts_col is not None:
            source["ts-col"] = ts_col
        return source
    if adversarial:
        return {"kind": "adversarial", "d": dim}
    return None


@click.group()
def main() -> None:
    pass


@main.command()
@click.option("--algo", type=click.Choice(ALGORITHMS), help="Algorithm under test")
@click.option("--window", type=int, help="Window length N")
@click.option("--epsilon", type=float, help="Relative error parameter")
@click.option("--beta", type=float, help="Error coefficient of the layered sketches")
@click.option("--R", "big_r", type=float, help="Upper bound on squared row norms")
@click.option("--query-every", type=int, help="Query every this many rows")
@click.option("--seed", type=int, help="Seed of every random generator")
@click.option("--synthetic", metavar="N,D,ZETA", help="Generate a synthetic stream")
@click.option(
    "--csv",
    "csv_path",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Replay rows from a CSV file",
)
@click.option(
    "--ts-col", type=int, help="Column of the CSV holding timestamps, all >= 1"
)
@click.option("--adversarial", is_flag=True, help="Replay the hard instance")
@click.option(
    "--dim", type=int, default=16, show_default=True, help="Hard instance dimension"
)
@click.option("--poisson", type=float, help="Stamp rows with Poisson arrivals")
@click.option("--normalize", is_flag=True, help="Rescale rows to unit norm")
@click.option(
    "--rescale", is_flag=True, help="Divide rows by the smallest non-zero row norm"
)
@click.option("--compressed", is_flag=True, help="Report the rank-ell DS-FD query")
@click.option("--eager-layers", is_flag=True, help="Eager DS-FD in every layer")
@click.option("--no-timing", is_flag=True, help="Omit wall-clock timings")
@click.option("--out", "output", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--format", "fmt", type=click.Choice(FORMATS), help="Report format")
@template.config
@template.verbose
def run(
    verbose: bool,
    config_file: Optional[Path],
    synthetic: Optional[str],
    csv_path: Optional[Path],
    ts_col: Optional[int],
    adversarial: bool,
    dim: int,
    no_timing: bool,
    output: Optional[Path],
    fmt: Optional[str],
    **options: Any,
) -> None:
    """Replay a stream through a sketch and report its covariance error"""
    UI.verbose = verbose

    try:
        with UI.task("Load configuration"):
            values: Dict[str, Any] = {}
            if config_file is not None:
                values.update(load_configuration(config_file))

            source = _source_from_options(synthetic, csv_path, ts_col, adversarial, dim)
            if source is not None:
                values["source"] = source
            if output is not None:
                values["output"] = str(output)
            if fmt is not None:
                values["format"] = fmt
            if no_timing:
                values["timing"] = False
            for name, value in options.items():
                # Unset flags leave file values alone.
                if value is not None and value is not False:
                    key = "R" if name == "big_r" else name.replace("_", "-")
                    values[key] = value

            config = RunConfig.load_from_dict(values)
            UI.log(f"Algorithm {config.algo}, window {config.window_n}.")

        with UI.task("Replay stream"):
            report = run_stream(config)

        with UI.task("Write report"):
            emit_report(report, config.output, config.format)
            UI.log(f"Wrote {config.output}.")
    except SketchError as e:
        _fail(e)

    UI.show_summary(f"{config.algo} on {config.output.name}", report.summary())
