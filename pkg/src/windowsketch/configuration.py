"""Loads and validates benchmark run configuration.
"""

# mypy: allow-any-generics, allow-any-explicit

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict

from jsonschema import ValidationError, validate
from tomli import TOMLDecodeError
from tomli import loads as parse_toml

from windowsketch.dsfd import sketch_size
from windowsketch.errors import ConfigurationError
from windowsketch.streamgen import (
    AdversarialSource,
    CsvSource,
    Source,
    StreamSpec,
    SyntheticSource,
)
from windowsketch.ui import UI

ALGORITHMS = [
    "dsfd",
    "fast-dsfd",
    "seq-dsfd",
    "time-dsfd",
    "lmfd",
    "swr",
    "swor",
    "exact",
]
SEQUENCE_ONLY = {"dsfd", "fast-dsfd", "seq-dsfd"}
FORMATS = ["json", "csv"]

_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["algo", "window", "epsilon", "query-every", "output", "source"],
    "properties": {
        "algo": {"enum": ALGORITHMS},
        "window": {"type": "integer", "minimum": 1},
        "epsilon": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "beta": {"type": "number", "exclusiveMinimum": 0},
        "R": {"type": "number", "minimum": 1},
        "query-every": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "output": {"type": "string"},
        "format": {"enum": FORMATS},
        "compressed": {"type": "boolean"},
        "eager-layers": {"type": "boolean"},
        "timing": {"type": "boolean"},
        "normalize": {"type": "boolean"},
        "rescale": {"type": "boolean"},
        "poisson": {"type": "number", "exclusiveMinimum": 0},
        "source": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "n", "d", "zeta"],
                    "properties": {
                        "kind": {"const": "synthetic"},
                        "n": {"type": "integer", "minimum": 1},
                        "d": {"type": "integer", "minimum": 1},
                        "zeta": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "path"],
                    "properties": {
                        "kind": {"const": "csv"},
                        "path": {"type": "string"},
                        "ts-col": {"type": "integer", "minimum": 0},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "d"],
                    "properties": {
                        "kind": {"const": "adversarial"},
                        "d": {"type": "integer", "minimum": 1},
                    },
                },
            ]
        },
    },
}


def parse_synthetic(text: str) -> Dict[str, Any]:
    """Parses the ``n,d,zeta`` shorthand of the command line."""
    parts = [part.strip() for part in text.split(",")]
    if len(parts) != 3:
        raise ConfigurationError(f"expected n,d,zeta but got {text!r}")
    try:
        return {
            "kind": "synthetic",
            "n": int(parts[0]),
            "d": int(parts[1]),
            "zeta": float(parts[2]),
        }
    except ValueError:
        raise ConfigurationError(f"expected n,d,zeta but got {text!r}") from None


@dataclass
class RunConfig:
    # Algorithm under test
    algo: str
    # Where rows come from, and how they are timestamped
    stream: StreamSpec
    # Window length N, in rows or in time units for timestamped streams
    window_n: int
    epsilon: float
    # Error coefficient of the layered sketches
    beta: float
    # Upper bound on squared row norms for the layered sketches
    big_r: float
    # Query the sketch and the oracle every this many rows
    query_every: int
    seed: int

    # Report location and format
    output: Path
    format: str

    # Report the rank-ell merged query of DS-FD instead of the raw stack
    compressed: bool
    # Use eager DS-FD inside the layered sketches
    eager_layers: bool
    # Measure wall-clock update and query times
    timing: bool

    @property
    def time_based(self) -> bool:
        return self.stream.timestamped

    def echo(self) -> Dict[str, Any]:
        """The parameters that determine a run's results."""
        source = self.stream.source
        stream: Dict[str, Any]
        if isinstance(source, SyntheticSource):
            stream = {"kind": "synthetic", "n": source.n, "d": source.d}
            stream["zeta"] = source.zeta
        elif isinstance(source, CsvSource):
            stream = {"kind": "csv", "path": str(source.path)}
            stream["ts-col"] = source.timestamp_column
        else:
            stream = {"kind": "adversarial", "d": source.d}
        return {
            "algo": self.algo,
            "window": self.window_n,
            "epsilon": self.epsilon,
            "beta": self.beta,
            "R": self.big_r,
            "query-every": self.query_every,
            "seed": self.seed,
            "compressed": self.compressed,
            "eager-layers": self.eager_layers,
            "normalize": self.stream.normalize,
            "rescale": self.stream.rescale,
            "poisson": self.stream.poisson_lambda,
            "source": stream,
        }

    @classmethod
    def load_from_dict(cls, dictionary: Dict[str, Any]) -> "RunConfig":
        """Constructs a RunConfig from a dictionary with kebab-case keys.

        Values are validated against a schema first, then against each other.
        """
        try:
            validate(dictionary, _SCHEMA)
        except ValidationError as e:
            raise ConfigurationError(e.message)

        algo = dictionary["algo"]
        window_n = dictionary["window"]
        epsilon = float(dictionary["epsilon"])
        big_r = float(dictionary.get("R", 1.0))
        seed = dictionary.get("seed", 0)
        poisson = dictionary.get("poisson")

        raw_source = dictionary["source"]
        source: Source
        if raw_source["kind"] == "synthetic":
            source = SyntheticSource(
                n=raw_source["n"], d=raw_source["d"], zeta=float(raw_source["zeta"])
            )
        elif raw_source["kind"] == "csv":
            source = CsvSource(
                path=Path(raw_source["path"]),
                timestamp_column=raw_source.get("ts-col"),
            )
            if poisson is not None and source.timestamp_column is not None:
                raise ConfigurationError(
                    "--poisson and --ts-col both define timestamps; pick one"
                )
        else:
            d = raw_source["d"]
            source = AdversarialSource(
                d=d,
                ell=sketch_size(epsilon, d),
                window_n=window_n,
                big_r=big_r,
            )

        stream = StreamSpec(
            source=source,
            poisson_lambda=None if poisson is None else float(poisson),
            normalize=dictionary.get("normalize", False),
            rescale=dictionary.get("rescale", False),
            seed=seed,
        )
        if stream.normalize and stream.rescale:
            raise ConfigurationError("--normalize and --rescale are mutually exclusive")
        if algo in SEQUENCE_ONLY and stream.timestamped:
            raise ConfigurationError(f"{algo} only supports sequence windows")
        if algo == "time-dsfd" and not stream.timestamped:
            raise ConfigurationError(
                "time-dsfd needs timestamps: use --poisson or --ts-col"
            )

        return RunConfig(
            algo=algo,
            stream=stream,
            window_n=window_n,
            epsilon=epsilon,
            beta=float(dictionary.get("beta", 1.0)),
            big_r=big_r,
            query_every=dictionary["query-every"],
            seed=seed,
            output=Path(dictionary["output"]),
            format=dictionary.get("format", "json"),
            compressed=dictionary.get("compressed", False),
            eager_layers=dictionary.get("eager-layers", False),
            timing=dictionary.get("timing", True),
        )


def load_configuration(file: Path) -> Dict[str, Any]:
    """Reads the ``[tool.windowsketch]`` table of a TOML file."""
    UI.log(f"Will attempt to load {file}.")

    try:
        file_contents = file.read_text(encoding="utf8")
    except OSError as read_error:
        raise ConfigurationError(f"Could not read {file}.") from read_error
    else:
        UI.log("Read configuration file.")

    try:
        parsed_contents = parse_toml(file_contents)
    except TOMLDecodeError as toml_error:
        raise ConfigurationError(f"Could not parse {file}.") from toml_error
    else:
        UI.log("Parsed configuration file.")

    tool = parsed_contents.get("tool")
    if not isinstance(tool, dict) or not isinstance(tool.get("windowsketch"), dict):
        raise ConfigurationError(f"Can not load `tool.windowsketch` from {file}")

    return dict(tool["windowsketch"])
