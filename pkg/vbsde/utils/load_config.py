import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from ..core import TimeGrid
from ..errors import ConfigError
from ..regression import BasisSpec, state_map
from ..sde import MarketModel

SCHEMA_VERSION = 1
SOLVER_NAMES = ("closed_form", "picard", "variational", "yosida")
OUTPUT_FORMATS = ("json", "csv")
SEED_ENV = "BSDE_SEED"

Numeric = Union[float, List[float], List[List[float]]]


@dataclass(frozen=True)
class MarketConfig:
    r: float = 0.05
    sigma: Numeric = 0.2
    s0: Numeric = 100.0
    b: Optional[Numeric] = None
    theta: Optional[Numeric] = None


@dataclass(frozen=True)
class ClaimConfig:
    type: str = "call"
    strike: Optional[float] = 100.0
    asset: int = 0
    expression: Optional[str] = None


@dataclass(frozen=True)
class GridConfig:
    T: float = 1.0
    N: int = 50


@dataclass(frozen=True)
class EnsembleConfig:
    M: int = 100_000
    seed: int = 20240601
    n_jobs: int = 1


@dataclass(frozen=True)
class BasisConfig:
    state: str = "asset"
    degree: int = 3
    ridge: Optional[float] = None


@dataclass(frozen=True)
class ToleranceConfig:
    picard_tol: float = 1e-6
    picard_max_iter: int = 50
    yosida_eps: float = 1e-4
    yosida_tol: float = 1e-10
    yosida_max_inner: int = 200
    minimize_max_iter: int = 25
    minimize_patience: int = 3
    candidate_count: int = 8
    theta_eps: Tuple[float, ...] = ()


@dataclass(frozen=True)
class OutputConfig:
    path: Optional[str] = None
    format: str = "json"


@dataclass(frozen=True)
class PricingConfig:
    schema_version: int = SCHEMA_VERSION
    market: MarketConfig = field(default_factory=MarketConfig)
    claim: ClaimConfig = field(default_factory=ClaimConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    basis: BasisConfig = field(default_factory=BasisConfig)
    solvers: Tuple[str, ...] = ("closed_form", "picard")
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


_SECTIONS = {
    "market": MarketConfig,
    "claim": ClaimConfig,
    "grid": GridConfig,
    "ensemble": EnsembleConfig,
    "basis": BasisConfig,
    "tolerances": ToleranceConfig,
    "output": OutputConfig,
}


_OPTIONAL_FLOATS = {"ridge", "strike"}


def _coerce(section: str, key: str, value: Any, default: Any) -> Any:
    if value is None:
        return None
    try:
        if key in _OPTIONAL_FLOATS:
            return float(value)
        if isinstance(default, bool):
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f"{value} is not an integer")
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            return tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid value for '{section}.{key}': {value!r} ({exc})") from exc
    return value


def create_section(name: str, data: Mapping[str, Any]):
    """Create one config section, rejecting unknown keys"""
    cls = _SECTIONS[name]
    if not isinstance(data, Mapping):
        raise ConfigError(f"Section '{name}' must be an object, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"Unknown key '{name}.{key}'")
    defaults = cls()
    values = {key: _coerce(name, key, value, getattr(defaults, key)) for key, value in data.items()}
    return cls(**values)


def create_market(cfg: MarketConfig) -> MarketModel:
    """Create MarketModel instance based on market configuration"""
    try:
        return MarketModel.create(r=cfg.r, sigma=cfg.sigma, s0=cfg.s0, b=cfg.b, theta=cfg.theta)
    except (ValueError, RuntimeError) as exc:
        raise ConfigError(f"Invalid market: {exc}") from exc


def create_grid(cfg: GridConfig) -> TimeGrid:
    try:
        return TimeGrid.uniform(cfg.T, cfg.N)
    except ValueError as exc:
        raise ConfigError(f"Invalid grid: {exc}") from exc


def create_basis(cfg: BasisConfig) -> BasisSpec:
    try:
        return BasisSpec(state=cfg.state, degree=cfg.degree, ridge=cfg.ridge)
    except ValueError as exc:
        raise ConfigError(f"Invalid basis: {exc}") from exc


def validate_config(config: PricingConfig) -> PricingConfig:
    """Check cross-field constraints; returns the config unchanged"""
    from ..pricing.claims import claim_map

    if config.schema_version != SCHEMA_VERSION:
        raise ConfigError(f"Unsupported schema_version {config.schema_version}, expected {SCHEMA_VERSION}")
    if not config.solvers:
        raise ConfigError("Select at least one solver")
    for name in config.solvers:
        if name not in SOLVER_NAMES:
            raise ConfigError(f"Unknown solver: {name}")
    if config.claim.type not in claim_map:
        raise ConfigError(f"Unknown claim type: {config.claim.type}")
    if config.basis.state not in state_map:
        raise ConfigError(f"Unknown regression state: {config.basis.state}")
    if config.ensemble.M < 1:
        raise ConfigError(f"Number of paths must be positive, got {config.ensemble.M}")
    if config.output.format not in OUTPUT_FORMATS:
        raise ConfigError(f"Unknown output format: {config.output.format}")
    create_market(config.market)
    create_grid(config.grid)
    create_basis(config.basis)
    return config


def config_from_dict(data: Mapping[str, Any]) -> PricingConfig:
    """Build a PricingConfig from parsed JSON, on top of the defaults"""
    if not isinstance(data, Mapping):
        raise ConfigError("Configuration must be a JSON object")
    allowed = {f.name for f in fields(PricingConfig)}
    for key in data:
        if key not in allowed:
            raise ConfigError(f"Unknown key '{key}'")

    values: Dict[str, Any] = {}
    if "schema_version" in data:
        values["schema_version"] = _coerce("", "schema_version", data["schema_version"], SCHEMA_VERSION)
    if "solvers" in data:
        solvers = data["solvers"]
        if isinstance(solvers, str) or not isinstance(solvers, Sequence):
            raise ConfigError("'solvers' must be a list of solver names")
        values["solvers"] = tuple(str(s) for s in solvers)
    for name in _SECTIONS:
        if name in data:
            values[name] = create_section(name, data[name])
    return validate_config(PricingConfig(**values))


def load_config(config_path: Optional[str]) -> PricingConfig:
    """Load a pricing configuration from a UTF-8 JSON file

    Args:
        config_path: Path to the JSON file, or None for the defaults
    """
    if config_path is None:
        return validate_config(PricingConfig())
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"Cannot read config file {config_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config file {config_path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def apply_overrides(config: PricingConfig, solvers: Optional[Sequence[str]] = None, paths: Optional[int] = None,
                    steps: Optional[int] = None, seed: Optional[int] = None, out: Optional[str] = None,
                    fmt: Optional[str] = None) -> PricingConfig:
    """Layer command-line values over the file values"""
    if solvers:
        config = replace(config, solvers=tuple(solvers))
    if paths is not None:
        config = replace(config, ensemble=replace(config.ensemble, M=paths))
    if steps is not None:
        config = replace(config, grid=replace(config.grid, N=steps))
    if seed is not None:
        config = replace(config, ensemble=replace(config.ensemble, seed=seed))
    if out is not None:
        config = replace(config, output=replace(config.output, path=out))
    if fmt is not None:
        config = replace(config, output=replace(config.output, format=fmt))
    return validate_config(config)


def apply_environment(config: PricingConfig, environ: Optional[Mapping[str, str]] = None) -> PricingConfig:
    """BSDE_SEED overrides the seed last"""
    environ = os.environ if environ is None else environ
    raw = environ.get(SEED_ENV)
    if raw is None or raw == "":
        return config
    try:
        seed = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from exc
    return replace(config, ensemble=replace(config.ensemble, seed=seed))


def config_to_dict(config: PricingConfig) -> Dict[str, Any]:
    """JSON-ready echo of the configuration, keys in schema order"""
    data = asdict(config)
    data["solvers"] = list(config.solvers)
    data["tolerances"]["theta_eps"] = list(config.tolerances.theta_eps)
    return data
