import csv
import io
import json
import logging
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

from ..checks import CheckContext, CheckResult, check_list
from ..core import Generator
from ..errors import ConfigError
from ..regression import BasisSpec, Regressor
from ..utils.load_config import PricingConfig
from .price import prepare_context

logger = logging.getLogger(__name__)

VERIFY_COLUMNS = ["check", "passed", "value", "tolerance", "detail"]
MAX_VERIFY_PATHS = 10_000


@dataclass
class VerifyTable:
    rows: List[CheckResult] = field(default_factory=list)
    seed: int = 0

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def outcomes(self) -> List[bool]:
        return [row.passed for row in self.rows]

    def to_json(self) -> str:
        data = {"seed": self.seed, "passed": self.passed, "rows": [row.to_dict() for row in self.rows]}
        return json.dumps(data, indent=2) + "\n"

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\r\n")
        writer.writerow(VERIFY_COLUMNS)
        for row in self.rows:
            writer.writerow([row.check, "true" if row.passed else "false", repr(row.value),
                             repr(row.tolerance), row.detail])
        return buffer.getvalue()

    def render(self, fmt: str = "json") -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()


def verify_suite(config: PricingConfig, generator: Optional[Generator] = None, num_paths: Optional[int] = None,
                 checks: Optional[Sequence[str]] = None) -> VerifyTable:
    """
    Run the named invariant checks on the configured market and claim.

    Args:
        config: Pricing configuration; the ensemble is capped at MAX_VERIFY_PATHS paths
        generator: Replaces the market's pricing generator, e.g. to probe a deliberately broken one
        num_paths: Explicit ensemble size
        checks: Names of the checks to run, all of them by default

    Returns:
        VerifyTable with one row per executed check, in registry order
    """
    M = num_paths if num_paths is not None else min(config.ensemble.M, MAX_VERIFY_PATHS)
    config = replace(config, ensemble=replace(config.ensemble, M=M))
    pricing = prepare_context(config)
    tol = config.tolerances
    ctx = CheckContext(
        generator=generator or pricing.generator,
        xi=pricing.xi,
        regressor=pricing.regressor,
        span_regressor=Regressor(pricing.paths, BasisSpec(state="brownian", degree=3, ridge=0.0)),
        seed=config.ensemble.seed,
        picard_tol=tol.picard_tol,
        picard_max_iter=tol.picard_max_iter,
        yosida_eps=tol.yosida_eps,
        yosida_tol=tol.yosida_tol,
        yosida_max_inner=tol.yosida_max_inner,
        candidate_count=tol.candidate_count,
    )

    selected = [fn for fn in check_list if checks is None or fn.__name__[len("check_"):] in checks]
    if checks is not None:
        unknown = set(checks) - {fn.__name__[len("check_"):] for fn in check_list}
        if unknown:
            raise ConfigError(f"Unknown checks: {sorted(unknown)}")

    table = VerifyTable(seed=config.ensemble.seed)
    for fn in selected:
        start = time.perf_counter()
        row = fn(ctx)
        table.rows.append(row)
        level = logging.INFO if row.passed else logging.WARNING
        logger.log(level, "%s: %s (value %.3e, tolerance %.3e) in %.2fs", row.check,
                   "pass" if row.passed else "FAIL", row.value, row.tolerance, time.perf_counter() - start)
    return table
