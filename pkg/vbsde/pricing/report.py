import csv
import io
import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, List, Optional

from ..utils.load_config import SCHEMA_VERSION

CSV_COLUMNS = ["solver", "price", "std_err", "hedge0", "diag_E", "diag_energy", "diag_driver_match", "seconds"]

LOWER_BOUND_NOTE = ("E_hat is a maximum over a finite candidate family and therefore only a lower bound "
                    "of the functional's supremum")


@dataclass
class SolverResult:
    solver: str
    price: float
    std_err: float
    hedge0: Optional[List[float]] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        # fixed key order; wall-clock times live in the report's "timings" section
        return {
            "solver": self.solver,
            "price": self.price,
            "std_err": self.std_err,
            "hedge0": self.hedge0,
            "diagnostics": self.diagnostics,
        }


@dataclass
class PricingReport:
    config: Dict[str, Any]
    results: List[SolverResult] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.config["ensemble"]["seed"]

    def result(self, solver: str) -> SolverResult:
        for res in self.results:
            if res.solver == solver:
                return res
        raise KeyError(f"No result for solver '{solver}'")

    def cross_solver(self) -> List[Dict[str, Any]]:
        rows = []
        for a, b in combinations(self.results, 2):
            combined = math.sqrt(a.std_err ** 2 + b.std_err ** 2)
            delta = a.price - b.price
            rows.append({
                "solvers": f"{a.solver}-{b.solver}",
                "delta": delta,
                "combined_std_err": combined,
                "within_3_std_err": abs(delta) <= 3.0 * combined,
            })
        return rows

    def to_dict(self, include_timings: bool = True) -> Dict[str, Any]:
        data = {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "config": self.config,
            "note": LOWER_BOUND_NOTE,
            "results": [res.to_dict() for res in self.results],
            "cross_solver": self.cross_solver(),
        }
        if include_timings:
            data["timings"] = dict(self.timings)
        return data

    def to_json(self, include_timings: bool = True) -> str:
        return json.dumps(self.to_dict(include_timings), indent=2, ensure_ascii=False) + "\n"

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\r\n")
        writer.writerow(CSV_COLUMNS)
        for res in self.results:
            diag = res.diagnostics
            hedge = "" if res.hedge0 is None else ";".join(repr(v) for v in res.hedge0)
            writer.writerow([res.solver, repr(res.price), repr(res.std_err), hedge,
                             repr(diag.get("E_hat", 0.0)), repr(diag.get("energy_residual", 0.0)),
                             repr(diag.get("driver_match", 0.0)), repr(self.timings.get(res.solver, res.seconds))])
        return buffer.getvalue()

    def render(self, fmt: str = "json") -> str:
        if fmt == "csv":
            return self.to_csv()
        return self.to_json()

    def write(self, path: Optional[str], fmt: str = "json") -> str:
        text = self.render(fmt)
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as f:
                f.write(text)
        return text
