"""Minimum privacy budgets for a target flip tolerance and confidence.

Inverts the Hoeffding bound on the mechanism's score: to keep the flipped
fraction at or below phi with probability at least P, the budget must satisfy
``eps >= 2 * sensitivity * ln((n - j + s) / (j - s))`` with ``j = phi * n``
and ``s = sqrt(-n * ln(1 - P) / 2)``.  Cells with ``j <= s`` are not
applicable (the bound cannot reach the target no matter the budget).  The
published 99.9% and 95% reference tables are embedded for regression checks.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

from .mechanisms import PrivacyParams, flip_probability
from .truncbin import hoeffding_lower_bound, upper_trunc

__all__ = [
    "APPLICABLE",
    "NOT_APPLICABLE",
    "BudgetQuery",
    "BudgetResult",
    "BudgetTable",
    "min_budget",
    "half_flip_budget",
    "budget_table",
    "success_for_budget",
    "round3",
    "REFERENCE_CONFIDENCES",
    "REFERENCE_TABLES",
    "DEFAULT_N_LIST",
    "DEFAULT_FLIP_PERCENTS",
]

APPLICABLE = "APPLICABLE"
NOT_APPLICABLE = "NOT_APPLICABLE"

DEFAULT_N_LIST = (100, 1_000, 10_000, 100_000, 1_000_000)
DEFAULT_FLIP_PERCENTS = (50, 45, 40, 35, 30, 25, 20, 15, 10, 5)

# Published minimum budgets (sensitivity 1), rounded to 3 decimals; None marks
# a not-applicable cell.  Row order follows DEFAULT_N_LIST, column order
# DEFAULT_FLIP_PERCENTS.
REFERENCE_TABLES = {
    0.999: {
        100: (1.562, 2.049, 2.600, 3.255, 4.098, 5.360, 8.487, None, None, None),
        1_000: (0.472, 0.884, 1.316, 1.779, 2.292, 2.884, 3.610, 4.597, 6.293, None),
        10_000: (0.149, 0.552, 0.967, 1.404, 1.875, 2.401, 3.014, 3.777, 4.847, 6.857),
        100_000: (0.047, 0.449, 0.860, 1.290, 1.751, 2.260, 2.847, 3.563, 4.529, 6.151),
        1_000_000: (0.015, 0.416, 0.826, 1.254, 1.712, 2.217, 2.796, 3.499, 4.436, 5.969),
    },
    0.95: {
        100: (0.999, 1.438, 1.913, 2.444, 3.065, 3.844, 4.950, 7.123, None, None),
        1_000: (0.310, 0.717, 1.139, 1.588, 2.078, 2.634, 3.297, 4.155, 5.458, 8.944),
        10_000: (0.098, 0.501, 0.913, 1.347, 1.813, 2.330, 2.929, 3.668, 4.683, 6.476),
        100_000: (0.031, 0.433, 0.843, 1.272, 1.732, 2.239, 2.821, 3.531, 4.482, 6.058),
        1_000_000: (0.010, 0.411, 0.821, 1.249, 1.706, 2.210, 2.788, 3.488, 4.422, 5.941),
    },
}
REFERENCE_CONFIDENCES = tuple(REFERENCE_TABLES)


def round3(value: float) -> float:
    """Round half-up to 3 decimals (reference-table convention, not banker's)."""
    return math.floor(value * 1000.0 + 0.5) / 1000.0


@dataclass(frozen=True)
class BudgetQuery:
    n: int
    flip_fraction: float
    confidence: float
    sensitivity: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0.0 < self.flip_fraction <= 1.0:
            raise ValueError(f"flip_fraction must lie in (0, 1], got {self.flip_fraction}")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError(f"confidence must lie in (0, 1), got {self.confidence}")
        if not self.sensitivity > 0:
            raise ValueError(f"sensitivity must be positive, got {self.sensitivity}")


@dataclass(frozen=True)
class BudgetResult:
    status: str
    epsilon_min: float | None = None

    @property
    def applicable(self) -> bool:
        return self.status == APPLICABLE


def min_budget(query: BudgetQuery) -> BudgetResult:
    """Minimum budget from the Hoeffding route; the tolerated flip count
    j = flip_fraction * n is kept as a real number (no rounding)."""
    n = query.n
    j = query.flip_fraction * n
    slack = math.sqrt(-n * math.log(1.0 - query.confidence) / 2.0)
    if j <= slack:
        return BudgetResult(NOT_APPLICABLE)
    eps = 2.0 * query.sensitivity * math.log((n - j + slack) / (j - slack))
    return BudgetResult(APPLICABLE, eps)


def half_flip_budget(n: int, sensitivity: float = 1.0) -> BudgetResult:
    """Closed form for flip tolerance 1/2 at 99.9% confidence:
    2 * sensitivity * ln((1 + 2*sqrt(1.5*ln(10)/n)) / (1 - 2*sqrt(1.5*ln(10)/n)))."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    t = 2.0 * math.sqrt(1.5 * math.log(10.0) / n)
    if t >= 1.0:
        return BudgetResult(NOT_APPLICABLE)
    return BudgetResult(APPLICABLE, 2.0 * sensitivity * math.log((1.0 + t) / (1.0 - t)))


@dataclass(frozen=True)
class BudgetTable:
    confidence: float
    n_list: tuple
    flip_percents: tuple
    cells: dict  # (n, flip_percent) -> BudgetResult

    def cell(self, n: int, flip_percent: int) -> BudgetResult:
        return self.cells[(n, flip_percent)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["n"] + [f"{fp}%" for fp in self.flip_percents])
        for n in self.n_list:
            row = [str(n)]
            for fp in self.flip_percents:
                res = self.cells[(n, fp)]
                row.append(f"{round3(res.epsilon_min):.3f}" if res.applicable else "")
            writer.writerow(row)
        return buf.getvalue()

    def to_json(self) -> str:
        rows = []
        for n in self.n_list:
            for fp in self.flip_percents:
                res = self.cells[(n, fp)]
                rows.append(
                    {
                        "n": n,
                        "flip_percent": fp,
                        "status": res.status,
                        "epsilon_min": None if not res.applicable else res.epsilon_min,
                    }
                )
        return json.dumps({"confidence": self.confidence, "cells": rows}, indent=2)

    def formatted(self) -> str:
        width = 8
        header = "n".rjust(9) + "".join(f"{fp}%".rjust(width) for fp in self.flip_percents)
        lines = [header]
        for n in self.n_list:
            cells = []
            for fp in self.flip_percents:
                res = self.cells[(n, fp)]
                cells.append((f"{round3(res.epsilon_min):.3f}" if res.applicable else "").rjust(width))
            lines.append(str(n).rjust(9) + "".join(cells))
        return "\n".join(lines)

    def diff_reference(self, tolerance: float = 0.001) -> list:
        """Mismatches against the published table for this confidence level."""
        reference = REFERENCE_TABLES.get(self.confidence)
        if reference is None:
            raise ValueError(f"no reference table for confidence {self.confidence}")
        problems = []
        for n, row in reference.items():
            for fp, ref in zip(DEFAULT_FLIP_PERCENTS, row):
                got = self.cells.get((n, fp))
                if got is None:
                    problems.append({"n": n, "flip_percent": fp, "issue": "missing cell"})
                elif ref is None and got.applicable:
                    problems.append({"n": n, "flip_percent": fp, "issue": "expected empty",
                                     "got": round3(got.epsilon_min)})
                elif ref is not None and not got.applicable:
                    problems.append({"n": n, "flip_percent": fp, "issue": "unexpected empty",
                                     "expected": ref})
                elif ref is not None and abs(round3(got.epsilon_min) - ref) > tolerance + 1e-12:
                    problems.append({"n": n, "flip_percent": fp, "issue": "value mismatch",
                                     "expected": ref, "got": round3(got.epsilon_min)})
        return problems


def budget_table(confidence: float, n_list=None, flip_percents=None, sensitivity: float = 1.0) -> BudgetTable:
    n_list = tuple(n_list) if n_list is not None else DEFAULT_N_LIST
    flip_percents = tuple(flip_percents) if flip_percents is not None else DEFAULT_FLIP_PERCENTS
    cells = {}
    for n in n_list:
        for fp in flip_percents:
            q = BudgetQuery(n=n, flip_fraction=fp / 100.0, confidence=confidence, sensitivity=sensitivity)
            cells[(n, fp)] = min_budget(q)
    return BudgetTable(confidence=confidence, n_list=n_list, flip_percents=flip_percents, cells=cells)


def success_for_budget(n: int, epsilon: float, sensitivity: float = 1.0, flip_fraction: float = 0.5) -> dict:
    """Exact and Hoeffding success probabilities at a given budget.

    "Success" is the event that at most floor(flip_fraction * n) labels flip.
    The exact value always dominates the bound.
    """
    params = PrivacyParams(epsilon, sensitivity)
    p = flip_probability(params).flip_probability
    j = math.floor(flip_fraction * n)
    return {
        "exact": upper_trunc(n, j, p),
        "hoeffding": hoeffding_lower_bound(n, flip_fraction * n, p),
    }
