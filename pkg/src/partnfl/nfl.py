"""Empirical checks that a measure is generalizer-independent.

For a fixed ground truth ``t`` the universe sum is ``sum over C of score(C, t)``.
A measure is generalizer-independent when that sum is the same constant for
every ``t``; centered measures over the full universe make the constant zero.

The free-morsel report measures how far the classical shape-conditioned AMI
is from that ideal: interior truths agree, the boundary truths do not.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .errors import BudgetExceededError, DegenerateMetricError, InvalidPartitionError
from .metrics import MetricSpec, score_universe, summation_universe
from .models import RandomModel
from .partitions import (
    DEFAULT_ENUM_LIMIT,
    Partition,
    bell,
    draw_uniform,
    enumerate_partitions,
    n_partition,
    one_partition,
)

DEFAULT_BUDGET = 10**8


@dataclass(frozen=True)
class TruthSelection:
    """Which ground truths a verification run visits.

    ``kind`` is ``all``, ``interior``, ``sample`` or ``boundary+sample``.
    """

    kind: str = "all"
    count: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("all", "interior", "sample", "boundary+sample"):
            raise ValueError(f"unknown truth selection {self.kind!r}")
        if self.kind in ("sample", "boundary+sample") and self.count < 0:
            raise ValueError("sample count must be non-negative")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "TruthSelection":
        """Parse ``all``, ``interior``, ``sample:K`` or ``boundary+sample:K``."""
        if text in ("all", "interior"):
            return cls(text, seed=seed)
        kind, sep, count = text.partition(":")
        if not sep or kind not in ("sample", "boundary+sample"):
            raise ValueError(f"cannot parse truth selection {text!r}")
        return cls(kind, int(count), seed)

    def __str__(self) -> str:
        if self.kind in ("all", "interior"):
            return self.kind
        return f"{self.kind}:{self.count}"

    def truths(self, n: int, limit: int = DEFAULT_ENUM_LIMIT) -> list[Partition]:
        if self.kind == "all":
            return list(enumerate_partitions("all", n, limit=limit))
        if self.kind == "interior":
            return list(enumerate_partitions("interior", n, limit=limit))
        out: list[Partition] = []
        if self.kind == "boundary+sample":
            out.append(one_partition(n))
            if n > 1:
                out.append(n_partition(n))
        seen = set(out)
        rng = random.Random(self.seed)
        for _ in range(self.count):
            p = draw_uniform(n, rng)
            if p not in seen:
                seen.add(p)
                out.append(p)
        return out


@dataclass
class NFLReport:
    n: int
    metric: MetricSpec
    truths_tested: str
    tolerance: float
    per_truth: dict[tuple[int, ...], float]
    lambda_: float
    max_abs_deviation: float
    boundary_deviation: float | None
    passed: bool
    skipped: dict[tuple[int, ...], str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "metric": str(self.metric),
            "truths_tested": self.truths_tested,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "lambda": self.lambda_,
            "max_abs_deviation": self.max_abs_deviation,
            "boundary_deviation": self.boundary_deviation,
            "truth_count": len(self.per_truth),
            "per_truth": {
                " ".join(map(str, k)): v for k, v in self.per_truth.items()
            },
            "skipped": {" ".join(map(str, k)): v for k, v in self.skipped.items()},
        }


def universe_sum(metric: MetricSpec, t: Partition,
                 limit: int = DEFAULT_ENUM_LIMIT) -> float:
    """Exactly rounded sum of ``score(C, t)`` over the metric's summation universe."""
    _, scores = score_universe(metric, t, limit=limit)
    return math.fsum(scores)


def verify_generalizer_independence(metric: MetricSpec, n: int,
                                    truths: TruthSelection = TruthSelection(),
                                    tolerance: float = 1e-9,
                                    limit: int = DEFAULT_ENUM_LIMIT,
                                    budget: int = DEFAULT_BUDGET,
                                    workers: int = 1) -> NFLReport:
    """Compute the universe sum for each selected truth and compare them.

    Truths whose score is undefined (e.g. SMI against the 1-partition) are
    listed in ``skipped`` and excluded from ``lambda``.  The run passes when
    every remaining sum is within ``tolerance`` of their mean.
    """
    universe_count = summation_universe(metric.model, n, limit=limit).shape[0]
    if truths.kind in ("all", "interior"):
        truth_count = bell(n) if truths.kind == "all" else bell(n) - 2
        if truth_count * universe_count > budget:
            raise BudgetExceededError(
                f"{truth_count} truths x {universe_count} partitions exceeds "
                f"the budget of {budget} evaluations"
            )
    selected = truths.truths(n, limit=limit)
    if not selected:
        raise InvalidPartitionError("no ground truths selected")

    def one(t: Partition):
        try:
            return universe_sum(metric, t, limit=limit), None
        except DegenerateMetricError as exc:
            return None, str(exc)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, selected))
    else:
        results = [one(t) for t in selected]

    per_truth: dict[tuple[int, ...], float] = {}
    skipped: dict[tuple[int, ...], str] = {}
    for t, (total, err) in zip(selected, results):
        if err is None:
            per_truth[t.assignment] = total
        else:
            skipped[t.assignment] = err
    if not per_truth:
        raise DegenerateMetricError("the metric is undefined for every selected truth")
    lam = math.fsum(per_truth.values()) / len(per_truth)
    deviations = {k: abs(v - lam) for k, v in per_truth.items()}
    boundary = [deviations[p.assignment] for p in (one_partition(n), n_partition(n))
                if p.assignment in deviations]
    max_dev = max(deviations.values())
    return NFLReport(
        n=n,
        metric=metric,
        truths_tested=str(truths),
        tolerance=tolerance,
        per_truth=per_truth,
        lambda_=lam,
        max_abs_deviation=max_dev,
        boundary_deviation=max(boundary) if boundary else None,
        passed=max_dev <= tolerance,
        skipped=skipped,
    )


@dataclass
class MorselRow:
    n: int
    bell: int
    interior_value: float
    interior_max_deviation: float
    boundary_sums: dict[str, float]
    gap: float

    @property
    def normalized_gap(self) -> float:
        """Gap per problem instance: the boundary advantage averaged over the universe."""
        return self.gap / self.bell

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "bell": str(self.bell),
            "interior_value": self.interior_value,
            "interior_max_deviation": self.interior_max_deviation,
            "boundary_sums": self.boundary_sums,
            "gap": self.gap,
            "normalized_gap": self.normalized_gap,
            "inverse_bell": 1.0 / self.bell,
        }


@dataclass
class FreeMorselReport:
    metric: MetricSpec
    rows: list[MorselRow]

    @property
    def normalized_gap_decreasing(self) -> bool:
        gaps = [r.normalized_gap for r in self.rows]
        return all(b < a for a, b in zip(gaps, gaps[1:]))

    def to_dict(self) -> dict:
        return {
            "metric": str(self.metric),
            "rows": [r.to_dict() for r in self.rows],
            "normalized_gap_decreasing": self.normalized_gap_decreasing,
        }


def free_morsel_report(n_max: int, normalization: str = "constant-logn",
                       model: RandomModel = RandomModel.perm(),
                       limit: int = DEFAULT_ENUM_LIMIT,
                       budget: int = DEFAULT_BUDGET,
                       sample_count: int = 50, seed: int = 0) -> FreeMorselReport:
    """Boundary-versus-interior universe sums of AMI for n = 3 .. n_max.

    Sizes whose full truth set fits the budget use every interior truth;
    larger sizes use ``sample_count`` seeded interior truths.
    """
    if n_max < 3:
        raise InvalidPartitionError("the interior is empty below n = 3")
    metric = MetricSpec("ami", model, normalization)
    rows = []
    for n in range(3, n_max + 1):
        universe_count = summation_universe(model, n, limit=limit).shape[0]
        if bell(n) * universe_count <= budget:
            interior = list(enumerate_partitions("interior", n, limit=limit))
        else:
            picks = TruthSelection("sample", sample_count, seed).truths(n, limit=limit)
            interior = [p for p in picks if not p.is_boundary]
        sums = [universe_sum(metric, t, limit=limit) for t in interior]
        centre = math.fsum(sums) / len(sums)
        boundary = {
            "one_partition": universe_sum(metric, one_partition(n), limit=limit),
            "n_partition": universe_sum(metric, n_partition(n), limit=limit),
        }
        rows.append(MorselRow(
            n=n,
            bell=bell(n),
            interior_value=centre,
            interior_max_deviation=max(abs(s - centre) for s in sums),
            boundary_sums=boundary,
            gap=max(abs(v - centre) for v in boundary.values()),
        ))
    return FreeMorselReport(metric, rows)
