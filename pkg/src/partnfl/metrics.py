"""Chance-adjusted comparison measures with a configurable one-sided random model.

Every adjusted measure has the form ``(observed - E[observed]) / spread`` with
the expectation taken over a :class:`~partnfl.models.RandomModel` while the
ground truth ``t`` stays fixed.

AMI normalizations
------------------
``constant-logn``
    The upper bound is the constant ``ln n``.
``max-entropy``
    The upper bound is ``max over C' of I(C', t)``, which equals ``H(t)``
    (attained by any refinement of ``t``).  It makes ``ami(t, t) == 1``.

Both bounds are constant in the compared partition, which keeps each measure a
centered statistic divided by a per-truth constant.

Conventions for vanishing denominators
--------------------------------------
* ``t`` is the 1-partition: ``I(C', t)`` is identically zero, so AMI, rNMI,
  rrNMI and cNMI return 0 and SMI raises :class:`ZeroVarianceError`.
* Otherwise a denominator within ``EPS`` of zero with a numerator within
  ``EPS`` of zero means the universe is a single point; the score is 1 if
  ``c == t`` and 0 if not.  A vanishing denominator with a non-zero
  numerator raises :class:`DegenerateMetricError`.

``perm`` models without an explicit shape use the shape of the compared
partition ``c``: the expectation runs over every partition with the same
block sizes as ``c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMetricError, InvalidPartitionError, ZeroVarianceError
from .infotheory import (
    entropy,
    joint_entropy,
    mutual_information,
    nmi as raw_nmi,
    rand_index,
)
from .models import (
    EXACT,
    ExpectationEstimate,
    Method,
    RandomModel,
    expected_stat,
    stat_batch,
    universe_values,
    variance_stat,
)
from .partitions import (
    DEFAULT_ENUM_LIMIT,
    Partition,
    PartitionShape,
    contingency,
    shape_keys,
    universe_array,
)

METRICS = ("nmi", "ami", "ari", "rnmi", "rrnmi", "cnmi", "smi", "kappa")
NORMALIZED = ("ami", "ari", "rrnmi", "cnmi", "kappa")
AMI_NORMALIZATIONS = ("constant-logn", "max-entropy")

EPS = 1e-12


@dataclass(frozen=True)
class MetricSpec:
    name: str
    model: RandomModel = RandomModel.all()
    normalization: str = "constant-logn"
    method: Method = EXACT
    nmi_normalization: str = "max"

    def __post_init__(self) -> None:
        if self.name not in METRICS:
            raise ValueError(f"unknown metric {self.name!r}")
        if self.normalization not in AMI_NORMALIZATIONS:
            raise ValueError(f"unknown AMI normalization {self.normalization!r}")

    def __str__(self) -> str:
        out = f"{self.name}[{self.model}"
        if self.name in ("ami", "rrnmi"):
            out += f", {self.normalization}"
        return out + "]"


@dataclass(frozen=True)
class Score:
    value: float
    expectation_used: ExpectationEstimate | None
    normalizer_used: float


def _check_pair(c: Partition, t: Partition) -> None:
    if c.n != t.n:
        raise InvalidPartitionError(f"partitions differ in size: {c.n} != {t.n}")


def _ratio(num: float, den: float, identical: bool) -> float:
    if den > EPS:
        return num / den
    if abs(num) <= EPS:
        return 1.0 if identical else 0.0
    raise DegenerateMetricError(
        f"denominator vanishes ({den!r}) with a non-zero numerator ({num!r})"
    )


def ami_normalizer(t: Partition, normalization: str) -> float:
    if normalization == "constant-logn":
        return math.log(t.n)
    if normalization == "max-entropy":
        return entropy(t)
    raise ValueError(f"unknown AMI normalization {normalization!r}")


def ami(c: Partition, t: Partition, model: RandomModel = RandomModel.all(),
        normalization: str = "constant-logn", method: Method = EXACT,
        limit: int = DEFAULT_ENUM_LIMIT) -> Score:
    """Adjusted mutual information ``(I - E[I]) / (bound - E[I])``."""
    _check_pair(c, t)
    if t.n < 2:
        raise DegenerateMetricError("AMI is undefined for a single element")
    expect = expected_stat("MI", t, model.resolve(c), method, limit=limit)
    bound = ami_normalizer(t, normalization)
    if t.is_one_partition:
        return Score(0.0, expect, bound)
    observed = mutual_information(contingency(c, t))
    value = _ratio(observed - expect.mean, bound - expect.mean, c == t)
    return Score(value, expect, bound)


def rrnmi(c: Partition, t: Partition, model: RandomModel = RandomModel.all(),
          normalization: str = "constant-logn", method: Method = EXACT,
          limit: int = DEFAULT_ENUM_LIMIT) -> Score:
    """Ratio of relative NMI; under a one-sided model it coincides with AMI."""
    return ami(c, t, model, normalization, method, limit)


def rnmi(c: Partition, t: Partition, model: RandomModel = RandomModel.all(),
         method: Method = EXACT, limit: int = DEFAULT_ENUM_LIMIT) -> Score:
    """Relative NMI as the unnormalized AMI numerator ``I - E[I]``, in nats.

    Subtracting E[NMI] from NMI instead is the numerator of :func:`cnmi`.
    """
    _check_pair(c, t)
    if t.n < 2:
        raise InvalidPartitionError("rNMI needs at least two elements")
    expect = expected_stat("MI", t, model.resolve(c), method, limit=limit)
    if t.is_one_partition:
        return Score(0.0, expect, 1.0)
    observed = mutual_information(contingency(c, t))
    return Score(observed - expect.mean, expect, 1.0)


def _adjusted_pair_agreement(c: Partition, t: Partition, model: RandomModel,
                             method: Method, limit: int) -> Score:
    _check_pair(c, t)
    if t.n < 2:
        raise DegenerateMetricError("pair agreement needs at least two elements")
    expect = expected_stat("RI", t, model.resolve(c), method, limit=limit)
    observed = rand_index(contingency(c, t))
    value = _ratio(observed - expect.mean, 1.0 - expect.mean, c == t)
    return Score(value, expect, 1.0)


def ari(c: Partition, t: Partition, model: RandomModel = RandomModel.all(),
        method: Method = EXACT, limit: int = DEFAULT_ENUM_LIMIT) -> Score:
    """Adjusted Rand index ``(RI - E[RI]) / (1 - E[RI])``."""
    return _adjusted_pair_agreement(c, t, model, method, limit)


def kappa(c: Partition, t: Partition, model: RandomModel = RandomModel.all(),
          method: Method = EXACT, limit: int = DEFAULT_ENUM_LIMIT) -> Score:
    """Cohen's kappa over element pairs.

    The observed agreement is the fraction of pairs both partitions treat
    alike and chance agreement is its expectation under ``model``, so the
    value coincides with :func:`ari`.
    """
    return _adjusted_pair_agreement(c, t, model, method, limit)


def cnmi(c: Partition, t: Partition, model: RandomModel = RandomModel.all(),
         method: Method = EXACT, limit: int = DEFAULT_ENUM_LIMIT) -> Score:
    """One-sided corrected NMI.

    ``(NMI(c, t) - E[NMI(C', t)]) / (1 - E[NMI(C', c)])``.  The denominator's
    expectation is taken against ``c`` itself over the full universe, and NMI
    uses max-entropy normalization.
    """
    _check_pair(c, t)
    if t.n < 2:
        raise DegenerateMetricError("cNMI needs at least two elements")
    resolved = model.resolve(c)
    expect = expected_stat("NMI", t, resolved, method, limit=limit)
    self_expect = expected_stat("NMI", c, resolved, method, limit=limit)
    den = 1.0 - self_expect.mean
    if t.is_one_partition:
        return Score(0.0, expect, den)
    observed = raw_nmi(c, t, "max")
    return Score(_ratio(observed - expect.mean, den, c == t), expect, den)


def smi(c: Partition, t: Partition, model: RandomModel = RandomModel.all(),
        method: Method = EXACT, limit: int = DEFAULT_ENUM_LIMIT) -> Score:
    """Standardized mutual information ``(I - E[I]) / sd[I]``."""
    _check_pair(c, t)
    if t.n < 2:
        raise InvalidPartitionError("SMI needs at least two elements")
    if t.is_one_partition:
        raise ZeroVarianceError("MI against the 1-partition has zero variance; SMI undefined")
    resolved = model.resolve(c)
    expect = expected_stat("MI", t, resolved, method, limit=limit)
    spread = math.sqrt(variance_stat("MI", t, resolved, method, limit=limit).mean)
    if spread <= EPS:
        raise ZeroVarianceError(f"MI has zero variance under {resolved}")
    observed = mutual_information(contingency(c, t))
    return Score((observed - expect.mean) / spread, expect, spread)


def nmi(c: Partition, t: Partition, normalization: str = "max") -> Score:
    """Plain NMI wrapped as a :class:`Score`; no random model is involved."""
    _check_pair(c, t)
    value = raw_nmi(c, t, normalization)
    if normalization == "max":
        bound = max(entropy(c), entropy(t))
    elif normalization == "logn":
        bound = math.log(c.n)
    else:
        bound = joint_entropy(contingency(c, t))
    return Score(value, None, bound)


def score(spec: MetricSpec, c: Partition, t: Partition,
          limit: int = DEFAULT_ENUM_LIMIT) -> Score:
    name = spec.name
    if name == "nmi":
        return nmi(c, t, spec.nmi_normalization)
    if name in ("ami", "rrnmi"):
        fn = ami if name == "ami" else rrnmi
        return fn(c, t, spec.model, spec.normalization, spec.method, limit)
    fn = {"ari": ari, "kappa": kappa, "rnmi": rnmi, "cnmi": cnmi, "smi": smi}[name]
    return fn(c, t, spec.model, spec.method, limit)


def loss(s: Score) -> float:
    """``1 - value``; zero at a perfect match for the normalized measures."""
    return 1.0 - s.value


# --------------------------------------------------------------------------
# vectorized scoring of a whole universe against one truth


def summation_universe(model: RandomModel, n: int,
                       limit: int = DEFAULT_ENUM_LIMIT) -> np.ndarray:
    """Universe a generalizer-independence sum runs over.

    A shape-less ``perm`` model gives every partition its own shape class, so
    its problem universe is all partitions.
    """
    if model.family == "perm" and model.shape is None:
        return universe_array("all", n, limit=limit)
    return model.universe(n, limit=limit)


def _groups(arr: np.ndarray, model: RandomModel):
    """Split rows into groups that share one resolved model."""
    if model.family == "perm" and model.shape is None:
        keys = shape_keys(arr)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        for i, row in enumerate(uniq):
            shape = PartitionShape(tuple(int(s) for s in row if s > 0))
            yield np.flatnonzero(inverse == i), RandomModel.perm(shape)
    else:
        yield np.arange(arr.shape[0]), model


def _ratio_batch(num: np.ndarray, den: np.ndarray, identical: np.ndarray) -> np.ndarray:
    ok = den > EPS
    flat = np.abs(num) <= EPS
    if np.any(~ok & ~flat):
        raise DegenerateMetricError("denominator vanishes with a non-zero numerator")
    out = np.where(identical, 1.0, 0.0)
    np.divide(num, den, out=out, where=ok)
    return out


def score_universe(spec: MetricSpec, t: Partition, arr: np.ndarray | None = None,
                   limit: int = DEFAULT_ENUM_LIMIT) -> tuple[np.ndarray, np.ndarray]:
    """Score every partition of the summation universe against ``t``.

    Returns ``(arr, scores)`` with ``scores[i] == score(spec, arr[i], t)`` up
    to floating-point rounding.
    """
    n = t.n
    default = arr is None
    if default:
        arr = summation_universe(spec.model, n, limit=limit)
    name = spec.name
    scores = np.empty(arr.shape[0])
    if name == "nmi":
        return arr, stat_batch("NMI", arr, t, spec.nmi_normalization)
    if n < 2:
        raise DegenerateMetricError("adjusted measures need at least two elements")
    identical = np.all(arr == np.asarray(t.assignment, dtype=arr.dtype), axis=1)
    method = spec.method
    if name == "smi" and t.is_one_partition:
        raise ZeroVarianceError("MI against the 1-partition has zero variance; SMI undefined")
    if t.is_one_partition and name in ("ami", "rrnmi", "rnmi", "cnmi"):
        scores[:] = 0.0
        return arr, scores
    def observed_values(stat: str, idx: np.ndarray, model: RandomModel,
                        normalization: str = "max") -> np.ndarray:
        # on the default universe each group is exactly its model's universe,
        # in the same order
        if default:
            return universe_values(stat, t, model, normalization, limit)
        return stat_batch(stat, arr[idx], t, normalization)

    for idx, model in _groups(arr, spec.model):
        rows = arr[idx]
        if name in ("ami", "rrnmi", "rnmi", "smi"):
            observed = observed_values("MI", idx, model)
            e = expected_stat("MI", t, model, method, limit=limit).mean
            if name == "rnmi":
                scores[idx] = observed - e
            elif name == "smi":
                spread = math.sqrt(variance_stat("MI", t, model, method, limit=limit).mean)
                if spread <= EPS:
                    raise ZeroVarianceError(f"MI has zero variance under {model}")
                scores[idx] = (observed - e) / spread
            else:
                bound = ami_normalizer(t, spec.normalization)
                scores[idx] = _ratio_batch(observed - e, np.full(idx.size, bound - e),
                                           identical[idx])
        elif name in ("ari", "kappa"):
            observed = observed_values("RI", idx, model)
            e = expected_stat("RI", t, model, method, limit=limit).mean
            scores[idx] = _ratio_batch(observed - e, np.full(idx.size, 1.0 - e),
                                       identical[idx])
        elif name == "cnmi":
            observed = observed_values("NMI", idx, model, "max")
            e = expected_stat("NMI", t, model, method, limit=limit).mean
            den = np.array([
                1.0 - expected_stat("NMI", Partition(n, tuple(r)), model, method,
                                    limit=limit).mean
                for r in rows.tolist()
            ])
            scores[idx] = _ratio_batch(observed - e, den, identical[idx])
        else:  # pragma: no cover - guarded by MetricSpec
            raise ValueError(name)
    return arr, scores
