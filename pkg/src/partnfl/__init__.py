"""Chance-adjusted comparison of set partitions under uniform random models."""

__version__ = "0.1.0"

from .errors import (
    BudgetExceededError,
    DegenerateMetricError,
    EmptyUniverseError,
    InvalidPartitionError,
    LimitExceededError,
    PartnflError,
    ZeroVarianceError,
)
from .infotheory import entropy, mutual_information, nmi, rand_index
from .metrics import (
    MetricSpec,
    Score,
    ami,
    ari,
    cnmi,
    kappa,
    loss,
    rnmi,
    rrnmi,
    score,
    smi,
)
from .models import (
    EXACT,
    ExpectationEstimate,
    Method,
    RandomModel,
    expected_stat,
    variance_stat,
)
from .nfl import (
    NFLReport,
    TruthSelection,
    free_morsel_report,
    universe_sum,
    verify_generalizer_independence,
)
from .partitions import (
    ContingencyTable,
    Partition,
    PartitionShape,
    bell,
    canonicalize,
    contingency,
    count_with_shape,
    enumerate_partitions,
    n_partition,
    one_partition,
    sample_uniform,
    shape_of,
    stirling2,
)
