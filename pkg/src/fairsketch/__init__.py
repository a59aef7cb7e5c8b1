"""Group-fair frequency estimation with Count-Min sketches."""

__version__ = "0.1.0"

from .allocation import (
    AllocationResult,
    expected_min_occupancy,
    expected_min_occupancy_naive,
    fair_widths,
    log_binomial,
    solve_multi,
    solve_row_partition,
    solve_two_group,
    widths_d1,
)
from .errors import CounterOverflowError, DatasetError, FairSketchError, InfeasibleAllocationError
from .hashing import RowHasher, hash_bucket
from .metrics import FrequencyOracle, GroupReport, group_report, unfairness
from .sketch import ColumnLayout, CountMinSketch, FairCountMinSketch, RowPartitionSketch, SketchConfig

__all__ = [
    "AllocationResult",
    "ColumnLayout",
    "CountMinSketch",
    "CounterOverflowError",
    "DatasetError",
    "FairCountMinSketch",
    "FairSketchError",
    "FrequencyOracle",
    "GroupReport",
    "InfeasibleAllocationError",
    "RowHasher",
    "RowPartitionSketch",
    "SketchConfig",
    "expected_min_occupancy",
    "expected_min_occupancy_naive",
    "fair_widths",
    "group_report",
    "hash_bucket",
    "log_binomial",
    "solve_multi",
    "solve_row_partition",
    "solve_two_group",
    "unfairness",
    "widths_d1",
]
