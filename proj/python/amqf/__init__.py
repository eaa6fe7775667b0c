"""Approximate membership and counting filters."""

from ._amqf import (
    BulkTcf,
    CapacityError,
    InputError,
    InvariantViolation,
    ParameterError,
    QuotientFilter,
    Tcf,
    fingerprint,
    fpr_query_keys,
    run_benchmark,
    uniform_keys,
)

__all__ = [
    "BulkTcf",
    "CapacityError",
    "InputError",
    "InvariantViolation",
    "ParameterError",
    "QuotientFilter",
    "Tcf",
    "fingerprint",
    "fpr_query_keys",
    "run_benchmark",
    "uniform_keys",
]
