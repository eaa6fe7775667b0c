import numpy as np
import pytest

import amqf


def test_tcf_point_round_trip():
    tcf = amqf.Tcf(num_blocks=1024)
    keys = amqf.uniform_keys(10_000, seed=3)
    outcomes = {tcf.insert(int(k)) for k in keys}
    assert outcomes <= {"primary", "secondary", "backing"}
    assert all(int(k) in tcf for k in keys)
    assert tcf.erase(int(keys[0]))
    tcf.validate()
    assert 0.6 < tcf.load_factor < 0.62


def test_bulk_tcf_batch():
    tcf = amqf.BulkTcf(num_blocks=256)
    keys = amqf.uniform_keys(20_000, seed=4)
    stats = tcf.bulk_insert(keys, workers=2)
    assert stats["failed"] == 0
    assert sum(stats.values()) == len(keys)
    assert tcf.bulk_query(keys).all()
    absent = amqf.fpr_query_keys(100_000, seed=4)
    assert tcf.bulk_query(absent).mean() < 2 * 128 / 65536
    assert tcf.bulk_erase(keys[:100]) == 100
    assert len(tcf) == len(keys) - 100
    tcf.validate()


def test_quotient_filter_counts():
    qf = amqf.QuotientFilter(quotient_bits=16)
    keys = amqf.uniform_keys(1000, seed=5)
    qf.bulk_count(np.repeat(keys, 3))
    assert all(qf.count(int(k)) >= 3 for k in keys)
    qf.insert(int(keys[0]), 10)
    assert qf.count(int(keys[0])) >= 13
    assert len(qf) == 3010
    assert sum(c for _, c in qf.enumerate()) == 3010
    assert qf.cluster_stats()["max"] >= 1
    qf.validate()
    assert qf.bulk_erase(np.repeat(keys, 3)) == 3000
    qf.erase(int(keys[0]), 10)
    assert qf.is_blank()


def test_errors_map_to_python_exceptions():
    with pytest.raises(amqf.ParameterError):
        amqf.QuotientFilter(quotient_bits=16, remainder_bits=12)
    with pytest.raises(ValueError):
        amqf.Tcf(num_blocks=1000)
    qf = amqf.QuotientFilter(quotient_bits=6, region_slots=64)
    with pytest.raises(amqf.CapacityError):
        qf.bulk_insert(amqf.uniform_keys(200, seed=1))


def test_run_benchmark_rows():
    rows = amqf.run_benchmark(filter="gqf", op="fpr", log_slots=14, load=0.9, reps=2, queries=10_000)
    assert len(rows) == 2
    assert rows[0]["filter"] == "gqf"
    assert rows[0]["fpr"] is not None and rows[0]["fpr"] < 0.01
