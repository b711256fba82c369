import csv
import math
import os
import sys
import time
from unittest import mock

import pytest

from nilpotent_commutator import scan
from nilpotent_commutator.linalg import InvalidSpec, NotNilpotent
from nilpotent_commutator.scan import (
    SCAN_HEADER,
    ScanConfig,
    default_workers,
    run_scan,
    run_trial,
    write_scan_csv,
)
from nilpotent_commutator.testgen import MAX_SEED, DecayKind


def config(**kwargs):
    return ScanConfig(**{"n_values": (4,), "dims": (4,), "trials": 2, **kwargs})


def test_config_validation():
    with pytest.raises(InvalidSpec):
        config(n_values=(3,))
    with pytest.raises(InvalidSpec):
        config(n_values=(13,))
    with pytest.raises(InvalidSpec):
        config(dims=())
    with pytest.raises(InvalidSpec):
        config(trials=0)
    with pytest.raises(InvalidSpec):
        config(workers=0)
    with pytest.raises(InvalidSpec):
        config(n_values=(5,), dims=(4,))
    with pytest.raises(InvalidSpec):
        config(n_values=(12,), dims=(600,))
    with pytest.raises(InvalidSpec):
        config(decay=DecayKind.GEOMETRIC)


def test_every_trial_seed_is_checked_up_front():
    assert config(seed=MAX_SEED, trials=1).family_spec(4, 4, 0).seed == MAX_SEED
    with pytest.raises(InvalidSpec, match="leave"):
        config(seed=MAX_SEED - 1, trials=3)
    with pytest.raises(InvalidSpec):
        config(seed=-1)


def test_family_fills_the_dimension_with_blocks_of_size_n():
    spec = config(seed=10).family_spec(4, 10, 3)
    assert spec.jordan_sizes == (4, 4, 2)
    assert spec.conjugate
    assert spec.seed == 13
    assert config().family_spec(4, 8, 0).jordan_sizes == (4, 4)


def test_workers_come_from_the_environment():
    assert default_workers() == 2
    assert config().workers == 2
    with mock.patch.dict(os.environ, {"NILCOMM_SCAN_WORKERS": ""}):
        assert default_workers() == (os.cpu_count() or 1)


def test_single_trial_row():
    row = run_trial(config(), 4, 8, 0)
    assert row.ok
    assert row.guaranteed_t == 0.5
    assert row.residual_rel <= 1e-8
    assert row.achieved_B == 0.0
    assert math.isfinite(row.domination_constant)


async def test_scan_rows_are_complete_and_sorted():
    rows = await run_scan(config(n_values=(5, 4), dims=(10, 5), trials=2))
    assert len(rows) == 8
    assert [(r.n, r.dim, r.trial) for r in rows] == sorted((r.n, r.dim, r.trial) for r in rows)
    assert all(row.ok for row in rows)
    assert {row.guaranteed_t for row in rows if row.n == 5} == {0.25}


async def test_failed_trials_become_rows():
    with mock.patch(
        "nilpotent_commutator.scan.construct_theorem", side_effect=NotNilpotent("boom")
    ):
        rows = await run_scan(config())
    assert [row.status for row in rows] == ["NotNilpotent", "NotNilpotent"]
    assert not any(row.ok for row in rows)
    assert all(math.isnan(row.achieved_B) and math.isnan(row.residual_rel) for row in rows)


async def test_slow_trials_are_killed_at_the_timeout():
    sleeper = [sys.executable, "-c", "import time; time.sleep(30)"]
    start = time.monotonic()
    with mock.patch.object(scan, "worker_command", return_value=sleeper):
        rows = await run_scan(config(timeout=0.5, workers=1))
    assert time.monotonic() - start < 10
    assert [row.status for row in rows] == ["Timeout", "Timeout"]
    assert rows[0].guaranteed_t == 0.5


async def test_trials_with_a_timeout_run_in_child_processes():
    rows = await run_scan(config(dims=(4, 6), timeout=120))
    assert len(rows) == 4
    assert all(row.ok for row in rows), rows
    assert [(row.dim, row.trial) for row in rows] == [(4, 0), (4, 1), (6, 0), (6, 1)]
    assert rows[0].achieved_B == run_trial(config(), 4, 4, 0).achieved_B


async def test_crashed_worker_becomes_a_row():
    crash = [sys.executable, "-c", "raise SystemExit(3)"]
    with mock.patch.object(scan, "worker_command", return_value=crash):
        rows = await run_scan(config(timeout=60))
    assert [row.status for row in rows] == ["WorkerFailed", "WorkerFailed"]


@pytest.mark.parametrize("rho", [0.9, 0.8, 0.5])
async def test_geometric_family_exponent_is_stable_across_dimensions(rho):
    rows = await run_scan(
        config(dims=(16, 32, 64), trials=10, decay=DecayKind.GEOMETRIC, rho=rho, workers=4)
    )
    assert len(rows) == 30
    assert all(row.ok for row in rows), [row for row in rows if not row.ok]
    assert all(row.guaranteed_t == 0.5 for row in rows)
    assert all(row.residual_rel <= 1e-8 for row in rows)
    if rho == 0.5:
        assert all(0.3 <= row.achieved_B <= 0.7 for row in rows)

    worst = {dim: max(r.domination_constant for r in rows if r.dim == dim) for dim in (16, 32, 64)}
    assert worst[32] <= 4 * worst[16]
    assert worst[64] <= 4 * worst[32]


def test_csv_output(tmp_path):
    rows = [run_trial(config(), 4, 4, 0), scan._failed_row(4, 4, 1, "Timeout")]
    path = tmp_path / "scan.csv"
    write_scan_csv(rows, path)
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        assert reader.fieldnames == SCAN_HEADER
        written = list(reader)
    assert [r["status"] for r in written] == ["ok", "Timeout"]
    assert float(written[0]["guaranteed_t"]) == 0.5
    assert math.isnan(float(written[1]["achieved_B"]))
