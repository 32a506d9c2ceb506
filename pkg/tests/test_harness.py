import math

import numpy as np
import pytest

from satprecode.config import Scenario
from satprecode.errors import InvalidArgumentError
from satprecode.harness import HEADER, SweepResult, SweepRow, SweepSpec, run_sweep, summarize, summary_csv

SMALL = Scenario(n_beams=4, n_users=2)


def small_spec(**kw):
    args = dict(precoders=("mmse", "block_svd"), users_per_beam=(1, 2), runs=3, master_seed=7)
    args.update(kw)
    return SweepSpec(SMALL, **args)


def test_row_count_and_order():
    result = run_sweep(small_spec())
    assert len(result.rows) == 2 * 2 * 3
    keys = [(r.precoder, r.Nu, r.run) for r in result.rows]
    assert keys == [(p, nu, run) for p in ("mmse", "block_svd") for nu in (1, 2) for run in range(3)]
    assert all(r.ok and r.avg_beam_rate >= 0 and r.wall_time_ms > 0 for r in result.rows)
    assert all((r.K, r.N) == (4, 4) for r in result.rows)


def test_precoders_share_channels():
    one = run_sweep(small_spec(precoders=("mmse",)), timing=False)
    both = run_sweep(small_spec(), timing=False)
    assert [r.avg_beam_rate for r in one.rows] == [r.avg_beam_rate for r in both.rows if r.precoder == "mmse"]


def test_byte_stable_across_workers():
    spec = small_spec()
    serial = run_sweep(spec, workers=1, timing=False).to_csv()
    parallel = run_sweep(spec, workers=3, timing=False).to_csv()
    assert serial == parallel
    assert serial.splitlines()[0] == ",".join(HEADER)


def test_seed_changes_output():
    a = run_sweep(small_spec(master_seed=1), timing=False).to_csv()
    b = run_sweep(small_spec(master_seed=2), timing=False).to_csv()
    assert a != b


def test_csv_round_trip(tmp_path):
    result = run_sweep(small_spec(runs=2))
    path = tmp_path / "sweep.csv"
    result.write(path)
    assert SweepResult.read(path).rows == result.rows


def test_spec_validation():
    with pytest.raises(InvalidArgumentError):
        small_spec(runs=0)
    with pytest.raises(InvalidArgumentError):
        small_spec(precoders=("nope",))
    with pytest.raises(InvalidArgumentError):
        run_sweep(small_spec(), workers=0)


def fixture_rows():
    return [
        SweepRow("mmse", 4, 4, 2, 0, 1.0, 2.0, "ok"),
        SweepRow("mmse", 4, 4, 2, 1, 3.0, 4.0, "ok"),
        SweepRow("mmse", 4, 4, 2, 2, None, None, "failed:SingularChannelError"),
        SweepRow("zf", 4, 4, 2, 0, 5.0, 1.0, "ok"),
        SweepRow("zf", 4, 4, 3, 0, None, None, "failed:SingularChannelError"),
    ]


def test_summary_statistics():
    summary = summarize(fixture_rows())
    first = summary[0]
    assert (first.count, first.failed) == (2, 1)
    assert first.rate_mean == 2.0
    assert np.isclose(first.rate_stderr, np.std([1.0, 3.0], ddof=1) / math.sqrt(2))
    assert first.time_mean_ms == 3.0 and first.time_median_ms == 3.0
    single = summary[1]
    assert single.rate_stderr == 0.0
    dead = summary[2]
    assert dead.count == 0 and math.isnan(dead.rate_mean)


def test_summary_csv_blank_for_nan():
    text = summary_csv(summarize(fixture_rows()))
    last = text.splitlines()[-1].split(",")
    assert last[:6] == ["zf", "4", "4", "3", "0", "1"] and last[6] == ""


def test_summary_rejects_empty():
    with pytest.raises(InvalidArgumentError):
        summarize([])
