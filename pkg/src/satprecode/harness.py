"""Seeded Monte Carlo sweeps of average beam rate and precoder run time."""

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import Scenario
from .errors import InvalidArgumentError, SatPrecodeError
from .precoding import PRECODERS, evaluate_sinr, get_precoder

HEADER = ["precoder", "K", "N", "Nu", "run", "avg_beam_rate", "wall_time_ms", "status"]
SUMMARY_HEADER = [
    "precoder", "K", "N", "Nu", "count", "failed",
    "rate_mean", "rate_stderr", "time_mean_ms", "time_stderr_ms", "time_median_ms",
]


@dataclass(frozen=True)
class SweepSpec:
    scenario: Scenario = field(default_factory=Scenario)
    precoders: tuple = ("mmse", "block_svd")
    users_per_beam: tuple = (2, 3, 4, 5, 6)
    runs: int = 100
    master_seed: int = 0

    def __post_init__(self):
        if self.runs < 1:
            raise InvalidArgumentError(f"runs must be >= 1, got {self.runs!r}")
        for name in self.precoders:
            get_precoder(name)
        if not self.precoders or not self.users_per_beam:
            raise InvalidArgumentError("need at least one precoder and one users_per_beam value")

    @classmethod
    def from_config(cls, config):
        opts = config.sweep
        if opts is None:
            return cls(config.scenario)
        return cls(config.scenario, tuple(opts.precoders), tuple(opts.users_per_beam), opts.runs, opts.master_seed)


@dataclass(frozen=True)
class SweepRow:
    precoder: str
    K: int
    N: int
    Nu: int
    run: int
    avg_beam_rate: float
    wall_time_ms: float  # None when timing is off
    status: str

    @property
    def ok(self):
        return self.status == "ok"

    def cells(self):
        rate = "" if self.avg_beam_rate is None else repr(self.avg_beam_rate)
        wall = "" if self.wall_time_ms is None else repr(self.wall_time_ms)
        return [self.precoder, self.K, self.N, self.Nu, self.run, rate, wall, self.status]


@dataclass
class SweepResult:
    rows: list

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(HEADER)
        writer.writerows(row.cells() for row in self.rows)
        return buf.getvalue()

    def write(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def read(cls, path):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            if next(reader, None) != HEADER:
                raise InvalidArgumentError(f"{path}: expected columns {','.join(HEADER)}")
            rows = []
            for line, cells in enumerate(reader, start=2):
                try:
                    name, K, N, Nu, run, rate, wall, status = cells
                    rows.append(SweepRow(name, int(K), int(N), int(Nu), int(run),
                                         float(rate) if rate else None,
                                         float(wall) if wall else None, status))
                except ValueError:
                    raise InvalidArgumentError(f"{path}:{line}: malformed row") from None
        return cls(rows)


def point_seed(master_seed, point, run):
    """Child seed of one (N_u index, run) point, shared by all precoders."""
    return np.random.SeedSequence(master_seed, spawn_key=(point, run))


def _run_point(args):
    """All precoders on one channel draw."""
    scenario, precoders, point, n_users, run, master_seed, timing = args
    scen = scenario.with_users(n_users)
    _, channels = scen.realize(point_seed(master_seed, point, run))
    rows = []
    for name in precoders:
        build = PRECODERS[name]
        try:
            start = time.perf_counter()
            W = build(channels, scen.per_feed_power)
            elapsed = (time.perf_counter() - start) * 1e3
            report = evaluate_sinr(channels, W)
            rate, status = report.sum_rate / scen.n_beams, "ok"
        except SatPrecodeError as exc:
            rate, elapsed, status = None, None, f"failed:{type(exc).__name__}"
        rows.append(SweepRow(name, scen.n_beams, scen.n_feeds, n_users, run, rate,
                             elapsed if timing else None, status))
    return rows


def run_sweep(spec, workers=1, timing=True):
    """Evaluate every (precoder, N_u, run) combination.

    Channels depend only on ``(master_seed, N_u index, run)``, so every
    precoder sees the same draws and the numbers do not depend on
    ``workers``.  Only precoder construction is timed; with
    ``timing=False`` the wall-time column is left empty, which makes the
    CSV byte-stable.  Rows are ordered by precoder, N_u, then run.
    """
    if workers < 1:
        raise InvalidArgumentError(f"workers must be >= 1, got {workers!r}")
    # run-major order spreads slow drifts of the machine evenly over N_u
    tasks = [
        (spec.scenario, tuple(spec.precoders), p, nu, run, spec.master_seed, timing)
        for run in range(spec.runs)
        for p, nu in enumerate(spec.users_per_beam)
    ]
    if workers == 1:
        results = [_run_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_point, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    rows = [row for point in results for row in point]
    order = {name: i for i, name in enumerate(spec.precoders)}
    nu_order = {nu: i for i, nu in enumerate(spec.users_per_beam)}
    rows.sort(key=lambda r: (order[r.precoder], nu_order[r.Nu], r.run))
    return SweepResult(rows)


@dataclass(frozen=True)
class SummaryRow:
    precoder: str
    K: int
    N: int
    Nu: int
    count: int
    failed: int
    rate_mean: float
    rate_stderr: float
    time_mean_ms: float
    time_stderr_ms: float
    time_median_ms: float

    def cells(self):
        def fmt(v):
            return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(v)

        return [self.precoder, self.K, self.N, self.Nu, self.count, self.failed,
                fmt(self.rate_mean), fmt(self.rate_stderr), fmt(self.time_mean_ms),
                fmt(self.time_stderr_ms), fmt(self.time_median_ms)]


def _mean_stderr(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return float("nan"), float("nan")
    mean = float(values.mean())
    if values.size == 1:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / np.sqrt(values.size))


def summarize(result):
    """Mean and standard error per (precoder, K, N, N_u) group.

    Failed rows are counted and left out of the statistics; a group where
    every row failed reports NaN statistics.  Groups keep their order of
    first appearance.
    """
    rows = result.rows if isinstance(result, SweepResult) else list(result)
    if not rows:
        raise InvalidArgumentError("cannot summarise an empty sweep")
    groups = {}
    for row in rows:
        groups.setdefault((row.precoder, row.K, row.N, row.Nu), []).append(row)
    out = []
    for (name, K, N, Nu), members in groups.items():
        good = [r for r in members if r.ok]
        rate_mean, rate_se = _mean_stderr([r.avg_beam_rate for r in good])
        times = [r.wall_time_ms for r in good if r.wall_time_ms is not None]
        time_mean, time_se = _mean_stderr(times)
        median = float(np.median(times)) if times else float("nan")
        out.append(SummaryRow(name, K, N, Nu, len(good), len(members) - len(good),
                              rate_mean, rate_se, time_mean, time_se, median))
    return out


def summary_csv(summary):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    writer.writerows(row.cells() for row in summary)
    return buf.getvalue()
