"""Ping-pong timing harness with median-of-runs reduction.

A case is measured as `r` independent runs over fresh endpoints.  Each run
performs a few untimed warmup repetitions and then `nrep` timed ones.  Both
parties time each repetition locally and swap their readings, and the
repetition's sample is the larger of the two.  A run reduces to the median
of its samples; the case reports mean, min and max over the `r` run
medians.

The wall clock is injectable so the whole pipeline can be exercised with a
deterministic fake.  With an injected clock both parties stay in this
process; with the real clock the tcp carrier places the echo side in a
separate spawned process.
"""

from __future__ import annotations

import csv
import json
import multiprocessing
import statistics
import sys
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import transport as tp
from .packer import make_engine
from .typecore import Datatype, commit, datatype_dumps, datatype_loads

WARMUP_REPS = 3
DEFAULT_RUNS = 5
DEFAULT_SEED = 1

VARIANTS = ("typed", "packed", "raw")


def nrep_schedule(m_bytes: int) -> int:
    """Repetitions per run, chosen by message size."""
    if m_bytes <= 32_000:
        return 100
    if m_bytes <= 320_000:
        return 50
    return 20


@dataclass(frozen=True)
class BenchCase:
    """One measurable configuration of layout, engine and carrier."""

    case_id: str
    datatype: Optional[Datatype]
    count: int
    variant: str
    engine: str
    transport: str
    m_bytes: int
    A: Optional[int] = None
    spec_json: str = ""

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant != "raw" and self.datatype is None:
            raise ValueError(f"variant {self.variant!r} needs a datatype")


@dataclass(frozen=True)
class RunStats:
    """Reduced timings of one case."""

    case: BenchCase
    r: int
    nrep: int
    run_medians: tuple[float, ...]
    mean_s: float
    min_s: float
    max_s: float
    raw_samples: tuple[tuple[float, ...], ...]


def _fill_region(size: int, seed: int) -> bytearray:
    rng = np.random.default_rng(seed)
    return bytearray(rng.bytes(size))


def _region_size(case: BenchCase) -> int:
    if case.variant == "raw":
        return case.m_bytes
    ct = commit(case.datatype)
    lo = min(ct.lb, 0)
    hi = max(ct.ub, ct.lb + case.count * ct.extent)
    return hi - lo


def _case_engine(case: BenchCase):
    if case.variant == "raw":
        return None
    return make_engine(case.engine, case.datatype, case.count)


def _one_rep(ep: tp.Endpoint, case: BenchCase, region, eng, clock) -> float:
    """One synchronized repetition; returns the max-of-pair sample."""
    ep.barrier()
    if case.variant == "typed":
        elapsed = tp.pingpong_typed(ep, case.datatype, case.count, region, eng, clock)
    elif case.variant == "packed":
        elapsed = tp.pingpong_packed(ep, case.datatype, case.count, region, eng, clock)
    else:
        elapsed = tp.pingpong_raw(ep, region, clock)
    other = ep.exchange_f64(elapsed)
    return max(elapsed, other)


def _side_loop(
    ep: tp.Endpoint,
    case: BenchCase,
    region,
    nrep: int,
    warmups: int,
    clock: Callable[[], float],
    eng=None,
) -> list[float]:
    """Run warmups + nrep repetitions from one side; return timed samples.

    Both sides execute this same loop, so both see identical max-of-pair
    samples.
    """
    if eng is None:
        eng = _case_engine(case)
    samples: list[float] = []
    for rep in range(warmups + nrep):
        sample = _one_rep(ep, case, region, eng, clock)
        if rep >= warmups:
            samples.append(sample)
    return samples


def _pong_thread_main(ep, case, nrep, warmups, clock, seed, eng=None):
    region = _fill_region(_region_size(case), seed)
    try:
        _side_loop(ep, case, region, nrep, warmups, clock, eng)
    finally:
        ep.close()


def _pong_process_main(port, case_wire, nrep, warmups, seed):
    case = _case_from_wire(case_wire)
    ep = tp.tcp_connect(port, peer_id="pong")
    region = _fill_region(_region_size(case), seed)
    try:
        _side_loop(ep, case, region, nrep, warmups, time.perf_counter)
    finally:
        ep.close()


def _case_to_wire(case: BenchCase) -> tuple:
    dt = datatype_dumps(case.datatype) if case.datatype is not None else None
    return (case.case_id, dt, case.count, case.variant, case.engine,
            case.transport, case.m_bytes, case.A, case.spec_json)


def _case_from_wire(wire: tuple) -> BenchCase:
    case_id, dt, count, variant, engine, carrier, m_bytes, a, spec_json = wire
    datatype = datatype_loads(dt) if dt is not None else None
    return BenchCase(case_id, datatype, count, variant, engine, carrier,
                     m_bytes, a, spec_json)


def _one_run(case: BenchCase, nrep: int, warmups: int, clock, seed: int,
             eng_ping=None, eng_pong=None) -> list[float]:
    """One run over fresh endpoints; returns the timed samples."""
    in_process = case.transport == "inmem" or clock is not None
    tick = clock if clock is not None else time.perf_counter

    if in_process:
        ping_ep, pong_ep = tp.make_pair(case.transport)
        worker = threading.Thread(
            target=_pong_thread_main,
            args=(pong_ep, case, nrep, warmups, tick, seed + 1, eng_pong),
            daemon=True,
        )
        worker.start()
        try:
            region = _fill_region(_region_size(case), seed)
            samples = _side_loop(ping_ep, case, region, nrep, warmups, tick, eng_ping)
        finally:
            ping_ep.close()
        worker.join(timeout=60.0)
        return samples

    listener, port = tp.tcp_listener()
    ctx = multiprocessing.get_context("spawn")
    child = ctx.Process(
        target=_pong_process_main,
        args=(port, _case_to_wire(case), nrep, warmups, seed + 1),
        daemon=True,
    )
    child.start()
    try:
        ping_ep = tp.tcp_accept(listener, peer_id="ping")
    finally:
        listener.close()
    try:
        region = _fill_region(_region_size(case), seed)
        samples = _side_loop(ping_ep, case, region, nrep, warmups, tick, eng_ping)
    finally:
        ping_ep.close()
    child.join(timeout=60.0)
    if child.is_alive():
        child.terminate()
        raise tp.TransportUnavailable("echo process did not exit")
    return samples


def _interleaved_loop(ep, sides, clock) -> list[list[float]]:
    """Alternate single repetitions across cases on one endpoint.

    `sides` holds (case, region, eng, total, warmups) tuples.  Both halves
    of the endpoint pair run this same loop, so the repetition schedule
    agrees step for step.  Returns one post-warmup sample list per side.
    """
    out: list[list[float]] = [[] for _ in sides]
    longest = max(total for _, _, _, total, _ in sides)
    for rep in range(longest):
        for i, (case, region, eng, total, warmups) in enumerate(sides):
            if rep < total:
                sample = _one_rep(ep, case, region, eng, clock)
                if rep >= warmups:
                    out[i].append(sample)
    return out


def _paired_pong_main(ep, cases, nreps, warmups, clock, seed, engines):
    sides = [
        (case, _fill_region(_region_size(case), seed), eng, warmups + nrep, warmups)
        for case, nrep, eng in zip(cases, nreps, engines)
    ]
    try:
        _interleaved_loop(ep, sides, clock)
    finally:
        ep.close()


def _paired_run(
    case_a: BenchCase,
    case_b: BenchCase,
    nrep_a: int,
    nrep_b: int,
    warmups: int,
    clock,
    seed: int,
    engines_a: tuple,
    engines_b: tuple,
) -> tuple[list[float], list[float]]:
    """One run of each case with single repetitions alternating a, b.

    Both cases share one endpoint pair, so every repetition is echoed by
    the same thread on the same core.  With one channel per case the two
    echo threads land on different cores often enough that handoff latency
    differs by several microseconds, which swamps sub-millisecond
    payloads; a shared channel makes that latency common to both sides of
    the ratio.
    """
    tick = clock if clock is not None else time.perf_counter
    ping_ep, pong_ep = tp.make_pair(case_a.transport)
    worker = threading.Thread(
        target=_paired_pong_main,
        args=(pong_ep, (case_a, case_b), (nrep_a, nrep_b), warmups, tick,
              seed + 1, (engines_a[1], engines_b[1])),
        daemon=True,
    )
    worker.start()
    sides = [
        (case_a, _fill_region(_region_size(case_a), seed), engines_a[0],
         warmups + nrep_a, warmups),
        (case_b, _fill_region(_region_size(case_b), seed), engines_b[0],
         warmups + nrep_b, warmups),
    ]
    try:
        samples_a, samples_b = _interleaved_loop(ping_ep, sides, tick)
    finally:
        ping_ep.close()
    worker.join(timeout=60.0)
    return samples_a, samples_b


def _reduce(case: BenchCase, nrep: int, per_run: list[tuple[float, ...]]) -> RunStats:
    medians = [statistics.median(samples) for samples in per_run]
    return RunStats(
        case=case,
        r=len(per_run),
        nrep=nrep,
        run_medians=tuple(medians),
        mean_s=statistics.fmean(medians),
        min_s=min(medians),
        max_s=max(medians),
        raw_samples=tuple(per_run),
    )


def run_case(
    case: BenchCase,
    r: int = DEFAULT_RUNS,
    nrep: Optional[int] = None,
    warmups: int = WARMUP_REPS,
    clock: Optional[Callable[[], float]] = None,
    seed: int = DEFAULT_SEED,
) -> RunStats:
    """Measure one case: r runs of nrep repetitions each."""
    if nrep is None:
        nrep = nrep_schedule(case.m_bytes)
    in_process = case.transport == "inmem" or clock is not None
    eng_ping = _case_engine(case)
    eng_pong = _case_engine(case) if in_process else None
    per_run = [
        tuple(_one_run(case, nrep, warmups, clock, seed + i, eng_ping, eng_pong))
        for i in range(r)
    ]
    return _reduce(case, nrep, per_run)


def run_pair(
    case_a: BenchCase,
    case_b: BenchCase,
    r: int = DEFAULT_RUNS,
    nrep: Optional[int] = None,
    warmups: int = WARMUP_REPS,
    clock: Optional[Callable[[], float]] = None,
    seed: int = DEFAULT_SEED,
) -> tuple[RunStats, RunStats]:
    """Measure two cases with single repetitions interleaved a, b, a, b.

    Each case still gets r runs reduced exactly as in run_case; only the
    schedule differs.  Both cases share one channel per run, so every
    pair of adjacent samples sees the same thread placement and the same
    few milliseconds of machine conditions; load drift, throttling bursts
    and scheduler asymmetry all cancel out of the ratio.  When the cases
    use different transports, or an echo side lives in another process
    (tcp under the real clock), they fall back to alternating whole runs.
    """
    nrep_a = nrep if nrep is not None else nrep_schedule(case_a.m_bytes)
    nrep_b = nrep if nrep is not None else nrep_schedule(case_b.m_bytes)
    in_process = clock is not None or (
        case_a.transport == "inmem" and case_b.transport == "inmem")
    paired = in_process and case_a.transport == case_b.transport
    engines_a = (_case_engine(case_a), _case_engine(case_a) if in_process else None)
    engines_b = (_case_engine(case_b), _case_engine(case_b) if in_process else None)
    runs_a: list[tuple[float, ...]] = []
    runs_b: list[tuple[float, ...]] = []
    for i in range(r):
        if paired:
            sa, sb = _paired_run(case_a, case_b, nrep_a, nrep_b, warmups,
                                 clock, seed + i, engines_a, engines_b)
        else:
            sa = _one_run(case_a, nrep_a, warmups, clock, seed + i, *engines_a)
            sb = _one_run(case_b, nrep_b, warmups, clock, seed + i, *engines_b)
        runs_a.append(tuple(sa))
        runs_b.append(tuple(sb))
    return _reduce(case_a, nrep_a, runs_a), _reduce(case_b, nrep_b, runs_b)


# --- CSV output ---------------------------------------------------------

# whole-array indexed descriptions serialize to spec_json fields well past
# the csv module's default 128 KB cap
csv.field_size_limit(sys.maxsize)

STATS_HEADER = [
    "case_id", "spec_json", "variant", "engine", "transport",
    "m_bytes", "A", "r", "nrep", "mean_s", "min_s", "max_s",
]

def _sec(v: float) -> str:
    return f"{v:.9f}"


def write_stats_csv(path: str, rows: Sequence[RunStats]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STATS_HEADER)
        for s in rows:
            c = s.case
            w.writerow([
                c.case_id, c.spec_json, c.variant, c.engine, c.transport,
                c.m_bytes, "" if c.A is None else c.A, s.r, s.nrep,
                _sec(s.mean_s), _sec(s.min_s), _sec(s.max_s),
            ])


def write_raw_json(path: str, rows: Sequence[RunStats]) -> None:
    """Sidecar with every individual sample, one object per case."""
    payload = [
        {
            "case_id": s.case.case_id,
            "r": s.r,
            "nrep": s.nrep,
            "runs": [list(samples) for samples in s.raw_samples],
        }
        for s in rows
    ]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def read_stats_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
