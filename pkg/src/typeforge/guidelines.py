"""Executable performance guidelines over ping-pong statistics.

Each guideline compares two ways of communicating the same byte layout and
renders a verdict from the ratio of their mean-of-run-medians:

* G1_CONTIG: count instances of a type vs one instance of the contiguous
  wrapper around it, expected similar.
* G2_PACK_SEND / G3_RECV_UNPACK: typed transfer vs explicit pack, send,
  receive, unpack; typed is expected no slower.  One packed round trip
  contains both the send-side and receive-side compositions, so a single
  measurement grounds both verdicts.
* G4_NORMALIZE: a description vs its normalized rewrite, expected no
  slower.
* G4_ALT_DESCRIPTION: alternative descriptions of one layout family,
  expected similar.

Relations: "similar" is violated when max(ratio, 1/ratio) exceeds the
threshold, "no_slower" when ratio alone does.  Both sides must describe
byte-identical layouts; anything else is a comparison error, not a verdict.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .bench import BenchCase, RunStats, run_case, run_pair
from .layouts import LayoutSpec, build_alternatives
from .normalizer import normalize
from .typecore import Contiguous, Datatype, commit, datatype_dumps, equivalent

DEFAULT_THRESHOLD = 1.10

SIMILAR = "similar"
NO_SLOWER = "no_slower"
RELATIONS = (SIMILAR, NO_SLOWER)

GUIDELINE_IDS = (
    "G1_CONTIG",
    "G2_PACK_SEND",
    "G3_RECV_UNPACK",
    "G4_NORMALIZE",
    "G4_ALT_DESCRIPTION",
)


class LayoutMismatch(ValueError):
    """Both sides of a guideline must describe the same byte layout."""


@dataclass(frozen=True)
class GuidelineCase:
    """One comparison: which guideline, which two measurable sides."""

    guideline: str
    case_id: str
    relation: str
    lhs: BenchCase
    rhs: BenchCase
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if self.guideline not in GUIDELINE_IDS:
            raise ValueError(f"unknown guideline {self.guideline!r}")
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")
        if not self.threshold > 1.0:
            raise ValueError("threshold must exceed 1")


@dataclass(frozen=True)
class GuidelineVerdict:
    """Outcome of one comparison."""

    case: GuidelineCase
    lhs_stats: RunStats
    rhs_stats: RunStats
    ratio: float
    violated: bool
    severity: float


def evaluate(relation: str, ratio: float, threshold: float) -> tuple[bool, float]:
    """Pure verdict rule: (violated, severity) for a timing ratio."""
    if not ratio > 0.0:
        raise ValueError("ratio must be positive")
    if not threshold > 1.0:
        raise ValueError("threshold must exceed 1")
    if relation == SIMILAR:
        severity = max(ratio, 1.0 / ratio)
        return severity > threshold, severity
    if relation == NO_SLOWER:
        return ratio > threshold, ratio
    raise ValueError(f"unknown relation {relation!r}")


def judge(case: GuidelineCase, lhs_stats: RunStats, rhs_stats: RunStats) -> GuidelineVerdict:
    ratio = lhs_stats.mean_s / rhs_stats.mean_s
    violated, severity = evaluate(case.relation, ratio, case.threshold)
    return GuidelineVerdict(case, lhs_stats, rhs_stats, ratio, violated, severity)


def _require_same_layout(lhs_t: Datatype, lhs_c: int, rhs_t: Datatype, rhs_c: int, what: str) -> None:
    if not equivalent(lhs_t, lhs_c, rhs_t, rhs_c):
        raise LayoutMismatch(f"{what}: sides describe different byte layouts")


def _payload_bytes(t: Datatype, count: int) -> int:
    return commit(t).size * count


def _bench_case(case_id: str, t: Datatype, count: int, variant: str, engine: str,
                transport: str, A: Optional[int]) -> BenchCase:
    return BenchCase(
        case_id=case_id,
        datatype=t,
        count=count,
        variant=variant,
        engine=engine,
        transport=transport,
        m_bytes=_payload_bytes(t, count),
        A=A,
        spec_json=datatype_dumps(t),
    )


def _measure(case: BenchCase, r: int, nrep: Optional[int], clock, seed: int) -> RunStats:
    return run_case(case, r=r, nrep=nrep, clock=clock, seed=seed)


def _measure_pair(lhs: BenchCase, rhs: BenchCase, r: int, nrep: Optional[int],
                  clock, seed: int) -> tuple[RunStats, RunStats]:
    """Both sides of a comparison run interleaved so drift hits them alike."""
    return run_pair(lhs, rhs, r=r, nrep=nrep, clock=clock, seed=seed)


def check_g1(
    t: Datatype,
    c: int,
    *,
    engine: str = "compiled",
    rhs_engine: Optional[str] = None,
    transport: str = "inmem",
    threshold: float = DEFAULT_THRESHOLD,
    r: int = 5,
    nrep: Optional[int] = None,
    clock: Optional[Callable[[], float]] = None,
    seed: int = 1,
    case_id: str = "g1",
    A: Optional[int] = None,
) -> list[GuidelineVerdict]:
    """Count instances vs one contiguous wrapper, expected similar."""
    wrapper = Contiguous(c, t)
    _require_same_layout(t, c, wrapper, 1, "G1_CONTIG")
    lhs = _bench_case(f"{case_id}/typed-count", t, c, "typed", engine, transport, A)
    rhs = _bench_case(f"{case_id}/contig-one", wrapper, 1, "typed",
                      rhs_engine or engine, transport, A)
    case = GuidelineCase("G1_CONTIG", case_id, SIMILAR, lhs, rhs, threshold)
    lhs_stats, rhs_stats = _measure_pair(lhs, rhs, r, nrep, clock, seed)
    return [judge(case, lhs_stats, rhs_stats)]


def check_g2_g3(
    t: Datatype,
    c: int,
    *,
    engine: str = "compiled",
    transport: str = "inmem",
    threshold: float = DEFAULT_THRESHOLD,
    r: int = 5,
    nrep: Optional[int] = None,
    clock: Optional[Callable[[], float]] = None,
    seed: int = 1,
    case_id: str = "g2g3",
    A: Optional[int] = None,
) -> list[GuidelineVerdict]:
    """Typed transfer vs explicit pack and unpack, expected no slower.

    The packed round trip stages through an intermediate buffer on both
    the sending and the receiving side, so the one measurement yields a
    send-side and a receive-side verdict with the same ratio.
    """
    lhs = _bench_case(f"{case_id}/typed", t, c, "typed", engine, transport, A)
    rhs = _bench_case(f"{case_id}/packed", t, c, "packed", engine, transport, A)
    lhs_stats, rhs_stats = _measure_pair(lhs, rhs, r, nrep, clock, seed)
    out = []
    for gid in ("G2_PACK_SEND", "G3_RECV_UNPACK"):
        case = GuidelineCase(gid, case_id, NO_SLOWER, lhs, rhs, threshold)
        out.append(judge(case, lhs_stats, rhs_stats))
    return out


def check_g4(
    t: Datatype,
    c: int,
    *,
    engine: str = "compiled",
    transport: str = "inmem",
    threshold: float = DEFAULT_THRESHOLD,
    r: int = 5,
    nrep: Optional[int] = None,
    clock: Optional[Callable[[], float]] = None,
    seed: int = 1,
    case_id: str = "g4",
    A: Optional[int] = None,
    spec: Optional[LayoutSpec] = None,
) -> list[GuidelineVerdict]:
    """Description vs its normalization (no slower), plus similarity
    across the layout's alternative-description family when `spec` names
    one."""
    report = normalize(t)
    _require_same_layout(t, c, report.output, c, "G4_NORMALIZE")
    lhs = _bench_case(f"{case_id}/given", t, c, "typed", engine, transport, A)
    rhs = _bench_case(f"{case_id}/normalized", report.output, c, "typed",
                      engine, transport, A)
    case = GuidelineCase("G4_NORMALIZE", case_id, NO_SLOWER, lhs, rhs, threshold)
    if report.changed:
        lhs_stats, rhs_stats = _measure_pair(lhs, rhs, r, nrep, clock, seed)
    else:
        # already normal: both sides are the same description
        lhs_stats = _measure(lhs, r, nrep, clock, seed)
        rhs_stats = lhs_stats
    out = [judge(case, lhs_stats, rhs_stats)]
    if spec is not None:
        out.extend(check_alternatives(
            spec, engine=engine, transport=transport, threshold=threshold,
            r=r, nrep=nrep, clock=clock, seed=seed, case_id=case_id, A=A,
        ))
    return out


def check_alternatives(
    spec: LayoutSpec,
    *,
    engine: str = "compiled",
    transport: str = "inmem",
    threshold: float = DEFAULT_THRESHOLD,
    r: int = 5,
    nrep: Optional[int] = None,
    clock: Optional[Callable[[], float]] = None,
    seed: int = 1,
    case_id: str = "g4alt",
    A: Optional[int] = None,
) -> list[GuidelineVerdict]:
    """Compare every family member against the family's reference."""
    family = build_alternatives(spec)
    ref = family[0]
    ref_case = _bench_case(f"{case_id}/{ref.spec.id}", ref.datatype, ref.count,
                           "typed", engine, transport, A)
    out = []
    for member in family[1:]:
        _require_same_layout(member.datatype, member.count,
                             ref.datatype, ref.count, "G4_ALT_DESCRIPTION")
        alt_case = _bench_case(f"{case_id}/{member.spec.id}", member.datatype,
                               member.count, "typed", engine, transport, A)
        case = GuidelineCase("G4_ALT_DESCRIPTION", case_id, SIMILAR,
                             alt_case, ref_case, threshold)
        alt_stats, ref_stats = _measure_pair(alt_case, ref_case, r, nrep, clock, seed)
        out.append(judge(case, alt_stats, ref_stats))
    return out


# --- CSV output ---------------------------------------------------------

VERDICT_HEADER = [
    "guideline", "case_id", "lhs", "rhs",
    "ratio", "threshold", "violated", "severity",
]


def write_verdicts_csv(path: str, verdicts: Sequence[GuidelineVerdict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(VERDICT_HEADER)
        for v in verdicts:
            w.writerow([
                v.case.guideline, v.case.case_id,
                v.case.lhs.case_id, v.case.rhs.case_id,
                f"{v.ratio:.6f}", f"{v.case.threshold:.2f}",
                "true" if v.violated else "false", f"{v.severity:.6f}",
            ])


def read_verdicts_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def any_violation(verdicts: Sequence[GuidelineVerdict]) -> bool:
    return any(v.violated for v in verdicts)
