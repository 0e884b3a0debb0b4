"""Constructor trees for derived datatypes and their flattened byte layouts.

A datatype is an immutable tree built from a small set of constructors over
fixed-width base kinds.  Committing a tree derives its payload size, its
bounds (lb, ub) and the canonical flat layout of one instance.  Flattening
`count` instances tiles the single-instance layout at multiples of the
extent and re-canonicalizes, so two descriptions are interchangeable exactly
when their flattened segment lists agree byte for byte.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np


class MalformedType(ValueError):
    """Raised when a constructor tree violates a structural constraint."""


class BaseKind(enum.Enum):
    """Fixed-width primitive kinds.  Values are (wire name, size, alignment)."""

    BYTE = ("byte", 1, 1)
    CHAR = ("char", 1, 1)
    SHORT = ("short", 2, 2)
    INT = ("int", 4, 4)
    DOUBLE = ("double", 8, 8)

    @property
    def wire_name(self) -> str:
        return self.value[0]

    @property
    def size(self) -> int:
        return self.value[1]

    @property
    def alignment(self) -> int:
        return self.value[2]

    @classmethod
    def from_name(cls, name: str) -> "BaseKind":
        for kind in cls:
            if kind.wire_name == name.lower():
                return kind
        raise MalformedType(f"unknown base kind: {name!r}")


@dataclass(frozen=True)
class Base:
    kind: BaseKind


@dataclass(frozen=True)
class Contiguous:
    count: int
    inner: "Datatype"


@dataclass(frozen=True)
class Vector:
    """`count` blocks of `blocklen` inner instances, block-to-block stride
    measured in units of the inner extent."""

    count: int
    blocklen: int
    stride: int
    inner: "Datatype"


@dataclass(frozen=True)
class HVector:
    """Like Vector but the stride is given directly in bytes."""

    count: int
    blocklen: int
    stride_bytes: int
    inner: "Datatype"


@dataclass(frozen=True)
class Indexed:
    """Blocks of varying length at displacements in units of the inner extent.

    `blocks` is a sequence of (blocklen, displ) pairs kept in serialization
    order; displacements may be unsorted or negative.
    """

    blocks: tuple[tuple[int, int], ...]
    inner: "Datatype"


@dataclass(frozen=True)
class IndexedBlock:
    """Constant-length blocks at displacements in units of the inner extent."""

    blocklen: int
    displs: tuple[int, ...]
    inner: "Datatype"


@dataclass(frozen=True)
class Composite:
    """Struct-like constructor: members are (count, byte displacement, type)."""

    members: tuple[tuple[int, int, "Datatype"], ...]


@dataclass(frozen=True)
class Resized:
    """Overrides lb and extent of the inner type without touching its payload.

    Only instance spacing for count > 1 changes; the single-instance
    segments stay where the inner type put them.
    """

    lb: int
    extent: int
    inner: "Datatype"


Datatype = Union[Base, Contiguous, Vector, HVector, Indexed, IndexedBlock, Composite, Resized]

_EMPTY = np.empty(0, dtype=np.int64)


@dataclass(frozen=True)
class FlatLayout:
    """Canonical (offset, length) byte segments of `count` instances.

    Segments are kept in serialization order; only runs that are adjacent
    in that order get merged, so order survives canonicalization.  `extent`
    is the span `count` instances occupy (count times the type extent) and
    `lb` is the lower bound of the first instance.
    """

    offsets: np.ndarray
    lengths: np.ndarray
    total_size: int
    extent: int
    lb: int

    @property
    def segments(self) -> list[tuple[int, int]]:
        return list(zip(self.offsets.tolist(), self.lengths.tolist()))

    @property
    def overlapping(self) -> bool:
        if len(self.offsets) < 2:
            return False
        order = np.argsort(self.offsets, kind="stable")
        off = self.offsets[order]
        end = off + self.lengths[order]
        return bool(np.any(end[:-1] > off[1:]))

    def same_segments(self, other: "FlatLayout") -> bool:
        return np.array_equal(self.offsets, other.offsets) and np.array_equal(
            self.lengths, other.lengths
        )


@dataclass(frozen=True)
class CommittedType:
    """A validated tree plus its derived size, bounds and unit layout."""

    datatype: Datatype
    size: int
    lb: int
    ub: int
    extent: int
    flat: FlatLayout = field(repr=False)


def _canonicalize(off: np.ndarray, ln: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Drop empty segments and merge runs adjacent in serialization order."""
    if len(off) == 0:
        return _EMPTY, _EMPTY
    keep = ln > 0
    if not keep.all():
        off, ln = off[keep], ln[keep]
        if len(off) == 0:
            return _EMPTY, _EMPTY
    if len(off) == 1:
        return off, ln
    starts = np.empty(len(off), dtype=bool)
    starts[0] = True
    np.not_equal(off[:-1] + ln[:-1], off[1:], out=starts[1:])
    if starts.all():
        return off, ln
    group = np.cumsum(starts) - 1
    merged_off = off[starts]
    merged_len = np.bincount(group, weights=ln).astype(np.int64)
    return merged_off, merged_len


def _tile(off: np.ndarray, ln: np.ndarray, count: int, stride: int) -> tuple[np.ndarray, np.ndarray]:
    """Repeat a segment list `count` times shifted by multiples of `stride`."""
    if count == 0 or len(off) == 0:
        return _EMPTY, _EMPTY
    if count == 1:
        return off, ln
    shifts = np.arange(count, dtype=np.int64) * stride
    out_off = (shifts[:, None] + off[None, :]).ravel()
    out_len = np.tile(ln, count)
    return _canonicalize(out_off, out_len)


def _place_blocks(
    blocklens: np.ndarray,
    displs: np.ndarray,
    inner: tuple[np.ndarray, np.ndarray],
    inner_extent: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Lay out ragged blocks: block j holds blocklens[j] inner instances
    starting at byte displacement displs[j], instances spaced by the inner
    extent.  Serialization order is block order, then instance order."""
    total = int(blocklens.sum())
    if total == 0:
        return _EMPTY, _EMPTY
    base = np.repeat(displs, blocklens)
    intra = np.arange(total, dtype=np.int64)
    run_starts = np.repeat(np.cumsum(blocklens) - blocklens, blocklens)
    instance_off = base + (intra - run_starts) * inner_extent
    in_off, in_ln = inner
    out_off = (instance_off[:, None] + in_off[None, :]).ravel()
    out_len = np.tile(in_ln, total)
    return _canonicalize(out_off, out_len)


def _layout(t: Datatype) -> tuple[np.ndarray, np.ndarray, int, int, int]:
    """Return (offsets, lengths, size, lb, ub) for one instance of `t`.

    Bounds follow the committed-type rules: each placed inner instance
    contributes [displ + inner lb, displ + inner ub], so a Resized inner
    widens or narrows the bounds without moving payload.  Constructors with
    no placed instances have lb = ub = 0.
    """
    if isinstance(t, Base):
        size = t.kind.size
        return (
            np.array([0], dtype=np.int64),
            np.array([size], dtype=np.int64),
            size,
            0,
            size,
        )

    if isinstance(t, Resized):
        off, ln, size, _, _ = _layout(t.inner)
        return off, ln, size, t.lb, t.lb + t.extent

    if isinstance(t, Contiguous):
        off, ln, size, lb, ub = _layout(t.inner)
        ext = ub - lb
        if t.count == 0 or (size == 0 and lb == 0 and ub == 0):
            return _EMPTY, _EMPTY, 0, 0, 0
        out = _tile(off, ln, t.count, ext)
        return out[0], out[1], size * t.count, lb, (t.count - 1) * ext + ub

    if isinstance(t, (Vector, HVector)):
        off, ln, size, lb, ub = _layout(t.inner)
        ext = ub - lb
        stride_bytes = t.stride_bytes if isinstance(t, HVector) else t.stride * ext
        if t.count == 0 or t.blocklen == 0 or (size == 0 and lb == 0 and ub == 0):
            return _EMPTY, _EMPTY, 0, 0, 0
        block = _tile(off, ln, t.blocklen, ext)
        out_off, out_ln = _tile(block[0], block[1], t.count, stride_bytes)
        shifts = np.arange(t.count, dtype=np.int64) * stride_bytes
        lo = int((shifts + lb).min())
        hi = int((shifts + (t.blocklen - 1) * ext + ub).max())
        return out_off, out_ln, size * t.blocklen * t.count, lo, hi

    if isinstance(t, Indexed):
        off, ln, size, lb, ub = _layout(t.inner)
        ext = ub - lb
        blocklens = np.array([b for b, _ in t.blocks], dtype=np.int64)
        displs = np.array([d for _, d in t.blocks], dtype=np.int64) * ext
        live = blocklens > 0
        if not live.any() or (size == 0 and lb == 0 and ub == 0):
            return _EMPTY, _EMPTY, 0, 0, 0
        out_off, out_ln = _place_blocks(blocklens, displs, (off, ln), ext)
        lo = int((displs[live] + lb).min())
        hi = int((displs[live] + (blocklens[live] - 1) * ext + ub).max())
        return out_off, out_ln, size * int(blocklens.sum()), lo, hi

    if isinstance(t, IndexedBlock):
        off, ln, size, lb, ub = _layout(t.inner)
        ext = ub - lb
        if t.blocklen == 0 or len(t.displs) == 0 or (size == 0 and lb == 0 and ub == 0):
            return _EMPTY, _EMPTY, 0, 0, 0
        displs = np.asarray(t.displs, dtype=np.int64) * ext
        blocklens = np.full(len(t.displs), t.blocklen, dtype=np.int64)
        out_off, out_ln = _place_blocks(blocklens, displs, (off, ln), ext)
        lo = int(displs.min()) + lb
        hi = int(displs.max()) + (t.blocklen - 1) * ext + ub
        return out_off, out_ln, size * t.blocklen * len(t.displs), lo, hi

    if isinstance(t, Composite):
        parts_off: list[np.ndarray] = []
        parts_len: list[np.ndarray] = []
        size = 0
        lo: int | None = None
        hi: int | None = None
        for count, displ, member in t.members:
            off, ln, msize, mlb, mub = _layout(member)
            ext = mub - mlb
            if count > 0 and not (msize == 0 and mlb == 0 and mub == 0):
                m_off, m_ln = _tile(off, ln, count, ext)
                parts_off.append(m_off + displ)
                parts_len.append(m_ln)
                size += msize * count
                m_lo = displ + mlb
                m_hi = displ + (count - 1) * ext + mub
                lo = m_lo if lo is None else min(lo, m_lo)
                hi = m_hi if hi is None else max(hi, m_hi)
        if lo is None:
            return _EMPTY, _EMPTY, 0, 0, 0
        out_off, out_ln = _canonicalize(
            np.concatenate(parts_off) if parts_off else _EMPTY,
            np.concatenate(parts_len) if parts_len else _EMPTY,
        )
        return out_off, out_ln, size, lo, hi

    raise MalformedType(f"not a datatype node: {t!r}")


def _validate(t: Datatype) -> None:
    if isinstance(t, Base):
        if not isinstance(t.kind, BaseKind):
            raise MalformedType(f"base kind must be a BaseKind, got {t.kind!r}")
        return
    if isinstance(t, Contiguous):
        if t.count < 0:
            raise MalformedType(f"contiguous count must be >= 0, got {t.count}")
        _validate(t.inner)
        return
    if isinstance(t, (Vector, HVector)):
        if t.count < 0 or t.blocklen < 0:
            raise MalformedType(
                f"vector count/blocklen must be >= 0, got ({t.count}, {t.blocklen})"
            )
        _validate(t.inner)
        return
    if isinstance(t, Indexed):
        for bl, _ in t.blocks:
            if bl < 0:
                raise MalformedType(f"indexed blocklen must be >= 0, got {bl}")
        _validate(t.inner)
        return
    if isinstance(t, IndexedBlock):
        if t.blocklen < 0:
            raise MalformedType(f"blocklen must be >= 0, got {t.blocklen}")
        _validate(t.inner)
        return
    if isinstance(t, Composite):
        for count, _, member in t.members:
            if count < 0:
                raise MalformedType(f"struct member count must be >= 0, got {count}")
            _validate(member)
        return
    if isinstance(t, Resized):
        if t.extent < 0:
            raise MalformedType(f"resized extent must be >= 0, got {t.extent}")
        _validate(t.inner)
        return
    raise MalformedType(f"not a datatype node: {t!r}")


def commit(t: Datatype | CommittedType) -> CommittedType:
    """Validate a tree and derive size, bounds, extent and the unit layout.

    Pure: the input tree is never mutated and committing twice is a no-op.
    """
    if isinstance(t, CommittedType):
        return t
    _validate(t)
    off, ln, size, lb, ub = _layout(t)
    flat = FlatLayout(off, ln, size, ub - lb, lb)
    return CommittedType(t, size, lb, ub, ub - lb, flat)


def flatten(t: Datatype | CommittedType, count: int = 1) -> FlatLayout:
    """Canonical segments of `count` instances, instance i shifted by
    i * extent.  Canonicalization may merge across instance boundaries."""
    if count < 0:
        raise MalformedType(f"count must be >= 0, got {count}")
    ct = commit(t)
    if count == 0:
        return FlatLayout(_EMPTY, _EMPTY, 0, 0, 0)
    off, ln = _tile(ct.flat.offsets, ct.flat.lengths, count, ct.extent)
    return FlatLayout(off, ln, ct.size * count, ct.extent * count, ct.lb)


def equivalent(
    t1: Datatype | CommittedType,
    count1: int,
    t2: Datatype | CommittedType,
    count2: int,
) -> bool:
    """True when both descriptions touch the same bytes in the same order.

    Equality is taken over canonical segments, so base kinds inside the
    trees do not matter once their byte footprints coincide.
    """
    return flatten(t1, count1).same_segments(flatten(t2, count2))


# --- JSON codec ---------------------------------------------------------
#
# Node encoding, one object per constructor:
#   {"kind": "base", "base": "int"}
#   {"kind": "contiguous", "count": c, "inner": ...}
#   {"kind": "vector", "count": c, "blocklen": b, "stride": s, "inner": ...}
#   {"kind": "hvector", "count": c, "blocklen": b, "stride_bytes": s, "inner": ...}
#   {"kind": "indexed", "blocks": [[blocklen, displ], ...], "inner": ...}
#   {"kind": "indexed_block", "blocklen": b, "displs": [...], "inner": ...}
#   {"kind": "struct", "members": [[count, displ_bytes, node], ...]}
#   {"kind": "resized", "lb": l, "extent": e, "inner": ...}
# Strides and displacements of vector/indexed/indexed_block are in units of
# the inner extent; hvector strides and struct displacements are bytes.


def datatype_to_json(t: Datatype) -> dict:
    if isinstance(t, Base):
        return {"kind": "base", "base": t.kind.wire_name}
    if isinstance(t, Contiguous):
        return {"kind": "contiguous", "count": t.count, "inner": datatype_to_json(t.inner)}
    if isinstance(t, Vector):
        return {
            "kind": "vector",
            "count": t.count,
            "blocklen": t.blocklen,
            "stride": t.stride,
            "inner": datatype_to_json(t.inner),
        }
    if isinstance(t, HVector):
        return {
            "kind": "hvector",
            "count": t.count,
            "blocklen": t.blocklen,
            "stride_bytes": t.stride_bytes,
            "inner": datatype_to_json(t.inner),
        }
    if isinstance(t, Indexed):
        return {
            "kind": "indexed",
            "blocks": [[bl, d] for bl, d in t.blocks],
            "inner": datatype_to_json(t.inner),
        }
    if isinstance(t, IndexedBlock):
        return {
            "kind": "indexed_block",
            "blocklen": t.blocklen,
            "displs": list(t.displs),
            "inner": datatype_to_json(t.inner),
        }
    if isinstance(t, Composite):
        return {
            "kind": "struct",
            "members": [[c, d, datatype_to_json(m)] for c, d, m in t.members],
        }
    if isinstance(t, Resized):
        return {
            "kind": "resized",
            "lb": t.lb,
            "extent": t.extent,
            "inner": datatype_to_json(t.inner),
        }
    raise MalformedType(f"not a datatype node: {t!r}")


def datatype_from_json(obj: dict) -> Datatype:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise MalformedType(f"datatype JSON must be an object with a 'kind': {obj!r}")
    kind = obj["kind"]
    try:
        if kind == "base":
            return Base(BaseKind.from_name(obj["base"]))
        if kind == "contiguous":
            return Contiguous(int(obj["count"]), datatype_from_json(obj["inner"]))
        if kind == "vector":
            return Vector(
                int(obj["count"]),
                int(obj["blocklen"]),
                int(obj["stride"]),
                datatype_from_json(obj["inner"]),
            )
        if kind == "hvector":
            return HVector(
                int(obj["count"]),
                int(obj["blocklen"]),
                int(obj["stride_bytes"]),
                datatype_from_json(obj["inner"]),
            )
        if kind == "indexed":
            return Indexed(
                tuple((int(b), int(d)) for b, d in obj["blocks"]),
                datatype_from_json(obj["inner"]),
            )
        if kind == "indexed_block":
            return IndexedBlock(
                int(obj["blocklen"]),
                tuple(int(d) for d in obj["displs"]),
                datatype_from_json(obj["inner"]),
            )
        if kind == "struct":
            return Composite(
                tuple(
                    (int(c), int(d), datatype_from_json(m)) for c, d, m in obj["members"]
                )
            )
        if kind == "resized":
            return Resized(
                int(obj["lb"]), int(obj["extent"]), datatype_from_json(obj["inner"])
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedType(f"bad {kind!r} node: {exc}") from exc
    raise MalformedType(f"unknown datatype kind: {kind!r}")


def datatype_dumps(t: Datatype) -> str:
    return json.dumps(datatype_to_json(t), separators=(",", ":"))


def datatype_loads(text: str) -> Datatype:
    return datatype_from_json(json.loads(text))
