"""Catalog of benchmark layouts and their alternative descriptions.

Every layout is parameterized by a unit block size A and derived stride
parameters.  Two fixed parameter variants are supported:

  variant 1: B = A+2,  B1 = A+1,  B2 = A+3,  A1 = A-1,  A2 = A+1
  variant 2: B = 3A,   B1 = 2A,   B2 = 4A,   A1 = A/2,  A2 = 3A/2  (A even)

plus an "explicit" variant that takes every parameter as given.  `n` is the
total element count of the region a built layout covers (for the
heterogeneous tile, where elements mix kinds, `n` counts payload bytes).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional

from .typecore import (
    Base,
    BaseKind,
    Composite,
    Contiguous,
    Datatype,
    HVector,
    Indexed,
    IndexedBlock,
    Resized,
    Vector,
    commit,
)


class BadParams(ValueError):
    """Raised when layout parameters violate a documented constraint."""


CONTIGUOUS = "contiguous"
TILED = "tiled"
BLOCK = "block"
BUCKET = "bucket"
ALTERNATING = "alternating"
TILED_HET = "tiled_het"
CONTIG_SUBTYPE = "contig_subtype"
TILED_STRUCT = "tiled_struct"
TILED_VECTOR = "tiled_vector"
VECTOR_TILED = "vector_tiled"
BLOCK_INDEXED = "block_indexed"
ALTERNATING_INDEXED = "alternating_indexed"
ALTERNATING_REPEATED = "alternating_repeated"
ALTERNATING_STRUCT = "alternating_struct"
ROWCOL_FULLY_INDEXED = "rowcol_fully_indexed"
ROWCOL_CONTIG_INDEXED = "rowcol_contig_indexed"
ROWCOL_STRUCT = "rowcol_struct"

ALL_IDS = (
    CONTIGUOUS,
    TILED,
    BLOCK,
    BUCKET,
    ALTERNATING,
    TILED_HET,
    CONTIG_SUBTYPE,
    TILED_STRUCT,
    TILED_VECTOR,
    VECTOR_TILED,
    BLOCK_INDEXED,
    ALTERNATING_INDEXED,
    ALTERNATING_REPEATED,
    ALTERNATING_STRUCT,
    ROWCOL_FULLY_INDEXED,
    ROWCOL_CONTIG_INDEXED,
    ROWCOL_STRUCT,
)

BASIC_IDS = (TILED, BLOCK, BUCKET, ALTERNATING)
ROWCOL_IDS = (ROWCOL_FULLY_INDEXED, ROWCOL_CONTIG_INDEXED, ROWCOL_STRUCT)

VARIANT_EXPLICIT = "explicit"


@dataclass(frozen=True)
class LayoutSpec:
    """Declarative description of one catalog layout instance.

    Unset stride fields are derived from `variant`; S1/S2 are repetition
    counts (the struct tiling split, and S1 doubles as the fixed inner
    repetition of the nested-vector description, default 5).  `kinds` is
    only used by the heterogeneous tile, `subtype` only by the
    contiguous-of-subtype family.
    """

    id: str
    n: int
    A: int = 0
    basetype: BaseKind = BaseKind.INT
    variant: int | str = 1
    B: Optional[int] = None
    A1: Optional[int] = None
    A2: Optional[int] = None
    B1: Optional[int] = None
    B2: Optional[int] = None
    S1: Optional[int] = None
    S2: Optional[int] = None
    subtype: Optional[str] = None
    kinds: Optional[tuple[BaseKind, ...]] = None


@dataclass(frozen=True)
class Params:
    """Fully derived stride parameters for one spec."""

    A: int
    B: int
    A1: int
    A2: int
    B1: int
    B2: int


@dataclass(frozen=True)
class BuiltLayout:
    datatype: Datatype
    count: int
    elem_size: int
    total_extent_elems: int
    spec: LayoutSpec


def derive_params(spec: LayoutSpec) -> Params:
    """Resolve A-derived strides according to the spec's variant."""
    a = spec.A
    if spec.variant == 1:
        if a < 2:
            raise BadParams(f"variant 1 requires A >= 2, got A={a}")
        p = Params(A=a, B=a + 2, A1=a - 1, A2=a + 1, B1=a + 1, B2=a + 3)
    elif spec.variant == 2:
        if a < 2 or a % 2:
            raise BadParams(f"variant 2 requires even A >= 2, got A={a}")
        p = Params(A=a, B=3 * a, A1=a // 2, A2=3 * a // 2, B1=2 * a, B2=4 * a)
    elif spec.variant == VARIANT_EXPLICIT:
        p = Params(
            A=a,
            B=spec.B if spec.B is not None else 0,
            A1=spec.A1 if spec.A1 is not None else 0,
            A2=spec.A2 if spec.A2 is not None else 0,
            B1=spec.B1 if spec.B1 is not None else 0,
            B2=spec.B2 if spec.B2 is not None else 0,
        )
    else:
        raise BadParams(f"unknown variant: {spec.variant!r}")
    # explicit overrides win over derived values for hybrid specs
    if spec.variant != VARIANT_EXPLICIT:
        overrides = {
            name: getattr(spec, name)
            for name in ("B", "A1", "A2", "B1", "B2")
            if getattr(spec, name) is not None
        }
        if overrides:
            p = replace(p, **overrides)
    if spec.id in (ALTERNATING_REPEATED, ALTERNATING_STRUCT):
        # the repeated family pins the second gap to the block it follows,
        # so consecutive pairs tile densely at the seam
        p = replace(p, B2=p.A2)
    return p


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise BadParams(msg)


def _divisible(n: int, k: int, what: str) -> int:
    _require(k > 0, f"{what}: unit size must be positive, got {k}")
    _require(n % k == 0, f"{what}: n={n} is not divisible by the unit of {k} elements")
    return n // k


def unit_elems(spec: LayoutSpec) -> int:
    """Elements consumed per block instance (the k of the layout family)."""
    p = derive_params(spec) if spec.id != CONTIGUOUS else None
    if spec.id == CONTIGUOUS:
        return 1
    if spec.id in (TILED, TILED_VECTOR):
        return p.A
    if spec.id in (BLOCK, BLOCK_INDEXED):
        return 2 * p.A
    if spec.id in (BUCKET, ALTERNATING, ALTERNATING_INDEXED, ALTERNATING_REPEATED, ALTERNATING_STRUCT):
        return p.A1 + p.A2
    if spec.id == TILED_STRUCT:
        s1 = spec.S1 if spec.S1 is not None else 1
        s2 = spec.S2 if spec.S2 is not None else 1
        return (s1 + s2) * p.A
    if spec.id == VECTOR_TILED:
        s = spec.S1 if spec.S1 is not None else 5
        return s * p.A
    if spec.id == CONTIG_SUBTYPE:
        return unit_elems(replace(spec, id=spec.subtype or ""))
    raise BadParams(f"no block unit for layout {spec.id!r}")


def _tiled_block(p: Params, es: int, base: Datatype) -> Datatype:
    _require(p.A >= 1, f"tiled requires A >= 1, got A={p.A}")
    _require(p.B > p.A, f"tiled requires B > A, got B={p.B}, A={p.A}")
    return Resized(0, p.B * es, Contiguous(p.A, base))


def _block_block(p: Params, es: int, base: Datatype) -> Datatype:
    _require(p.A >= 1, f"block requires A >= 1, got A={p.A}")
    _require(p.B1 >= p.A and p.B2 >= p.A, f"block requires B1,B2 >= A, got {p}")
    _require(p.B1 != p.B2, f"block requires B1 != B2, got B1=B2={p.B1}")
    return Resized(0, (p.B1 + p.B2) * es, IndexedBlock(p.A, (0, p.B1), base))


def _bucket_block(p: Params, es: int, base: Datatype) -> Datatype:
    _require(p.A1 >= 1 and p.A2 >= 1, f"bucket requires A1,A2 >= 1, got {p}")
    _require(p.A1 != p.A2, f"bucket requires A1 != A2, got A1=A2={p.A1}")
    _require(p.B >= max(p.A1, p.A2), f"bucket requires B >= max(A1,A2), got {p}")
    return Resized(0, 2 * p.B * es, Indexed(((p.A1, 0), (p.A2, p.B)), base))


def _alternating_block(p: Params, es: int, base: Datatype) -> Datatype:
    _require(p.A1 >= 1 and p.A2 >= 1, f"alternating requires A1,A2 >= 1, got {p}")
    _require(
        p.B1 >= p.A1 and p.B2 >= p.A2,
        f"alternating requires B1 >= A1 and B2 >= A2, got {p}",
    )
    return Resized(0, (p.B1 + p.B2) * es, Indexed(((p.A1, 0), (p.A2, p.B1)), base))


_BASIC_BLOCKS = {
    TILED: _tiled_block,
    BLOCK: _block_block,
    BUCKET: _bucket_block,
    ALTERNATING: _alternating_block,
    ALTERNATING_REPEATED: _alternating_block,
}


def make_tiled_heterogeneous(A: int, kinds: tuple[BaseKind, ...] | list[BaseKind]) -> Datatype:
    """One tile unit of A elements per kind, members at naturally aligned
    displacements, extent rounded up to the widest member alignment."""
    _require(A >= 1, f"tiled_het requires A >= 1, got A={A}")
    _require(len(kinds) > 0, "tiled_het requires at least one member kind")
    members = []
    cursor = 0
    for kind in kinds:
        align = kind.alignment
        cursor = (cursor + align - 1) // align * align
        members.append((A, cursor, Base(kind)))
        cursor += A * kind.size
    max_align = max(k.alignment for k in kinds)
    extent = (cursor + max_align - 1) // max_align * max_align
    struct: Datatype = Composite(tuple(members))
    if extent != commit(struct).extent:
        struct = Resized(0, extent, struct)
    return struct


def build(spec: LayoutSpec) -> BuiltLayout:
    """Construct the datatype and instance count for a layout spec.

    Rejects parameter sets whose element count does not divide into whole
    blocks; nothing is silently truncated.
    """
    es = spec.basetype.size
    base = Base(spec.basetype)
    _require(spec.n >= 1, f"{spec.id}: n must be positive, got {spec.n}")

    if spec.id == CONTIGUOUS:
        return BuiltLayout(base, spec.n, es, spec.n, spec)

    if spec.id == TILED_HET:
        kinds = spec.kinds or ()
        unit = make_tiled_heterogeneous(spec.A, kinds)
        payload = commit(unit).size
        count = _divisible(spec.n, payload, "tiled_het (n in bytes)")
        return BuiltLayout(unit, count, 1, count * commit(unit).extent, spec)

    p = derive_params(spec)

    if spec.id in (TILED, BLOCK, BUCKET, ALTERNATING, ALTERNATING_REPEATED):
        block = _BASIC_BLOCKS[spec.id](p, es, base)
        k = unit_elems(spec)
        count = _divisible(spec.n, k, spec.id)
        ext = commit(block).extent
        return BuiltLayout(block, count, es, count * ext // es, spec)

    if spec.id == CONTIG_SUBTYPE:
        _require(
            spec.subtype in (TILED, BLOCK, BUCKET, ALTERNATING),
            f"contig_subtype requires subtype in the basic families, got {spec.subtype!r}",
        )
        inner_spec = replace(spec, id=spec.subtype)
        inner = build(inner_spec)
        dt = Contiguous(inner.count, inner.datatype)
        return BuiltLayout(dt, 1, es, commit(dt).extent // es, spec)

    if spec.id == TILED_STRUCT:
        s1 = spec.S1 if spec.S1 is not None else 1
        s2 = spec.S2 if spec.S2 is not None else 1
        _require(s1 >= 1 and s2 >= 1, f"tiled_struct requires S1,S2 >= 1, got ({s1},{s2})")
        _require(p.B >= p.A >= 1, f"tiled_struct requires B >= A >= 1, got {p}")
        tile = Resized(0, p.B * es, Contiguous(p.A, base))
        dt = Composite(
            (
                (1, 0, Contiguous(s1, tile)),
                (1, s1 * p.B * es, Contiguous(s2, tile)),
            )
        )
        count = _divisible(spec.n, (s1 + s2) * p.A, "tiled_struct")
        return BuiltLayout(dt, count, es, count * commit(dt).extent // es, spec)

    if spec.id == TILED_VECTOR:
        _require(p.B > p.A >= 1, f"tiled_vector requires B > A >= 1, got {p}")
        blocks = _divisible(spec.n, p.A, "tiled_vector")
        dt = Resized(0, blocks * p.B * es, Vector(blocks, p.A, p.B, base))
        return BuiltLayout(dt, 1, es, commit(dt).extent // es, spec)

    if spec.id == VECTOR_TILED:
        s = spec.S1 if spec.S1 is not None else 5
        _require(s >= 1, f"vector_tiled requires S >= 1, got {s}")
        _require(p.B > p.A >= 1, f"vector_tiled requires B > A >= 1, got {p}")
        outer = _divisible(spec.n, s * p.A, "vector_tiled")
        dt = HVector(outer, 1, s * p.B * es, Vector(s, p.A, p.B, base))
        return BuiltLayout(dt, 1, es, commit(dt).extent // es, spec)

    if spec.id == BLOCK_INDEXED:
        _require(p.B1 >= p.A and p.B2 >= p.A, f"block_indexed requires B1,B2 >= A, got {p}")
        _require(p.B1 != p.B2, f"block_indexed requires B1 != B2, got B1=B2={p.B1}")
        pairs = _divisible(spec.n, 2 * p.A, "block_indexed")
        period = p.B1 + p.B2
        displs = tuple(
            i * period + offset for i in range(pairs) for offset in (0, p.B1)
        )
        dt = IndexedBlock(p.A, displs, base)
        return BuiltLayout(dt, 1, es, commit(dt).extent // es, spec)

    if spec.id == ALTERNATING_INDEXED:
        _require(
            p.B1 >= p.A1 and p.B2 >= p.A2,
            f"alternating_indexed requires B1 >= A1 and B2 >= A2, got {p}",
        )
        pairs = _divisible(spec.n, p.A1 + p.A2, "alternating_indexed")
        period = p.B1 + p.B2
        blocks = tuple(
            blk
            for i in range(pairs)
            for blk in ((p.A1, i * period), (p.A2, i * period + p.B1))
        )
        dt = Indexed(blocks, base)
        return BuiltLayout(dt, 1, es, commit(dt).extent // es, spec)

    if spec.id == ALTERNATING_STRUCT:
        # B2 == A2, so all interior blocks line up on a dense grid that a
        # single vector can describe; only the rim blocks need members
        k = p.A1 + p.A2
        c = _divisible(spec.n, k, "alternating_struct")
        period = p.B1 + p.A2
        members = [(1, 0, Contiguous(p.A1, base))]
        if c > 1:
            members.append((1, p.B1 * es, Vector(c - 1, k, period, base)))
        members.append((1, ((c - 1) * period + p.B1) * es, Contiguous(p.A2, base)))
        dt = Composite(tuple(members))
        return BuiltLayout(dt, 1, es, commit(dt).extent // es, spec)

    if spec.id in ROWCOL_IDS:
        _require(spec.A >= 1, f"rowcol requires A >= 1, got A={spec.A}")
        _require(spec.n >= spec.A, f"rowcol requires n >= A, got n={spec.n}, A={spec.A}")
        a, n = spec.A, spec.n
        if spec.id == ROWCOL_FULLY_INDEXED:
            displs = tuple(range(a)) + tuple(r * a for r in range(1, n - a + 1))
            dt: Datatype = IndexedBlock(1, displs, base)
        elif spec.id == ROWCOL_CONTIG_INDEXED:
            blocks = ((a, 0),) + tuple((1, r * a) for r in range(1, n - a + 1))
            dt = Indexed(blocks, base)
        else:
            members: list[tuple[int, int, Datatype]] = [(1, 0, Contiguous(a, base))]
            if n > a:
                members.append((1, a * es, Vector(n - a, 1, a, base)))
            dt = Composite(tuple(members))
        return BuiltLayout(dt, 1, es, commit(dt).extent // es, spec)

    raise BadParams(f"unknown layout id: {spec.id!r}")


def build_alternatives(spec: LayoutSpec) -> list[BuiltLayout]:
    """Reference description first, then every alternative of the family."""
    if spec.id == CONTIG_SUBTYPE:
        return [build(replace(spec, id=spec.subtype or "")), build(spec)]
    if spec.id == TILED_STRUCT:
        return [build(replace(spec, id=TILED)), build(spec)]
    if spec.id in (TILED_VECTOR, VECTOR_TILED):
        return [build(replace(spec, id=TILED)), build(spec)]
    if spec.id == BLOCK_INDEXED:
        return [build(replace(spec, id=BLOCK)), build(spec)]
    if spec.id == ALTERNATING_INDEXED:
        return [build(replace(spec, id=ALTERNATING)), build(spec)]
    if spec.id in (ALTERNATING_REPEATED, ALTERNATING_STRUCT):
        return [
            build(replace(spec, id=ALTERNATING_REPEATED)),
            build(replace(spec, id=ALTERNATING_STRUCT)),
        ]
    if spec.id in ROWCOL_IDS:
        return [build(replace(spec, id=i)) for i in ROWCOL_IDS]
    raise BadParams(f"layout {spec.id!r} has no alternative-description family")


# --- JSON codec ---------------------------------------------------------


def spec_to_json(spec: LayoutSpec) -> dict:
    out: dict = {"id": spec.id, "n": spec.n}
    if spec.A:
        out["A"] = spec.A
    out["basetype"] = spec.basetype.wire_name
    out["variant"] = spec.variant
    for name in ("B", "A1", "A2", "B1", "B2", "S1", "S2"):
        val = getattr(spec, name)
        if val is not None:
            out[name] = val
    if spec.subtype is not None:
        out["subtype"] = spec.subtype
    if spec.kinds is not None:
        out["kinds"] = [k.wire_name for k in spec.kinds]
    return out


def spec_from_json(obj: dict) -> LayoutSpec:
    if not isinstance(obj, dict) or "id" not in obj:
        raise BadParams(f"layout spec JSON must be an object with an 'id': {obj!r}")
    try:
        kinds = obj.get("kinds")
        return LayoutSpec(
            id=str(obj["id"]),
            n=int(obj["n"]),
            A=int(obj.get("A", 0)),
            basetype=BaseKind.from_name(obj.get("basetype", "int")),
            variant=obj.get("variant", 1),
            B=obj.get("B"),
            A1=obj.get("A1"),
            A2=obj.get("A2"),
            B1=obj.get("B1"),
            B2=obj.get("B2"),
            S1=obj.get("S1"),
            S2=obj.get("S2"),
            subtype=obj.get("subtype"),
            kinds=tuple(BaseKind.from_name(k) for k in kinds) if kinds else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BadParams(f"bad layout spec JSON: {exc}") from exc


def spec_dumps(spec: LayoutSpec) -> str:
    return json.dumps(spec_to_json(spec), separators=(",", ":"))


def spec_loads(text: str) -> LayoutSpec:
    return spec_from_json(json.loads(text))
