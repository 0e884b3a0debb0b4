"""Rewrites a datatype tree into a cheaper description of the same layout.

Every rewrite preserves the node's payload segments and its (lb, ub)
bounds exactly, so a rewritten subtree can sit inside any enclosing
constructor without shifting anything.  The driver applies the passes in a
fixed order to a fixpoint:

  fold-resized, collapse-dense, fuse-nested-vectors, struct-to-indexed,
  indexed-to-block, regular-stride-detection, adjacent-block-merge

Cost is measured as canonical segments per instance plus description size,
where the description size charges one unit per node plus one per stored
list entry (a displacement table of length n costs n, which is what makes
explicitly indexed descriptions expensive).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .typecore import (
    Base,
    Composite,
    Contiguous,
    Datatype,
    HVector,
    Indexed,
    IndexedBlock,
    Resized,
    Vector,
    commit,
    flatten,
)

_MAX_ITERATIONS = 32

# canonical preference for equal-cost descriptions, narrower first
_KIND_RANK = {
    Base: 0,
    Contiguous: 1,
    Vector: 2,
    HVector: 3,
    IndexedBlock: 4,
    Indexed: 5,
    Composite: 6,
    Resized: 7,
}


@dataclass(frozen=True)
class NormalizationReport:
    input: Datatype
    output: Datatype
    passes: tuple[str, ...]
    iterations: int
    input_cost: int
    output_cost: int
    changed: bool


def descr_size(t: Datatype) -> int:
    """Description size: one per node plus one per stored list entry."""
    if isinstance(t, Base):
        return 1
    if isinstance(t, (Contiguous, Vector, HVector, Resized)):
        return 1 + descr_size(t.inner)
    if isinstance(t, Indexed):
        return 1 + len(t.blocks) + descr_size(t.inner)
    if isinstance(t, IndexedBlock):
        return 1 + len(t.displs) + descr_size(t.inner)
    if isinstance(t, Composite):
        return 1 + sum(1 + descr_size(m) for _, _, m in t.members)
    raise TypeError(f"not a datatype node: {t!r}")


def cost(t: Datatype) -> int:
    """Canonical segments of one instance plus description size."""
    return len(flatten(t, 1).offsets) + descr_size(t)


def _bounds(t: Datatype) -> tuple[int, int]:
    ct = commit(t)
    return ct.lb, ct.ub


def _wrap_bounds(node: Datatype, lb: int, ub: int) -> Datatype:
    """Give `node` exactly the bounds (lb, ub), folding nested resizes."""
    if _bounds(node) == (lb, ub):
        return node
    if isinstance(node, Resized):
        node = node.inner
    return Resized(lb, ub - lb, node)


# --- passes -------------------------------------------------------------
# Each takes one node whose children are already rewritten and returns a
# replacement or None.  Replacements must keep payload and bounds intact.


def _fold_resized(t: Datatype) -> Datatype | None:
    if not isinstance(t, Resized):
        return None
    if isinstance(t.inner, Resized):
        return Resized(t.lb, t.extent, t.inner.inner)
    lb, ub = _bounds(t.inner)
    if t.lb == lb and t.extent == ub - lb:
        return t.inner
    return None


def _collapse_dense(t: Datatype) -> Datatype | None:
    if isinstance(t, Contiguous):
        if t.count == 1:
            return t.inner
        if isinstance(t.inner, Contiguous):
            return Contiguous(t.count * t.inner.count, t.inner.inner)
        return None
    if isinstance(t, Vector):
        if t.count == 1 or t.stride == t.blocklen:
            return Contiguous(t.count * t.blocklen, t.inner)
        return None
    if isinstance(t, HVector):
        lb, ub = _bounds(t.inner)
        ext = ub - lb
        if t.count == 1:
            return Contiguous(t.blocklen, t.inner)
        if ext > 0 and t.stride_bytes % ext == 0:
            return Vector(t.count, t.blocklen, t.stride_bytes // ext, t.inner)
        return None
    return None


def _fuse_nested_vectors(t: Datatype) -> Datatype | None:
    if not isinstance(t, (Vector, HVector)) or t.blocklen != 1:
        return None
    inner = t.inner
    if not isinstance(inner, (Vector, HVector)):
        return None
    if inner.count < 1 or inner.blocklen < 1:
        return None
    base_lb, base_ub = _bounds(inner.inner)
    base_ext = base_ub - base_lb
    inner_ext = commit(inner).extent
    inner_stride_bytes = (
        inner.stride_bytes if isinstance(inner, HVector) else inner.stride * base_ext
    )
    outer_stride_bytes = (
        t.stride_bytes if isinstance(t, HVector) else t.stride * inner_ext
    )
    if inner_stride_bytes < 0 or outer_stride_bytes < 0:
        return None
    # fusable exactly when the outer step lands where the inner pattern
    # would have continued
    if outer_stride_bytes != inner.count * inner_stride_bytes:
        return None
    if isinstance(inner, HVector):
        return HVector(t.count * inner.count, inner.blocklen, inner.stride_bytes, inner.inner)
    return Vector(t.count * inner.count, inner.blocklen, inner.stride, inner.inner)


def _strip_to_common(member: Datatype, u: Datatype | None) -> tuple[Datatype, int] | None:
    """View a member as `c` consecutive instances of a unit type."""
    if isinstance(member, Contiguous):
        unit, mult = member.inner, member.count
    else:
        unit, mult = member, 1
    if u is not None and unit != u:
        return None
    return unit, mult


def _struct_to_indexed(t: Datatype) -> Datatype | None:
    if not isinstance(t, Composite):
        return None
    members = [(c, d, m) for c, d, m in t.members if c > 0]
    if not members:
        return None
    if len(members) == 1 and members[0][1] == 0:
        c, _, m = members[0]
        return Contiguous(c, m)
    unit: Datatype | None = None
    blocks: list[tuple[int, int]] = []
    for c, d, m in members:
        stripped = _strip_to_common(m, unit)
        if stripped is None:
            return None
        unit = stripped[0]
        blocks.append((c * stripped[1], d))
    lb, ub = _bounds(unit)
    ext = ub - lb
    if ext <= 0:
        return None
    if any(d % ext for _, d in blocks):
        return None
    candidate = Indexed(tuple((bl, d // ext) for bl, d in blocks), unit)
    if descr_size(candidate) > descr_size(t):
        return None
    return candidate


def _indexed_to_block(t: Datatype) -> Datatype | None:
    if not isinstance(t, Indexed) or not t.blocks:
        return None
    lens = {bl for bl, _ in t.blocks}
    if len(lens) != 1:
        return None
    bl = lens.pop()
    return IndexedBlock(bl, tuple(d for _, d in t.blocks), t.inner)


def _regular_stride(t: Datatype) -> Datatype | None:
    """Arithmetic displacements become a vector; displacements periodic with
    period p >= 2 become a contiguous run of a p-block unit."""
    if isinstance(t, IndexedBlock):
        pairs = [(t.blocklen, d) for d in t.displs]
    elif isinstance(t, Indexed):
        pairs = list(t.blocks)
    else:
        return None
    c = len(pairs)
    if c < 3 or pairs[0][1] != 0:
        return None
    lens = np.fromiter((bl for bl, _ in pairs), dtype=np.int64, count=c)
    displs = np.fromiter((d for _, d in pairs), dtype=np.int64, count=c)

    if len(np.unique(lens)) == 1:
        step = int(displs[1] - displs[0])
        if bool((np.diff(displs) == step).all()):
            return Vector(c, int(lens[0]), step, t.inner)

    in_lb, in_ub = _bounds(t)
    for period in (2, 3, 4):
        if c % period or c < 2 * period + 1:
            continue
        shift = int(displs[period] - displs[0])
        if not bool(
            (lens[period:] == lens[:-period]).all()
            and (displs[period:] - displs[:-period] == shift).all()
        ):
            continue
        prefix = tuple(pairs[:period])
        if isinstance(t, IndexedBlock):
            unit: Datatype = IndexedBlock(t.blocklen, tuple(d for _, d in prefix), t.inner)
        else:
            unit = Indexed(prefix, t.inner)
        base_lb, base_ub = _bounds(t.inner)
        base_ext = base_ub - base_lb
        unit = _wrap_bounds(unit, 0, shift * base_ext)
        candidate = _wrap_bounds(Contiguous(c // period, unit), in_lb, in_ub)
        if descr_size(candidate) < descr_size(t):
            return candidate
    return None


def _merge_adjacent_blocks(t: Datatype) -> Datatype | None:
    if isinstance(t, IndexedBlock):
        pairs = [(t.blocklen, d) for d in t.displs if t.blocklen > 0]
    elif isinstance(t, Indexed):
        pairs = [(bl, d) for bl, d in t.blocks if bl > 0]
    else:
        return None
    if not pairs:
        return None
    merged = [pairs[0]]
    for bl, d in pairs[1:]:
        last_bl, last_d = merged[-1]
        if d == last_d + last_bl:
            merged[-1] = (last_bl + bl, last_d)
        else:
            merged.append((bl, d))

    if len(merged) == 1 and merged[0][1] == 0:
        candidate: Datatype = Contiguous(merged[0][0], t.inner)
    elif len(set(bl for bl, _ in merged)) == 1:
        candidate = IndexedBlock(merged[0][0], tuple(d for _, d in merged), t.inner)
    else:
        candidate = Indexed(tuple(merged), t.inner)
    if candidate == t:
        return None
    after, before = descr_size(candidate), descr_size(t)
    if after > before:
        return None
    if after == before and _KIND_RANK[type(candidate)] >= _KIND_RANK[type(t)]:
        return None
    return candidate


_PASSES = (
    ("fold-resized", _fold_resized),
    ("collapse-dense", _collapse_dense),
    ("fuse-nested-vectors", _fuse_nested_vectors),
    ("struct-to-indexed", _struct_to_indexed),
    ("indexed-to-block", _indexed_to_block),
    ("regular-stride", _regular_stride),
    ("merge-adjacent", _merge_adjacent_blocks),
)


def _rewrite(t: Datatype, fn) -> tuple[Datatype, bool]:
    """Apply `fn` bottom-up; identical subtrees are reused, not rebuilt."""
    if isinstance(t, Base):
        node, changed = t, False
    elif isinstance(t, (Contiguous, Vector, HVector, Indexed, IndexedBlock, Resized)):
        inner, changed = _rewrite(t.inner, fn)
        if not changed:
            node = t
        elif isinstance(t, Contiguous):
            node = Contiguous(t.count, inner)
        elif isinstance(t, Vector):
            node = Vector(t.count, t.blocklen, t.stride, inner)
        elif isinstance(t, HVector):
            node = HVector(t.count, t.blocklen, t.stride_bytes, inner)
        elif isinstance(t, Indexed):
            node = Indexed(t.blocks, inner)
        elif isinstance(t, IndexedBlock):
            node = IndexedBlock(t.blocklen, t.displs, inner)
        else:
            node = Resized(t.lb, t.extent, inner)
    elif isinstance(t, Composite):
        members = []
        changed = False
        for c, d, m in t.members:
            new_m, ch = _rewrite(m, fn)
            members.append((c, d, new_m))
            changed = changed or ch
        node = Composite(tuple(members)) if changed else t
    else:
        raise TypeError(f"not a datatype node: {t!r}")
    replacement = fn(node)
    if replacement is None:
        return node, changed
    return replacement, True


def normalize(t: Datatype) -> NormalizationReport:
    """Drive the passes to a fixpoint and report what happened."""
    commit(t)  # validate before rewriting
    current = t
    applied: list[str] = []
    iterations = 0
    any_change = False
    for _ in range(_MAX_ITERATIONS):
        iterations += 1
        round_changed = False
        for name, fn in _PASSES:
            current, changed = _rewrite(current, fn)
            if changed:
                applied.append(name)
                round_changed = True
        any_change = any_change or round_changed
        if not round_changed:
            break
    in_cost = cost(t)
    out_cost = cost(current)
    return NormalizationReport(
        input=t,
        output=current,
        passes=tuple(applied),
        iterations=iterations,
        input_cost=in_cost,
        output_cost=out_cost,
        changed=current is not t and current != t,
    )


def normalize_type(t: Datatype) -> Datatype:
    return normalize(t).output
