"""Sample spaces, events and their Boolean-ring structure.

Two kinds of event live here:

* :class:`FiniteEvent` - a subset of the ``n**N`` histories of a finite
  configuration space, stored as a bitset over the lexicographic
  enumeration of histories.
* :class:`HomogeneousEvent` / :class:`ContinuumEvent` - cylinder sets of
  particle trajectories, fixed by position regions at finitely many times,
  and finite disjoint unions of them.

Configuration indices are 0-based throughout.
"""

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import UsageError, ValidationError

__all__ = [
    "FiniteSampleSpace",
    "FiniteEvent",
    "ring_add",
    "ring_mul",
    "Region",
    "HomogeneousEvent",
    "ContinuumEvent",
    "pad_to_common_times",
    "homogeneous_intersection",
    "homogeneous_complement",
    "homogeneous_difference",
    "disjoint_decomposition",
]


# ---------------------------------------------------------------------------
# Finite sample spaces


@dataclass(frozen=True)
class FiniteSampleSpace:
    """All histories of ``n`` configurations observed at ``N`` times."""

    n: int
    N: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"configuration count must be a positive integer, got {self.n!r}")
        if int(self.N) != self.N or self.N < 2:
            raise ValidationError(f"time count must be an integer >= 2, got {self.N!r}")

    @property
    def size(self):
        return self.n**self.N

    def histories(self):
        """Iterate over histories in lexicographic order."""
        return itertools.product(range(self.n), repeat=self.N)

    @cached_property
    def configs(self):
        """``(size, N)`` integer array; row ``i`` is history number ``i``."""
        idx = np.indices((self.n,) * self.N).reshape(self.N, -1).T
        idx.setflags(write=False)
        return idx

    def check_history(self, history):
        h = tuple(int(c) for c in history)
        if len(h) != self.N:
            raise UsageError(f"history {history!r} has length {len(h)}, expected {self.N}")
        if any(c < 0 or c >= self.n for c in h):
            raise UsageError(f"history {history!r} has a configuration outside 0..{self.n - 1}")
        return h

    def index(self, history):
        idx = 0
        for c in self.check_history(history):
            idx = idx * self.n + c
        return idx

    def history(self, index):
        if not 0 <= index < self.size:
            raise UsageError(f"history index {index} out of range")
        out = []
        for _ in range(self.N):
            index, c = divmod(index, self.n)
            out.append(c)
        return tuple(reversed(out))


def _mask_from_bools(bools):
    bools = np.asarray(bools, dtype=bool)
    return int.from_bytes(np.packbits(bools, bitorder="little").tobytes(), "little")


@dataclass(frozen=True)
class FiniteEvent:
    """A set of histories, i.e. an element of the power-set event algebra.

    Supports ``+`` (symmetric difference), ``*`` (intersection), ``|``,
    ``&``, ``-`` (set difference) and ``~`` (complement).
    """

    space: FiniteSampleSpace
    mask: int = 0

    def __post_init__(self):
        if self.mask < 0 or self.mask >> self.space.size:
            raise ValidationError("event mask has bits outside the sample space")

    # constructors
    @classmethod
    def empty(cls, space):
        return cls(space, 0)

    @classmethod
    def full(cls, space):
        return cls(space, (1 << space.size) - 1)

    @classmethod
    def from_histories(cls, space, histories):
        mask = 0
        for h in histories:
            mask |= 1 << space.index(h)
        return cls(space, mask)

    @classmethod
    def from_indices(cls, space, indices):
        mask = 0
        for i in indices:
            if not 0 <= i < space.size:
                raise UsageError(f"history index {i} out of range")
            mask |= 1 << int(i)
        return cls(space, mask)

    @classmethod
    def from_bools(cls, space, bools):
        bools = np.asarray(bools, dtype=bool)
        if bools.shape != (space.size,):
            raise UsageError(f"membership array has shape {bools.shape}, expected ({space.size},)")
        return cls(space, _mask_from_bools(bools))

    @classmethod
    def cylinder(cls, space, constraints):
        """Histories whose configuration at slot ``k`` lies in ``constraints[k]``."""
        keep = np.ones(space.size, dtype=bool)
        for slot, allowed in constraints.items():
            if not 0 <= slot < space.N:
                raise UsageError(f"time slot {slot} out of range 0..{space.N - 1}")
            keep &= np.isin(space.configs[:, slot], list(allowed))
        return cls.from_bools(space, keep)

    # views
    def members(self):
        """Boolean membership array over the lexicographic enumeration."""
        size = self.space.size
        raw = self.mask.to_bytes((size + 7) // 8, "little")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
        return bits[:size].astype(bool)

    def indices(self):
        return np.flatnonzero(self.members())

    def histories(self):
        return [self.space.history(int(i)) for i in self.indices()]

    def __len__(self):
        return self.mask.bit_count()

    def __iter__(self):
        return iter(self.histories())

    def __contains__(self, history):
        return bool(self.mask >> self.space.index(history) & 1)

    def is_empty(self):
        return self.mask == 0

    def isdisjoint(self, other):
        _same_space(self, other)
        return self.mask & other.mask == 0

    def __repr__(self):
        return f"FiniteEvent(n={self.space.n}, N={self.space.N}, size={len(self)})"

    # ring operations
    def __add__(self, other):
        return ring_add(self, other)

    def __mul__(self, other):
        return ring_mul(self, other)

    def __or__(self, other):
        _same_space(self, other)
        return FiniteEvent(self.space, self.mask | other.mask)

    def __and__(self, other):
        return ring_mul(self, other)

    def __xor__(self, other):
        return ring_add(self, other)

    def __sub__(self, other):
        _same_space(self, other)
        return FiniteEvent(self.space, self.mask & ~other.mask)

    def __invert__(self):
        return FiniteEvent(self.space, ((1 << self.space.size) - 1) ^ self.mask)


def _same_space(a, b):
    if not isinstance(b, FiniteEvent) or a.space != b.space:
        raise UsageError("events belong to different sample spaces")


def ring_add(a, b):
    """Symmetric difference ``(a - b) | (b - a)``."""
    _same_space(a, b)
    return FiniteEvent(a.space, a.mask ^ b.mask)


def ring_mul(a, b):
    """Intersection."""
    _same_space(a, b)
    return FiniteEvent(a.space, a.mask & b.mask)


# ---------------------------------------------------------------------------
# Regions of R^d built from compact axis-aligned boxes

BOUNDED = "bounded"
COMPLEMENT = "complement"
FULL = "full"


def _box(box, d=None):
    b = tuple((float(lo), float(hi)) for lo, hi in box)
    if d is not None and len(b) != d:
        raise ValidationError(f"box {box!r} has dimension {len(b)}, expected {d}")
    for lo, hi in b:
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
            raise ValidationError(f"invalid box side ({lo}, {hi})")
    return b


def _box_volume(b):
    return float(np.prod([hi - lo for lo, hi in b]))


def _box_intersect(a, b):
    out = []
    for (alo, ahi), (blo, bhi) in zip(a, b):
        lo, hi = max(alo, blo), min(ahi, bhi)
        if hi <= lo:
            return None
        out.append((lo, hi))
    return tuple(out)


def _box_subtract(a, b):
    """``a - b`` as disjoint boxes (up to shared faces)."""
    if _box_intersect(a, b) is None:
        return [a]
    pieces = []
    rest = list(a)
    for k, ((lo, hi), (blo, bhi)) in enumerate(zip(a, b)):
        if blo > lo:
            piece = rest.copy()
            piece[k] = (lo, blo)
            pieces.append(tuple(piece))
        if bhi < hi:
            piece = rest.copy()
            piece[k] = (bhi, hi)
            pieces.append(tuple(piece))
        rest[k] = (max(lo, blo), min(hi, bhi))
    return pieces


def _boxes_subtract(boxes, cut):
    out = list(boxes)
    for c in cut:
        out = [p for b in out for p in _box_subtract(b, c)]
    return out


def _normalize_boxes(boxes, d):
    """Drop null boxes, remove overlaps, merge touching 1-d intervals, sort."""
    boxes = [b for b in boxes if _box_volume(b) > 0]
    if d == 1:
        ivs = sorted(b[0] for b in boxes)
        merged = []
        for lo, hi in ivs:
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        return tuple(((lo, hi),) for lo, hi in merged)
    disjoint = []
    for b in boxes:
        disjoint.extend(_boxes_subtract([b], disjoint))
    return tuple(sorted(b for b in disjoint if _box_volume(b) > 0))


@dataclass(frozen=True)
class Region:
    """A subset of R^d: a finite union of boxes, its complement, or everything.

    Boxes are closed, so two regions touching along a face intersect in a set
    of measure zero; such intersections are treated as empty.
    """

    kind: str
    boxes: tuple = ()
    d: int = 1

    def __post_init__(self):
        if self.kind not in (BOUNDED, COMPLEMENT, FULL):
            raise ValidationError(f"unknown region kind {self.kind!r}")
        if self.kind == FULL and self.boxes:
            raise ValidationError("a full region carries no boxes")
        object.__setattr__(self, "boxes", tuple(_box(b, self.d) for b in self.boxes))

    @classmethod
    def full(cls, d=1):
        return cls(FULL, (), d)

    @classmethod
    def empty(cls, d=1):
        return cls(BOUNDED, (), d)

    @classmethod
    def interval(cls, lo, hi):
        return cls(BOUNDED, (((lo, hi),),), 1)

    @classmethod
    def union(cls, intervals, d=1):
        """Bounded region from ``(lo, hi)`` pairs (``d == 1``) or boxes."""
        boxes = [((lo, hi),) for lo, hi in intervals] if d == 1 else list(intervals)
        return cls(BOUNDED, tuple(boxes), d).canonical()

    @classmethod
    def outside(cls, intervals, d=1):
        """Complement of a bounded union."""
        return cls.union(intervals, d).complement()

    def canonical(self):
        if self.kind == FULL:
            return self
        boxes = _normalize_boxes(self.boxes, self.d)
        if self.kind == COMPLEMENT and not boxes:
            return Region.full(self.d)
        return Region(self.kind, boxes, self.d)

    def complement(self):
        if self.kind == FULL:
            return Region.empty(self.d)
        if self.kind == BOUNDED:
            return Region(COMPLEMENT, self.boxes, self.d).canonical()
        return Region(BOUNDED, self.boxes, self.d).canonical()

    @property
    def is_bounded(self):
        return self.kind == BOUNDED

    def is_empty(self):
        return self.kind == BOUNDED and not _normalize_boxes(self.boxes, self.d)

    def is_full(self):
        return self.canonical().kind == FULL

    def measure(self):
        if self.kind != BOUNDED:
            return float("inf")
        return sum(_box_volume(b) for b in _normalize_boxes(self.boxes, self.d))

    def intersect(self, other):
        if self.d != other.d:
            raise UsageError("regions of different dimension")
        if self.kind == FULL:
            return other.canonical()
        if other.kind == FULL:
            return self.canonical()
        if self.kind == BOUNDED and other.kind == BOUNDED:
            boxes = [c for a in self.boxes for b in other.boxes if (c := _box_intersect(a, b))]
            return Region(BOUNDED, tuple(boxes), self.d).canonical()
        if self.kind == COMPLEMENT and other.kind == COMPLEMENT:
            return Region(COMPLEMENT, self.boxes + other.boxes, self.d).canonical()
        bounded, comp = (self, other) if self.kind == BOUNDED else (other, self)
        return Region(BOUNDED, tuple(_boxes_subtract(bounded.boxes, comp.boxes)), self.d).canonical()

    def contains(self, points):
        """Vectorised membership for points of shape ``(k,)`` (d=1) or ``(k, d)``."""
        pts = np.asarray(points, dtype=float)
        if self.d == 1 and pts.ndim == 1:
            pts = pts[:, None]
        if self.kind == FULL:
            return np.ones(pts.shape[0], dtype=bool)
        inside = np.zeros(pts.shape[0], dtype=bool)
        for b in self.boxes:
            lo = np.array([s[0] for s in b])
            hi = np.array([s[1] for s in b])
            inside |= np.all((pts >= lo) & (pts <= hi), axis=1)
        return inside if self.kind == BOUNDED else ~inside

    def breakpoints(self):
        """Interval endpoints (1-d), used to align quadrature panels."""
        if self.d != 1:
            raise UsageError("breakpoints are defined for 1-d regions only")
        return sorted({x for b in self.boxes for x in b[0]})

    def intervals(self):
        """1-d convenience: the ``(lo, hi)`` pairs of the boxes."""
        return [b[0] for b in self.boxes]

    def __repr__(self):
        if self.kind == FULL:
            return "Region(full)"
        body = " U ".join(
            "x".join(f"[{lo:g},{hi:g}]" for lo, hi in b) for b in self.boxes
        ) or "{}"
        return f"Region({'~' if self.kind == COMPLEMENT else ''}{body})"


# ---------------------------------------------------------------------------
# Homogeneous (cylinder) events


@dataclass(frozen=True)
class HomogeneousEvent:
    """Trajectories ``x(t)`` with ``x(times[k])`` in ``regions[k]`` for all k."""

    times: tuple
    regions: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        regions = tuple(self.regions)
        if len(times) != len(regions) or len(times) < 2:
            raise ValidationError("an event needs at least two times and one region per time")
        if times[0] != 0.0:
            raise ValidationError(f"first time must be 0, got {times[0]}")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError(f"times must be strictly increasing: {times}")
        if len({r.d for r in regions}) != 1:
            raise ValidationError("all regions of an event must share a dimension")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "regions", regions)

    @classmethod
    def unrestricted(cls, T, d=1):
        """The whole sample space up to truncation time ``T``."""
        return cls((0.0, T), (Region.full(d), Region.full(d)))

    @property
    def T(self):
        return self.times[-1]

    @property
    def d(self):
        return self.regions[0].d

    @property
    def N(self):
        return len(self.times)

    def is_empty(self):
        return any(r.is_empty() for r in self.regions)

    def canonical(self):
        """Representation-independent form.

        Interior ``Full`` slots are removed; an empty event collapses to
        ``((0, T), (empty, empty))``.
        """
        if self.is_empty():
            return HomogeneousEvent((0.0, self.T), (Region.empty(self.d),) * 2)
        regs = [r.canonical() for r in self.regions]
        keep = [0] + [k for k in range(1, len(regs) - 1) if not regs[k].is_full()] + [len(regs) - 1]
        return HomogeneousEvent(tuple(self.times[k] for k in keep), tuple(regs[k] for k in keep))

    def same_set(self, other):
        return self.canonical() == other.canonical()

    def pad(self, times):
        """Re-express on a finer time-tuple, inserting ``Full`` slots."""
        times = tuple(sorted(set(float(t) for t in times)))
        if not set(self.times) <= set(times) or times[-1] != self.T:
            raise UsageError("padding times must contain the event's times and end at T")
        lookup = dict(zip(self.times, self.regions))
        full = Region.full(self.d)
        return HomogeneousEvent(times, tuple(lookup.get(t, full) for t in times))

    def contains(self, times, positions):
        """Membership of sampled trajectories.

        ``positions`` has shape ``(k, len(times))`` (d=1) or
        ``(k, len(times), d)``; ``times`` must include every event time.
        """
        times = [float(t) for t in times]
        pos = np.asarray(positions, dtype=float)
        if pos.ndim == 2:
            pos = pos[:, :, None]
        where = {t: i for i, t in enumerate(times)}
        ok = np.ones(pos.shape[0], dtype=bool)
        for t, r in zip(self.times, self.regions):
            if t not in where:
                raise UsageError(f"trajectory samples lack time {t}")
            ok &= r.contains(pos[:, where[t], :])
        return ok

    def __repr__(self):
        slots = ", ".join(f"{t:g}:{r!r}" for t, r in zip(self.times, self.regions))
        return f"HomogeneousEvent({slots})"


def pad_to_common_times(a, b):
    """Re-express ``a`` and ``b`` on their merged time-tuple."""
    if a.T != b.T:
        raise UsageError(f"events end at different truncation times {a.T} and {b.T}")
    if a.d != b.d:
        raise UsageError("events live in different dimensions")
    times = sorted(set(a.times) | set(b.times))
    return a.pad(times), b.pad(times)


def homogeneous_intersection(a, b):
    a, b = pad_to_common_times(a, b)
    return HomogeneousEvent(a.times, tuple(x.intersect(y) for x, y in zip(a.regions, b.regions)))


def homogeneous_complement(a):
    """Complement of a homogeneous event as mutually disjoint homogeneous events.

    Every pattern of "slot k complemented or not", except the all-original
    one, gives one piece; pieces with an empty slot are dropped, so at most
    ``2**N - 1`` remain.
    """
    comps = [r.complement() for r in a.regions]
    pieces = []
    for pattern in itertools.product((False, True), repeat=a.N):
        if not any(pattern):
            continue
        regs = tuple(c if flip else r for flip, r, c in zip(pattern, a.regions, comps))
        ev = HomogeneousEvent(a.times, regs)
        if not ev.is_empty():
            pieces.append(ev)
    return pieces


def homogeneous_difference(a, b):
    """``a - b`` as a list of disjoint homogeneous events."""
    out = []
    for piece in homogeneous_complement(b):
        c = homogeneous_intersection(a, piece)
        if not c.is_empty():
            out.append(c)
    return out


@dataclass(frozen=True)
class ContinuumEvent:
    """A finite union of mutually disjoint homogeneous events."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if parts:
            Ts = {p.T for p in parts}
            if len(Ts) != 1:
                raise UsageError(f"parts end at different truncation times {sorted(Ts)}")
            times = sorted(set().union(*(p.times for p in parts)))
            parts = tuple(p.pad(times) for p in parts)
        object.__setattr__(self, "parts", parts)

    @classmethod
    def of(cls, *events):
        """Union of arbitrary (possibly overlapping) events."""
        hom = []
        for e in events:
            hom.extend(e.parts if isinstance(e, ContinuumEvent) else [e])
        return disjoint_decomposition(hom)

    @property
    def T(self):
        return self.parts[0].T if self.parts else None

    @property
    def times(self):
        return self.parts[0].times if self.parts else ()

    def is_empty(self):
        return all(p.is_empty() for p in self.parts)

    def contains(self, times, positions):
        hits = [p.contains(times, positions) for p in self.parts]
        if not hits:
            return np.zeros(np.asarray(positions).shape[0], dtype=bool)
        return np.any(hits, axis=0)

    def is_disjoint_family(self):
        """Check pairwise emptiness of part intersections exactly."""
        for p, q in itertools.combinations(self.parts, 2):
            if not homogeneous_intersection(p, q).is_empty():
                return False
        return True

    def canonical(self):
        parts = [p.canonical() for p in self.parts if not p.is_empty()]
        return tuple(sorted(parts, key=repr))

    def union(self, other):
        return ContinuumEvent.of(self, other)

    def intersection(self, other):
        parts = []
        for p in _parts(self):
            for q in _parts(other):
                c = homogeneous_intersection(p, q)
                if not c.is_empty():
                    parts.append(c)
        return _continuum(parts, self)

    def difference(self, other):
        remaining = list(_parts(self))
        for q in _parts(other):
            remaining = [r for p in remaining for r in homogeneous_difference(p, q)]
        return _continuum(remaining, self)

    def complement(self):
        return ContinuumEvent((HomogeneousEvent.unrestricted(self.T, self.parts[0].d),)).difference(self)

    def __add__(self, other):
        return self.difference(other).union(_as_continuum(other).difference(self))

    def __mul__(self, other):
        return self.intersection(other)

    __and__ = __mul__

    def __or__(self, other):
        return self.union(other)

    def __sub__(self, other):
        return self.difference(other)


def _parts(e):
    return e.parts if isinstance(e, ContinuumEvent) else (e,)


def _empty_event(T, d):
    return HomogeneousEvent((0.0, T), (Region.empty(d),) * 2)


def _continuum(parts, like):
    # keep T and d around when every part cancels
    first = _parts(like)[0]
    return ContinuumEvent(tuple(parts) or (_empty_event(first.T, first.d),))


def _as_continuum(e):
    return e if isinstance(e, ContinuumEvent) else ContinuumEvent((e,))


def disjoint_decomposition(parts):
    """Rewrite a finite union of homogeneous events as a disjoint union.

    Follows ``a | b | c = a + (1 + a) b + (1 + a)(1 + b) c``: each new event
    is stripped of everything already covered before it is appended.
    """
    parts = list(parts)
    if not parts:
        raise UsageError("disjoint_decomposition needs at least one event")
    if len({p.T for p in parts}) != 1:
        raise UsageError(f"events end at different truncation times {sorted({p.T for p in parts})}")
    out = []
    for e in parts:
        remaining = [] if e.is_empty() else [e]
        for prev in out:
            remaining = [r for piece in remaining for r in homogeneous_difference(piece, prev)]
            if not remaining:
                break
        out.extend(remaining)
    if not out:
        out = [_empty_event(parts[0].T, parts[0].d)]
    return ContinuumEvent(tuple(out))
