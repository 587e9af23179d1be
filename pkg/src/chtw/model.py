"""Domain types for CHTW / CHTW(R) nets and structural validation.

A net is made of C-branes (resource containers), T-branes (transitions),
H-carriers (threshold arcs C -> T), W-carriers (transformation arcs T -> C)
and two control maps: ``alpha`` (C-brane resource -> thresholds of a target
C-brane) and ``gamma`` (C-brane resource -> rate of a target T-brane).

Every distributed quantity is a :class:`Field`, a dense row-major array of
cell-center samples over a :class:`Space`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

MAX_CELLS = 2 ** 24

Origin = Optional[Tuple[int, int]]


@dataclass(frozen=True)
class Axis:
    min: float
    max: float
    cells: int

    @property
    def width(self) -> float:
        return (self.max - self.min) / self.cells

    def centers(self) -> np.ndarray:
        return self.min + (np.arange(self.cells) + 0.5) * self.width


@dataclass(frozen=True)
class Space:
    """A named n-dimensional box discretized into ``cells`` per axis."""

    id: str
    axes: Tuple[Axis, ...]
    max_cells: int = field(default=MAX_CELLS, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not self.axes:
            raise ValueError(f"space {self.id}: dims must be >= 1")
        for n, ax in enumerate(self.axes):
            if not ax.max > ax.min:
                raise ValueError(f"space {self.id}: axis {n} needs max > min")
            if ax.cells < 1:
                raise ValueError(f"space {self.id}: axis {n} needs cells >= 1")
        if self.size > self.max_cells:
            raise ValueError(
                f"space {self.id}: {self.size} cells exceeds limit {self.max_cells}"
            )

    @property
    def dims(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(ax.cells for ax in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def cell_centers(self) -> np.ndarray:
        """Return an array of shape (size, dims) of cell centers, row-major."""
        grids = np.meshgrid(*[ax.centers() for ax in self.axes], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def zeros(self) -> Field:
        return Field(self, np.zeros(self.size))

    def constant(self, value: float) -> Field:
        return Field(self, np.full(self.size, float(value)))


def scalar_space(id: str = "S") -> Space:
    """One-cell space; gives classic place/transition behaviour."""
    return Space(id, (Axis(0.0, 1.0, 1),))


class Field:
    """Dense real-valued array over the cells of a space.

    Values are copied, flattened to float64 and frozen. Equality is bitwise
    on the values (so ``0.0 != -0.0`` is *not* distinguished, NaN never
    appears).
    """

    __slots__ = ("space", "values")
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, space: Space, values):
        arr = np.array(values, dtype=np.float64).reshape(-1)
        if arr.size != space.size:
            raise ValueError(
                f"field on space {space.id} needs {space.size} values, got {arr.size}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"field on space {space.id} has non-finite values")
        arr.setflags(write=False)
        self.space = space
        self.values = arr
        self._check()

    def _check(self):
        pass

    def is_constant(self) -> bool:
        v = self.values
        return bool(np.all(v == v[0]))

    def __eq__(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"{type(self).__name__}({self.space.id}, {self.values!r})"


class BinaryField(Field):
    __slots__ = ()

    def _check(self):
        if not np.all((self.values == 0.0) | (self.values == 1.0)):
            raise ValueError("binary field entries must be 0 or 1")


class OpKind(str, enum.Enum):
    GAIN = "gain"
    CONST_DEPOSIT = "constdep"
    LINEAR_KERNEL = "kernel"


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """Declared transformation used by W-carriers and control entries.

    * ``gain``: ``g * input`` pointwise, same input and output space.
    * ``constdep``: field ``deposit`` on the output space, scaled by 1 if any
      input cell is > 0 (``mode="any"``) or by the input mean (``mode="mean"``).
    * ``kernel``: ``K @ input`` with ``K`` given as (row, col, value) triplets,
      shape ``shape = (output cells, input cells)``.
    """

    kind: OpKind
    gain: float = 0.0
    deposit: Optional[Field] = None
    mode: str = "any"
    triplets: Tuple[Tuple[int, int, float], ...] = ()
    shape: Tuple[int, int] = (0, 0)

    @classmethod
    def make_gain(cls, g: float) -> OperatorSpec:
        return cls(OpKind.GAIN, gain=float(g))

    @classmethod
    def make_const_deposit(cls, deposit: Field, mode: str = "any") -> OperatorSpec:
        if mode not in ("any", "mean"):
            raise ValueError(f"const-deposit mode must be 'any' or 'mean', not {mode!r}")
        return cls(OpKind.CONST_DEPOSIT, deposit=deposit, mode=mode)

    @classmethod
    def make_kernel(cls, triplets, shape: Tuple[int, int]) -> OperatorSpec:
        trip = tuple(sorted((int(r), int(c), float(v)) for r, c, v in triplets))
        seen = set()
        for r, c, v in trip:
            if not (0 <= r < shape[0] and 0 <= c < shape[1]):
                raise ValueError(f"kernel entry ({r}, {c}) outside shape {shape}")
            if (r, c) in seen:
                raise ValueError(f"duplicate kernel entry ({r}, {c})")
            if not np.isfinite(v):
                raise ValueError(f"kernel entry ({r}, {c}) is not finite")
            seen.add((r, c))
        return cls(OpKind.LINEAR_KERNEL, triplets=trip, shape=(int(shape[0]), int(shape[1])))

    def __eq__(self, other):
        if not isinstance(other, OperatorSpec):
            return NotImplemented
        if self.kind != other.kind:
            return False
        if self.kind is OpKind.GAIN:
            return self.gain == other.gain
        if self.kind is OpKind.CONST_DEPOSIT:
            return self.mode == other.mode and self.deposit == other.deposit
        return self.shape == other.shape and self.triplets == other.triplets

    __hash__ = None  # type: ignore[assignment]


@dataclass(eq=False)
class CBrane:
    id: str
    space: Space
    mark: Field
    origin: Origin = None

    def __eq__(self, other):
        return (
            isinstance(other, CBrane)
            and (self.id, self.space) == (other.id, other.space)
            and self.mark == other.mark
        )


@dataclass(eq=False)
class TBrane:
    id: str
    space: Space
    rate: Field
    origin: Origin = None

    def __eq__(self, other):
        return (
            isinstance(other, TBrane)
            and (self.id, self.space) == (other.id, other.space)
            and self.rate == other.rate
        )


@dataclass(eq=False)
class HCarrier:
    source: str
    target: str
    threshold: Field
    origin: Origin = None

    def __eq__(self, other):
        return (
            isinstance(other, HCarrier)
            and (self.source, self.target) == (other.source, other.target)
            and self.threshold == other.threshold
        )


@dataclass(eq=False)
class WCarrier:
    source: str
    target: str
    op: OperatorSpec
    origin: Origin = None

    def __eq__(self, other):
        return (
            isinstance(other, WCarrier)
            and (self.source, self.target) == (other.source, other.target)
            and self.op == other.op
        )


@dataclass
class ControlEntry:
    source: str
    target: str
    op: OperatorSpec
    origin: Origin = field(default=None, compare=False)


@dataclass
class ControlMatrices:
    """``alpha``: (source C, target C) entries; ``gamma``: (source C, target T).

    Lists keep declaration order, which fixes the summation order.
    """

    alpha: List[ControlEntry] = field(default_factory=list)
    gamma: List[ControlEntry] = field(default_factory=list)

    def __bool__(self):
        return bool(self.alpha or self.gamma)


@dataclass
class Net:
    spaces: Dict[str, Space] = field(default_factory=dict)
    cbranes: Dict[str, CBrane] = field(default_factory=dict)
    tbranes: Dict[str, TBrane] = field(default_factory=dict)
    hcarriers: List[HCarrier] = field(default_factory=list)
    wcarriers: List[WCarrier] = field(default_factory=list)
    controls: ControlMatrices = field(default_factory=ControlMatrices)
    mode: str = "chtwr"

    @property
    def c_ids(self) -> List[str]:
        return list(self.cbranes)

    @property
    def t_ids(self) -> List[str]:
        return list(self.tbranes)

    def hcarrier(self, c: str, t: str) -> Optional[HCarrier]:
        for h in self.hcarriers:
            if h.source == c and h.target == t:
                return h
        return None

    def inputs(self, t: str) -> List[str]:
        """C-branes feeding T-brane ``t``, in C declaration order."""
        fed = {h.source for h in self.hcarriers if h.target == t}
        return [c for c in self.cbranes if c in fed]


# --- validation -------------------------------------------------------------


class Level(enum.IntEnum):
    WARNING = 1
    ERROR = 2


@dataclass(frozen=True)
class Diagnostic:
    level: Level
    message: str
    line: int = 0
    col: int = 0

    @property
    def is_error(self) -> bool:
        return self.level is Level.ERROR

    def format(self) -> str:
        return f"{self.level.name} {self.line}:{self.col} {self.message}"


class ModelError(Exception):
    """Raised when a model cannot be loaded or is structurally invalid."""

    def __init__(self, diagnostics: List[Diagnostic]):
        self.diagnostics = list(diagnostics)
        errors = [d for d in self.diagnostics if d.is_error] or self.diagnostics
        super().__init__("; ".join(d.format() for d in errors[:5]))


def _diag(level, msg, origin: Origin) -> Diagnostic:
    line, col = origin if origin else (0, 0)
    return Diagnostic(level, msg, line, col)


def _op_space_errors(op: OperatorSpec, inp: Space, out: Space) -> List[str]:
    if op.kind is OpKind.GAIN:
        if inp != out:
            return [f"gain operator needs identical spaces, got {inp.id} -> {out.id}"]
    elif op.kind is OpKind.CONST_DEPOSIT:
        if op.deposit is None or op.deposit.space != out:
            return [f"const-deposit field must live on output space {out.id}"]
    elif op.shape != (out.size, inp.size):
        return [
            f"kernel shape {op.shape[0]}x{op.shape[1]} does not match "
            f"{out.id} ({out.size} cells) x {inp.id} ({inp.size} cells)"
        ]
    return []


def validate(net: Net) -> List[Diagnostic]:
    """Check every structural invariant of ``net``; never raises."""
    out: List[Diagnostic] = []
    err = lambda msg, o=None: out.append(_diag(Level.ERROR, msg, o))  # noqa: E731
    warn = lambda msg, o=None: out.append(_diag(Level.WARNING, msg, o))  # noqa: E731

    for cid, c in net.cbranes.items():
        if c.space.id not in net.spaces:
            err(f"C-brane {cid}: unresolved id {c.space.id}", c.origin)
        if c.mark.space != c.space:
            err(f"C-brane {cid}: mark field space mismatch", c.origin)
        elif np.any(c.mark.values < 0):
            err(f"C-brane {cid}: negative initial mark", c.origin)
    for tid, t in net.tbranes.items():
        if t.space.id not in net.spaces:
            err(f"T-brane {tid}: unresolved id {t.space.id}", t.origin)
        if t.rate.space != t.space:
            err(f"T-brane {tid}: rate field space mismatch", t.origin)
        elif np.any(t.rate.values < 0):
            err(f"T-brane {tid}: negative rate", t.origin)

    seen = set()
    for h in net.hcarriers:
        c, t = net.cbranes.get(h.source), net.tbranes.get(h.target)
        if c is None:
            err(f"hcarrier {h.source} -> {h.target}: unresolved id {h.source}", h.origin)
        if t is None:
            err(f"hcarrier {h.source} -> {h.target}: unresolved id {h.target}", h.origin)
        if (h.source, h.target) in seen:
            err(f"duplicate hcarrier {h.source} -> {h.target}", h.origin)
        seen.add((h.source, h.target))
        if c is None or t is None:
            continue
        if not (c.space == t.space == h.threshold.space):
            err(
                f"space mismatch on hcarrier {h.source} -> {h.target}: "
                f"{c.space.id}, {t.space.id}, threshold on {h.threshold.space.id}",
                h.origin,
            )

    seen = set()
    for w in net.wcarriers:
        t, c = net.tbranes.get(w.source), net.cbranes.get(w.target)
        if t is None:
            err(f"wcarrier {w.source} -> {w.target}: unresolved id {w.source}", w.origin)
        if c is None:
            err(f"wcarrier {w.source} -> {w.target}: unresolved id {w.target}", w.origin)
        if (w.source, w.target) in seen:
            err(f"duplicate wcarrier {w.source} -> {w.target}", w.origin)
        seen.add((w.source, w.target))
        if t is not None and c is not None:
            for msg in _op_space_errors(w.op, t.space, c.space):
                err(f"wcarrier {w.source} -> {w.target}: {msg}", w.origin)

    has_out = {h.source for h in net.hcarriers}
    for kind, entries, targets in (
        ("alpha", net.controls.alpha, net.cbranes),
        ("gamma", net.controls.gamma, net.tbranes),
    ):
        seen = set()
        for e in entries:
            src, dst = net.cbranes.get(e.source), targets.get(e.target)
            label = f"{kind} {e.source} -> {e.target}"
            if src is None:
                err(f"{label}: unresolved id {e.source}", e.origin)
            if dst is None:
                err(f"{label}: unresolved id {e.target}", e.origin)
            if (e.source, e.target) in seen:
                err(f"duplicate {label}", e.origin)
            seen.add((e.source, e.target))
            if src is None or dst is None:
                continue
            if kind == "alpha" and e.target not in has_out:
                err(f"{label}: target C-brane has no outgoing hcarrier", e.origin)
            for msg in _op_space_errors(e.op, src.space, dst.space):
                err(f"{label}: {msg}", e.origin)

    fed = {h.target for h in net.hcarriers}
    for tid, t in net.tbranes.items():
        if tid not in fed:
            warn(f"T-brane {tid} has no incoming hcarrier and never fires", t.origin)
    touched = set(has_out)
    touched.update(w.target for w in net.wcarriers)
    touched.update(e.source for e in net.controls.alpha)
    touched.update(e.target for e in net.controls.alpha)
    touched.update(e.source for e in net.controls.gamma)
    for cid, c in net.cbranes.items():
        if cid not in touched:
            warn(f"C-brane {cid} is not connected to anything", c.origin)
    if net.mode not in ("chtw", "chtwr"):
        err(f"unknown mode {net.mode!r}")
    elif net.mode == "chtw" and net.controls:
        warn("mode chtw: alpha/gamma control entries are ignored")
    return out


def errors(diagnostics: List[Diagnostic]) -> List[Diagnostic]:
    return [d for d in diagnostics if d.is_error]


def connectivity(net: Net) -> Tuple[np.ndarray, np.ndarray]:
    """Return ``(S_H, S_W)``: C x T and T x C 0/1 incidence matrices."""
    ci = {c: n for n, c in enumerate(net.cbranes)}
    ti = {t: n for n, t in enumerate(net.tbranes)}
    s_h = np.zeros((len(ci), len(ti)), dtype=np.int8)
    s_w = np.zeros((len(ti), len(ci)), dtype=np.int8)
    for h in net.hcarriers:
        s_h[ci[h.source], ti[h.target]] = 1
    for w in net.wcarriers:
        s_w[ti[w.source], ci[w.target]] = 1
    return s_h, s_w


def control_patterns(net: Net) -> Tuple[np.ndarray, np.ndarray]:
    """0/1 occupancy of the threshold (C x C) and rate (C x T) control matrices."""
    ci = {c: n for n, c in enumerate(net.cbranes)}
    ti = {t: n for n, t in enumerate(net.tbranes)}
    a = np.zeros((len(ci), len(ci)), dtype=np.int8)
    g = np.zeros((len(ci), len(ti)), dtype=np.int8)
    for e in net.controls.alpha:
        a[ci[e.source], ci[e.target]] = 1
    for e in net.controls.gamma:
        g[ci[e.source], ti[e.target]] = 1
    return a, g
