"""Line-oriented model description language.

One statement per line, ``#`` starts a comment::

    space X dims=1 axis=0:1:4
    cbrane c1 space=X m=const(5)
    tbrane t1 space=X r=csv(rates.csv)
    hcarrier c1 -> t1 h=gauss(center=0.5,sigma=0.2,amp=3)
    wcarrier t1 -> c1 op=constdep(const(2),any)
    alpha c1 -> c1 op=gain(0.1)
    gamma c1 -> t1 op=kernel(k.txt)
    mode chtwr

Relative paths in ``csv(...)`` and ``kernel(...)`` resolve against the
directory of the model file. Parsing never stops at the first problem;
all diagnostics carry 1-based line and column numbers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .model import (
    Axis,
    CBrane,
    ControlEntry,
    Diagnostic,
    Field,
    HCarrier,
    Level,
    ModelError,
    Net,
    OpKind,
    OperatorSpec,
    Space,
    TBrane,
    WCarrier,
    validate,
)

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
ARROW_KINDS = {
    "hcarrier": ("cbrane", "tbrane", "h"),
    "wcarrier": ("tbrane", "cbrane", "op"),
    "alpha": ("cbrane", "cbrane", "op"),
    "gamma": ("cbrane", "tbrane", "op"),
}


@dataclass
class Token:
    text: str
    col: int


@dataclass
class Statement:
    kind: str
    line: int
    col: int
    name: Optional[Token] = None
    source: Optional[Token] = None
    target: Optional[Token] = None
    options: Dict[str, Token] = field(default_factory=dict)
    axes: List[Token] = field(default_factory=list)


@dataclass
class ModelDocument:
    statements: List[Statement] = field(default_factory=list)

    def of_kind(self, kind: str) -> List[Statement]:
        return [s for s in self.statements if s.kind == kind]


class _Diags(list):
    def error(self, line, col, msg):
        self.append(Diagnostic(Level.ERROR, msg, line, col))


def _tokenize(line: str) -> List[Token]:
    """Split on whitespace outside parentheses."""
    tokens, buf, start, depth = [], [], 0, 0
    for i, ch in enumerate(line):
        if ch.isspace() and depth == 0:
            if buf:
                tokens.append(Token("".join(buf), start + 1))
                buf = []
            continue
        if not buf:
            start = i
        depth += ch == "("
        depth -= ch == ")"
        buf.append(ch)
    if buf:
        tokens.append(Token("".join(buf), start + 1))
    return tokens


def _split_top(text: str, sep: str = ",") -> List[str]:
    parts, depth, buf = [], 0, []
    for ch in text:
        if ch == sep and depth == 0:
            parts.append("".join(buf))
            buf = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        buf.append(ch)
    parts.append("".join(buf))
    return parts


def _call(text: str) -> Optional[Tuple[str, str]]:
    m = re.fullmatch(r"([a-z]+)\((.*)\)", text, re.S)
    return (m.group(1), m.group(2)) if m else None


def parse(text: str) -> Tuple[ModelDocument, List[Diagnostic]]:
    """Parse model text into a document plus diagnostics.

    Checks syntax, duplicate ids and id resolution (forward references are
    fine). Field contents are not loaded here; see :func:`build`.
    """
    doc, diags = ModelDocument(), _Diags()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip("\r")
        tokens = _tokenize(line)
        if not tokens:
            continue
        head, rest = tokens[0], tokens[1:]
        stmt = Statement(head.text, lineno, head.col)
        if head.text == "mode":
            if len(rest) != 1 or rest[0].text not in ("chtw", "chtwr"):
                diags.error(lineno, head.col, "mode must be 'chtw' or 'chtwr'")
                continue
            stmt.name, rest = rest[0], []
        elif head.text in ("space", "cbrane", "tbrane"):
            if not rest:
                diags.error(lineno, head.col, f"{head.text} needs an id")
                continue
            stmt.name, rest = rest[0], rest[1:]
            if not IDENT.match(stmt.name.text):
                diags.error(lineno, stmt.name.col, f"invalid id {stmt.name.text!r}")
                continue
        elif head.text in ARROW_KINDS:
            if len(rest) < 3 or rest[1].text != "->":
                diags.error(lineno, head.col, f"expected '{head.text} <id> -> <id> ...'")
                continue
            stmt.source, stmt.target, rest = rest[0], rest[2], rest[3:]
        else:
            diags.error(lineno, head.col, f"unknown statement {head.text!r}")
            continue

        ok = True
        for tok in rest:
            key, eq, value = tok.text.partition("=")
            if not eq or not value:
                diags.error(lineno, tok.col, f"expected key=value, got {tok.text!r}")
                ok = False
                continue
            vtok = Token(value, tok.col + len(key) + 1)
            if head.text == "space" and key == "axis":
                stmt.axes.append(vtok)
            elif key in stmt.options:
                diags.error(lineno, tok.col, f"duplicate option {key!r}")
                ok = False
            else:
                stmt.options[key] = vtok
        if ok:
            ok = _check_options(stmt, diags)
        if ok:
            doc.statements.append(stmt)

    _resolve(doc, diags)
    return doc, list(diags)


_REQUIRED = {
    "space": {"dims"},
    "cbrane": {"space", "m"},
    "tbrane": {"space", "r"},
    "hcarrier": {"h"},
    "wcarrier": {"op"},
    "alpha": {"op"},
    "gamma": {"op"},
    "mode": set(),
}


def _check_options(stmt: Statement, diags: _Diags) -> bool:
    need = _REQUIRED[stmt.kind]
    ok = True
    for key, tok in stmt.options.items():
        if key not in need:
            diags.error(stmt.line, tok.col - len(key) - 1, f"unknown option {key!r} for {stmt.kind}")
            ok = False
    for key in sorted(need - set(stmt.options)):
        diags.error(stmt.line, stmt.col, f"{stmt.kind} is missing {key}=")
        ok = False
    if stmt.kind == "space":
        dims = stmt.options.get("dims")
        if dims is not None:
            if not dims.text.isdigit() or int(dims.text) < 1:
                diags.error(stmt.line, dims.col, "dims must be a positive integer")
                ok = False
            elif int(dims.text) != len(stmt.axes):
                diags.error(
                    stmt.line, dims.col,
                    f"dims={dims.text} but {len(stmt.axes)} axis= options given",
                )
                ok = False
        for ax in stmt.axes:
            if _parse_axis(ax.text) is None:
                diags.error(stmt.line, ax.col, f"bad axis {ax.text!r}, expected min:max:cells")
                ok = False
    for key in ("m", "r", "h"):
        if key in stmt.options and not _fieldinit_ok(stmt.options[key].text):
            diags.error(stmt.line, stmt.options[key].col, f"bad field init {stmt.options[key].text!r}")
            ok = False
    if "op" in stmt.options and _parse_opspec(stmt.options["op"].text) is None:
        diags.error(stmt.line, stmt.options["op"].col, f"bad operator {stmt.options['op'].text!r}")
        ok = False
    return ok


def _parse_axis(text: str) -> Optional[Axis]:
    parts = text.split(":")
    if len(parts) != 3:
        return None
    try:
        lo, hi, cells = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        return None
    if not (np.isfinite(lo) and np.isfinite(hi)) or not hi > lo or cells < 1:
        return None
    return Axis(lo, hi, cells)


def _parse_fieldinit(text: str):
    """Return ('const', v) | ('csv', path) | ('gauss', center, sigma, amp) or None."""
    call = _call(text)
    if call is None:
        return None
    name, body = call
    try:
        if name == "const":
            v = float(body)
            return ("const", v) if np.isfinite(v) else None
        if name == "csv":
            return ("csv", body) if body else None
        if name == "gauss":
            opts: Dict[str, List[float]] = {}
            key = None
            for part in body.split(","):
                if "=" in part:
                    key, _, part = part.partition("=")
                    if key in opts:
                        return None
                    opts[key] = []
                if key is None:
                    return None
                opts[key].append(float(part))
            if set(opts) != {"center", "sigma", "amp"}:
                return None
            if len(opts["sigma"]) != 1 or len(opts["amp"]) != 1 or opts["sigma"][0] <= 0:
                return None
            return ("gauss", tuple(opts["center"]), opts["sigma"][0], opts["amp"][0])
    except ValueError:
        return None
    return None


def _fieldinit_ok(text: str) -> bool:
    return _parse_fieldinit(text) is not None


def _parse_opspec(text: str):
    """Return ('gain', g) | ('constdep', fieldinit, mode) | ('kernel', path) or None."""
    call = _call(text)
    if call is None:
        return None
    name, body = call
    if name == "gain":
        try:
            g = float(body)
        except ValueError:
            return None
        return ("gain", g) if np.isfinite(g) else None
    if name == "constdep":
        parts = _split_top(body)
        if len(parts) < 2 or parts[-1] not in ("any", "mean"):
            return None
        init = _parse_fieldinit(",".join(parts[:-1]))
        return ("constdep", init, parts[-1]) if init else None
    if name == "kernel":
        return ("kernel", body) if body else None
    return None


def _resolve(doc: ModelDocument, diags: _Diags) -> None:
    declared: Dict[str, Dict[str, Statement]] = {"space": {}, "cbrane": {}, "tbrane": {}}
    for s in doc.statements:
        if s.kind in declared:
            table = declared[s.kind]
            if s.name.text in table:
                diags.error(s.line, s.name.col, f"duplicate id {s.name.text}")
            else:
                table[s.name.text] = s
    modes = doc.of_kind("mode")
    for s in modes[1:]:
        diags.error(s.line, s.col, "duplicate mode statement")

    def need(kind, tok, line):
        if tok.text not in declared[kind]:
            diags.error(line, tok.col, f"unresolved id {tok.text}")

    pairs = set()
    for s in doc.statements:
        if s.kind in ("cbrane", "tbrane"):
            need("space", s.options["space"], s.line)
        elif s.kind in ARROW_KINDS:
            src_kind, dst_kind, _ = ARROW_KINDS[s.kind]
            need(src_kind, s.source, s.line)
            need(dst_kind, s.target, s.line)
            key = (s.kind, s.source.text, s.target.text)
            if key in pairs:
                diags.error(s.line, s.col, f"duplicate {s.kind} {s.source.text} -> {s.target.text}")
            pairs.add(key)


# --- building a Net ---------------------------------------------------------


def read_csv_field(path: Union[str, Path], space: Space) -> Field:
    """One value per line, row-major over the cells of ``space``."""
    text = Path(path).read_text(encoding="utf-8")
    values = [float(v) for v in (ln.strip() for ln in text.splitlines()) if v]
    return Field(space, values)


def write_csv_field(path: Union[str, Path], values) -> None:
    lines = [repr(float(v)) for v in np.asarray(values, dtype=np.float64)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_kernel(path: Union[str, Path], shape: Tuple[int, int]) -> OperatorSpec:
    """Sparse triplets ``row col value``, one per line, 0-based indices."""
    triplets = []
    for ln in Path(path).read_text(encoding="utf-8").splitlines():
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"kernel line {ln!r} is not 'row col value'")
        triplets.append((int(parts[0]), int(parts[1]), float(parts[2])))
    return OperatorSpec.make_kernel(triplets, shape)


def write_kernel(path: Union[str, Path], spec: OperatorSpec) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r, c, v in spec.triplets:
            fh.write(f"{r} {c} {v!r}\n")


def sample_gauss(space: Space, center, sigma: float, amp: float) -> Field:
    if len(center) != space.dims:
        raise ValueError(f"gauss center has {len(center)} coordinates, space {space.id} has {space.dims} dims")
    x = space.cell_centers()
    r2 = ((x - np.asarray(center, dtype=np.float64)) ** 2).sum(axis=1)
    return Field(space, amp * np.exp(-r2 / (2.0 * sigma * sigma)))


def _make_field(init, space: Space, base: Path) -> Field:
    kind = init[0]
    if kind == "const":
        return space.constant(init[1])
    if kind == "csv":
        return read_csv_field(base / init[1], space)
    return sample_gauss(space, init[1], init[2], init[3])


def _make_op(spec, inp: Space, out: Space, base: Path) -> OperatorSpec:
    kind = spec[0]
    if kind == "gain":
        return OperatorSpec.make_gain(spec[1])
    if kind == "constdep":
        return OperatorSpec.make_const_deposit(_make_field(spec[1], out, base), spec[2])
    return read_kernel(base / spec[1], (out.size, inp.size))


def build(doc: ModelDocument, base_dir: Union[str, Path] = ".") -> Tuple[Net, List[Diagnostic]]:
    """Turn a resolved document into a :class:`Net`, loading referenced files.

    Statements that fail to build are dropped and reported.
    """
    base = Path(base_dir)
    diags = _Diags()
    net = Net()
    modes = doc.of_kind("mode")
    if modes:
        net.mode = modes[0].name.text

    for s in doc.of_kind("space"):
        axes = tuple(_parse_axis(a.text) for a in s.axes)
        try:
            net.spaces.setdefault(s.name.text, Space(s.name.text, axes))
        except ValueError as exc:
            diags.error(s.line, s.col, str(exc))

    for kind, attr, cls, key in (("cbrane", "cbranes", CBrane, "m"), ("tbrane", "tbranes", TBrane, "r")):
        for s in doc.of_kind(kind):
            sp = net.spaces.get(s.options["space"].text)
            if sp is None or s.name.text in getattr(net, attr):
                continue
            try:
                fld = _make_field(_parse_fieldinit(s.options[key].text), sp, base)
            except (OSError, ValueError) as exc:
                diags.error(s.line, s.options[key].col, str(exc))
                continue
            getattr(net, attr)[s.name.text] = cls(s.name.text, sp, fld, (s.line, s.col))

    for s in doc.statements:
        if s.kind not in ARROW_KINDS:
            continue
        src_kind, dst_kind, key = ARROW_KINDS[s.kind]
        table = lambda k: net.cbranes if k == "cbrane" else net.tbranes  # noqa: E731
        src, dst = table(src_kind).get(s.source.text), table(dst_kind).get(s.target.text)
        if src is None or dst is None:
            continue
        tok = s.options[key]
        origin = (s.line, s.col)
        try:
            if s.kind == "hcarrier":
                fld = _make_field(_parse_fieldinit(tok.text), src.space, base)
                net.hcarriers.append(HCarrier(src.id, dst.id, fld, origin))
                continue
            op = _make_op(_parse_opspec(tok.text), src.space, dst.space, base)
        except (OSError, ValueError) as exc:
            diags.error(s.line, tok.col, str(exc))
            continue
        if s.kind == "wcarrier":
            net.wcarriers.append(WCarrier(src.id, dst.id, op, origin))
        elif s.kind == "alpha":
            net.controls.alpha.append(ControlEntry(src.id, dst.id, op, origin))
        else:
            net.controls.gamma.append(ControlEntry(src.id, dst.id, op, origin))
    return net, list(diags)


def loads(text: str, base_dir: Union[str, Path] = ".") -> Tuple[Optional[Net], List[Diagnostic]]:
    """Parse, build and validate; returns ``(net, diagnostics)``.

    ``net`` is ``None`` when parsing produced errors.
    """
    doc, diags = parse(text)
    if any(d.is_error for d in diags):
        return None, diags
    net, more = build(doc, base_dir)
    diags += more
    diags += validate(net)
    return net, diags


def load(path: Union[str, Path]) -> Net:
    """Load a model file; raise :class:`ModelError` if it has errors."""
    path = Path(path)
    net, diags = loads(path.read_text(encoding="utf-8"), path.parent)
    if net is None or any(d.is_error for d in diags):
        raise ModelError(diags)
    return net


# --- serialization ----------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


class _Sidecars:
    def __init__(self, directory: Optional[Path]):
        self.directory = directory

    def _path(self, name: str) -> Path:
        if self.directory is None:
            raise ValueError(f"field {name} is not constant; serialize() needs a sidecar directory")
        return self.directory / name

    def field(self, fld: Field, name: str) -> str:
        if fld.is_constant():
            return f"const({_fmt(fld.values[0])})"
        write_csv_field(self._path(name + ".csv"), fld.values)
        return f"csv({name}.csv)"

    def op(self, op: OperatorSpec, name: str) -> str:
        if op.kind is OpKind.GAIN:
            return f"gain({_fmt(op.gain)})"
        if op.kind is OpKind.CONST_DEPOSIT:
            return f"constdep({self.field(op.deposit, name)},{op.mode})"
        path = self._path(name + ".kernel")
        write_kernel(path, op)
        return f"kernel({path.name})"


def serialize(net: Net, sidecar_dir: Union[str, Path, None] = None) -> str:
    """Canonical text for ``net``.

    Constant fields are written inline; any other field (including sampled
    ``gauss`` inits) and every kernel goes to a sidecar file in
    ``sidecar_dir``, named after the element it belongs to.
    """
    side = _Sidecars(Path(sidecar_dir) if sidecar_dir is not None else None)
    lines = []
    for sp in net.spaces.values():
        axes = " ".join(f"axis={_fmt(a.min)}:{_fmt(a.max)}:{a.cells}" for a in sp.axes)
        lines.append(f"space {sp.id} dims={sp.dims} {axes}")
    for c in net.cbranes.values():
        lines.append(f"cbrane {c.id} space={c.space.id} m={side.field(c.mark, 'm-' + c.id)}")
    for t in net.tbranes.values():
        lines.append(f"tbrane {t.id} space={t.space.id} r={side.field(t.rate, 'r-' + t.id)}")
    for h in net.hcarriers:
        init = side.field(h.threshold, f"h-{h.source}-{h.target}")
        lines.append(f"hcarrier {h.source} -> {h.target} h={init}")
    for w in net.wcarriers:
        lines.append(f"wcarrier {w.source} -> {w.target} op={side.op(w.op, f'w-{w.source}-{w.target}')}")
    for kind, entries in (("alpha", net.controls.alpha), ("gamma", net.controls.gamma)):
        for e in entries:
            op = side.op(e.op, f"{kind}-{e.source}-{e.target}")
            lines.append(f"{kind} {e.source} -> {e.target} op={op}")
    lines.append(f"mode {net.mode}")
    return "\n".join(lines) + "\n"


def save(net: Net, path: Union[str, Path]) -> None:
    """Write ``net`` to ``path`` with sidecar files next to it."""
    path = Path(path)
    text = serialize(net, path.parent)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
