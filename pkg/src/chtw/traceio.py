"""Trace archives on disk.

Every archive directory holds ``manifest.txt`` plus per-step snapshots:

* ``csv``: ``m_<brane>_<k>.csv`` (one value per line, row-major),
  ``rates_<k>.csv``, ``thresholds_<k>.csv`` and ``firing_<k>.csv``
  (``name,cell,value`` rows).
* ``bin``: ``step_<k>.bin``, magic ``CHTW1`` then little-endian
  ``u32 count`` and per field ``u32 len, id, u32 dims, u32 cells[dims],
  f64 values[]``. Field ids are ``m/<c>``, ``r/<t>``, ``h/<c>/<t>``, ``d/<t>``.

Floats in csv use the shortest repr that round-trips, so both formats are
lossless.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from .kernel import Trace
from .model import Net

MAGIC = b"CHTW1"
FORMAT_VERSION = 1

PathLike = Union[str, Path]


def model_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def manifest_text(trace: Trace, net: Net, model_bytes: bytes, fmt: str) -> str:
    lines = [
        f"format_version {FORMAT_VERSION}",
        f"model_sha256 {model_hash(model_bytes)}",
        f"steps {trace.steps}",
        f"mode {net.mode}",
        f"format {fmt}",
        "cbranes " + " ".join(trace.c_ids),
        "tbranes " + " ".join(trace.t_ids),
        "hcarriers " + " ".join(f"{c}->{t}" for c, t in trace.h_keys),
    ]
    return "\n".join(lines) + "\n"


def read_manifest(directory: PathLike) -> Dict[str, str]:
    out = {}
    for line in (Path(directory) / "manifest.txt").read_text(encoding="utf-8").splitlines():
        key, _, value = line.partition(" ")
        out[key] = value
    return out


def _shapes(net: Net) -> Dict[str, Tuple[int, ...]]:
    shapes = {f"m/{c}": b.space.shape for c, b in net.cbranes.items()}
    shapes.update({f"r/{t}": b.space.shape for t, b in net.tbranes.items()})
    shapes.update({f"d/{t}": b.space.shape for t, b in net.tbranes.items()})
    for h in net.hcarriers:
        shapes[f"h/{h.source}/{h.target}"] = h.threshold.space.shape
    return shapes


def _rows(group: Dict[str, np.ndarray]) -> str:
    lines = ["name,cell,value"]
    for name, vals in group.items():
        lines.extend(f"{name},{i},{float(v)!r}" for i, v in enumerate(vals))
    return "\n".join(lines) + "\n"


def write_archive(
    trace: Trace, net: Net, out_dir: PathLike, fmt: str, model_bytes: bytes
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    shapes = _shapes(net)
    for state in trace.states:
        k = state.k
        if fmt == "csv":
            for c, vals in state.marks.items():
                _write_text(out / f"m_{c}_{k}.csv", "".join(f"{float(v)!r}\n" for v in vals))
            _write_text(out / f"rates_{k}.csv", _rows(state.rates))
            _write_text(
                out / f"thresholds_{k}.csv",
                _rows({f"{c}->{t}": v for (c, t), v in state.thresholds.items()}),
            )
            _write_text(out / f"firing_{k}.csv", _rows(state.firing))
        elif fmt == "bin":
            (out / f"step_{k}.bin").write_bytes(encode_snapshot(state.fields(), shapes))
        else:
            raise ValueError(f"unknown trace format {fmt!r}")
    _write_text(out / "manifest.txt", manifest_text(trace, net, model_bytes, fmt))
    return out


def encode_snapshot(fields: Dict[str, np.ndarray], shapes: Dict[str, Tuple[int, ...]]) -> bytes:
    parts = [MAGIC, struct.pack("<I", len(fields))]
    for name, vals in fields.items():
        ident = name.encode("utf-8")
        shape = shapes[name]
        parts.append(struct.pack("<I", len(ident)))
        parts.append(ident)
        parts.append(struct.pack(f"<I{len(shape)}I", len(shape), *shape))
        parts.append(np.asarray(vals, dtype="<f8").tobytes())
    return b"".join(parts)


def decode_snapshot(data: bytes) -> Dict[str, np.ndarray]:
    """Inverse of :func:`encode_snapshot`; values come back reshaped to the grid."""
    if data[:5] != MAGIC:
        raise ValueError("not a CHTW1 snapshot")
    (count,) = struct.unpack_from("<I", data, 5)
    pos = 9
    out = {}
    for _ in range(count):
        (n,) = struct.unpack_from("<I", data, pos)
        pos += 4
        name = data[pos:pos + n].decode("utf-8")
        pos += n
        (dims,) = struct.unpack_from("<I", data, pos)
        pos += 4
        shape = struct.unpack_from(f"<{dims}I", data, pos)
        pos += 4 * dims
        size = int(np.prod(shape))
        out[name] = np.frombuffer(data, dtype="<f8", count=size, offset=pos).reshape(shape)
        pos += 8 * size
    if pos != len(data):
        raise ValueError("trailing bytes in snapshot")
    return out


def _read_rows(path: Path) -> Dict[str, List[float]]:
    out: Dict[str, List[float]] = {}
    for line in path.read_text(encoding="utf-8").splitlines()[1:]:
        name, cell, value = line.rsplit(",", 2)
        vals = out.setdefault(name, [])
        assert int(cell) == len(vals)
        vals.append(float(value))
    return out


def read_archive(directory: PathLike) -> List[Dict[str, np.ndarray]]:
    """Decode an archive into one flat ``field id -> values`` dict per step."""
    d = Path(directory)
    man = read_manifest(d)
    steps = int(man["steps"])
    snaps = []
    for k in range(steps + 1):
        if man["format"] == "bin":
            snap = {n: v.ravel() for n, v in decode_snapshot((d / f"step_{k}.bin").read_bytes()).items()}
        else:
            snap = {}
            for c in man["cbranes"].split():
                text = (d / f"m_{c}_{k}.csv").read_text(encoding="utf-8")
                snap[f"m/{c}"] = np.array([float(v) for v in text.split()])
            for name, vals in _read_rows(d / f"rates_{k}.csv").items():
                snap[f"r/{name}"] = np.array(vals)
            for name, vals in _read_rows(d / f"thresholds_{k}.csv").items():
                c, t = name.split("->")
                snap[f"h/{c}/{t}"] = np.array(vals)
            for name, vals in _read_rows(d / f"firing_{k}.csv").items():
                snap[f"d/{name}"] = np.array(vals)
        snaps.append(snap)
    return snaps
