"""Snapshot files: a ``key = value`` text header closed by ``end_header``, then the
fields ``rho, u1, u2`` in row-major order, either as text (one row of the
periodic index per line) or as raw little-endian float64."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .config import cached_grid
from .errors import ConfigError
from .projection import State

FIELDS = ("rho", "u1", "u2")


def write_snapshot(path, state, encoding="text", extra=None):
    g = state.grid
    header = {
        "kind": g.kind,
        "n_periodic": g.n_periodic,
        "n_wall": g.n_wall,
        "extents": " ".join(repr(float(x)) for x in g.extents),
        "dealias_fraction": repr(g.dealias_fraction),
        "time": repr(float(state.time)),
        "epsilon": repr(float(state.epsilon)),
        "fields": " ".join(FIELDS),
        "encoding": encoding,
    }
    header.update(extra or {})
    head = "".join(f"{k} = {v}\n" for k, v in header.items()) + "end_header\n"
    q = np.ascontiguousarray(state.packed(), dtype="<f8")
    path = Path(path)
    if encoding == "text":
        rows = q.reshape(-1, g.n_wall)
        body = "\n".join(" ".join(repr(float(x)) for x in row) for row in rows)
        path.write_text(head + body + "\n")
    elif encoding == "binary":
        path.write_bytes(head.encode() + q.tobytes())
    else:
        raise ConfigError(f"encoding must be text or binary, got {encoding!r}")
    return path


def read_snapshot(path, cls=State):
    """Read a snapshot written by :func:`write_snapshot`; returns ``(state, header)``."""
    data = Path(path).read_bytes()
    marker = b"end_header\n"
    cut = data.find(marker)
    if cut < 0:
        raise ConfigError(f"{path}: missing end_header")
    header = {}
    for line in data[:cut].decode().splitlines():
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}: malformed header line {line!r}")
        header[key.strip()] = value.strip()
    try:
        n_p, n_w = int(header["n_periodic"]), int(header["n_wall"])
        extents = tuple(float(x) for x in header["extents"].split())
        grid = cached_grid(header["kind"], n_p, n_w, extents,
                            float(header.get("dealias_fraction", 2 / 3)))
        shape = (len(header["fields"].split()), n_p, n_w)
        body = data[cut + len(marker):]
        if header["encoding"] == "binary":
            q = np.frombuffer(body, dtype="<f8").reshape(shape).copy()
        else:
            q = np.array(body.decode().split(), dtype=float).reshape(shape)
        return cls.from_packed(grid, q, float(header["epsilon"]), float(header["time"])), header
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: unreadable snapshot ({exc})") from exc
