"""Form serialization: a flat binary layout and a JSON layout for small grids.

Binary layout: 8-byte magic, little-endian uint32 header length, UTF-8 JSON
header (dim, sizes, degree, algebra, chart fields, margin), then the basis
coefficients as little-endian float64 in point-major row-major order, i.e.
an array of shape ``(*sizes, C(m, k), basis_dim)``.
"""
from __future__ import annotations

import json
import struct
from math import comb
from pathlib import Path

import numpy as np

from .algebra import by_name
from .cone import ConeForm
from .forms import GValuedForm
from .geometry import Chart

MAGIC = b"CONEYMF1"
CONE_MAGIC = b"CONEYMC1"
JSON_POINT_LIMIT = 4096


def _header(form: GValuedForm) -> dict:
    ch = form.chart
    return {
        "dim": ch.dim,
        "sizes": list(ch.sizes),
        "degree": form.degree,
        "algebra": None if form.algebra is None else form.algebra.name,
        "spacings": list(ch.spacings),
        "periodic": list(ch.periodic),
        "origin": list(ch.origin),
        "halo": list(ch.halo),
        "margin": form.margin,
    }


def _point_major(form: GValuedForm) -> np.ndarray:
    c = form.basis_coefficients()  # (C, *sizes, dim)
    return np.ascontiguousarray(np.moveaxis(c, 0, -2), dtype="<f8")


def _from_point_major(header: dict, data: np.ndarray) -> GValuedForm:
    chart = Chart(
        tuple(header["sizes"]), tuple(header["spacings"]), tuple(header["periodic"]),
        tuple(header["origin"]), tuple(header["halo"]),
    )
    algebra = None if header["algebra"] is None else by_name(header["algebra"])
    c = np.moveaxis(data, -2, 0)
    coeffs = c[..., 0] if algebra is None else algebra.to_matrix(c)
    return GValuedForm(chart, header["degree"], np.ascontiguousarray(coeffs), algebra, header["margin"])


def form_to_bytes(form: GValuedForm) -> bytes:
    head = json.dumps(_header(form), sort_keys=True).encode()
    return MAGIC + struct.pack("<I", len(head)) + head + _point_major(form).tobytes()


def form_from_bytes(blob: bytes) -> GValuedForm:
    if blob[:8] != MAGIC:
        raise ValueError("not a serialized form")
    (n,) = struct.unpack("<I", blob[8:12])
    header = json.loads(blob[12:12 + n].decode())
    bdim = 1 if header["algebra"] is None else by_name(header["algebra"]).dim
    shape = tuple(header["sizes"]) + (comb(header["dim"], header["degree"]), bdim)
    data = np.frombuffer(blob[12 + n:], dtype="<f8")
    if data.size != int(np.prod(shape)):
        raise ValueError("payload size does not match header")
    return _from_point_major(header, data.reshape(shape).astype(float))


def form_to_json(form: GValuedForm) -> str:
    if int(np.prod(form.chart.sizes)) > JSON_POINT_LIMIT:
        raise ValueError("grid too large for JSON; use the binary layout")
    doc = _header(form)
    doc["coefficients"] = _point_major(form).tolist()
    return json.dumps(doc, sort_keys=True)


def form_from_json(text: str) -> GValuedForm:
    doc = json.loads(text)
    return _from_point_major(doc, np.asarray(doc.pop("coefficients"), dtype=float))


def cone_to_bytes(c: ConeForm) -> bytes:
    parts = [b"" if f is None else form_to_bytes(f) for f in (c.eta, c.xi)]
    out = CONE_MAGIC + struct.pack("<III", c.degree, len(parts[0]), len(parts[1]))
    return out + parts[0] + parts[1]


def cone_from_bytes(blob: bytes) -> ConeForm:
    if blob[:8] != CONE_MAGIC:
        raise ValueError("not a serialized cone form")
    k, n1, n2 = struct.unpack("<III", blob[8:20])
    p1, p2 = blob[20:20 + n1], blob[20 + n1:20 + n1 + n2]
    return ConeForm(k, form_from_bytes(p1) if n1 else None, form_from_bytes(p2) if n2 else None)


def save_form(form: GValuedForm, path: str | Path) -> None:
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(form_to_json(form))
    else:
        path.write_bytes(form_to_bytes(form))


def load_form(path: str | Path) -> GValuedForm:
    path = Path(path)
    if path.suffix == ".json":
        return form_from_json(path.read_text())
    return form_from_bytes(path.read_bytes())
